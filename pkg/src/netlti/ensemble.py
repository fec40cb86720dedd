"""Reproducible random networked systems for property tests and benchmarks.

Besides generic systems this module builds families whose verdict is known
by construction: systems made unobservable (or uncontrollable) purely by
the interconnection while every subsystem-level necessary condition still
holds, and systems whose subsystems share transmission zeros.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import NetworkedSystem, SubsystemRealization, loop_matrix
from .numerics import block_diag


@dataclass(frozen=True)
class EnsembleSpec:
    """Ranges are inclusive ``(low, high)`` pairs.

    ``fcnr_obs`` forces ``n_y >= n_v`` so every ``G1`` block can have full
    column normal rank; ``square_obs`` forces ``n_y == n_v``, which makes
    transmission zeros generic. ``fcnr_ctrb``/``square_ctrb`` do the same
    for ``n_u`` against ``n_z``.
    """

    N: tuple[int, int] = (2, 4)
    n_x: tuple[int, int] = (1, 4)
    n_v: tuple[int, int] = (0, 2)
    n_u: tuple[int, int] = (0, 2)
    n_z: tuple[int, int] = (0, 2)
    n_y: tuple[int, int] = (0, 2)
    density: float = 1.0
    rho_cap: float = 0.95
    seed: int = 0
    count: int = 100
    fcnr_obs: bool = False
    square_obs: bool = False
    fcnr_ctrb: bool = False
    square_ctrb: bool = False

    def __post_init__(self):
        for name in ("N", "n_x", "n_v", "n_u", "n_z", "n_y"):
            lo, hi = getattr(self, name)
            if lo < 0 or hi < lo:
                raise ValueError(f"invalid range for {name}: {(lo, hi)}")
        if self.N[0] < 1:
            raise ValueError("N range must start at 1 or more")
        if not 0.0 <= self.density <= 1.0:
            raise ValueError(f"density must lie in [0, 1], got {self.density}")
        if not 0.0 < self.rho_cap < 1.0:
            raise ValueError(f"rho_cap must lie in (0, 1), got {self.rho_cap}")


def _draw(rng, rng_range) -> int:
    return int(rng.integers(rng_range[0], rng_range[1] + 1))


def random_scm(rng, v_sizes, z_sizes, density: float) -> np.ndarray:
    """Each row selects one random ``z`` column with probability ``density``."""
    Mv, Mz = sum(v_sizes), sum(z_sizes)
    phi = np.zeros((Mv, Mz))
    if Mz == 0:
        return phi
    for r in range(Mv):
        if rng.random() < density:
            phi[r, rng.integers(Mz)] = 1.0
    return phi


def rescale_for_well_posedness(system: NetworkedSystem, cap: float = 0.95
                               ) -> NetworkedSystem:
    """Shrink every ``A_SS(i)`` uniformly so ``sigma_max(Phi A_SS) < cap``."""
    A_SS = block_diag([s.A_SS for s in system.subsystems])
    PA = system.phi @ A_SS
    s = float(np.linalg.norm(PA, 2)) if PA.size else 0.0
    if s < cap:
        return system
    k = 0.99 * cap / s
    return system.with_subsystems([sub.replace(A_SS=k * sub.A_SS)
                                   for sub in system.subsystems])


def random_system(rng: np.random.Generator, spec: EnsembleSpec) -> NetworkedSystem:
    N = _draw(rng, spec.N)
    subs = []
    for _ in range(N):
        n_x = _draw(rng, spec.n_x)
        n_v = _draw(rng, spec.n_v)
        n_z = _draw(rng, spec.n_z)
        n_u = _draw(rng, spec.n_u)
        n_y = _draw(rng, spec.n_y)
        if spec.square_obs:
            n_y = n_v
        elif spec.fcnr_obs:
            n_y = max(n_y, n_v)
        if spec.square_ctrb:
            n_u = n_z
        elif spec.fcnr_ctrb:
            n_u = max(n_u, n_z)
        g = rng.standard_normal
        subs.append(SubsystemRealization.create(
            g((n_x, n_x)) / np.sqrt(n_x) if n_x else np.zeros((0, 0)),
            A_TS=g((n_x, n_v)), B_T=g((n_x, n_u)), A_ST=g((n_z, n_x)),
            A_SS=g((n_z, n_v)) / np.sqrt(max(n_v, 1)), B_S=g((n_z, n_u)),
            C_T=g((n_y, n_x)), C_S=g((n_y, n_v)), D=g((n_y, n_u)),
            n_v=n_v, n_u=n_u, n_z=n_z, n_y=n_y))
    v_sizes = [s.n_v for s in subs]
    z_sizes = [s.n_z for s in subs]
    phi = random_scm(rng, v_sizes, z_sizes, spec.density)
    strict = bool(phi.shape[0]) and bool(np.all(phi.any(axis=1)))
    system = NetworkedSystem.build(subs, phi, strict_assumption3=strict)
    return rescale_for_well_posedness(system, spec.rho_cap)


def generate_ensemble(spec: EnsembleSpec) -> list[NetworkedSystem]:
    """``spec.count`` systems; system ``k`` depends only on ``(spec, seed, k)``."""
    return [random_system(np.random.default_rng([spec.seed, k]), spec)
            for k in range(spec.count)]


def insert_unobservable_mode(system: NetworkedSystem, i: int, lam: float,
                             rng: np.random.Generator) -> NetworkedSystem:
    """Add a state to subsystem ``i`` that nothing ever reads.

    The new state evolves as ``x_new(t+1) = lam x_new + r x + ...`` but has
    zero columns in ``C_T(i)``, ``A_ST(i)`` and in every other row of
    ``A_TT(i)``, so ``lam`` becomes an unobservable mode of the network.
    """
    s = system.subsystems[i]
    n = s.n_x
    A = np.zeros((n + 1, n + 1))
    A[:n, :n] = s.A_TT
    A[n, :n] = rng.standard_normal(n)
    A[n, n] = lam
    new = SubsystemRealization.create(
        A, A_TS=np.vstack([s.A_TS, rng.standard_normal((1, s.n_v))]),
        B_T=np.vstack([s.B_T, rng.standard_normal((1, s.n_u))]),
        A_ST=np.hstack([s.A_ST, np.zeros((s.n_z, 1))]), A_SS=s.A_SS, B_S=s.B_S,
        C_T=np.hstack([s.C_T, np.zeros((s.n_y, 1))]), C_S=s.C_S, D=s.D,
        n_v=s.n_v, n_u=s.n_u, n_z=s.n_z, n_y=s.n_y)
    subs = list(system.subsystems)
    subs[i] = new
    return system.with_subsystems(subs)


@dataclass
class PlantedMode:
    """A system with a planted null vector ``(x1, x2)`` of ``M(lam)``."""

    system: NetworkedSystem
    lam: float
    x1: np.ndarray
    x2: np.ndarray


def _rank_one_fix(M: np.ndarray, target: np.ndarray, x: np.ndarray) -> np.ndarray:
    """``M + (target - M x) x^T / |x|^2``, the smallest change with ``M x = target``."""
    return M + np.outer(target - M @ x, x) / (x @ x)


def plant_interconnection_unobservable(system: NetworkedSystem, lam: float,
                                       rng: np.random.Generator,
                                       min_norm: float = 1e-3
                                       ) -> PlantedMode | None:
    """Make ``lam`` an unobservable mode of the network via ``A_TS`` and ``C_S``.

    A state direction ``x1`` is drawn, the internal signal it induces is
    ``x2 = (I - Phi A_SS)^{-1} Phi A_ST x1``, and ``A_TS(j)``, ``C_S(j)``
    receive rank-one updates so that ``(lam I - A_TT) x1 = A_TS x2`` and
    ``C_T x1 + C_S x2 = 0`` hold subsystem by subsystem. ``A_TT``, ``C_T``,
    ``A_ST``, ``A_SS`` and ``Phi`` are untouched, so every subsystem keeps
    its own observability through ``col{C_T, A_ST}``. Subsystems that
    receive too weak an internal signal keep ``x1(j) = 0``. Returns ``None`` when no
    subsystem can carry the mode.
    """
    dims = system.dims
    xs, vs = dims.slices("x"), dims.slices("v")
    g = system.blocks
    L = np.linalg.inv(loop_matrix(system))
    active = [dims.n_x[j] > 0 and dims.n_v[j] > 0 for j in range(system.N)]
    while any(active):
        x1 = rng.standard_normal(dims.total("x"))
        for j in range(system.N):
            if not active[j]:
                x1[xs[j]] = 0.0
        x2 = L @ system.phi @ g.A_ST @ x1
        weak = [j for j in range(system.N)
                if active[j] and np.linalg.norm(x2[vs[j]]) < min_norm]
        if not weak:
            break
        for j in weak:
            active[j] = False
    else:
        return None
    subs = list(system.subsystems)
    for j, s in enumerate(subs):
        a, b = x1[xs[j]], x2[vs[j]]
        if not np.any(b):
            continue
        A_TS = _rank_one_fix(s.A_TS, (lam * np.eye(s.n_x) - s.A_TT) @ a, b)
        C_S = _rank_one_fix(s.C_S, -s.C_T @ a, b) if s.n_y else s.C_S
        subs[j] = s.replace(A_TS=A_TS, C_S=C_S)
    return PlantedMode(system.with_subsystems(subs), lam, x1, x2)


def plant_interconnection_uncontrollable(system: NetworkedSystem, lam: float,
                                         rng: np.random.Generator,
                                         min_norm: float = 1e-3
                                         ) -> PlantedMode | None:
    """Dual of :func:`plant_interconnection_unobservable`.

    A left direction ``w1`` induces ``q = (I - A_SS^T Phi^T)^{-1} A_TS^T w1``
    and ``w2 = Phi^T q``; ``A_ST(j)`` and ``B_S(j)`` are updated so ``w1`` is a
    left eigenvector of the lifted ``A`` annihilating the lifted ``B``.
    ``A_TT``, ``B_T``, ``A_TS``, ``A_SS`` and ``Phi`` stay as they were.
    """
    dims = system.dims
    xs, zs = dims.slices("x"), dims.slices("z")
    g = system.blocks
    active = [dims.n_x[j] > 0 and dims.n_z[j] > 0 for j in range(system.N)]
    while any(active):
        w1 = rng.standard_normal(dims.total("x"))
        for j in range(system.N):
            if not active[j]:
                w1[xs[j]] = 0.0
        q = np.linalg.solve(np.eye(dims.total("v")) - g.A_SS.T @ system.phi.T,
                            g.A_TS.T @ w1)
        w2 = system.phi.T @ q
        weak = [j for j in range(system.N)
                if active[j] and np.linalg.norm(w2[zs[j]]) < min_norm]
        if not weak:
            break
        for j in weak:
            active[j] = False
    else:
        return None
    subs = list(system.subsystems)
    for j, s in enumerate(subs):
        a, b = w1[xs[j]], w2[zs[j]]
        if not np.any(b):
            continue
        A_STt = _rank_one_fix(s.A_ST.T, (lam * np.eye(s.n_x) - s.A_TT.T) @ a, b)
        B_St = _rank_one_fix(s.B_S.T, -s.B_T.T @ a, b) if s.n_u else s.B_S.T
        subs[j] = s.replace(A_ST=A_STt.T, B_S=B_St.T)
    return PlantedMode(system.with_subsystems(subs), lam, w1, w2)


def share_zero_structure(system: NetworkedSystem, source: int, targets
                         ) -> NetworkedSystem:
    """Copy ``A_TT``, ``A_TS``, ``C_T``, ``C_S`` of ``source`` into ``targets``.

    The copies have identical ``G1`` blocks, so every zero of the source is
    shared. Target dimensions must already match.
    """
    src = system.subsystems[source]
    subs = list(system.subsystems)
    for t in targets:
        s = subs[t]
        if (s.n_x, s.n_v, s.n_y) != (src.n_x, src.n_v, src.n_y):
            raise ValueError(f"subsystem {t + 1} dimensions differ from the source")
        subs[t] = s.replace(A_TT=src.A_TT, A_TS=src.A_TS, C_T=src.C_T,
                            C_S=src.C_S)
    return system.with_subsystems(subs)
