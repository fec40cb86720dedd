"""Networked-system data model.

A networked system is N subsystems

    x(t+1, i) = A_TT x + A_TS v + B_T u
    z(t, i)   = A_ST x + A_SS v + B_S u
    y(t, i)   = C_T  x + C_S  v + D   u

coupled through a subsystem connection matrix (SCM) ``v = Phi z``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .numerics import DEFAULT_TOL, EPS, Tolerances, as_matrix, block_diag

BLOCK_NAMES = ("A_TT", "A_TS", "B_T", "A_ST", "A_SS", "B_S", "C_T", "C_S", "D")
SIGNALS = ("x", "v", "u", "z", "y")


class IllPosedError(ValueError):
    """``I - Phi A_SS`` is (numerically) singular."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SubsystemRealization:
    """The nine real matrix blocks of one subsystem.

    Missing blocks are zero-filled; dimensions are inferred from whichever
    blocks are present unless given explicitly.
    """

    A_TT: np.ndarray
    A_TS: np.ndarray
    B_T: np.ndarray
    A_ST: np.ndarray
    A_SS: np.ndarray
    B_S: np.ndarray
    C_T: np.ndarray
    C_S: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        for name in BLOCK_NAMES:
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    @classmethod
    def create(cls, A_TT, A_TS=None, B_T=None, A_ST=None, A_SS=None, B_S=None,
               C_T=None, C_S=None, D=None, *, n_v=None, n_u=None, n_z=None,
               n_y=None) -> "SubsystemRealization":
        A_TT = as_matrix(A_TT)
        n_x = A_TT.shape[0]
        given = dict(A_TS=A_TS, B_T=B_T, A_ST=A_ST, A_SS=A_SS, B_S=B_S,
                     C_T=C_T, C_S=C_S, D=D)

        def infer(explicit, *probes):
            if explicit is not None:
                return explicit
            for name, axis in probes:
                blk = given[name]
                if blk is not None and np.asarray(blk).size:
                    return as_matrix(blk).shape[axis]
            return 0

        n_v = infer(n_v, ("A_TS", 1), ("A_SS", 1), ("C_S", 1))
        n_u = infer(n_u, ("B_T", 1), ("B_S", 1), ("D", 1))
        n_z = infer(n_z, ("A_ST", 0), ("A_SS", 0), ("B_S", 0))
        n_y = infer(n_y, ("C_T", 0), ("C_S", 0), ("D", 0))
        shapes = dict(A_TS=(n_x, n_v), B_T=(n_x, n_u), A_ST=(n_z, n_x),
                      A_SS=(n_z, n_v), B_S=(n_z, n_u), C_T=(n_y, n_x),
                      C_S=(n_y, n_v), D=(n_y, n_u))
        blocks = {k: as_matrix(given[k], *shapes[k]) for k in shapes}
        return cls(A_TT=A_TT, **blocks)

    @property
    def n_x(self) -> int:
        return self.A_TT.shape[0]

    @property
    def n_v(self) -> int:
        return self.A_TS.shape[1]

    @property
    def n_u(self) -> int:
        return self.B_T.shape[1]

    @property
    def n_z(self) -> int:
        return self.A_ST.shape[0]

    @property
    def n_y(self) -> int:
        return self.C_T.shape[0]

    def expected_shapes(self) -> dict[str, tuple[int, int]]:
        x, v, u, z, y = self.n_x, self.n_v, self.n_u, self.n_z, self.n_y
        return dict(A_TT=(x, x), A_TS=(x, v), B_T=(x, u), A_ST=(z, x),
                    A_SS=(z, v), B_S=(z, u), C_T=(y, x), C_S=(y, v), D=(y, u))

    def blocks(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in BLOCK_NAMES}

    def replace(self, **changes) -> "SubsystemRealization":
        data = self.blocks()
        data.update({k: as_matrix(v) for k, v in changes.items()})
        return SubsystemRealization(**data)


@dataclass(frozen=True)
class Dims:
    """Per-subsystem dimensions and cumulative offsets ``M_{*,i}``."""

    n_x: tuple[int, ...]
    n_v: tuple[int, ...]
    n_u: tuple[int, ...]
    n_z: tuple[int, ...]
    n_y: tuple[int, ...]

    @classmethod
    def of(cls, subsystems) -> "Dims":
        return cls(*(tuple(getattr(s, "n_" + sig) for s in subsystems)
                     for sig in SIGNALS))

    @property
    def N(self) -> int:
        return len(self.n_x)

    def sizes(self, signal: str) -> tuple[int, ...]:
        return getattr(self, "n_" + signal)

    def offsets(self, signal: str) -> np.ndarray:
        """``M_{*,0..N}``: ``offsets[i]`` is the start of subsystem ``i`` (0-based)."""
        return np.concatenate([[0], np.cumsum(self.sizes(signal))]).astype(int)

    def total(self, signal: str) -> int:
        return int(sum(self.sizes(signal)))

    def slices(self, signal: str) -> list[slice]:
        off = self.offsets(signal)
        return [slice(int(off[i]), int(off[i + 1])) for i in range(self.N)]


@dataclass(frozen=True)
class Interconnection:
    """The SCM ``Phi`` (``M_v x M_z``) with its row/column ownership."""

    phi: np.ndarray
    v_sizes: tuple[int, ...]
    z_sizes: tuple[int, ...]
    strict_assumption3: bool = False

    def __post_init__(self):
        object.__setattr__(self, "phi", _frozen(as_matrix(
            self.phi, sum(self.v_sizes), sum(self.z_sizes))))
        object.__setattr__(self, "v_sizes", tuple(int(s) for s in self.v_sizes))
        object.__setattr__(self, "z_sizes", tuple(int(s) for s in self.z_sizes))

    @property
    def v_partition(self) -> list[slice]:
        off = np.concatenate([[0], np.cumsum(self.v_sizes)]).astype(int)
        return [slice(int(a), int(b)) for a, b in zip(off[:-1], off[1:])]

    @property
    def z_partition(self) -> list[slice]:
        off = np.concatenate([[0], np.cumsum(self.z_sizes)]).astype(int)
        return [slice(int(a), int(b)) for a, b in zip(off[:-1], off[1:])]

    def row_violations(self) -> list[str]:
        """Assumption-3 row-structure problems (1-based row numbers)."""
        out = []
        for r, row in enumerate(self.phi, start=1):
            nz = np.flatnonzero(row)
            if nz.size == 0:
                if self.strict_assumption3:
                    out.append(f"row {r} is all-zero")
                continue
            if nz.size > 1:
                out.append(f"row {r} has {nz.size} nonzero entries")
            elif row[nz[0]] != 1.0:
                out.append(f"row {r} has nonzero entry {float(row[nz[0]])!r} != 1")
        return out

    def is_unit_selecting(self) -> bool:
        """Every row is zero or a single 1 (the relaxed Assumption-3 form)."""
        return all("all-zero" in v for v in self.row_violations())


@dataclass(frozen=True)
class OutDegreeWeights:
    """Column counts ``m`` of ``Phi`` and ``Theta = diag(sqrt(m))``."""

    m: np.ndarray
    theta: np.ndarray
    theta_blocks: tuple[np.ndarray, ...]
    m_blocks: tuple[np.ndarray, ...] = ()

    @property
    def theta_sq(self) -> np.ndarray:
        """``diag(m)``, equal to ``Phi^T Phi`` without rounding."""
        return np.diag(self.m)

    def theta_sq_blocks(self) -> list[np.ndarray]:
        return [np.diag(b) for b in self.m_blocks]

    def out_degrees(self, z_partition) -> list[int]:
        return [int(self.m[sl].sum()) for sl in z_partition]


def out_degree_weights(interconnection: Interconnection) -> OutDegreeWeights:
    """Out-degree weights of a 0/1 SCM; ``Theta^2 == Phi^T Phi`` exactly."""
    phi = interconnection.phi
    if not interconnection.is_unit_selecting():
        raise ValueError("SCM has non-unit or multiple nonzero entries per row; "
                         "normalize first")
    counts = (phi != 0).astype(np.int64)
    m = counts.sum(axis=0)
    gram = counts.T @ counts
    assert np.array_equal(gram, np.diag(m)), "Phi^T Phi must be diagonal"
    theta = np.diag(np.sqrt(m.astype(float)))
    blocks = tuple(theta[sl, sl].copy() for sl in interconnection.z_partition)
    m_blocks = tuple(m[sl].copy() for sl in interconnection.z_partition)
    for b in blocks + m_blocks:
        b.setflags(write=False)
    m.setflags(write=False)
    theta.setflags(write=False)
    return OutDegreeWeights(m=m, theta=theta, theta_blocks=blocks, m_blocks=m_blocks)


@dataclass(frozen=True)
class GlobalBlocks:
    """Block-diagonal stacks ``diag{X(i)}`` of every subsystem block."""

    A_TT: np.ndarray
    A_TS: np.ndarray
    B_T: np.ndarray
    A_ST: np.ndarray
    A_SS: np.ndarray
    B_S: np.ndarray
    C_T: np.ndarray
    C_S: np.ndarray
    D: np.ndarray


@dataclass(frozen=True)
class NetworkedSystem:
    subsystems: tuple[SubsystemRealization, ...]
    interconnection: Interconnection
    dims: Dims = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "subsystems", tuple(self.subsystems))
        object.__setattr__(self, "dims", Dims.of(self.subsystems))

    @classmethod
    def build(cls, subsystems, phi=None, strict_assumption3: bool = False
              ) -> "NetworkedSystem":
        subsystems = tuple(subsystems)
        dims = Dims.of(subsystems)
        if phi is None:
            phi = np.zeros((dims.total("v"), dims.total("z")))
        inter = Interconnection(np.asarray(phi, dtype=float), dims.n_v, dims.n_z,
                                strict_assumption3)
        return cls(subsystems, inter)

    @property
    def N(self) -> int:
        return len(self.subsystems)

    @property
    def phi(self) -> np.ndarray:
        return self.interconnection.phi

    @cached_property
    def weights(self) -> OutDegreeWeights:
        return out_degree_weights(self.interconnection)

    @cached_property
    def blocks(self) -> GlobalBlocks:
        return assemble_global_blocks(self)

    def with_subsystems(self, subsystems) -> "NetworkedSystem":
        return NetworkedSystem.build(subsystems, self.phi,
                                     self.interconnection.strict_assumption3)

    def with_phi(self, phi, strict_assumption3: bool | None = None
                 ) -> "NetworkedSystem":
        strict = (self.interconnection.strict_assumption3
                  if strict_assumption3 is None else strict_assumption3)
        return NetworkedSystem.build(self.subsystems, phi, strict)


@dataclass
class ValidationReport:
    violations: list[str]

    @property
    def ok(self) -> bool:
        return not self.violations


def validate(system: NetworkedSystem) -> ValidationReport:
    """Collect every dimension, finiteness and SCM-structure problem."""
    problems = []
    for i, sub in enumerate(system.subsystems, start=1):
        for name, shape in sub.expected_shapes().items():
            blk = getattr(sub, name)
            if blk.shape != shape:
                problems.append(f"subsystem {i}: {name} has shape {blk.shape}, "
                                f"expected {shape}")
            if not np.all(np.isfinite(blk)):
                problems.append(f"subsystem {i}: {name} has non-finite entries")
    phi = system.phi
    expect = (system.dims.total("v"), system.dims.total("z"))
    if phi.shape != expect:
        problems.append(f"phi has shape {phi.shape}, expected {expect}")
    if not np.all(np.isfinite(phi)):
        problems.append("phi has non-finite entries")
    problems.extend(system.interconnection.row_violations())
    return ValidationReport(problems)


@dataclass(frozen=True)
class WellPosedness:
    ok: bool
    sigma_min: float
    tau: float
    condition: float


def check_well_posedness(system: NetworkedSystem,
                         tol: Tolerances = DEFAULT_TOL) -> WellPosedness:
    """Invertibility of ``I - Phi diag{A_SS(i)}`` via its smallest singular value."""
    M = loop_matrix(system)
    if M.size == 0:
        return WellPosedness(True, np.inf, 0.0, 1.0)
    sv = np.linalg.svd(M, compute_uv=False)
    if tol.rank_tol is not None:
        tau = tol.rank_tol
    else:
        tau = max(M.shape) * EPS * sv[0]
    smin = float(sv[-1])
    cond = float(sv[0] / smin) if smin > 0 else np.inf
    return WellPosedness(bool(smin > tau), smin, float(tau), cond)


def loop_matrix(system: NetworkedSystem) -> np.ndarray:
    """``I - Phi A_SS`` (``M_v x M_v``)."""
    A_SS = block_diag([s.A_SS for s in system.subsystems])
    return np.eye(system.dims.total("v")) - system.phi @ A_SS


def assemble_global_blocks(system: NetworkedSystem) -> GlobalBlocks:
    return GlobalBlocks(**{
        name: block_diag([getattr(s, name) for s in system.subsystems])
        for name in BLOCK_NAMES})


def normalize_interconnection(system: NetworkedSystem,
                              tol: Tolerances = DEFAULT_TOL) -> NetworkedSystem:
    """Rewrite a general real SCM into 0/1 rows with at most one nonzero.

    A row ``v_r = w_1 z_a + w_2 z_b + ...`` becomes one internal input per
    term (the owning subsystem's ``A_TS``, ``A_SS`` and ``C_S`` columns for
    ``v_r`` are duplicated), and a non-unit weight ``w`` is moved to the
    output side by appending the row ``w * (A_ST, A_SS, B_S)[z_a]`` as a new
    internal output of ``z_a``'s owner. The lifted input/output map is
    unchanged.
    """
    if not check_well_posedness(system, tol).ok:
        raise IllPosedError("cannot normalize an ill-posed system")
    inter = system.interconnection
    if inter.is_unit_selecting():
        return system
    phi = system.phi
    dims = system.dims
    v_owner = np.repeat(np.arange(dims.N), dims.n_v)
    z_owner = np.repeat(np.arange(dims.N), dims.n_z)
    z_local = np.concatenate([np.arange(n) for n in dims.n_z]).astype(int) \
        if dims.total("z") else np.zeros(0, dtype=int)
    v_local = np.concatenate([np.arange(n) for n in dims.n_v]).astype(int) \
        if dims.total("v") else np.zeros(0, dtype=int)

    # Step 1: split every row into single-term rows; record the column
    # template of each new v element in its owner subsystem.
    new_v_cols: list[list[int]] = [[] for _ in range(dims.N)]  # old local col
    new_terms: list[list[tuple[int, float] | None]] = [[] for _ in range(dims.N)]
    for r in range(phi.shape[0]):
        i = v_owner[r]
        nz = np.flatnonzero(phi[r])
        if nz.size == 0:
            new_v_cols[i].append(int(v_local[r]))
            new_terms[i].append(None)
        for c in nz:
            new_v_cols[i].append(int(v_local[r]))
            new_terms[i].append((int(c), float(phi[r, c])))

    split = []
    for i, sub in enumerate(system.subsystems):
        cols = new_v_cols[i]
        split.append(sub.replace(A_TS=sub.A_TS[:, cols], A_SS=sub.A_SS[:, cols],
                                 C_S=sub.C_S[:, cols]))

    # Step 2: absorb non-unit weights into scaled copies of z rows.
    extra_rows: list[list[tuple[int, float]]] = [[] for _ in range(dims.N)]
    scaled_index: dict[tuple[int, float], tuple[int, int]] = {}
    for terms in new_terms:
        for term in terms:
            if term is None or term[1] == 1.0 or term in scaled_index:
                continue
            c, w = term
            j = int(z_owner[c])
            scaled_index[term] = (j, dims.n_z[j] + len(extra_rows[j]))
            extra_rows[j].append((int(z_local[c]), w))

    final = []
    for j, sub in enumerate(split):
        if not extra_rows[j]:
            final.append(sub)
            continue
        idx = [r for r, _ in extra_rows[j]]
        w = np.array([w for _, w in extra_rows[j]])[:, None]
        final.append(sub.replace(
            A_ST=np.vstack([sub.A_ST, w * sub.A_ST[idx]]),
            A_SS=np.vstack([sub.A_SS, w * sub.A_SS[idx]]),
            B_S=np.vstack([sub.B_S, w * sub.B_S[idx]])))

    new_dims = Dims.of(final)
    z_off = new_dims.offsets("z")
    old_z_off = dims.offsets("z")
    new_phi = np.zeros((new_dims.total("v"), new_dims.total("z")))
    row = 0
    for i in range(dims.N):
        for term in new_terms[i]:
            if term is not None:
                c, w = term
                if w == 1.0:
                    j = int(z_owner[c])
                    col = z_off[j] + (c - old_z_off[j])
                else:
                    j, local = scaled_index[term]
                    col = z_off[j] + local
                new_phi[row, col] = 1.0
            row += 1
    return NetworkedSystem.build(final, new_phi, inter.strict_assumption3)
