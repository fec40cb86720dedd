"""Synthesis of observable/controllable networked systems from subsystem STMs.

Each subsystem gets an output matrix ``C(i)`` with at least ``p_max(i)`` rows
(split into external rows ``C_T`` and internal rows ``A_ST``), random
coupling blocks, and an initial ``A_SS(i)``. Two ways to reach an
observable network are offered:

* the kappa loop: test the lifted system, and while it is not certified
  observable shrink every ``A_SS(i)`` by ``kappa``;
* the kappa bound: scale ``A_ST(i)`` and ``A_SS(i)`` once by
  ``0.9 / gamma_i`` so that every zero-group matrix
  ``I - Gamma^H Theta^2 Gamma`` becomes positive definite and
  ``sigma_max(Phi A_SS) < 1``.

Controllability is handled by the transposed construction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .criteria import theorem1_sufficient_obs, theorem2_sufficient_ctrb
from .lifted import (
    Status,
    lifted_controllability,
    lifted_observability,
    max_geometric_multiplicity,
    pbh_observable,
)
from .model import (
    Interconnection,
    NetworkedSystem,
    SubsystemRealization,
    check_well_posedness,
)
from .numerics import DEFAULT_TOL, Tolerances
from .spectra import ZeroGroup, gamma_ctrb, gamma_obs, zero_groups

BOUND_SAFETY = 0.9


class ConstructionError(ValueError):
    pass


def design_observing_matrix(A, q: int, rng: np.random.Generator | None = None,
                            tol: Tolerances = DEFAULT_TOL, retries: int = 20,
                            prefix_rows: int = 0) -> np.ndarray:
    """A real ``q x n`` matrix ``C`` with ``(A, C)`` PBH-observable.

    Rows are drawn from a standard Gaussian and the pair re-checked; with
    ``q >= p_max(A)`` a draw fails only on a null set. When
    ``prefix_rows >= p_max(A)`` the leading ``prefix_rows`` rows are also
    required to observe ``A`` on their own.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    p_max = max_geometric_multiplicity(A, tol)[0]
    if q < p_max:
        raise ConstructionError(f"budget below p_max = {p_max}: no {q}-row output "
                                "matrix can observe this state-transition matrix")
    rng = np.random.default_rng() if rng is None else rng
    for _ in range(retries):
        C = rng.standard_normal((q, n))
        if pbh_observable(A, C, tol).status is not Status.CERTIFIED_YES:
            continue
        if prefix_rows >= max(p_max, 1) and n and pbh_observable(
                A, C[:prefix_rows], tol).status is not Status.CERTIFIED_YES:
            continue
        return C
    raise ConstructionError(f"no observable draw in {retries} attempts; "
                            "check the tolerance settings")


def partition_outputs(C, m_y: int, m_z: int) -> tuple[np.ndarray, np.ndarray]:
    """Split ``C`` into ``C_T`` (first ``m_y`` rows) and ``A_ST`` (last ``m_z``)."""
    C = np.asarray(C, dtype=float)
    if m_y < 0 or m_z < 0 or m_y + m_z != C.shape[0]:
        raise ValueError(f"cannot split {C.shape[0]} rows into m_y={m_y} "
                         f"and m_z={m_z}")
    return C[:m_y].copy(), C[m_y:].copy()


def ring_interconnection(N: int) -> Interconnection:
    """One internal signal per subsystem; subsystem ``i`` hears ``i - 1``.

    A single subsystem gets an empty interconnection.
    """
    if N <= 1:
        return Interconnection(np.zeros((0, 0)), (0,) * N, (0,) * N)
    phi = np.zeros((N, N))
    for i in range(N):
        phi[i, (i - 1) % N] = 1.0
    return Interconnection(phi, (1,) * N, (1,) * N)


@dataclass
class KappaBound:
    gamma: list[float]

    @property
    def upper(self) -> list[float]:
        """Right end of each admissible interval ``(0, 1 / gamma_i)``."""
        return [np.inf if g == 0 else 1.0 / g for g in self.gamma]

    def safe_kappa(self, safety: float = BOUND_SAFETY) -> list[float]:
        return [1.0 if g == 0 else min(1.0, safety / g) for g in self.gamma]


def kappa_bound(system: NetworkedSystem, groups: list[ZeroGroup],
                dual: bool = False) -> KappaBound:
    """``gamma_i = max{sigma_max(Theta_i A_SS(i)), sigma_max(Theta_i Gamma)}``.

    The second term runs over the zero-group members owned by ``i``; with
    ``dual`` it uses the controllability ``Gammabar`` (unweighted).
    """
    theta = system.weights.theta_blocks
    gamma = []
    for i, s in enumerate(system.subsystems):
        TA = theta[i] @ s.A_SS
        gamma.append(float(np.linalg.norm(TA, 2)) if TA.size else 0.0)
    for g in groups:
        for k, e in enumerate(g.entries):
            i = e.subsystem
            if dual:
                G = gamma_ctrb(system, g, k)
            else:
                G = theta[i] @ gamma_obs(system, g, k)
            if G.size:
                gamma[i] = max(gamma[i], float(np.linalg.norm(G, 2)))
    return KappaBound(gamma)


@dataclass
class TraceStep:
    index: int
    kappa: float | list[float]
    status: Status
    margin: float
    max_abs_A_SS: float

    def to_dict(self) -> dict:
        return {"iteration": self.index, "kappa": self.kappa,
                "status": self.status.value, "margin": self.margin,
                "max_abs_A_SS": self.max_abs_A_SS}


@dataclass
class ConstructionTrace:
    iterations: list[TraceStep] = field(default_factory=list)
    system: NetworkedSystem | None = None
    converged: bool = False
    certified_by_criterion: bool = False

    def to_dict(self) -> dict:
        return {"converged": self.converged,
                "certified_by_criterion": self.certified_by_criterion,
                "iterations": [s.to_dict() for s in self.iterations]}


@dataclass
class ConstructOptions:
    kappa: float = 0.9
    max_iters: int = 50
    use_kappa_bound: bool = False
    budgets: list[int] | None = None
    init_scale: float = 1.0
    seed: int | None = 0


def _unit_norm_gaussian(rng, rows: int, cols: int, scale: float) -> np.ndarray:
    M = rng.standard_normal((rows, cols))
    nrm = np.linalg.norm(M, 2) if M.size else 0.0
    return scale * M / nrm if nrm > 0 else M


def _budgets(stms, sizes, options: ConstructOptions, tol) -> list[int]:
    p = [max_geometric_multiplicity(np.asarray(A, dtype=float), tol)[0]
         for A in stms]
    if options.budgets is None:
        return [pi + ni for pi, ni in zip(p, sizes)]
    budgets = [int(b) for b in options.budgets]
    for i, (b, pi, ni) in enumerate(zip(budgets, p, sizes)):
        if b < pi:
            raise ConstructionError(f"subsystem {i + 1}: budget below p_max = {pi}")
        if b < ni:
            raise ConstructionError(f"subsystem {i + 1}: budget {b} smaller than "
                                    f"its {ni} interconnection channel(s)")
    return budgets


def _status_of(system: NetworkedSystem, verdict_fn, tol) -> tuple[Status, float]:
    if not check_well_posedness(system, tol).ok:
        return Status.CERTIFIED_NO, 0.0
    v = verdict_fn(system, tol)
    return v.status, float(v.min_margin)


def _max_abs(system: NetworkedSystem) -> float:
    return max((float(np.max(np.abs(s.A_SS))) for s in system.subsystems
                if s.A_SS.size), default=0.0)


def _run(system: NetworkedSystem, options: ConstructOptions, tol: Tolerances,
         dual: bool) -> tuple[NetworkedSystem, ConstructionTrace]:
    verdict_fn = lifted_controllability if dual else lifted_observability
    criterion = theorem2_sufficient_ctrb if dual else theorem1_sufficient_obs
    if not 0.0 < options.kappa < 1.0:
        raise ValueError(f"kappa must lie in (0, 1), got {options.kappa}")
    trace = ConstructionTrace()
    status, margin = _status_of(system, verdict_fn, tol)
    trace.iterations.append(TraceStep(0, 1.0, status, margin, _max_abs(system)))
    it = 0
    # The bound step is always taken: it is what makes the criterion certify.
    while (options.use_kappa_bound or status is not Status.CERTIFIED_YES) \
            and it < options.max_iters:
        it += 1
        if options.use_kappa_bound:
            groups = zero_groups(system, dual=dual, tol=tol)
            kap = kappa_bound(system, groups, dual=dual).safe_kappa()
            coupled = "A_TS" if dual else "A_ST"
            subs = [s.replace(**{coupled: k * getattr(s, coupled),
                                 "A_SS": k * s.A_SS})
                    for s, k in zip(system.subsystems, kap)]
            applied: float | list[float] = kap
        else:
            subs = [s.replace(A_SS=options.kappa * s.A_SS)
                    for s in system.subsystems]
            applied = options.kappa
        system = system.with_subsystems(subs)
        status, margin = _status_of(system, verdict_fn, tol)
        trace.iterations.append(TraceStep(it, applied, status, margin,
                                          _max_abs(system)))
        if options.use_kappa_bound:
            break
    trace.system = system
    trace.converged = status is Status.CERTIFIED_YES
    if check_well_posedness(system, tol).ok:
        trace.certified_by_criterion = criterion(system, tol).status is \
            Status.CERTIFIED_YES
    return system, trace


def _resolve(stms, interconnection):
    stms = [np.asarray(A, dtype=float) for A in stms]
    if interconnection is None:
        interconnection = ring_interconnection(len(stms))
    if len(interconnection.v_sizes) != len(stms):
        raise ValueError(f"interconnection has {len(interconnection.v_sizes)} "
                         f"subsystems, {len(stms)} STMs given")
    return stms, interconnection


def construct_observable(stms, interconnection: Interconnection | None = None,
                         options: ConstructOptions | None = None,
                         tol: Tolerances = DEFAULT_TOL
                         ) -> tuple[NetworkedSystem, ConstructionTrace]:
    """Build an observable networked system around the given STMs.

    ``C_T`` gets ``budget - n_z`` rows and is designed to observe ``A_TT`` by
    itself whenever that is possible, so the ``G1`` blocks are regular at
    their zeros and the kappa bound applies.
    """
    options = options or ConstructOptions()
    stms, inter = _resolve(stms, interconnection)
    rng = np.random.default_rng(options.seed)
    budgets = _budgets(stms, inter.z_sizes, options, tol)
    subs = []
    for A, q, n_v, n_z in zip(stms, budgets, inter.v_sizes, inter.z_sizes):
        n = A.shape[0]
        m_y = q - n_z
        C = design_observing_matrix(A, q, rng, tol, prefix_rows=m_y)
        C_T, A_ST = partition_outputs(C, m_y, n_z)
        subs.append(SubsystemRealization.create(
            A, A_TS=rng.standard_normal((n, n_v)), A_ST=A_ST,
            A_SS=_unit_norm_gaussian(rng, n_z, n_v, options.init_scale),
            C_T=C_T, C_S=rng.standard_normal((m_y, n_v)),
            n_v=n_v, n_u=0, n_z=n_z, n_y=m_y))
    system = NetworkedSystem.build(subs, inter.phi, inter.strict_assumption3)
    return _run(system, options, tol, dual=False)


def construct_controllable(stms, interconnection: Interconnection | None = None,
                           options: ConstructOptions | None = None,
                           tol: Tolerances = DEFAULT_TOL
                           ) -> tuple[NetworkedSystem, ConstructionTrace]:
    """Transposed counterpart of :func:`construct_observable`.

    ``[B_T A_TS]`` is designed on ``A^T``; ``B_T`` gets ``budget - n_v``
    columns.
    """
    options = options or ConstructOptions()
    stms, inter = _resolve(stms, interconnection)
    rng = np.random.default_rng(options.seed)
    budgets = _budgets(stms, inter.v_sizes, options, tol)
    subs = []
    for A, q, n_v, n_z in zip(stms, budgets, inter.v_sizes, inter.z_sizes):
        n = A.shape[0]
        m_u = q - n_v
        Bt = design_observing_matrix(A.T, q, rng, tol, prefix_rows=m_u)
        B_T, A_TS = (b.T for b in partition_outputs(Bt, m_u, n_v))
        subs.append(SubsystemRealization.create(
            A, A_TS=A_TS, B_T=B_T, A_ST=rng.standard_normal((n_z, n)),
            A_SS=_unit_norm_gaussian(rng, n_z, n_v, options.init_scale),
            B_S=rng.standard_normal((n_z, m_u)),
            n_v=n_v, n_u=m_u, n_z=n_z, n_y=0))
    system = NetworkedSystem.build(subs, inter.phi, inter.strict_assumption3)
    return _run(system, options, tol, dual=True)
