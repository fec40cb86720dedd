"""Ground-truth analysis of the lifted (signal-eliminated) state-space model.

Eliminating ``v`` under well-posedness gives an ordinary LTI system
``x(t+1) = A x + B u``, ``y = C x + D u``; the PBH tests here decide its
observability/controllability directly and serve as the oracle every
subsystem-wise criterion is checked against.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .model import IllPosedError, NetworkedSystem, check_well_posedness, loop_matrix
from .numerics import (
    DEFAULT_TOL,
    EPS,
    Tolerances,
    cluster_values,
    rank_threshold,
    refine_rank_drop,
)


class Status(str, enum.Enum):
    CERTIFIED_YES = "CertifiedYes"
    CERTIFIED_NO = "CertifiedNo"
    INCONCLUSIVE = "Inconclusive"

    @property
    def exit_code(self) -> int:
        return {"CertifiedYes": 0, "CertifiedNo": 1, "Inconclusive": 2}[self.value]


@dataclass
class Witness:
    lam: complex
    margin: float
    tau: float

    def to_dict(self) -> dict:
        return {"lambda": [self.lam.real, self.lam.imag], "margin": self.margin,
                "tau": self.tau}


@dataclass
class Verdict:
    status: Status
    evidence: list[Witness] = field(default_factory=list)
    notes: str = ""

    @property
    def min_margin(self) -> float:
        return min((w.margin for w in self.evidence), default=np.inf)

    def witnesses(self) -> list[Witness]:
        """Candidates whose margin fell at or below the rank threshold."""
        return [w for w in self.evidence if w.margin <= w.tau]

    def to_dict(self) -> dict:
        return {"status": self.status.value,
                "evidence": [w.to_dict() for w in self.evidence],
                "notes": self.notes}


@dataclass(frozen=True)
class LiftedSystem:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    L: np.ndarray

    def step(self, x: np.ndarray, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return self.A @ x + self.B @ u, self.C @ x + self.D @ u


def lift(system: NetworkedSystem, tol: Tolerances = DEFAULT_TOL) -> LiftedSystem:
    """Eliminate the internal signals: ``v = L Phi (A_ST x + B_S u)``."""
    wp = check_well_posedness(system, tol)
    if not wp.ok:
        raise IllPosedError(f"system is not well-posed: sigma_min(I - Phi A_SS) "
                            f"= {wp.sigma_min:.3e} <= {wp.tau:.3e}")
    g = system.blocks
    phi = system.phi
    L = np.linalg.inv(loop_matrix(system))
    LP = L @ phi
    A = g.A_TT + g.A_TS @ LP @ g.A_ST
    B = g.B_T + g.A_TS @ LP @ g.B_S
    C = g.C_T + g.C_S @ LP @ g.A_ST
    D = g.D + g.C_S @ LP @ g.B_S
    return LiftedSystem(A, B, C, D, L)


def _classify(margin: float, tau: float, tol: Tolerances) -> Status:
    if margin <= tau:
        return Status.CERTIFIED_NO
    if margin <= tol.inconclusive_factor * tau:
        return Status.INCONCLUSIVE
    return Status.CERTIFIED_YES


def _combine(statuses) -> Status:
    statuses = list(statuses)
    if Status.CERTIFIED_NO in statuses:
        return Status.CERTIFIED_NO
    if Status.INCONCLUSIVE in statuses:
        return Status.INCONCLUSIVE
    return Status.CERTIFIED_YES


def pencil_rank_test(E: np.ndarray, F: np.ndarray, candidates,
                     tol: Tolerances = DEFAULT_TOL) -> Verdict:
    """Full-column-rank test of ``lam E - F`` at each candidate ``lam``.

    Each candidate is first polished by :func:`refine_rank_drop`; the margin
    is the smallest singular value found.
    """
    if E.shape[1] == 0:
        return Verdict(Status.CERTIFIED_YES, notes="empty state")
    evidence = []
    statuses = []
    for lam in candidates:
        lam_r, smin, smax = refine_rank_drop(E, F, lam)
        if tol.rank_tol is not None:
            tau = tol.rank_tol
        else:
            tau = max(E.shape) * EPS * smax
        evidence.append(Witness(lam_r, smin, tau))
        statuses.append(_classify(smin, tau, tol))
    status = _combine(statuses)
    evidence.sort(key=lambda w: w.margin)
    return Verdict(status, evidence)


def distinct_eigenvalues(A: np.ndarray, tol: Tolerances = DEFAULT_TOL
                         ) -> list[tuple[complex, list[int]]]:
    if A.shape[0] == 0:
        return []
    return cluster_values(np.linalg.eigvals(A), tol.cluster_tol)


def pbh_observable(A, C, tol: Tolerances = DEFAULT_TOL) -> Verdict:
    """PBH: ``col{lam I - A, C}`` has full column rank at every eigenvalue of ``A``."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    C = np.asarray(C, dtype=float).reshape(-1, n)
    E = np.vstack([np.eye(n), np.zeros((C.shape[0], n))])
    F = np.vstack([A, -C])
    cands = [lam for lam, _ in distinct_eigenvalues(A, tol)]
    return pbh_verdict(pencil_rank_test(E, F, cands, tol), "observability")


def pbh_controllable(A, B, tol: Tolerances = DEFAULT_TOL) -> Verdict:
    """PBH: ``[lam I - A, B]`` has full row rank at every eigenvalue of ``A``."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    B = np.asarray(B, dtype=float).reshape(n, -1)
    return pbh_verdict(pbh_observable(A.T, B.T, tol), "controllability")


def pbh_verdict(verdict: Verdict, what: str) -> Verdict:
    if not verdict.notes:
        verdict.notes = f"PBH {what} test at {len(verdict.evidence)} eigenvalue(s)"
    return verdict


@dataclass
class Multiplicity:
    lam: complex
    algebraic: int
    geometric: int


def max_geometric_multiplicity(A, tol: Tolerances = DEFAULT_TOL
                               ) -> tuple[int, list[Multiplicity]]:
    """Largest eigenspace dimension of ``A`` and the per-eigenvalue breakdown.

    Geometric multiplicity is ``n - rank(A - lam I)`` at the cluster centroid.
    Rank is decided with a threshold no finer than the clustering tolerance,
    because a cluster of ``k`` computed eigenvalues can sit up to that far from
    the exact one; the count is capped by the cluster size.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if n == 0:
        return 0, []
    out = []
    scale = max(1.0, float(np.linalg.norm(A, 2)))
    for lam, members in distinct_eigenvalues(A, tol):
        M = A - lam * np.eye(n)
        sv = np.linalg.svd(M, compute_uv=False)
        thr = max(rank_threshold(sv, M.shape, tol),
                  tol.cluster_tol * (1.0 + abs(lam)) * scale)
        geo = int(np.sum(sv <= thr))
        geo = max(1, min(geo, len(members)))
        out.append(Multiplicity(lam, len(members), geo))
    return max(m.geometric for m in out), out


def build_M(system: NetworkedSystem, lam: complex) -> np.ndarray:
    """The matrix polynomial ``M(lam)`` whose column rank decides observability."""
    E, F = m_pencil(system)
    return lam * E - F


def m_pencil(system: NetworkedSystem) -> tuple[np.ndarray, np.ndarray]:
    """``(E, F)`` with ``M(lam) = lam E - F``."""
    g = system.blocks
    phi = system.phi
    Mx, Mv, My = g.A_TT.shape[0], g.A_TS.shape[1], g.C_T.shape[0]
    E = np.zeros((Mx + My + Mv, Mx + Mv))
    E[:Mx, :Mx] = np.eye(Mx)
    F = np.block([
        [g.A_TT, g.A_TS],
        [g.C_T, g.C_S],
        [phi @ g.A_ST, phi @ g.A_SS - np.eye(Mv)],
    ]) if Mx + Mv else np.zeros((My, 0))
    return E, F


def verify_lemma3(system: NetworkedSystem, tol: Tolerances = DEFAULT_TOL,
                  cross_check: bool = True) -> Verdict:
    """Full-column-rank test of ``M(lam)`` at the lifted eigenvalues.

    With ``cross_check`` the subsystem ``A_TT`` eigenvalues are added to the
    candidate set.
    """
    lifted = lift(system, tol)
    E, F = m_pencil(system)
    cands = [lam for lam, _ in distinct_eigenvalues(lifted.A, tol)]
    if cross_check:
        extra = [lam for lam, _ in distinct_eigenvalues(system.blocks.A_TT, tol)]
        cands = [lam for lam, _ in cluster_values(cands + extra, tol.cluster_tol)] \
            if cands or extra else []
    v = pencil_rank_test(E, F, cands, tol)
    v.notes = f"M(lambda) column-rank test at {len(cands)} candidate(s)"
    return v


def lifted_observability(system: NetworkedSystem, tol: Tolerances = DEFAULT_TOL
                         ) -> Verdict:
    L = lift(system, tol)
    return pbh_observable(L.A, L.C, tol)


def lifted_controllability(system: NetworkedSystem, tol: Tolerances = DEFAULT_TOL
                           ) -> Verdict:
    L = lift(system, tol)
    return pbh_controllable(L.A, L.B, tol)


def observability_matrix(A, C) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    C = np.asarray(C, dtype=float).reshape(-1, n)
    rows = []
    blk = C
    for _ in range(n):
        rows.append(blk)
        blk = blk @ A
    return np.vstack(rows) if rows else np.zeros((0, 0))


def observability_singular_values(A, C) -> np.ndarray:
    """Ascending singular values of ``col{C, CA, ..., CA^{n-1}}``, padded to ``n``."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    O = observability_matrix(A, C)
    sv = np.linalg.svd(O, compute_uv=False) if O.size else np.zeros(0)
    out = np.zeros(n)
    out[:sv.size] = sv[:n]
    return np.sort(out)
