"""Subsystem-wise observability/controllability criteria and the full report.

Necessary conditions (PBH on subsystem-level pairs) can certify a negative;
sufficient conditions (definiteness tests at the transmission zeros of the
``G1``/``G1bar`` blocks) can certify a positive. Neither ever certifies the
other direction. :func:`full_analysis` runs both plus the lifted oracle and
flags any contradiction.

Sufficient tests
----------------
At a zero ``lam0`` any null vector of ``M(lam0)`` is built from the members'
Rosenbrock null bases, ``[X_j; Y_j] alpha_j``, and satisfies

    sum_j alpha_j^H (Y_j^H Y_j - Z_j^H Theta_j^2 Z_j) alpha_j = 0,

with ``Z_j = A_ST X_j + A_SS Y_j``. So a group whose members' matrices are
all positive definite, or all negative definite, admits no null vector.
For regular members (``Y_j`` full column rank) the matrix is congruent to
``I - Gamma^H Theta^2 Gamma``. The controllability dual only has the
inequality direction, so only positive definiteness of
``Y^H Theta^{-2} Y - Q^H Q`` certifies.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .lifted import (
    Status,
    Verdict,
    lift,
    lifted_controllability,
    lifted_observability,
    observability_singular_values,
    pbh_controllable,
    pbh_observable,
    verify_lemma3,
)
from .model import IllPosedError, NetworkedSystem, check_well_posedness
from .numerics import DEFAULT_TOL, Tolerances, inv_sqrt_hermitian, sigma_max
from .spectra import (
    NotFCNRError,
    ZeroGroup,
    ZeroMember,
    fcnr,
    gamma_ctrb,
    gamma_obs,
    internal_image,
    make_block,
    zero_groups,
)


class Outcome(str, enum.Enum):
    PASS = "Pass"
    FAIL = "Fail"
    INCONCLUSIVE = "Inconclusive"


@dataclass
class SubsystemOutcome:
    subsystem: int
    outcome: Outcome
    margin: float

    def to_dict(self) -> dict:
        return {"subsystem": self.subsystem + 1, "outcome": self.outcome.value,
                "margin": self.margin}


@dataclass
class MemberOutcome:
    """Definiteness of one member's test matrix inside a zero group."""

    group: int
    lambda0: complex
    subsystem: int
    p: int
    regular: bool
    min_eig: float
    max_eig: float
    eps: float

    @property
    def sign(self) -> int:
        """+1 positive definite, -1 negative definite, 0 neither (beyond margin)."""
        if self.min_eig > self.eps:
            return 1
        if self.max_eig < -self.eps:
            return -1
        return 0

    def to_dict(self) -> dict:
        return {"group": self.group + 1,
                "lambda0": [self.lambda0.real, self.lambda0.imag],
                "subsystem": self.subsystem + 1, "p": self.p,
                "regular": self.regular, "min_eig": self.min_eig,
                "max_eig": self.max_eig, "eps": self.eps, "sign": self.sign}


@dataclass
class CriterionResult:
    name: str
    outcome: Outcome
    status: Status
    subsystems: list[SubsystemOutcome] = field(default_factory=list)
    members: list[MemberOutcome] = field(default_factory=list)
    reason: str = ""
    individual_outcome: Outcome | None = None

    @property
    def failing_subsystems(self) -> list[int]:
        return [s.subsystem for s in self.subsystems if s.outcome is Outcome.FAIL]

    def to_dict(self) -> dict:
        d = {"name": self.name, "outcome": self.outcome.value,
             "status": self.status.value, "reason": self.reason,
             "subsystems": [s.to_dict() for s in self.subsystems],
             "members": [m.to_dict() for m in self.members]}
        if self.individual_outcome is not None:
            d["individual_outcome"] = self.individual_outcome.value
        return d


def _pbh_outcome(v: Verdict) -> Outcome:
    return {Status.CERTIFIED_YES: Outcome.PASS, Status.CERTIFIED_NO: Outcome.FAIL,
            Status.INCONCLUSIVE: Outcome.INCONCLUSIVE}[v.status]


def _necessary(name: str, outcomes: list[SubsystemOutcome], what: str
               ) -> CriterionResult:
    kinds = {o.outcome for o in outcomes}
    if Outcome.FAIL in kinds:
        bad = ", ".join(str(o.subsystem + 1) for o in outcomes
                        if o.outcome is Outcome.FAIL)
        return CriterionResult(name, Outcome.FAIL, Status.CERTIFIED_NO, outcomes,
                               reason=f"subsystem(s) {bad}: {what} pair fails PBH")
    if Outcome.INCONCLUSIVE in kinds:
        return CriterionResult(name, Outcome.INCONCLUSIVE, Status.INCONCLUSIVE,
                               outcomes, reason="PBH margin within the "
                               "inconclusive band")
    return CriterionResult(name, Outcome.PASS, Status.INCONCLUSIVE, outcomes,
                           reason="necessary condition holds")


def lemma5_necessary_obs(system: NetworkedSystem, tol: Tolerances = DEFAULT_TOL
                         ) -> CriterionResult:
    """PBH observability of ``(A_TT(i), col{C_T(i), A_ST(i)})`` for every ``i``."""
    outs = []
    for i, s in enumerate(system.subsystems):
        v = pbh_observable(s.A_TT, np.vstack([s.C_T, s.A_ST]), tol)
        outs.append(SubsystemOutcome(i, _pbh_outcome(v), v.min_margin))
    return _necessary("local-obs-necessary", outs, "(A_TT, col{C_T, A_ST})")


def theorem2_necessary_ctrb(system: NetworkedSystem,
                            tol: Tolerances = DEFAULT_TOL) -> CriterionResult:
    """PBH controllability of ``(A_TT(i), [B_T(i) A_TS(i)])`` for every ``i``."""
    outs = []
    for i, s in enumerate(system.subsystems):
        v = pbh_controllable(s.A_TT, np.hstack([s.B_T, s.A_TS]), tol)
        outs.append(SubsystemOutcome(i, _pbh_outcome(v), v.min_margin))
    return _necessary("local-ctrb-necessary", outs, "(A_TT, [B_T A_TS])")


def _eig_range(H: np.ndarray) -> tuple[float, float]:
    w = np.linalg.eigvalsh(0.5 * (H + H.conj().T))
    return float(w[0]), float(w[-1])


def obs_member_matrix(system: NetworkedSystem, member: ZeroMember
                      ) -> tuple[np.ndarray, float]:
    """Test matrix and its scale for one member of an observability group.

    Regular members give ``I - Gamma^H Theta^2 Gamma``; otherwise the
    congruent ``Y^H Y - Z^H Theta^2 Z`` on the full Rosenbrock null space.
    """
    m = system.weights.m_blocks[member.subsystem]
    Z = internal_image(system, member)
    if member.regular:
        G = Z @ inv_sqrt_hermitian(member.Y.conj().T @ member.Y)
        return np.eye(member.p) - G.conj().T @ (m[:, None] * G), sigma_max(G) ** 2
    H = member.Y.conj().T @ member.Y - Z.conj().T @ (m[:, None] * Z)
    return H, sigma_max(np.sqrt(m)[:, None] * Z) ** 2


def evaluate_theorem1(system: NetworkedSystem, groups: list[ZeroGroup],
                      tol: Tolerances = DEFAULT_TOL) -> CriterionResult:
    """Observability definiteness verdict for precomputed zero groups (any bases)."""
    members = []
    group_ok = []
    indiv_ok = True
    for k, g in enumerate(groups):
        signs = []
        for e in g.entries:
            H, scale = obs_member_matrix(system, e)
            lo, hi = _eig_range(H)
            m = MemberOutcome(k, g.lambda0, e.subsystem, e.p, e.regular, lo, hi,
                              tol.pd_margin * (1.0 + scale))
            members.append(m)
            signs.append(m.sign)
        group_ok.append(bool(signs) and 0 not in signs and len(set(signs)) == 1)
        indiv_ok &= 0 not in signs
    passed = all(group_ok)
    outcome = Outcome.PASS if passed else Outcome.INCONCLUSIVE
    if passed:
        reason = (f"{len(groups)} zero group(s), each uniformly definite"
                  if groups else "no transmission zeros: vacuous pass")
    else:
        bad = [str(k + 1) for k, ok in enumerate(group_ok) if not ok]
        reason = f"group(s) {', '.join(bad)} not uniformly definite"
    individual = Outcome.PASS if indiv_ok else Outcome.INCONCLUSIVE
    return CriterionResult("zero-definiteness-obs", outcome,
                           Status.CERTIFIED_YES if passed else Status.INCONCLUSIVE,
                           members=members, reason=reason,
                           individual_outcome=individual
                           if individual is not outcome else None)


def _fcnr_failures(system: NetworkedSystem, tag: str, tol: Tolerances) -> list[int]:
    return [i for i in range(system.N)
            if not fcnr(make_block(system, i, tag), tol)]


def theorem1_sufficient_obs(system: NetworkedSystem,
                            tol: Tolerances = DEFAULT_TOL) -> CriterionResult:
    """Definiteness test at every zero group of the ``G1`` blocks."""
    bad = _fcnr_failures(system, "G1", tol)
    if bad:
        return CriterionResult("zero-definiteness-obs", Outcome.INCONCLUSIVE, Status.INCONCLUSIVE,
                               reason="G1 not FCNR in subsystem(s) "
                               + ", ".join(str(i + 1) for i in bad))
    if not check_well_posedness(system, tol).ok:
        return CriterionResult("zero-definiteness-obs", Outcome.INCONCLUSIVE, Status.INCONCLUSIVE,
                               reason="system is not well-posed")
    try:
        groups = zero_groups(system, dual=False, tol=tol)
    except NotFCNRError as exc:
        return CriterionResult("zero-definiteness-obs", Outcome.INCONCLUSIVE, Status.INCONCLUSIVE,
                               reason=str(exc))
    return evaluate_theorem1(system, groups, tol)


def ctrb_member_matrix(system: NetworkedSystem, member: ZeroMember
                       ) -> tuple[np.ndarray, float]:
    """``Y^H Theta^{-2} Y - Q^H Q`` (or ``I - Gammabar^H Gammabar`` when regular)."""
    m = system.weights.m_blocks[member.subsystem]
    Q = internal_image(system, member, dual=True)
    gram = member.Y.conj().T @ (member.Y / m[:, None])
    if member.regular:
        G = Q @ inv_sqrt_hermitian(gram)
        return np.eye(member.p) - G.conj().T @ G, sigma_max(G) ** 2
    return gram - Q.conj().T @ Q, sigma_max(Q) ** 2


def evaluate_theorem2(system: NetworkedSystem, groups: list[ZeroGroup],
                      tol: Tolerances = DEFAULT_TOL) -> CriterionResult:
    members = []
    for k, g in enumerate(groups):
        for e in g.entries:
            if np.any(system.weights.m_blocks[e.subsystem] == 0):
                return CriterionResult(
                    "zero-definiteness-ctrb", Outcome.INCONCLUSIVE, Status.INCONCLUSIVE,
                    members=members, reason=f"Theta^-2 undefined: subsystem "
                    f"{e.subsystem + 1} has an internal output with out-degree 0")
            H, scale = ctrb_member_matrix(system, e)
            lo, hi = _eig_range(H)
            members.append(MemberOutcome(k, g.lambda0, e.subsystem, e.p,
                                         e.regular, lo, hi,
                                         tol.pd_margin * (1.0 + scale)))
    passed = all(m.sign == 1 for m in members)
    if passed:
        reason = (f"{len(groups)} zero group(s), all members positive definite"
                  if groups else "no transmission zeros: vacuous pass")
    else:
        reason = "some member not positive definite"
    return CriterionResult("zero-definiteness-ctrb", Outcome.PASS if passed else
                           Outcome.INCONCLUSIVE,
                           Status.CERTIFIED_YES if passed else Status.INCONCLUSIVE,
                           members=members, reason=reason)


def theorem2_sufficient_ctrb(system: NetworkedSystem,
                             tol: Tolerances = DEFAULT_TOL) -> CriterionResult:
    """Positive definiteness test at every zero group of the ``G1bar`` blocks."""
    bad = _fcnr_failures(system, "G1bar", tol)
    if bad:
        return CriterionResult("zero-definiteness-ctrb", Outcome.INCONCLUSIVE, Status.INCONCLUSIVE,
                               reason="G1bar not FCNR in subsystem(s) "
                               + ", ".join(str(i + 1) for i in bad))
    if not check_well_posedness(system, tol).ok:
        return CriterionResult("zero-definiteness-ctrb", Outcome.INCONCLUSIVE, Status.INCONCLUSIVE,
                               reason="system is not well-posed")
    groups = zero_groups(system, dual=True, tol=tol)
    return evaluate_theorem2(system, groups, tol)


def theorem1_gammas(system: NetworkedSystem, groups: list[ZeroGroup]
                    ) -> list[list[np.ndarray | None]]:
    """``Gamma`` per (group, member); ``None`` for irregular members."""
    out = []
    for g in groups:
        row = []
        for s, e in enumerate(g.entries):
            row.append(gamma_obs(system, g, s) if e.regular else None)
        out.append(row)
    return out


def theorem2_gammas(system: NetworkedSystem, groups: list[ZeroGroup]
                    ) -> list[list[np.ndarray | None]]:
    out = []
    for g in groups:
        row = []
        for s, e in enumerate(g.entries):
            row.append(gamma_ctrb(system, g, s) if e.regular else None)
        out.append(row)
    return out


@dataclass
class ModeReport:
    """All verdicts for one property (observability or controllability)."""

    mode: str
    status: Status
    necessary: CriterionResult
    sufficient: CriterionResult
    oracle: Verdict
    pencil: Verdict | None = None
    singular_values: np.ndarray = field(default_factory=lambda: np.zeros(0))
    flags: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        d = {"mode": self.mode, "status": self.status.value,
             "necessary": self.necessary.to_dict(),
             "sufficient": self.sufficient.to_dict(),
             "oracle": self.oracle.to_dict(),
             "singular_values": [float(s) for s in self.singular_values],
             "consistency_flags": list(self.flags)}
        if self.pencil is not None:
            d["m_pencil"] = self.pencil.to_dict()
        return d


@dataclass
class AnalysisReport:
    observability: ModeReport | None = None
    controllability: ModeReport | None = None

    @property
    def flags(self) -> list[str]:
        out = []
        for r in (self.observability, self.controllability):
            if r is not None:
                out.extend(r.flags)
        return out

    def to_dict(self) -> dict:
        return {k: getattr(self, k).to_dict()
                for k in ("observability", "controllability")
                if getattr(self, k) is not None}


def _consistency(mode: str, nec: CriterionResult, suf: CriterionResult,
                 oracle: Verdict, pencil: Verdict | None) -> list[str]:
    flags = []
    if nec.outcome is Outcome.FAIL and oracle.status is Status.CERTIFIED_YES:
        flags.append(f"{mode}: {nec.name} failed but the lifted oracle certifies "
                     "the property")
    if suf.outcome is Outcome.PASS and oracle.status is Status.CERTIFIED_NO:
        flags.append(f"{mode}: {suf.name} passed but the lifted oracle refutes "
                     "the property")
    if pencil is not None and Status.INCONCLUSIVE not in (pencil.status,
                                                          oracle.status):
        if pencil.status is not oracle.status:
            flags.append(f"{mode}: M(lambda) rank test ({pencil.status.value}) "
                         f"disagrees with lifted PBH ({oracle.status.value})")
    return flags


def _final_status(nec: CriterionResult, suf: CriterionResult,
                  oracle: Verdict) -> Status:
    if oracle.status is not Status.INCONCLUSIVE:
        return oracle.status
    if nec.outcome is Outcome.FAIL:
        return Status.CERTIFIED_NO
    if suf.outcome is Outcome.PASS:
        return Status.CERTIFIED_YES
    return Status.INCONCLUSIVE


def analyze_observability(system: NetworkedSystem, tol: Tolerances = DEFAULT_TOL
                          ) -> ModeReport:
    nec = lemma5_necessary_obs(system, tol)
    suf = theorem1_sufficient_obs(system, tol)
    oracle = lifted_observability(system, tol)
    l3 = verify_lemma3(system, tol)
    L = lift(system, tol)
    sv = observability_singular_values(L.A, L.C)
    report = ModeReport("observability", _final_status(nec, suf, oracle), nec, suf,
                        oracle, l3, sv)
    report.flags = _consistency("observability", nec, suf, oracle, l3)
    return report


def analyze_controllability(system: NetworkedSystem,
                            tol: Tolerances = DEFAULT_TOL) -> ModeReport:
    nec = theorem2_necessary_ctrb(system, tol)
    suf = theorem2_sufficient_ctrb(system, tol)
    oracle = lifted_controllability(system, tol)
    L = lift(system, tol)
    sv = observability_singular_values(L.A.T, L.B.T)
    report = ModeReport("controllability", _final_status(nec, suf, oracle), nec,
                        suf, oracle, None, sv)
    report.flags = _consistency("controllability", nec, suf, oracle, None)
    return report


def full_analysis(system: NetworkedSystem, tol: Tolerances = DEFAULT_TOL,
                  modes=("observability", "controllability")) -> AnalysisReport:
    """Every criterion plus the lifted oracle, with consistency flags."""
    wp = check_well_posedness(system, tol)
    if not wp.ok:
        raise IllPosedError(f"system is not well-posed: sigma_min(I - Phi A_SS) "
                            f"= {wp.sigma_min:.3e}")
    report = AnalysisReport()
    if "observability" in modes:
        report.observability = analyze_observability(system, tol)
    if "controllability" in modes:
        report.controllability = analyze_controllability(system, tol)
    return report
