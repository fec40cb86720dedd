"""Subsystem transfer blocks, their zeros, zero groups and Gamma matrices.

For subsystem ``i``:

    G1_i(lam)    = C_S + C_T (lam I - A_TT)^{-1} A_TS
    G2_i(lam)    = A_SS + A_ST (lam I - A_TT)^{-1} A_TS
    G1bar_i(lam) = B_S^T + B_T^T (lam I - A_TT^T)^{-1} A_ST^T
    G2bar_i(lam) = G2_i(lam)^T

Zeros are computed from the Rosenbrock system-matrix pencil

    P(lam) = [[lam I - A, -B], [C, D]]

with the generalized eigenvalue solver. A zero group collects every
subsystem sharing one zero, together with a basis of ``null P_j(lam0)``
split into its state part ``X`` and its internal-signal part ``Y``.
When ``lam0`` is not an eigenvalue of ``A_TT(j)``, ``Y`` spans
``null G1_j(lam0)`` and ``X = (lam0 I - A_TT)^{-1} A_TS Y``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg

from .model import NetworkedSystem
from .numerics import (
    DEFAULT_TOL,
    EPS,
    Tolerances,
    block_diag,
    cluster_values,
    inv_sqrt_hermitian,
    null_space,
    refine_rank_drop,
)

TAGS = ("G1", "G2", "G1bar", "G2bar")


class NotFCNRError(ValueError):
    """The block does not have full column normal rank."""


class ThetaSingularError(ValueError):
    """A zero out-degree makes the controllability weighting undefined."""


@dataclass(frozen=True)
class RationalBlock:
    """``D + C (lam I - A)^{-1} B`` for one subsystem (``owner``; -1 for global)."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    tag: str = "G1"
    owner: int = -1

    @property
    def shape(self) -> tuple[int, int]:
        return self.D.shape

    def pencil(self) -> tuple[np.ndarray, np.ndarray]:
        """``(E, F)`` with ``lam E - F = [[lam I - A, -B], [C, D]]``."""
        n, (p, m) = self.A.shape[0], self.D.shape
        E = np.zeros((n + p, n + m))
        E[:n, :n] = np.eye(n)
        F = np.block([[self.A, self.B], [-self.C, -self.D]]) if n + m else \
            np.zeros((p, 0))
        return E, F


def make_block(system: NetworkedSystem, i: int, tag: str = "G1") -> RationalBlock:
    s = system.subsystems[i]
    if tag == "G1":
        quad = (s.A_TT, s.A_TS, s.C_T, s.C_S)
    elif tag == "G2":
        quad = (s.A_TT, s.A_TS, s.A_ST, s.A_SS)
    elif tag == "G1bar":
        quad = (s.A_TT.T, s.A_ST.T, s.B_T.T, s.B_S.T)
    elif tag == "G2bar":
        quad = (s.A_TT.T, s.A_ST.T, s.A_TS.T, s.A_SS.T)
    else:
        raise ValueError(f"unknown block tag {tag!r}; expected one of {TAGS}")
    return RationalBlock(*(np.array(q, dtype=float) for q in quad), tag=tag,
                         owner=i)


def global_block(system: NetworkedSystem, tag: str = "G1") -> RationalBlock:
    """Block-diagonal ``diag{G_i}`` realised as one state-space quadruple."""
    parts = [make_block(system, i, tag) for i in range(system.N)]
    return RationalBlock(*(block_diag([getattr(b, f) for b in parts])
                           for f in "ABCD"), tag=tag, owner=-1)


def _group_inverse(N: np.ndarray, tol: Tolerances) -> np.ndarray:
    """Group inverse of a singular index-1 ``N``; pseudo-inverse otherwise.

    For ``N = lam I - A`` with ``lam`` a semisimple eigenvalue this is the
    finite part of ``((lam - delta) I - A)^{-1}`` as ``delta -> 0``.
    """
    X = null_space(N, tol.null_tol)
    Yl = null_space(N.conj().T, tol.null_tol)
    if X.shape[1] and X.shape[1] == Yl.shape[1]:
        G = Yl.conj().T @ X
        if np.linalg.svd(G, compute_uv=False)[-1] > tol.null_tol:
            P = X @ np.linalg.solve(G, Yl.conj().T)
            return np.linalg.inv(N + P) - P
    return np.linalg.pinv(N)


def evaluate(block: RationalBlock, lam: complex,
             tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Value of the block at ``lam``; at a pole the finite limit part is used."""
    n = block.A.shape[0]
    D = block.D.astype(complex)
    if n == 0:
        return D
    N = lam * np.eye(n) - block.A
    sv = np.linalg.svd(N, compute_uv=False)
    if sv[-1] > 1e3 * n * EPS * sv[0]:
        return D + block.C @ np.linalg.solve(N, block.B)
    return D + block.C @ _group_inverse(N, tol) @ block.B


def _probe_points(block: RationalBlock, count: int, seed: int) -> list[complex]:
    rng = np.random.default_rng(seed)
    rad = 1.0
    if block.A.size:
        rad += float(np.max(np.abs(np.linalg.eigvals(block.A))))
    r = rad * (1.5 + rng.random(count))
    th = 2 * np.pi * rng.random(count)
    return list(r * np.exp(1j * th))


def fcnr(block: RationalBlock, tol: Tolerances = DEFAULT_TOL, seed: int = 7) -> bool:
    """Full column normal rank, by majority vote over three random probe points."""
    p, m = block.shape
    if m == 0:
        return True
    if p < m:
        return False
    votes = 0
    for lam in _probe_points(block, 3, seed):
        G = evaluate(block, lam, tol)
        sv = np.linalg.svd(G, compute_uv=False)
        votes += int(sv[0] > 0 and sv[-1] > tol.null_tol * sv[0])
    return votes >= 2


def _pencil_candidates(block: RationalBlock, seed: int) -> np.ndarray:
    """Finite generalized eigenvalues of the (row-compressed) Rosenbrock pencil."""
    n, (p, m) = block.A.shape[0], block.D.shape
    if n == 0:
        return np.zeros(0, dtype=complex)
    E, F = block.pencil()
    if p > m:
        rng = np.random.default_rng(seed)
        Q2, _ = np.linalg.qr(rng.standard_normal((p, m)))
        Q = block_diag([np.eye(n), Q2.T])
        E, F = Q @ E, Q @ F
    ab = scipy.linalg.eigvals(F, E, homogeneous_eigvals=True)
    alpha, beta = ab[0], ab[1]
    scale = max(1.0, float(np.linalg.norm(F, 2)))
    finite = np.abs(beta) > 1e3 * EPS * np.abs(alpha) / scale
    return alpha[finite] / beta[finite]


def invariant_zeros(block: RationalBlock, tol: Tolerances = DEFAULT_TOL,
                    seed: int = 11) -> list[complex]:
    """Points where the Rosenbrock matrix ``P(lam)`` loses column rank.

    Candidates come from the QZ algorithm on the (randomly row-compressed,
    when tall) pencil; each is polished and kept only if
    ``sigma_min(P(lam)) <= null_tol * sigma_max(P(lam))``.
    """
    if not fcnr(block, tol):
        raise NotFCNRError("zeros of non-FCNR block are ill-defined here")
    E, F = block.pencil()
    kept = []
    for lam in _pencil_candidates(block, seed):
        lam_r, smin, smax = refine_rank_drop(E, F, lam)
        if smin <= tol.null_tol * smax:
            kept.append(lam_r)
    if not kept:
        return []
    return [c for c, _ in cluster_values(kept, tol.cluster_tol)]


def transmission_zeros(block: RationalBlock, tol: Tolerances = DEFAULT_TOL
                       ) -> list[complex]:
    """Finite zeros ``lam0`` at which ``G(lam0)`` itself loses column rank."""
    out = []
    for lam in invariant_zeros(block, tol):
        G = evaluate(block, lam, tol)
        sv = np.linalg.svd(G, compute_uv=False)
        if G.shape[1] and sv[-1] <= tol.null_tol * max(sv[0], 1.0):
            out.append(lam)
    return out


@dataclass
class ZeroMember:
    """One subsystem's share of a zero group.

    ``Y`` (internal-signal part) and ``X`` (state part) stack to a basis of
    ``null P_j(lam0)``. ``regular`` means ``Y`` has full column rank, which
    is what the Gamma matrices require.
    """

    subsystem: int
    Y: np.ndarray
    X: np.ndarray
    regular: bool

    @property
    def p(self) -> int:
        return self.Y.shape[1]

    def transformed(self, T: np.ndarray) -> "ZeroMember":
        return replace(self, Y=self.Y @ T, X=self.X @ T)


@dataclass
class ZeroGroup:
    lambda0: complex
    members: tuple[int, ...]
    entries: list[ZeroMember] = field(default_factory=list)
    dual: bool = False

    @property
    def bases(self) -> list[np.ndarray]:
        return [e.Y for e in self.entries]

    @property
    def p(self) -> list[int]:
        return [e.p for e in self.entries]

    def transformed(self, transforms) -> "ZeroGroup":
        return replace(self, entries=[e.transformed(T) for e, T in
                                      zip(self.entries, transforms)])


def group_zeros(per_subsystem: list[list[complex]], tol: float = 1e-9
                ) -> list[ZeroGroup]:
    """Cluster zeros across subsystems; each cluster is one distinct zero."""
    vals, owner = [], []
    for i, zs in enumerate(per_subsystem):
        for z in zs:
            vals.append(complex(z))
            owner.append(i)
    groups = []
    for centroid, idx in cluster_values(vals, tol):
        members = tuple(sorted({owner[k] for k in idx}))
        groups.append(ZeroGroup(centroid, members))
    return groups


def null_basis(block: RationalBlock, lam0: complex,
               tol: Tolerances = DEFAULT_TOL) -> tuple[np.ndarray, int]:
    """Orthonormal basis of ``null G(lam0)`` and its dimension."""
    G = evaluate(block, lam0, tol)
    Y = null_space(G, tol.null_tol)
    if Y.shape[1] == 0:
        raise ValueError(f"{lam0} is not a zero of the block "
                         f"(sigma_min above {tol.null_tol:g} * sigma_max)")
    return Y, Y.shape[1]


def rosenbrock_member(block: RationalBlock, lam0: complex,
                      tol: Tolerances = DEFAULT_TOL) -> ZeroMember:
    """Split ``null P(lam0)`` into state and internal-signal parts."""
    n = block.A.shape[0]
    E, F = block.pencil()
    W = null_space(lam0 * E - F, tol.null_tol)
    if W.shape[1] == 0:
        raise ValueError(f"{lam0} is not a zero of the Rosenbrock pencil")
    X, Y = W[:n], W[n:]
    sv = np.linalg.svd(Y, compute_uv=False) if Y.size else np.zeros(0)
    regular = Y.shape[0] >= Y.shape[1] and sv.size == Y.shape[1] and \
        sv[-1] > tol.null_tol
    if regular:
        T = inv_sqrt_hermitian(Y.conj().T @ Y)
        X, Y = X @ T, Y @ T
    return ZeroMember(block.owner, Y, X, bool(regular))


def member_from_basis(system: NetworkedSystem, j: int, lam0: complex,
                      Y: np.ndarray, dual: bool = False,
                      tol: Tolerances = DEFAULT_TOL) -> ZeroMember:
    """Member for subsystem ``j`` from a given basis ``Y`` of ``null G1_j(lam0)``.

    The state part is ``X = (lam0 I - A)^# B Y`` with the limit inverse of
    :func:`evaluate`, so ``internal_image`` reproduces ``G2_j(lam0) Y``.
    """
    blk = make_block(system, j, "G1bar" if dual else "G1")
    Y = np.asarray(Y, dtype=complex)
    n = blk.A.shape[0]
    if n:
        N = lam0 * np.eye(n) - blk.A
        sv = np.linalg.svd(N, compute_uv=False)
        inv = np.linalg.inv(N) if sv[-1] > 1e3 * n * EPS * sv[0] else \
            _group_inverse(N, tol)
        X = inv @ blk.B @ Y
    else:
        X = np.zeros((0, Y.shape[1]), dtype=complex)
    sv = np.linalg.svd(Y, compute_uv=False)
    regular = Y.shape[0] >= Y.shape[1] and sv.size and sv[-1] > tol.null_tol * sv[0]
    return ZeroMember(j, Y, X, bool(regular))


def zero_groups(system: NetworkedSystem, dual: bool = False,
                tol: Tolerances = DEFAULT_TOL) -> list[ZeroGroup]:
    """Distinct zeros of ``G1`` (or ``G1bar`` when ``dual``) with member bases."""
    tag = "G1bar" if dual else "G1"
    blocks = [make_block(system, i, tag) for i in range(system.N)]
    per = [invariant_zeros(b, tol) for b in blocks]
    groups = group_zeros(per, tol.zero_tol)
    for g in groups:
        g.dual = dual
        g.entries = [rosenbrock_member(blocks[j], g.lambda0, tol)
                     for j in g.members]
    return groups


def internal_image(system: NetworkedSystem, member: ZeroMember,
                   dual: bool = False) -> np.ndarray:
    """``G2(lam0) Y`` (or ``G2bar(lam0) Y``) through the null-space state part."""
    s = system.subsystems[member.subsystem]
    if dual:
        return s.A_TS.T @ member.X + s.A_SS.T @ member.Y
    return s.A_ST @ member.X + s.A_SS @ member.Y


def gamma_obs(system: NetworkedSystem, group: ZeroGroup, s: int) -> np.ndarray:
    """``G2(lam0) Y (Y^H Y)^{-1/2}`` for member ``s`` of ``group``."""
    e = group.entries[s]
    if not e.regular:
        raise ValueError("Gamma undefined: null vectors with zero internal-input "
                         f"part at lambda={group.lambda0}")
    Z = internal_image(system, e)
    return Z @ inv_sqrt_hermitian(e.Y.conj().T @ e.Y)


def gamma_ctrb(system: NetworkedSystem, group: ZeroGroup, s: int) -> np.ndarray:
    """``G2bar(lam0) Y (Y^H Theta^{-2} Y)^{-1/2}`` for member ``s`` of a dual group."""
    e = group.entries[s]
    theta = system.weights.theta_blocks[e.subsystem]
    d = np.diag(theta)
    if np.any(d == 0):
        raise ThetaSingularError("Theta singular; controllability weighting undefined "
                                 f"(subsystem {e.subsystem + 1} has a zero "
                                 "out-degree internal output)")
    if not e.regular:
        raise ValueError("Gamma undefined: null vectors with zero internal-output "
                         f"part at lambda={group.lambda0}")
    Q = internal_image(system, e, dual=True)
    W = e.Y / d[:, None]
    return Q @ inv_sqrt_hermitian(W.conj().T @ W)
