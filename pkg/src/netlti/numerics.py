"""Shared numerical helpers: tolerances, rank thresholds, clustering, pencils.

Every rank decision in the package goes through :func:`rank_threshold` so the
SVD rank rule is applied uniformly, and every "does this pencil drop rank near
lambda" question goes through :func:`refine_rank_drop`.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace

import numpy as np

EPS = np.finfo(float).eps


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds used throughout the analysis.

    Attributes
    ----------
    rank_tol : float or None
        Absolute rank threshold. ``None`` selects the SVD rule
        ``max(rows, cols) * eps * sigma_max`` evaluated per matrix.
    cluster_tol : float
        Eigenvalues within ``cluster_tol * (1 + |lambda|)`` are merged.
    zero_tol : float
        Transmission zeros of different subsystems within
        ``zero_tol * (1 + |lambda|)`` are treated as the same zero.
    null_tol : float
        Relative singular-value threshold for numerical null spaces and for
        re-verifying computed zeros.
    pd_margin : float
        Relative margin for strict definiteness checks.
    inconclusive_factor : float
        PBH margins in ``(tau, factor * tau]`` are reported as inconclusive.
    """

    rank_tol: float | None = None
    cluster_tol: float = 1e-7
    zero_tol: float = 1e-9
    null_tol: float = 1e-8
    pd_margin: float = 1e-9
    inconclusive_factor: float = 10.0

    @classmethod
    def from_env(cls, **overrides) -> "Tolerances":
        """Defaults, then ``NETLTI_*`` environment variables, then ``overrides``."""
        env = {
            "rank_tol": "NETLTI_RANK_TOL",
            "cluster_tol": "NETLTI_CLUSTER_TOL",
            "zero_tol": "NETLTI_ZERO_TOL",
            "null_tol": "NETLTI_NULL_TOL",
            "pd_margin": "NETLTI_PD_MARGIN",
        }
        values = {}
        for field, var in env.items():
            raw = os.environ.get(var)
            if raw:
                values[field] = float(raw)
        values.update({k: v for k, v in overrides.items() if v is not None})
        return replace(cls(), **values)


DEFAULT_TOL = Tolerances()


def as_matrix(a, rows: int | None = None, cols: int | None = None) -> np.ndarray:
    """Coerce ``a`` to a 2-D float array; ``None``/empty becomes ``rows x cols`` zeros."""
    if a is None:
        return np.zeros((rows or 0, cols or 0))
    arr = np.asarray(a, dtype=float)
    if arr.size == 0:
        r = rows if rows is not None else (arr.shape[0] if arr.ndim == 2 else 0)
        c = cols if cols is not None else (arr.shape[1] if arr.ndim == 2 else 0)
        return np.zeros((r, c))
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        arr = arr.reshape(1, -1)
    return arr


def block_diag(blocks: list[np.ndarray], dtype=float) -> np.ndarray:
    """Block-diagonal stacking that keeps zero-sized blocks' row/column counts."""
    rows = sum(b.shape[0] for b in blocks)
    cols = sum(b.shape[1] for b in blocks)
    out = np.zeros((rows, cols), dtype=dtype)
    r = c = 0
    for b in blocks:
        out[r:r + b.shape[0], c:c + b.shape[1]] = b
        r += b.shape[0]
        c += b.shape[1]
    return out


def rank_threshold(sv: np.ndarray, shape: tuple[int, int],
                   tol: Tolerances = DEFAULT_TOL) -> float:
    """Rank threshold for a matrix with singular values ``sv`` and ``shape``."""
    if tol.rank_tol is not None:
        return float(tol.rank_tol)
    smax = float(sv[0]) if sv.size else 0.0
    return max(shape) * EPS * smax


def numerical_rank(M: np.ndarray, tol: Tolerances = DEFAULT_TOL) -> int:
    if M.size == 0:
        return 0
    sv = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(sv > rank_threshold(sv, M.shape, tol)))


def min_singular_value(M: np.ndarray) -> tuple[float, float]:
    """``(sigma_min, sigma_max)`` where sigma_min is 0 for wide matrices.

    Column-rank deficiency is what every caller tests, so a matrix with more
    columns than rows reports zero.
    """
    if M.shape[1] == 0:
        return np.inf, 0.0
    if M.shape[0] == 0:
        return 0.0, 0.0
    sv = np.linalg.svd(M, compute_uv=False)
    smin = float(sv[-1]) if M.shape[0] >= M.shape[1] else 0.0
    return smin, float(sv[0])


def cluster_values(values, rtol: float) -> list[tuple[complex, list[int]]]:
    """Single-linkage clustering of complex numbers.

    Two values join a cluster when ``|a - b| <= rtol * (1 + min(|a|, |b|))``.
    Returns ``(centroid, member indices)`` sorted by real then imaginary part.
    """
    vals = np.asarray(values, dtype=complex).ravel()
    n = vals.size
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            d = abs(vals[i] - vals[j])
            if d <= rtol * (1.0 + min(abs(vals[i]), abs(vals[j]))):
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    out = []
    for members in groups.values():
        c = complex(np.mean(vals[members]))
        if abs(c.imag) <= rtol * (1.0 + abs(c)):
            c = complex(c.real, 0.0)
        out.append((c, sorted(members)))
    out.sort(key=lambda t: (round(t[0].real, 12), round(t[0].imag, 12)))
    return out


def pencil_value(E: np.ndarray, F: np.ndarray, lam: complex) -> np.ndarray:
    return lam * E - F


def refine_rank_drop(E: np.ndarray, F: np.ndarray, lam: complex,
                     max_iter: int = 30) -> tuple[complex, float, float]:
    """Locally minimise ``sigma_min(lam * E - F)`` starting from ``lam``.

    Alternates between the smallest right singular vector ``v`` and the
    optimal scalar ``lam = (E v)^H (F v) / |E v|^2``; each step cannot increase
    the objective. Returns the best ``(lam, sigma_min, sigma_max)`` seen,
    including the starting point.
    """
    lam = complex(lam)
    if E.shape[1] == 0:
        return lam, np.inf, 0.0
    best = None
    for _ in range(max_iter + 1):
        P = pencil_value(E, F, lam)
        _, s, vh = np.linalg.svd(P)
        smin = float(s[-1]) if P.shape[0] >= P.shape[1] else 0.0
        smax = float(s[0]) if s.size else 0.0
        stalled = best is not None and smin >= 0.999 * best[1]
        if best is None or smin < best[1]:
            best = (lam, smin, smax)
        if stalled or smin == 0.0:
            break
        v = vh[-1].conj()
        ev = E @ v
        nrm = np.vdot(ev, ev).real
        if nrm <= EPS:
            break
        new = complex(np.vdot(ev, F @ v) / nrm)
        if not np.isfinite(new):
            break
        if abs(lam.imag) == 0.0 and np.isrealobj(E) and np.isrealobj(F):
            new = complex(new.real, 0.0)
        lam = new
    return best


def null_space(M: np.ndarray, rel_tol: float) -> np.ndarray:
    """Orthonormal basis of the numerical null space (``sigma <= rel_tol * sigma_max``)."""
    n = M.shape[1]
    if n == 0:
        return np.zeros((0, 0), dtype=M.dtype)
    if M.shape[0] == 0:
        return np.eye(n, dtype=M.dtype)
    u, s, vh = np.linalg.svd(M)
    smax = s[0] if s.size else 0.0
    full = np.zeros(n)
    full[:s.size] = s
    mask = full <= rel_tol * max(smax, np.finfo(float).tiny)
    return vh[mask].conj().T


def inv_sqrt_hermitian(G: np.ndarray) -> np.ndarray:
    """``G^{-1/2}`` for a Hermitian positive definite ``G`` via eigendecomposition."""
    G = 0.5 * (G + G.conj().T)
    w, V = np.linalg.eigh(G)
    if w.size and w.min() <= 0:
        raise np.linalg.LinAlgError("matrix is not positive definite")
    return (V / np.sqrt(w)) @ V.conj().T


def sqrt_hermitian(G: np.ndarray) -> np.ndarray:
    G = 0.5 * (G + G.conj().T)
    w, V = np.linalg.eigh(G)
    return (V * np.sqrt(np.clip(w, 0.0, None))) @ V.conj().T


def sigma_max(M: np.ndarray) -> float:
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))
