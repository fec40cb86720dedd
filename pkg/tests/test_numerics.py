import numpy as np
import pytest

from netlti.numerics import (
    Tolerances,
    block_diag,
    cluster_values,
    inv_sqrt_hermitian,
    min_singular_value,
    null_space,
    refine_rank_drop,
)


def test_tolerances_env_then_overrides(monkeypatch):
    monkeypatch.setenv("NETLTI_ZERO_TOL", "1e-6")
    monkeypatch.setenv("NETLTI_RANK_TOL", "1e-11")
    tol = Tolerances.from_env(rank_tol=2e-12, pd_margin=None)
    assert tol.zero_tol == 1e-6
    assert tol.rank_tol == 2e-12
    assert tol.pd_margin == 1e-9


def test_block_diag_keeps_empty_blocks():
    M = block_diag([np.ones((1, 1)), np.zeros((2, 0)), 2 * np.ones((1, 2))])
    assert M.shape == (4, 3)
    assert np.all(M[1:3] == 0)
    assert M[3, 1] == 2 and M[0, 0] == 1


def test_cluster_merges_close_and_snaps_real():
    vals = [0.5, 0.5 + 1e-12, 2.0 + 1e-13j, 3.0]
    out = cluster_values(vals, 1e-9)
    assert [len(m) for _, m in out] == [2, 1, 1]
    assert out[1][0] == 2.0 + 0j


def test_min_singular_value_conventions():
    assert min_singular_value(np.ones((1, 2)))[0] == 0.0
    assert min_singular_value(np.zeros((3, 0)))[0] == np.inf


def test_refine_rank_drop_recovers_unobservable_mode(rng):
    # lam = 0.3 is an unobservable eigenvalue of (A, C).
    A = np.diag([0.3, -0.7])
    C = np.array([[0.0, 1.0]])
    E = np.vstack([np.eye(2), np.zeros((1, 2))])
    F = np.vstack([A, -C])
    lam, smin, smax = refine_rank_drop(E, F, 0.3 + 1e-5)
    assert abs(lam - 0.3) < 1e-12
    assert smin < 1e-12 * smax


def test_null_space_matches_rank_deficiency(rng):
    M = rng.standard_normal((3, 2)) @ rng.standard_normal((2, 4))
    N = null_space(M, 1e-10)
    assert N.shape == (4, 2)
    assert np.linalg.norm(M @ N) < 1e-12
    assert np.allclose(N.conj().T @ N, np.eye(2))


def test_inv_sqrt_hermitian(rng):
    X = rng.standard_normal((3, 3))
    G = X @ X.T + np.eye(3)
    R = inv_sqrt_hermitian(G)
    assert np.allclose(R @ G @ R, np.eye(3))
    with pytest.raises(np.linalg.LinAlgError):
        inv_sqrt_hermitian(-np.eye(2))
