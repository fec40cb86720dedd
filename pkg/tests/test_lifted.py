import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from conftest import scalar_subsystem, single
from netlti.ensemble import EnsembleSpec, generate_ensemble, insert_unobservable_mode
from netlti.lifted import (
    Status,
    build_M,
    lift,
    lifted_observability,
    max_geometric_multiplicity,
    observability_singular_values,
    pbh_controllable,
    pbh_observable,
    verify_lemma3,
)
from netlti.model import NetworkedSystem
from oracles import kalman_rank, simulate_step, stm_with_multiplicities


def test_lift_decoupled_is_identity_map(rng):
    sys = generate_ensemble(EnsembleSpec(count=1, seed=11, density=0.0))[0]
    L = lift(sys)
    g = sys.blocks
    for name, ref in (("A", g.A_TT), ("B", g.B_T), ("C", g.C_T), ("D", g.D)):
        assert np.array_equal(getattr(L, name), ref)


def test_lift_scalar_loop():
    L = lift(single(scalar_subsystem(A_TT=0.5, A_TS=1.0, A_ST=1.0, A_SS=0.0), [[1.0]]))
    assert L.A[0, 0] == pytest.approx(1.5, abs=1e-15)


def test_lift_matches_direct_loop_solve(rng):
    spec = EnsembleSpec(N=(3, 3), n_v=(1, 2), n_z=(1, 2), n_u=(1, 2), seed=12, count=3)
    for sys in generate_ensemble(spec):
        L = lift(sys)
        for _ in range(100):
            x = rng.standard_normal(L.A.shape[0])
            u = rng.standard_normal(L.B.shape[1])
            x1, y1 = simulate_step(sys, x, u)
            x2, y2 = L.step(x, u)
            assert np.allclose(x1, x2, rtol=1e-10, atol=1e-10)
            assert np.allclose(y1, y2, rtol=1e-10, atol=1e-10)


def test_pbh_examples():
    assert pbh_observable(np.diag([1.0, 2.0]), [[1.0, 1.0]]).status is Status.CERTIFIED_YES
    no = pbh_observable(np.eye(2), [[0.3, -2.0]])
    assert no.status is Status.CERTIFIED_NO
    assert no.witnesses() and all(w.margin <= w.tau for w in no.witnesses())
    nil = np.array([[0.0, 1.0], [0.0, 0.0]])
    assert pbh_observable(nil, [[1.0, 0.0]]).status is Status.CERTIFIED_YES
    assert pbh_observable(nil, [[0.0, 1.0]]).status is Status.CERTIFIED_NO


def test_pbh_agrees_with_kalman_rank(rng):
    for _ in range(200):
        n = int(rng.integers(1, 5))
        A = rng.standard_normal((n, n))
        C = rng.standard_normal((int(rng.integers(1, 3)), n))
        if rng.random() < 0.3:
            C[:, 0] = 0.0
            A[1:, 0] = 0.0  # first state hidden
        ok = kalman_rank(A, C) == n
        assert (pbh_observable(A, C).status is Status.CERTIFIED_YES) == ok


small = st.integers(1, 4)


@settings(max_examples=60, deadline=None)
@given(st.data())
def test_pbh_duality(data):
    n = data.draw(small)
    m = data.draw(st.integers(0, 3))
    elems = st.floats(-3, 3, allow_nan=False, allow_infinity=False)
    A = data.draw(arrays(float, (n, n), elements=elems))
    B = data.draw(arrays(float, (n, m), elements=elems))
    assert pbh_controllable(A, B).status is pbh_observable(A.T, B.T).status


def test_geometric_multiplicity_examples():
    assert max_geometric_multiplicity(np.eye(3))[0] == 3
    J3 = 0.4 * np.eye(3) + np.diag([1.0, 1.0], 1)
    assert max_geometric_multiplicity(J3)[0] == 1
    # distinct eigenvalues 0.90391 +- 0.026359j and 1.0243
    R = np.array([[0.90391, 0.026359], [-0.026359, 0.90391]])
    A = np.zeros((3, 3))
    A[:2, :2] = R
    A[2, 2] = 1.0243
    p, mults = max_geometric_multiplicity(A)
    assert p == 1 and len(mults) == 3


def test_geometric_multiplicity_two_jordan_blocks(rng):
    A, p = stm_with_multiplicities(rng, [(0.5, [2, 2])])
    assert p == 2
    assert max_geometric_multiplicity(A)[0] == 2


def test_geometric_multiplicity_block_diagonal_bound(rng):
    for _ in range(20):
        A1, _ = stm_with_multiplicities(rng, [(0.2, [1, 1]), (-0.5, [2])])
        A2 = rng.standard_normal((3, 3))
        big = np.block([[A1, np.zeros((4, 3))], [np.zeros((3, 4)), A2]])
        pb = max_geometric_multiplicity(big)[0]
        assert pb >= max(max_geometric_multiplicity(A1)[0],
                         max_geometric_multiplicity(A2)[0])


def test_build_M_layout():
    sys = single(scalar_subsystem(A_TT=0.5, A_TS=2.0, A_ST=3.0, A_SS=0.1, C_T=4.0,
                                  C_S=5.0), [[1.0]])
    M = build_M(sys, 2.0)
    expected = np.array([[1.5, -2.0], [-4.0, -5.0], [-3.0, 0.9]])
    assert np.allclose(M, expected, atol=1e-15)


def test_pencil_rank_decoupled_observable():
    sys = NetworkedSystem.build([scalar_subsystem(A_SS=0.0)], [[0.0]])
    assert verify_lemma3(sys).status is Status.CERTIFIED_YES


def test_pencil_rank_inserted_unobservable_mode(rng):
    base = generate_ensemble(EnsembleSpec(N=(2, 2), n_y=(1, 2), seed=13, count=1))[0]
    sys = insert_unobservable_mode(base, 1, 0.77, rng)
    v = verify_lemma3(sys)
    assert v.status is Status.CERTIFIED_NO
    assert any(abs(w.lam - 0.77) < 1e-9 for w in v.witnesses())
    assert lifted_observability(sys).status is Status.CERTIFIED_NO


def test_pencil_rank_agrees_on_random_systems():
    for sys in generate_ensemble(EnsembleSpec(N=(3, 3), seed=14, count=200)):
        a, b = verify_lemma3(sys).status, lifted_observability(sys).status
        if Status.INCONCLUSIVE not in (a, b):
            assert a is b


def test_observability_singular_values():
    assert np.allclose(observability_singular_values(np.zeros((2, 2)), np.eye(2)),
                       [1.0, 1.0])
    sv = observability_singular_values(np.diag([1.0, 2.0]), [[1.0, 1.0]])
    # SVD of [[1, 1], [1, 2]]: (3 -+ sqrt 5) / 2
    assert np.allclose(sv, [0.3819660112501051, 2.618033988749895], rtol=1e-14)
    sv = observability_singular_values(np.eye(2), [[1.0, 0.0]])
    assert sv[0] <= 2 * np.finfo(float).eps * sv[-1]
    assert len(observability_singular_values(np.eye(3), np.zeros((1, 3)))) == 3


def test_weighting_internal_rows_keeps_verdict(rng):
    for _ in range(100):
        n = int(rng.integers(1, 4))
        A = rng.standard_normal((n, n))
        if rng.random() < 0.5:
            A = np.eye(n) * 0.3
        C_T = rng.standard_normal((1, n))
        A_ST = rng.standard_normal((1, n))
        theta = rng.uniform(0.2, 3.0)
        v1 = pbh_observable(A, np.vstack([C_T, A_ST]))
        v2 = pbh_observable(A, np.vstack([C_T, theta * A_ST]))
        assert v1.status is v2.status
