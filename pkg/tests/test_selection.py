import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netlti.construct import ConstructionError, design_observing_matrix
from netlti.lifted import Status, pbh_observable
from netlti.selection import check_budget, min_local_io
from oracles import kalman_rank, stm_with_multiplicities


def jordan(lam, k):
    return lam * np.eye(k) + np.eye(k, k=1)


def test_distinct_eigenvalues_need_one(rng):
    stms = [np.diag(rng.permutation(5)[:n] + 0.1) for n in (1, 2, 3, 4)]
    res = min_local_io(stms)
    assert res.p_max == [1, 1, 1, 1]
    assert res.min_outputs == res.min_inputs == [1, 1, 1, 1]


def test_identity_and_jordan_examples():
    J = np.block([[jordan(0.5, 2), np.zeros((2, 2))], [np.zeros((2, 2)), jordan(0.5, 2)]])
    res = min_local_io([np.eye(4), J])
    assert res.p_max == [4, 2]


def test_rejects_non_square():
    with pytest.raises(ValueError, match="must be square"):
        min_local_io([np.zeros((2, 3))])


def test_budget_boundaries():
    res = check_budget([np.eye(3), np.diag([1.0, 2.0])], [3, 1])
    assert res.feasible == [True, True] and res.deficit == [0, 0]
    res = check_budget([np.eye(3), np.diag([1.0, 2.0])], [2, 1])
    assert res.feasible == [False, True] and res.deficit == [1, 0]
    assert not res.all_feasible
    with pytest.raises(ValueError, match="nonnegative"):
        check_budget([np.eye(2)], [-1])
    with pytest.raises(ValueError, match="budgets for"):
        check_budget([np.eye(2)], [1, 2])


def test_budget_agrees_with_design(rng):
    for _ in range(100):
        lam = rng.choice([0.3, -0.7, 1.1])
        blocks = [int(b) for b in rng.integers(1, 3, size=int(rng.integers(1, 4)))]
        A, p = stm_with_multiplicities(rng, [(lam, blocks), (lam + 0.5, [1])])
        q = int(rng.integers(0, 4))
        feasible = check_budget([A], [q]).feasible[0]
        try:
            C = design_observing_matrix(A, q, rng)
            built = True
            assert kalman_rank(A, C) == A.shape[0]
        except ConstructionError:
            built = False
        assert feasible == built


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_below_pmax_never_observable(seed):
    rng = np.random.default_rng(seed)
    A, p = stm_with_multiplicities(rng, [(0.4, [1, 1, 2]), (-0.2, [1])])
    assert min_local_io([A]).p_max == [p] == [3]
    for _ in range(40):
        C = rng.standard_normal((p - 1, A.shape[0]))
        assert pbh_observable(A, C).status is not Status.CERTIFIED_YES
        assert kalman_rank(A, C) < A.shape[0]
