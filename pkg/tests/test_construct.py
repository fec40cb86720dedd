import numpy as np
import pytest

from netlti.construct import (
    ConstructionError,
    ConstructOptions,
    construct_controllable,
    construct_observable,
    design_observing_matrix,
    kappa_bound,
    partition_outputs,
    ring_interconnection,
)
from netlti.criteria import full_analysis
from netlti.lifted import Status, lift, pbh_observable
from netlti.model import Interconnection, NetworkedSystem, SubsystemRealization
from netlti.numerics import block_diag
from netlti.spectra import zero_groups
from oracles import kalman_rank


def distinct_stm(rng, n):
    return np.diag(rng.uniform(-0.9, 0.9, n)) + np.triu(rng.standard_normal((n, n)), 1)


def test_design_examples(rng):
    C = design_observing_matrix(np.diag([1.0, 2.0]), 1, rng)
    assert C.shape == (1, 2) and np.all(C != 0)
    assert pbh_observable(np.diag([1.0, 2.0]), C).status is Status.CERTIFIED_YES
    with pytest.raises(ConstructionError, match="budget below p_max = 2"):
        design_observing_matrix(np.eye(2), 1, rng)
    C = design_observing_matrix(np.eye(2), 2, rng)
    assert abs(np.linalg.det(C)) > 1e-8


def test_design_margin_at_pmax(rng):
    for _ in range(50):
        A = distinct_stm(rng, int(rng.integers(1, 5)))
        C = design_observing_matrix(A, 1, rng)
        v = pbh_observable(A, C)
        assert v.status is Status.CERTIFIED_YES
        assert all(w.margin > w.tau for w in v.evidence)
        assert kalman_rank(A, C) == A.shape[0]


def test_partition_outputs():
    C = np.arange(6.0).reshape(3, 2)
    C_T, A_ST = partition_outputs(C, 2, 1)
    assert np.array_equal(np.vstack([C_T, A_ST]), C)
    C_T, A_ST = partition_outputs(C, 3, 0)
    assert A_ST.shape == (0, 2)
    C_T, A_ST = partition_outputs(C, 0, 3)
    assert C_T.shape == (0, 2)
    with pytest.raises(ValueError, match="cannot split"):
        partition_outputs(C, 1, 1)


def test_ring_interconnection():
    inter = ring_interconnection(3)
    assert np.array_equal(inter.phi, np.roll(np.eye(3), 1, axis=0))
    assert np.array_equal(inter.phi.sum(axis=1), np.ones(3))
    assert np.array_equal(inter.phi.sum(axis=0), np.ones(3))
    assert ring_interconnection(1).phi.shape == (0, 0)


def scalar_sys(A_SS, phi=None):
    sub = SubsystemRealization.create([[0.5]], A_TS=[[0.0]], A_ST=[[0.0]],
                                      A_SS=[[A_SS]], C_T=[[1.0]], C_S=[[0.0]], n_u=0)
    return NetworkedSystem.build([sub], np.array([[1.0]] if phi is None else phi))


def test_kappa_bound_examples(rng):
    b = kappa_bound(scalar_sys(0.0, [[0.0]]), [])
    assert b.gamma == [0.0] and b.upper == [np.inf] and b.safe_kappa() == [1.0]
    b = kappa_bound(scalar_sys(2.0), [])
    assert b.gamma == [pytest.approx(2.0)] and b.upper == [pytest.approx(0.5)]


def test_kappa_bound_scaling_gives_well_posedness(rng):
    for seed in range(20):
        stms = [distinct_stm(rng, int(rng.integers(1, 4))) for _ in range(3)]
        sys, _ = construct_observable(stms, options=ConstructOptions(
            seed=seed, init_scale=3.0, max_iters=0))
        groups = zero_groups(sys)
        kap = kappa_bound(sys, groups).safe_kappa()
        scaled = sys.with_subsystems([s.replace(A_ST=k * s.A_ST, A_SS=k * s.A_SS)
                                      for s, k in zip(sys.subsystems, kap)])
        PA = scaled.phi @ block_diag([s.A_SS for s in scaled.subsystems])
        assert np.linalg.norm(PA, 2) < 1


def test_single_subsystem_converges_immediately(rng):
    A = distinct_stm(rng, 3)
    sys, trace = construct_observable([A])
    assert trace.converged and len(trace.iterations) == 1
    assert trace.iterations[0].status is Status.CERTIFIED_YES
    sys, trace = construct_controllable([A])
    assert trace.converged and len(trace.iterations) == 1


@pytest.mark.parametrize("dual", [False, True])
def test_random_three_subsystems(rng, dual):
    build = construct_controllable if dual else construct_observable
    for seed in range(10):
        stms = [distinct_stm(rng, int(rng.integers(1, 4))) for _ in range(3)]
        sys, trace = build(stms, options=ConstructOptions(kappa=0.5, seed=seed))
        assert trace.converged
        L = lift(sys)
        if dual:
            assert kalman_rank(L.A.T, L.B.T) == L.A.shape[0]
        else:
            assert kalman_rank(L.A, L.C) == L.A.shape[0]
        rep = full_analysis(sys, modes=("controllability",) if dual else
                            ("observability",))
        mode = rep.controllability if dual else rep.observability
        assert mode.status is Status.CERTIFIED_YES and rep.flags == []


@pytest.mark.parametrize("dual", [False, True])
def test_kappa_bound_certifies_in_one_step(rng, dual):
    build = construct_controllable if dual else construct_observable
    for seed in range(10):
        stms = [distinct_stm(rng, int(rng.integers(1, 4))) for _ in range(3)]
        sys, trace = build(stms, options=ConstructOptions(
            use_kappa_bound=True, seed=seed, init_scale=2.0))
        assert trace.converged and trace.certified_by_criterion
        assert len(trace.iterations) == 2


def ill_posed_start(rng):
    """Scalar ring channels with unit ``|A_SS|`` whose product is +1."""
    stms = [distinct_stm(rng, 2) for _ in range(3)]
    for seed in range(50):
        sys, trace = construct_observable(stms, options=ConstructOptions(
            seed=seed, max_iters=0))
        if trace.iterations[0].status is Status.CERTIFIED_NO:
            return stms, seed
    raise AssertionError("no ill-posed start found")


def test_loop_shrinks_A_SS_monotonically(rng):
    stms, seed = ill_posed_start(rng)
    _, trace = construct_observable(stms, options=ConstructOptions(kappa=0.7,
                                                                   seed=seed))
    mags = [s.max_abs_A_SS for s in trace.iterations]
    assert len(mags) >= 2
    assert all(b < a for a, b in zip(mags, mags[1:]))
    assert trace.converged and trace.iterations[-1].status is Status.CERTIFIED_YES


def test_max_iters_exhaustion_reported(rng):
    stms, seed = ill_posed_start(rng)
    _, trace = construct_observable(stms, options=ConstructOptions(
        seed=seed, max_iters=0))
    assert not trace.converged and len(trace.iterations) == 1


def test_budget_errors(rng):
    with pytest.raises(ConstructionError, match="budget below p_max = 2"):
        construct_observable([np.eye(2)], options=ConstructOptions(budgets=[1]))
    with pytest.raises(ConstructionError, match="budget below p_max"):
        construct_controllable([np.eye(2)], options=ConstructOptions(budgets=[1]))
    with pytest.raises(ValueError, match="kappa must lie"):
        construct_observable([np.eye(1)], options=ConstructOptions(kappa=1.5))


def test_trace_serializes(rng):
    _, trace = construct_observable([distinct_stm(rng, 2)] * 2)
    d = trace.to_dict()
    assert d["converged"] and d["iterations"][0]["iteration"] == 0


def test_unit_budget_chain_converges(rng):
    # 1 -> 2 -> 3 -> sensor: one output row per subsystem suffices
    chain = Interconnection(np.eye(2), (0, 1, 1), (1, 1, 0))
    for seed in range(5):
        stms = [distinct_stm(rng, int(rng.integers(1, 4))) for _ in range(3)]
        sys, trace = construct_observable(stms, chain, ConstructOptions(
            kappa=0.5, budgets=[1, 1, 1], seed=seed))
        assert [s.n_y for s in sys.subsystems] == [0, 0, 1]
        assert trace.converged
        L = lift(sys)
        assert kalman_rank(L.A, L.C) == L.A.shape[0]


def test_design_margin_on_many_stms(rng):
    for _ in range(500):
        n = int(rng.integers(1, 5))
        A = distinct_stm(rng, n)
        v = pbh_observable(A, design_observing_matrix(A, 1, rng))
        assert all(w.margin > w.tau for w in v.evidence)
