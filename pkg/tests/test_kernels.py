import math

import numpy as np
import pytest

from pseudomarginal.core import ContractViolation, InitializationError, ParameterPoint, WeightScheme
from pseudomarginal.densities import GaussianDensity
from pseudomarginal.diagnostics import acceptance_rate, model_probabilities
from pseudomarginal.estimators import GaussianAuxProposal, IidEstimator, PerModelEstimator
from pseudomarginal.exact import extended_space, gimh_transition_matrix, mcwm_transition_matrix, stationary_vector
from pseudomarginal.harness.checks import ratio_identity_errors
from pseudomarginal.kernels import (
    Schedule,
    accept,
    gimh_step,
    init_state,
    marginal_step,
    mcwm_step,
    refresh_aux,
    run_chain,
    rw_within_step,
)
from pseudomarginal.targets.discrete import DiscreteAuxProposal, DiscreteTarget, MatrixProposal, enumerable_instance
from pseudomarginal.targets.toy import MODEL2_COV, ToyFlipProposal, ToyTarget
from pseudomarginal.trace import PmState

from conftest import M1, M2, make_rng, toy_model1_estimator


def _uniforms_used(fn, seed=0):
    """Number of uniforms ``fn(rng)`` consumed, found by locating the next draw."""
    rng = make_rng(seed)
    fn(rng)
    ref = list(make_rng(seed).random(10))
    return ref.index(rng.random())


def test_accept_consumes_one_uniform():
    assert _uniforms_used(lambda r: accept(0.3, r)) == 1
    assert _uniforms_used(lambda r: accept(-math.inf, r)) == 1


def test_accept_edges(rng):
    assert all(accept(0.0, rng) for _ in range(1000))
    assert not any(accept(-math.inf, rng) for _ in range(1000))
    with pytest.raises(ContractViolation):
        accept(math.nan, rng)


def test_accept_frequency(rng):
    n = 20_000
    hits = sum(accept(math.log(0.3), rng) for _ in range(n))
    assert hits / n == pytest.approx(0.3, abs=4 * math.sqrt(0.21 / n))


def _perfect_toy_estimator(n=3):
    t = ToyTarget()
    return PerModelEstimator({
        1: IidEstimator(t, GaussianAuxProposal([0.0], [[1.0]]), WeightScheme.uniform(n)),
        2: IidEstimator(t, GaussianAuxProposal([0.0, 0.0], MODEL2_COV), WeightScheme.uniform(n)),
    })


def test_marginal_step_log_ratios(rng):
    t, p = ToyTarget(), ToyFlipProposal()
    up = marginal_step(M1, t, p, rng)
    assert up.log_ratio == pytest.approx(math.log(3.0), rel=1e-14) and up.accepted
    down = marginal_step(M2, t, p, rng)
    assert down.log_ratio == pytest.approx(-math.log(3.0), rel=1e-14)


def test_marginal_chain_hits_model_masses():
    tr = run_chain(ToyTarget(), ToyFlipProposal(), None, M1, 40_000, make_rng(1), Schedule("marginal"))
    p1 = model_probabilities(tr)[1]
    assert p1 == pytest.approx(0.25, abs=0.015)
    # acceptance of the ideal chain: 1/4 * 1 + 3/4 * 1/3
    assert acceptance_rate(tr) == pytest.approx(0.5, abs=0.015)


def test_gimh_with_perfect_weights_equals_marginal_ratio(rng):
    est = _perfect_toy_estimator()
    st = init_state(ToyTarget(), M1, est, rng)
    out = gimh_step(st, ToyTarget(), ToyFlipProposal(), est, rng)
    assert out.log_ratio == pytest.approx(math.log(3.0), rel=1e-12)


def test_gimh_rejection_recycles_block():
    t, prop = ToyTarget(), ToyFlipProposal()
    est = toy_model1_estimator(1)
    est = PerModelEstimator({1: est, 2: IidEstimator(t, GaussianAuxProposal([0.0, 0.0], 0.01 * np.eye(2)), WeightScheme.uniform(1))})
    rng = make_rng(4)
    st = init_state(t, M1, est, rng)
    for _ in range(200):
        out = gimh_step(st, t, prop, est, rng)
        if not out.accepted:
            assert out.state is st
            assert out.blocks_drawn == 1
            return
        st = out.state
    pytest.fail("no rejection observed")


def test_gimh_needs_positive_block(rng):
    with pytest.raises(ContractViolation):
        gimh_step(PmState(M1), ToyTarget(), ToyFlipProposal(), _perfect_toy_estimator(), rng)


class _NullProposal:
    def propose(self, theta, rng):
        return None, 0.0

    def log_density(self, a, b):
        return -math.inf


def test_null_proposal_is_a_rejection_using_one_uniform():
    t, est = ToyTarget(), _perfect_toy_estimator()
    st = init_state(t, M1, est, make_rng(9))
    assert _uniforms_used(lambda r: gimh_step(st, t, _NullProposal(), est, r)) == 1
    out = gimh_step(st, t, _NullProposal(), est, make_rng(0))
    assert not out.accepted and out.state is st and out.blocks_drawn == 0
    assert _uniforms_used(lambda r: marginal_step(M1, t, _NullProposal(), r)) == 1
    assert _uniforms_used(lambda r: mcwm_step(M1, t, _NullProposal(), est, r)) == 1


def test_unsupported_proposal_rejected_before_drawing(rng):
    class ToZero:
        def propose(self, theta, rng):
            return ParameterPoint(0), 0.0

        def log_density(self, a, b):
            return 0.0

    tgt = DiscreteTarget([[0.0, 0.0], [0.5, 0.5]])
    out = marginal_step(ParameterPoint(1), tgt, ToZero(), rng)
    assert not out.accepted and out.log_ratio == -math.inf


def test_marginal_accepts_out_of_zero_mass_state(rng):
    tgt = DiscreteTarget([[0.0, 0.0], [0.5, 0.5]])
    flip = MatrixProposal([[0.0, 1.0], [1.0, 0.0]])
    assert marginal_step(ParameterPoint(0), tgt, flip, rng).accepted


def test_mcwm_draws_two_blocks(rng):
    out = mcwm_step(M1, ToyTarget(), ToyFlipProposal(), _perfect_toy_estimator(), rng)
    assert out.blocks_drawn == 2
    assert out.state.block is not None


def test_refresh_with_perfect_weights_always_accepts(rng):
    est = _perfect_toy_estimator()
    st = init_state(ToyTarget(), M2, est, rng)
    for _ in range(20):
        out = refresh_aux(st, est, rng)
        assert out.accepted and out.log_ratio == pytest.approx(0.0, abs=1e-12)
        st = out.state


def test_init_state_retries_then_fails(rng):
    tgt = DiscreteTarget([[1.0, 0.0]])
    q = DiscreteAuxProposal([[0.01, 0.99]])
    est = IidEstimator(tgt, q, WeightScheme.uniform(1))
    st = init_state(tgt, ParameterPoint(0), est, rng, max_retries=10_000)
    assert st.block.log_gamma > -math.inf
    never = IidEstimator(DiscreteTarget([[1.0, 0.0]]), DiscreteAuxProposal([[0.0, 1.0]]), WeightScheme.uniform(1))
    with pytest.raises(InitializationError):
        init_state(tgt, ParameterPoint(0), never, rng, max_retries=5)


def test_schedule_validation():
    with pytest.raises(ContractViolation):
        Schedule("nope")
    with pytest.raises(ContractViolation):
        Schedule("mcwm", refresh_moves=1)
    with pytest.raises(ContractViolation):
        Schedule("gimh", within_scale=0.0)


def test_block_tally():
    t, p, est = ToyTarget(), ToyFlipProposal(), _perfect_toy_estimator()
    tr = run_chain(t, p, est, M1, 50, make_rng(0), Schedule("gimh", refresh_moves=2))
    assert tr.block_draw_count == 1 + 50 + 100
    tr = run_chain(t, p, est, M1, 50, make_rng(0), Schedule("mcwm"))
    assert tr.block_draw_count == 100


def test_chain_is_reproducible():
    t, p, est = ToyTarget(), ToyFlipProposal(), _perfect_toy_estimator()
    a = run_chain(t, p, est, M1, 300, make_rng(5))
    b = run_chain(t, p, est, M1, 300, make_rng(5))
    assert np.array_equal(a.model_ids, b.model_ids) and np.array_equal(a.log_gamma, b.log_gamma)


def test_separate_aux_stream_keeps_theta_uniforms_fixed():
    # with an external aux stream the theta stream sees one uniform per sweep
    t, p, est = ToyTarget(), ToyFlipProposal(), _perfect_toy_estimator()
    rng = make_rng(3)
    run_chain(t, p, est, M1, 40, rng, aux_rng=make_rng(99))
    assert rng.random() == make_rng(3).random(41)[-1]


# --- empirical versus enumerated transition laws ----------------------------


def _discrete_chain(kernel, n, sweeps, seed):
    pi, q, flip = enumerable_instance()
    est = IidEstimator(pi, q, WeightScheme.uniform(n))
    return run_chain(pi, flip, est, ParameterPoint(0), sweeps, make_rng(seed), Schedule(kernel))


@pytest.mark.parametrize("n", [1, 2])
def test_gimh_empirical_marginal_matches_target(n):
    tr = _discrete_chain("gimh", n, 25_000, 11 + n)
    p1 = model_probabilities(tr, burn_in=100).get(1, 0.0)
    assert p1 == pytest.approx(0.7, abs=0.03)


@pytest.mark.parametrize("n", [1, 2])
def test_mcwm_empirical_marginal_matches_enumeration(n):
    pi, q, flip = enumerable_instance()
    p = mcwm_transition_matrix(extended_space(pi.table, q.table, n), flip.matrix)
    exact = stationary_vector(p)
    tr = _discrete_chain("mcwm", n, 25_000, 21 + n)
    assert model_probabilities(tr, burn_in=100).get(1, 0.0) == pytest.approx(exact[1], abs=0.03)


def test_gimh_one_step_law_matches_enumeration():
    pi, q, flip = enumerable_instance()
    space = extended_space(pi.table, q.table, 1)
    p = gimh_transition_matrix(space, flip.matrix)
    est = IidEstimator(pi, q, WeightScheme.uniform(1))
    start = PmState(ParameterPoint(0), est.draw(ParameterPoint(0), make_rng(0)))
    z0 = int(start.block.draws[0, 0])
    row = p[space.index(0, z0)]
    rng = make_rng(77)
    trials = 40_000
    counts = np.zeros_like(row)
    for _ in range(trials):
        s = gimh_step(start, pi, flip, est, rng).state
        counts[space.index(s.theta.model_id, int(s.block.draws[0, 0]))] += 1
    se = np.sqrt(row * (1 - row) / trials)
    assert np.all(np.abs(counts / trials - row) <= 4 * se + 1e-12)


def test_ratio_identity_on_random_instances():
    assert ratio_identity_errors(200, seed=3).max() <= 1e-12


# --- within-model moves -----------------------------------------------------


def test_within_moves_preserve_model2_conditional():
    t = ToyTarget()
    est = _perfect_toy_estimator(1)
    rng = make_rng(8)
    st = init_state(t, M2, est, rng)
    zs = np.empty((20_000, 2))
    for i in range(zs.shape[0]):
        st = rw_within_step(st, t, est, 0.8, rng)
        zs[i] = st.block.draws[0]
    assert np.cov(zs.T) == pytest.approx(MODEL2_COV, abs=0.1)
    assert st.block.log_gamma == pytest.approx(est.log_gamma(M2, st.block), rel=1e-12)


def test_within_moves_general_block_path():
    t = ToyTarget()
    est = _perfect_toy_estimator(3)
    rng = make_rng(10)
    st = init_state(t, M1, est, rng)
    for _ in range(50):
        st = rw_within_step(st, t, est, 0.5, rng)
    assert st.block.n == 3
    assert st.block.log_gamma == pytest.approx(est.log_gamma(M1, st.block), rel=1e-12)
