import itertools
import math

import numpy as np
import pytest

from pseudomarginal.core import ContractViolation
from pseudomarginal.exact import (
    birth_death_proposal_matrix,
    extended_space,
    gimh_transition_matrix,
    marginal_transition_matrix,
    max_flow_imbalance,
    mcwm_transition_matrix,
    refresh_transition_matrix,
    stationary_vector,
    theta_marginal,
)
from pseudomarginal.harness.checks import (
    check_birth_death_balance,
    check_gimh_exactness,
    check_mcwm_bias_decay,
    check_refresh_invariance,
    mcwm_exact_tv,
)
from pseudomarginal.targets.discrete import enumerable_instance

TARGET = np.array([0.3, 0.7])


def test_stationary_vector_two_state():
    p = np.array([[0.9, 0.1], [0.3, 0.7]])
    assert np.allclose(stationary_vector(p), [0.75, 0.25], atol=1e-14)


def test_marginal_matrix_rows_and_balance():
    p = marginal_transition_matrix(TARGET, [[0.0, 1.0], [1.0, 0.0]])
    assert np.allclose(p, [[0.0, 1.0], [3 / 7, 4 / 7]], atol=1e-15)
    assert max_flow_imbalance(p, TARGET) < 1e-15


def test_extended_space_enumeration():
    pi, q, _ = enumerable_instance()
    s = extended_space(pi.table, q.table, 2)
    assert len(s.blocks) == 4
    assert np.allclose(s.block_prob.sum(axis=1), 1.0)
    # E_Q[gamma(theta, Z)] = pi(theta), unnormalised
    assert np.allclose((s.block_prob * s.gamma).sum(axis=1), pi.table.sum(axis=1), atol=1e-15)


def test_extended_space_hand_values():
    pi, q, _ = enumerable_instance()
    s = extended_space(pi.table, q.table, 1)
    assert np.allclose(s.gamma, [[0.2, 0.4], [2.4, 0.6 / 4.5]], atol=1e-15)


def test_extended_space_rejects_missing_support():
    with pytest.raises(ContractViolation):
        extended_space([[0.5, 0.5]], [[1.0, 0.0]], 1)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_gimh_exact_marginal_and_reversibility(n):
    pi, q, flip = enumerable_instance()
    space = extended_space(pi.table, q.table, n)
    p = gimh_transition_matrix(space, flip.matrix)
    assert np.allclose(p.sum(axis=1), 1.0, atol=1e-14)
    mu = stationary_vector(p)
    assert np.max(np.abs(theta_marginal(space, mu) - TARGET)) <= 1e-12
    assert max_flow_imbalance(p, space.extended_target()) <= 1e-12


def test_gimh_exact_on_random_tables():
    rng = np.random.default_rng(4)
    for _ in range(20):
        pi_t = rng.uniform(0.01, 1.0, (3, 3))
        q_t = rng.dirichlet(np.ones(3), size=3)
        qm = rng.dirichlet(np.ones(3), size=3)
        space = extended_space(pi_t, q_t, 2)
        mu = stationary_vector(gimh_transition_matrix(space, qm))
        target = pi_t.sum(axis=1) / pi_t.sum()
        assert np.max(np.abs(theta_marginal(space, mu) - target)) <= 1e-12


def test_refresh_is_invariant():
    assert check_refresh_invariance().passed


def test_mcwm_bias_is_positive_and_decays():
    tv = mcwm_exact_tv((1, 2, 4))
    assert tv[1] > tv[2] > tv[4] > 0
    assert check_mcwm_bias_decay().passed


def test_mcwm_tv_values_are_stable():
    tv = mcwm_exact_tv((1, 2, 4))
    assert tv[1] == pytest.approx(0.2556, abs=5e-4)
    assert tv[2] == pytest.approx(0.1839, abs=5e-4)
    assert tv[4] == pytest.approx(0.1013, abs=5e-4)


def test_mcwm_n1_hand_oracle():
    # N = 1, flip proposal: accept prob from theta to theta' is E[min(1, g'/g)] over both blocks
    pi, q, flip = enumerable_instance()
    s = extended_space(pi.table, q.table, 1)
    def leave(a, b):
        return sum(s.block_prob[a, i] * s.block_prob[b, j] * min(1.0, s.gamma[b, j] / s.gamma[a, i])
                   for i, j in itertools.product(range(2), range(2)))
    p01, p10 = leave(0, 1), leave(1, 0)
    expect = np.array([p10, p01]) / (p01 + p10)
    p = mcwm_transition_matrix(s, flip.matrix)
    assert np.allclose(stationary_vector(p), expect, atol=1e-14)


def test_birth_death_matrix_rows():
    b = birth_death_proposal_matrix(4)
    assert b.shape == (16, 16)
    assert np.allclose(b[1:].sum(axis=1), 1.0)
    # from the full model half the mass is the null birth
    assert b[15, 15] == pytest.approx(0.5)
    # from a singleton, death proposes the empty model
    assert b[1, 0] == pytest.approx(0.5)


def test_birth_death_exact_balance():
    assert check_birth_death_balance().passed
    assert check_gimh_exactness().passed
