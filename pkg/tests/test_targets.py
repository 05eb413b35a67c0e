import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate
from scipy.special import expit

from pseudomarginal.core import ContractViolation, ParameterPoint
from pseudomarginal.harness.checks import gradient_errors
from pseudomarginal.targets.glm import (
    DEFAULT_Z_STAR,
    BirthDeathProposal,
    GlmDataset,
    GlmTarget,
    fit_glm_mle,
    generate_glm_dataset,
    glm_log_joint,
    inclusion_from_model_id,
    model_id_from_inclusion,
    rj_birth_death_proposal,
)
from pseudomarginal.targets.toy import ToyFlipProposal, ToyTarget, toy_log_joint

from conftest import M1, M2, make_rng


# --- toy ------------------------------------------------------------------


def test_toy_model1_closed_form():
    assert toy_log_joint(M1, [0.0]) == pytest.approx(math.log(0.25) - 0.5 * math.log(2 * math.pi), rel=1e-14)


def test_toy_model2_closed_form():
    z = np.array([0.7, -0.2])
    quad = (z[0] ** 2 + 1.8 * z[0] * z[1] + z[1] ** 2) / 0.19
    expect = math.log(0.75) - math.log(2 * math.pi) - 0.5 * math.log(0.19) - 0.5 * quad
    assert toy_log_joint(M2, z) == pytest.approx(expect, rel=1e-13)


def test_toy_model_masses_by_quadrature():
    t = ToyTarget()
    m1, _ = integrate.quad(lambda x: math.exp(t.log_joint(M1, np.array([x]))), -np.inf, np.inf)
    m2, _ = integrate.dblquad(lambda y, x: math.exp(t.log_joint(M2, np.array([x, y]))), -12, 12, -12, 12)
    assert m1 == pytest.approx(0.25, abs=1e-6)
    assert m2 == pytest.approx(0.75, abs=1e-6)


def test_toy_rejects_unknown_model():
    t = ToyTarget()
    assert not t.supports(ParameterPoint(3))
    with pytest.raises(ContractViolation):
        t.log_joint(ParameterPoint(3), [0.0])


def test_toy_dimension_mismatch():
    with pytest.raises(ContractViolation):
        ToyTarget().log_joint(M2, [0.0])


def test_toy_gradients_match_finite_differences():
    errs = gradient_errors(n_points=10)
    assert max(errs.values()) < 1e-5


def test_toy_flip_proposal_is_deterministic(rng):
    prop = ToyFlipProposal()
    assert prop.propose(M1, rng)[0].model_id == 2
    assert prop.propose(M2, rng)[0].model_id == 1
    assert prop.log_density(M1, M2) == 0.0


# --- glm ------------------------------------------------------------------


@pytest.fixture(scope="module")
def glm():
    return GlmTarget(generate_glm_dataset(2009))


def test_dataset_shape_and_determinism():
    a, b = generate_glm_dataset(7), generate_glm_dataset(7)
    assert (a.m, a.k) == (50, 4)
    assert np.array_equal(a.covariates, b.covariates) and np.array_equal(a.responses, b.responses)
    assert set(np.unique(a.responses)) <= {0.0, 1.0}


def test_dataset_first_two_columns_correlated():
    d = generate_glm_dataset(11, m=100_000)
    r = np.corrcoef(d.covariates[:, 0], d.covariates[:, 1])[0, 1]
    assert r == pytest.approx(0.9 / math.sqrt(0.82), abs=0.01)


def test_dataset_csv_round_trip(tmp_path):
    d = generate_glm_dataset(3)
    e = GlmDataset.from_csv(d.to_csv(tmp_path / "d.csv"))
    assert np.array_equal(d.covariates, e.covariates) and np.array_equal(d.responses, e.responses)


def test_dataset_rejects_bad_labels():
    with pytest.raises(ContractViolation):
        GlmDataset(np.zeros((3, 2)), np.array([0.0, 2.0, 1.0]))


def test_model_id_round_trip():
    for mid in range(16):
        assert model_id_from_inclusion(inclusion_from_model_id(mid, 4)) == mid
    assert inclusion_from_model_id(8, 4) == (1, 0, 0, 0)


def test_log_joint_hand_oracle(glm):
    d = glm.dataset
    th = ParameterPoint(model_id_from_inclusion((1, 0, 1, 0)))
    z = np.array([0.3, -0.8])
    c = d.covariates[:, [0, 2]]
    eta = c @ z
    loglik = float(np.sum(d.responses * eta - np.logaddexp(0.0, eta)))
    prec = glm.prior_precision(th)
    _, ld = np.linalg.slogdet(prec)
    logprior = 0.5 * ld - math.log(2 * math.pi) - 0.5 * z @ prec @ z
    logmodel = 2 * math.log(glm.lam) - math.log(2)
    assert glm.log_joint(th, z) == pytest.approx(loglik + logprior + logmodel, rel=1e-12)
    assert glm_log_joint(glm, (1, 0, 1, 0), z) == glm.log_joint(th, z)


def test_model_size_prior_scales_with_lam():
    d = generate_glm_dataset(2009)
    a = GlmTarget(d, lam=1.0, fit_mle=False)
    b = GlmTarget(d, lam=2.0, fit_mle=False)
    for mid in (1, 3, 7, 15):
        th = ParameterPoint(mid)
        z = np.full(a.aux_dim(mid), 0.1)
        assert b.log_joint(th, z) - a.log_joint(th, z) == pytest.approx(bin(mid).count("1") * math.log(2), rel=1e-12)


def test_glm_gradients_match_finite_differences():
    errs = gradient_errors(n_points=10)
    assert all(v < 1e-5 for k, v in errs.items() if k.startswith("glm"))


def test_glm_mle_satisfies_score_equation(glm):
    d = glm.dataset
    z, cov = fit_glm_mle((1, 1, 1, 1), d, ridge=0.0)
    score = (d.responses - expit(d.covariates @ z)) @ d.covariates
    assert np.max(np.abs(score)) < 1e-6
    assert np.all(np.linalg.eigvalsh(cov) > 0)


def test_glm_mle_recovers_truth_on_large_data():
    d = generate_glm_dataset(5, m=20000)
    z, _ = fit_glm_mle((1, 1, 1, 1), d)
    # columns 1 and 2 are nearly collinear, so only z1 + 0.9 z2 is sharply identified
    zs = np.asarray(DEFAULT_Z_STAR)
    assert z[0] + 0.9 * z[1] == pytest.approx(zs[0] + 0.9 * zs[1], abs=0.1)
    assert np.allclose(z[2:], zs[2:], atol=0.1)


def test_empty_model_has_no_mass(glm):
    assert not glm.supports(ParameterPoint(0))
    assert glm.log_joint(ParameterPoint(0), np.zeros(0)) == -math.inf


# --- birth/death ------------------------------------------------------------


def test_birth_from_full_model_is_null():
    class Birth:
        def random(self):
            return 0.1

    assert rj_birth_death_proposal((1, 1, 1, 1), Birth()) == ((1, 1, 1, 1), 0.0)
    assert BirthDeathProposal(4).propose(ParameterPoint(15), Birth()) == (None, 0.0)


def test_death_from_singleton_proposes_empty_model():
    class Death:
        def random(self):
            return 0.9

        def integers(self, n):
            return 0

    new, _ = rj_birth_death_proposal((0, 1, 0, 0), Death())
    assert new == (0, 0, 0, 0)


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 14), st.integers(0, 2**32 - 1))
def test_birth_death_correction_matches_log_density(mid, seed):
    prop = BirthDeathProposal(4)
    th = ParameterPoint(mid)
    new, corr = prop.propose(th, make_rng(seed))
    if new is None or new.model_id == 0:
        return
    assert corr == pytest.approx(prop.log_density(new, th) - prop.log_density(th, new), abs=1e-14)


def test_birth_death_proposal_frequencies():
    prop = BirthDeathProposal(4)
    rng = make_rng(2)
    th = ParameterPoint(model_id_from_inclusion((1, 0, 1, 0)))
    counts = {}
    n = 40_000
    for _ in range(n):
        new, _ = prop.propose(th, rng)
        counts[new.model_id] = counts.get(new.model_id, 0) + 1
    for mid, c in counts.items():
        p = math.exp(prop.log_density(th, ParameterPoint(mid)))
        assert c / n == pytest.approx(p, abs=4 * math.sqrt(p * (1 - p) / n))
