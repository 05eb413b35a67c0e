"""Desk-scale property suites behind the ``check`` verb.

Each check returns a :class:`CheckResult`; none of them raise on failure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, List

import numpy as np
from scipy import integrate

from ..core import AuxBlock, ParameterPoint, WeightScheme
from ..estimators import GaussianAuxProposal, IidEstimator, PerModelEstimator
from ..exact import (
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
from ..kernels import gimh_log_ratio_extended
from ..targets.discrete import DiscreteAuxProposal, DiscreteTarget, MatrixProposal, enumerable_instance
from ..targets.glm import GlmTarget, generate_glm_dataset
from ..targets.toy import ToyTarget
from ..trace import PmState


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def check_gimh_exactness(ns=(1, 2, 4), tol: float = 1e-12) -> CheckResult:
    """Stationary theta-marginal of the enumerated GIMH chain equals pi; pairwise balance."""
    pi, q, flip = enumerable_instance()
    target = pi.marginal()
    worst_m, worst_b = 0.0, 0.0
    for n in ns:
        space = extended_space(pi.table, q.table, n)
        p = gimh_transition_matrix(space, flip.matrix)
        mu = stationary_vector(p)
        worst_m = max(worst_m, float(np.max(np.abs(theta_marginal(space, mu) - target))))
        worst_b = max(worst_b, max_flow_imbalance(p, space.extended_target()))
    ok = worst_m <= tol and worst_b <= tol
    return CheckResult("gimh exactness", ok, f"max |marginal - pi| = {worst_m:.3e}, max flow imbalance = {worst_b:.3e}")


def check_refresh_invariance(ns=(1, 2, 4), tol: float = 1e-12) -> CheckResult:
    pi, q, _ = enumerable_instance()
    worst = 0.0
    for n in ns:
        space = extended_space(pi.table, q.table, n)
        for t in range(pi.table.shape[0]):
            p = refresh_transition_matrix(space, t)
            v = space.block_prob[t] * space.gamma[t]
            v = v / v.sum()
            worst = max(worst, float(np.max(np.abs(v @ p - v))))
    return CheckResult("refresh invariance", worst <= tol, f"max |mu P - mu| = {worst:.3e}")


def mcwm_exact_tv(ns=(1, 2, 4)) -> Dict[int, float]:
    pi, q, flip = enumerable_instance()
    target = pi.marginal()
    out = {}
    for n in ns:
        p = mcwm_transition_matrix(extended_space(pi.table, q.table, n), flip.matrix)
        out[n] = 0.5 * float(np.abs(stationary_vector(p) - target).sum())
    return out


def check_mcwm_bias_decay(ns=(1, 2, 4)) -> CheckResult:
    tv = mcwm_exact_tv(ns)
    vals = [tv[n] for n in ns]
    ok = vals[0] > 0 and all(a > b for a, b in zip(vals, vals[1:]))
    return CheckResult("mcwm exact bias decay", ok, ", ".join(f"TV(N={n}) = {tv[n]:.6g}" for n in ns))


def ratio_identity_errors(n_configs: int = 1000, seed: int = 0) -> np.ndarray:
    """Scaled discrepancy between the two GIMH ratio evaluations on random instances.

    Each entry is ``|a - b| / max(|b|, s)`` where ``s`` is the sum of the
    absolute log terms entering the extended-target form, i.e. the
    magnitude at which both evaluations round.
    """
    rng = np.random.default_rng(seed)
    errs = np.empty(n_configs)
    for c in range(n_configs):
        n_theta, n_aux, n = int(rng.integers(2, 5)), int(rng.integers(2, 6)), int(rng.integers(1, 7))
        target = DiscreteTarget(rng.uniform(0.01, 5.0, (n_theta, n_aux)))
        qt = rng.uniform(0.05, 1.0, (n_theta, n_aux))
        qt /= qt.sum(axis=1, keepdims=True)
        prop = DiscreteAuxProposal(qt)
        qm = rng.uniform(0.05, 1.0, (n_theta, n_theta))
        qm /= qm.sum(axis=1, keepdims=True)
        tprop = MatrixProposal(qm)
        w = rng.dirichlet(np.ones(n))
        w /= w.sum()
        scheme = WeightScheme(tuple(w))
        if abs(sum(scheme.weights) - 1.0) > 1e-12:
            scheme = WeightScheme.uniform(n)
        est = IidEstimator(target, prop, scheme)
        t0, t1 = ParameterPoint(int(rng.integers(n_theta))), ParameterPoint(int(rng.integers(n_theta)))
        b0 = est.draw(t0, rng)
        b1 = est.draw(t1, rng)
        corr = tprop.log_density(t1, t0) - tprop.log_density(t0, t1)
        direct = b1.log_gamma - b0.log_gamma + corr
        ext = gimh_log_ratio_extended(PmState(t0, b0), t1, b1, tprop, est)
        scale = (abs(est.log_block_density(t0, b0)) + abs(est.log_block_density(t1, b1))
                 + abs(b0.log_gamma) + abs(b1.log_gamma) + abs(tprop.log_density(t0, t1)) + abs(tprop.log_density(t1, t0)))
        errs[c] = abs(ext - direct) / max(abs(direct), scale)
    return errs


def check_ratio_identity(n_configs: int = 1000, tol: float = 1e-12) -> CheckResult:
    errs = ratio_identity_errors(n_configs)
    return CheckResult("gimh ratio identity", bool(np.all(errs <= tol)), f"max scaled error {errs.max():.3e} over {n_configs} configs")


def check_birth_death_balance(k: int = 4, seed: int = 0, tol: float = 1e-12) -> CheckResult:
    rng = np.random.default_rng(seed)
    pi = np.concatenate([[0.0], rng.uniform(0.1, 1.0, 2**k - 1)])
    pi /= pi.sum()
    p = marginal_transition_matrix(pi, birth_death_proposal_matrix(k))
    imb = max_flow_imbalance(p, pi)
    stat = float(np.max(np.abs(pi @ p - pi)))
    return CheckResult("birth/death balance", imb <= tol and stat <= tol, f"flow imbalance {imb:.3e}, |pi P - pi| {stat:.3e}")


def _fd_rel_errors(f: Callable, g: Callable, points) -> np.ndarray:
    errs = []
    for z in points:
        h = 1e-5 * (1 + np.abs(z))
        fd = np.array([(f(z + h[j] * e) - f(z - h[j] * e)) / (2 * h[j]) for j, e in enumerate(np.eye(z.size))])
        an = g(z)
        errs.append(np.linalg.norm(fd - an) / max(np.linalg.norm(an), 1e-8))
    return np.array(errs)


def gradient_errors(n_points: int = 20, seed: int = 0) -> Dict[str, float]:
    rng = np.random.default_rng(seed)
    toy = ToyTarget()
    out = {}
    for mid, d in ((1, 1), (2, 2)):
        th = ParameterPoint(mid)
        pts = rng.normal(0.0, 1.5, (n_points, d))
        out[f"toy model {mid}"] = float(_fd_rel_errors(lambda z: toy.log_joint(th, z), lambda z: toy.grad_log_conditional(th, z), pts).max())
    glm = GlmTarget(generate_glm_dataset(2009), fit_mle=False)
    for mid in (15, 11, 6):
        th = ParameterPoint(mid)
        d = glm.aux_dim(mid)
        pts = rng.normal(0.0, 1.5, (n_points, d))
        out[f"glm model {mid}"] = float(_fd_rel_errors(lambda z: glm.log_joint(th, z), lambda z: glm.grad_log_joint(th, z), pts).max())
    return out


def check_gradients(tol: float = 1e-5) -> CheckResult:
    errs = gradient_errors()
    return CheckResult("finite-difference gradients", max(errs.values()) <= tol,
                       ", ".join(f"{k}: {v:.2e}" for k, v in errs.items()))


def check_toy_normalisation(tol: float = 1e-6) -> CheckResult:
    toy = ToyTarget()
    m1, _ = integrate.quad(lambda x: math.exp(toy.log_joint(ParameterPoint(1), np.array([x]))), -np.inf, np.inf, epsabs=1e-12)
    m2, _ = integrate.dblquad(lambda y, x: math.exp(toy.log_joint(ParameterPoint(2), np.array([x, y]))),
                              -12, 12, -12, 12, epsabs=1e-11, epsrel=1e-11)
    err = max(abs(m1 - 0.25), abs(m2 - 0.75), abs(m1 + m2 - 1.0))
    return CheckResult("toy normalisation", err <= tol, f"mass model 1 {m1:.10f}, model 2 {m2:.10f}")


ALL_CHECKS = (
    check_gimh_exactness,
    check_refresh_invariance,
    check_mcwm_bias_decay,
    check_ratio_identity,
    check_birth_death_balance,
    check_gradients,
    check_toy_normalisation,
)


def run_checks() -> List[CheckResult]:
    return [c() for c in ALL_CHECKS]
