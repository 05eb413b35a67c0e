"""Auxiliary-block samplers and the log importance weight of a block.

The estimator objects at the bottom bundle a sampler with its weight scheme
so kernels can ask for a fresh weighted block (``draw``), re-weigh a block
they were handed (``log_gamma``) or evaluate the block's own proposal
density (``log_block_density``, needed by moves that update ``Z`` given
``theta``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, NamedTuple, Optional, Tuple

import numpy as np

from . import langevin
from .core import (
    AbsoluteContinuityError,
    AuxBlock,
    Conditioning,
    ContractViolation,
    EstimatorError,
    ParameterPoint,
    WeightScheme,
    log_sum_exp_weighted,
    validate_weight_scheme,
)


class WeightResult(NamedTuple):
    log_gamma: float
    warnings: Tuple[str, ...] = ()


# ---------------------------------------------------------------------------
# i.i.d. proposals


@dataclass(frozen=True, eq=False)
class GaussianAuxProposal:
    """``N(mean, cov)``, the same for every ``theta`` it is used with."""

    mean: np.ndarray
    cov: np.ndarray

    kind = "gaussian"

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.asarray(self.cov, dtype=float)
        if cov.ndim == 0:
            cov = cov * np.eye(mean.size)
        chol = np.linalg.cholesky(cov)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "chol", chol)
        object.__setattr__(self, "_inv_chol_t", np.linalg.inv(chol).T)
        log_const = -0.5 * mean.size * math.log(2 * math.pi) - float(np.log(np.diag(chol)).sum())
        object.__setattr__(self, "log_const", log_const)

    @property
    def dim(self) -> int:
        return self.mean.size

    def sample(self, theta, rng, size=None):
        if size is None:
            return self.mean + self.chol @ rng.standard_normal(self.dim)
        return self.mean + rng.standard_normal((size, self.dim)) @ self.chol.T

    def log_density(self, theta, z):
        z = np.asarray(z, dtype=float)
        single = z.ndim == 1
        zb = z[None, :] if single else z
        e = (zb - self.mean) @ self._inv_chol_t
        out = self.log_const - 0.5 * np.sum(e * e, axis=1)
        return float(out[0]) if single else out


@dataclass(frozen=True, eq=False)
class PointMassProposal:
    """Degenerate proposal; only useful for tests of the sampling plumbing."""

    point: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "point", np.atleast_1d(np.asarray(self.point, dtype=float)))

    def sample(self, theta, rng, size=None):
        if size is None:
            return self.point.copy()
        return np.tile(self.point, (size, 1))

    def log_density(self, theta, z):
        z = np.asarray(z, dtype=float)
        hit = np.all(z == self.point, axis=-1)
        return np.where(hit, 0.0, -np.inf) if z.ndim > 1 else (0.0 if hit else -math.inf)


@dataclass(frozen=True)
class PerModelProposal:
    """Dispatch on ``theta.model_id`` to a per-model proposal."""

    by_model: Mapping[int, object]

    def _get(self, theta):
        try:
            return self.by_model[theta.model_id]
        except KeyError:
            raise ContractViolation(f"no auxiliary proposal for model {theta.model_id}") from None

    def sample(self, theta, rng, size=None):
        return self._get(theta).sample(theta, rng, size)

    def log_density(self, theta, z):
        return self._get(theta).log_density(theta, z)

    def __getitem__(self, model_id):
        return self.by_model[model_id]


def _log_joint_rows(target, theta, draws):
    out = np.asarray(target.log_joint(theta, draws), dtype=float)
    if out.shape != (draws.shape[0],):
        out = np.array([target.log_joint(theta, row) for row in draws], dtype=float)
    return out


def _check_scheme(weights: WeightScheme, block: AuxBlock, conditioning: Conditioning):
    if weights.conditioning is not conditioning:
        raise ContractViolation(f"expected {conditioning.value} weights, got {weights.conditioning.value}")
    if weights.n != block.n:
        raise ContractViolation(f"weight scheme has n={weights.n} but block has n={block.n}")


def sample_aux_iid(proposal, theta: ParameterPoint, n: int, rng) -> AuxBlock:
    if n < 1:
        raise ContractViolation(f"n must be >= 1, got {n}")
    draws = np.asarray(proposal.sample(theta, rng, n), dtype=float)
    return AuxBlock(draws.reshape(n, -1))


def log_gamma_iid(target, proposal, theta: ParameterPoint, block: AuxBlock, weights: WeightScheme) -> float:
    """``log sum_k w_k pi(theta, z_k) / q_theta(z_k)`` for an i.i.d. block."""
    _check_scheme(weights, block, Conditioning.IID)
    log_q = np.atleast_1d(np.asarray(proposal.log_density(theta, block.draws), dtype=float))
    bad = np.flatnonzero(~(log_q > -np.inf))
    if bad.size:
        raise AbsoluteContinuityError(f"draws {bad.tolist()} have zero proposal density under model {theta.model_id}")
    log_joint = _log_joint_rows(target, theta, block.draws)
    return log_sum_exp_weighted(log_joint - log_q, weights.as_array())


# ---------------------------------------------------------------------------
# truncated-Langevin sequential proposals


@dataclass(frozen=True, eq=False)
class LangevinAuxProposal:
    """Block proposal ``init(z1) prod_i N_eta(z_i; z_{i-1} + s/2 grad, s I)``.

    ``density_for(theta)`` returns the object whose ``grad`` supplies the
    drift (and whose ``log_density`` must equal the target's ``log_joint``).
    Passing ``grad_log_joint`` instead wraps a plain callable; such blocks
    always take the numpy path.
    """

    step_variance: float
    truncation_radius: float
    init_proposal: object
    density_for: Optional[Callable[[ParameterPoint], object]] = None
    grad_log_joint: Optional[Callable] = None
    target: Optional[object] = field(default=None, repr=False)

    def __post_init__(self):
        if not self.step_variance > 0:
            raise ContractViolation("step_variance must be > 0")
        if not self.truncation_radius > 0:
            raise ContractViolation("truncation_radius must be > 0")
        if self.density_for is None and (self.grad_log_joint is None or self.target is None):
            raise ContractViolation("need density_for, or grad_log_joint together with target")

    @classmethod
    def for_target(cls, target, step_variance, truncation_radius, init_proposal):
        return cls(step_variance, truncation_radius, init_proposal, density_for=target.density)

    def density(self, theta):
        if self.density_for is not None:
            return self.density_for(theta)
        from .densities import CallableDensity

        return CallableDensity(
            lambda z: self.target.log_joint(theta, z),
            lambda z: self.grad_log_joint(theta, z),
            self.target.aux_dim(theta.model_id),
        )

    def init_for(self, theta):
        init = self.init_proposal
        return init[theta.model_id] if isinstance(init, PerModelProposal) else init


def _run_langevin(proposal: LangevinAuxProposal, theta, n, rng, use_numba=None):
    if n < 1:
        raise ContractViolation(f"n must be >= 1, got {n}")
    density = proposal.density(theta)
    draws, terms, status = langevin.sample_chain(
        density,
        proposal.init_for(theta),
        theta,
        proposal.step_variance,
        proposal.truncation_radius,
        n,
        rng,
        use_numba=use_numba,
    )
    if status == langevin.STATUS_REJECTION_CAP:
        raise EstimatorError("truncated normal rejection sampler exceeded its iteration cap")
    if status >= 0:
        raise EstimatorError(f"non-finite gradient at draw index {status} (model {theta.model_id})")
    return draws, terms


def sample_aux_langevin(proposal: LangevinAuxProposal, theta: ParameterPoint, n: int, rng, use_numba=None) -> AuxBlock:
    draws, _ = _run_langevin(proposal, theta, n, rng, use_numba)
    return AuxBlock(draws)


def _markov_log_denominators(proposal: LangevinAuxProposal, theta, draws):
    """Per-draw log proposal densities and indices of out-of-ball draws."""
    density = proposal.density(theta)
    sigma2, eta = proposal.step_variance, proposal.truncation_radius
    log_den = np.empty(draws.shape[0])
    log_den[0] = proposal.init_for(theta).log_density(theta, draws[0])
    if not log_den[0] > -np.inf:
        raise AbsoluteContinuityError(f"first draw has zero initial-proposal density under model {theta.model_id}")
    if draws.shape[0] > 1:
        grads = np.atleast_2d(density.grad(draws[:-1]))
        bad = np.flatnonzero(~np.all(np.isfinite(grads), axis=1))
        if bad.size:
            raise EstimatorError(f"non-finite gradient at draw index {int(bad[0])} (model {theta.model_id})")
        means = draws[:-1] + 0.5 * sigma2 * grads
        log_mass = langevin.truncation_log_mass(draws.shape[1], eta)
        log_den[1:] = langevin.step_log_density(draws[1:], means, sigma2, eta, log_mass)
    outside = np.flatnonzero(np.isneginf(log_den[1:])) + 1
    return log_den, outside


def log_gamma_markov(target, proposal: LangevinAuxProposal, theta: ParameterPoint, block: AuxBlock, weights: WeightScheme) -> WeightResult:
    """Log weight of a sequential block, with a warning per out-of-support draw.

    A draw lying outside the truncation ball of its own transition (possible
    only for blocks built elsewhere) contributes a zero term.
    """
    _check_scheme(weights, block, Conditioning.MARKOV)
    log_den, outside = _markov_log_denominators(proposal, theta, block.draws)
    log_joint = _log_joint_rows(target, theta, block.draws)
    with np.errstate(invalid="ignore"):
        terms = np.where(np.isneginf(log_den), -np.inf, log_joint - log_den)
    warns = tuple(f"draw {int(k)} lies outside the truncation ball of its transition" for k in outside)
    return WeightResult(log_sum_exp_weighted(terms, weights.as_array()), warns)


# ---------------------------------------------------------------------------
# estimator bundles used by the kernels


class IidEstimator:
    """I.i.d. block sampler plus mixture weights (classical importance sampling)."""

    def __init__(self, target, proposal, weights: WeightScheme):
        report = validate_weight_scheme(weights)
        if not report.ok:
            raise ContractViolation("; ".join(report.violations))
        if weights.conditioning is not Conditioning.IID:
            raise ContractViolation("IidEstimator needs IID conditioning")
        self.target = target
        self.proposal = proposal
        self.weights = weights

    @property
    def n(self) -> int:
        return self.weights.n

    def draw(self, theta, rng) -> AuxBlock:
        block = sample_aux_iid(self.proposal, theta, self.n, rng)
        return block.with_log_gamma(self.log_gamma(theta, block))

    def log_gamma(self, theta, block) -> float:
        return log_gamma_iid(self.target, self.proposal, theta, block, self.weights)

    def log_block_density(self, theta, block) -> float:
        return float(np.sum(self.proposal.log_density(theta, block.draws)))


class LangevinEstimator:
    """Truncated-Langevin sequential sampler plus mixture weights."""

    def __init__(self, target, proposal: LangevinAuxProposal, weights: WeightScheme, use_numba=None):
        report = validate_weight_scheme(weights)
        if not report.ok:
            raise ContractViolation("; ".join(report.violations))
        if weights.conditioning is not Conditioning.MARKOV:
            raise ContractViolation("LangevinEstimator needs MARKOV conditioning")
        self.target = target
        self.proposal = proposal
        self.weights = weights
        self.use_numba = use_numba
        self._w = weights.as_array()

    @property
    def n(self) -> int:
        return self.weights.n

    def draw(self, theta, rng) -> AuxBlock:
        draws, terms = _run_langevin(self.proposal, theta, self.n, rng, self.use_numba)
        return AuxBlock(draws, log_sum_exp_weighted(terms, self._w))

    def log_gamma(self, theta, block) -> float:
        return log_gamma_markov(self.target, self.proposal, theta, block, self.weights).log_gamma

    def log_block_density(self, theta, block) -> float:
        log_den, _ = _markov_log_denominators(self.proposal, theta, block.draws)
        return float(np.sum(log_den))


class PerModelEstimator:
    """Route each model to its own estimator (e.g. exact for one, noisy for another)."""

    def __init__(self, by_model: Mapping[int, object]):
        self.by_model = dict(by_model)

    def _get(self, theta):
        try:
            return self.by_model[theta.model_id]
        except KeyError:
            raise ContractViolation(f"no estimator for model {theta.model_id}") from None

    @property
    def n(self) -> int:
        return max(e.n for e in self.by_model.values())

    def draw(self, theta, rng) -> AuxBlock:
        return self._get(theta).draw(theta, rng)

    def log_gamma(self, theta, block) -> float:
        return self._get(theta).log_gamma(theta, block)

    def log_block_density(self, theta, block) -> float:
        return self._get(theta).log_block_density(theta, block)

