"""Log densities with gradients, in the two closed forms the accelerated
Langevin kernels understand plus a generic callable wrapper.

Every method accepts a single point of shape ``(d,)`` or a batch of shape
``(B, d)`` and returns a scalar or a length-``B`` array accordingly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import expit, log_expit


def _as_batch(z):
    z = np.asarray(z, dtype=float)
    return (z[None, :], True) if z.ndim == 1 else (z, False)


@dataclass(frozen=True, eq=False)
class GaussianDensity:
    """``log_const - 0.5 (z - mean)^T P (z - mean)``."""

    precision: np.ndarray
    log_const: float
    mean: Optional[np.ndarray] = None

    kind = "gaussian"

    def __post_init__(self):
        p = np.ascontiguousarray(self.precision, dtype=float)
        mu = np.zeros(p.shape[0]) if self.mean is None else np.ascontiguousarray(self.mean, dtype=float)
        object.__setattr__(self, "precision", p)
        object.__setattr__(self, "mean", mu)

    @classmethod
    def normal(cls, cov, mean=None, scale: float = 1.0) -> "GaussianDensity":
        """``scale * N(z; mean, cov)`` with its normalising constant."""
        cov = np.atleast_2d(np.asarray(cov, dtype=float))
        d = cov.shape[0]
        sign, logdet = np.linalg.slogdet(cov)
        if sign <= 0:
            raise ValueError("covariance must be positive definite")
        log_const = math.log(scale) - 0.5 * d * math.log(2 * math.pi) - 0.5 * logdet
        return cls(np.linalg.inv(cov), log_const, mean)

    @property
    def dim(self) -> int:
        return self.precision.shape[0]

    def log_density(self, z):
        zb, single = _as_batch(z)
        r = zb - self.mean
        out = self.log_const - 0.5 * np.sum((r @ self.precision) * r, axis=1)
        return float(out[0]) if single else out

    def grad(self, z):
        zb, single = _as_batch(z)
        g = -(zb - self.mean) @ self.precision.T
        return g[0] if single else g


@dataclass(frozen=True, eq=False)
class LogisticDensity:
    """Bernoulli-logit log likelihood plus a zero-mean Gaussian log prior.

    ``log_const`` collects everything that does not depend on ``z``: the
    prior normalising constant and any model-level prior term.
    """

    covariates: np.ndarray
    responses: np.ndarray
    prior_precision: np.ndarray
    log_const: float

    kind = "logistic"

    def __post_init__(self):
        object.__setattr__(self, "covariates", np.ascontiguousarray(self.covariates, dtype=float))
        object.__setattr__(self, "responses", np.ascontiguousarray(self.responses, dtype=float))
        object.__setattr__(self, "prior_precision", np.ascontiguousarray(self.prior_precision, dtype=float))

    @property
    def dim(self) -> int:
        return self.covariates.shape[1]

    def log_likelihood(self, z):
        zb, single = _as_batch(z)
        eta = zb @ self.covariates.T
        # y*log(p) + (1-y)*log(1-p) with p = expit(eta)
        ll = (self.responses * log_expit(eta) + (1.0 - self.responses) * log_expit(-eta)).sum(axis=1)
        return float(ll[0]) if single else ll

    def log_density(self, z):
        zb, single = _as_batch(z)
        quad = np.einsum("bi,ij,bj->b", zb, self.prior_precision, zb)
        out = self.log_likelihood(zb) - 0.5 * quad + self.log_const
        return float(out[0]) if single else out

    def grad(self, z):
        zb, single = _as_batch(z)
        p = expit(zb @ self.covariates.T)
        g = (self.responses - p) @ self.covariates - zb @ self.prior_precision.T
        return g[0] if single else g


@dataclass(frozen=True, eq=False)
class CallableDensity:
    """Wraps arbitrary per-point callables; never accelerated."""

    log_fn: Callable[[np.ndarray], float]
    grad_fn: Callable[[np.ndarray], np.ndarray]
    dim: int

    kind = "callable"

    def log_density(self, z):
        zb, single = _as_batch(z)
        out = np.array([self.log_fn(row) for row in zb], dtype=float)
        return float(out[0]) if single else out

    def grad(self, z):
        zb, single = _as_batch(z)
        out = np.array([np.asarray(self.grad_fn(row), dtype=float) for row in zb])
        return out[0] if single else out
