"""Bayesian logit variable selection over covariate-inclusion vectors.

Models are the non-empty inclusion vectors ``theta = (theta(1), ..., theta(k))``
and are numbered by their binary reading with ``theta(1)`` as the most
significant bit, so ``1111`` is model 15 and ``1011`` is model 11.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit, gammaln

from ..core import ContractViolation, ParameterPoint, check_model_dims
from ..densities import LogisticDensity
from ..estimators import GaussianAuxProposal

DEFAULT_Z_STAR = (1.0, 0.5, -2.0, 0.01)

PRIOR_READINGS = ("unit-information", "literal")


class FitError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class GlmDataset:
    responses: np.ndarray
    covariates: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.responses, dtype=float).ravel()
        x = np.atleast_2d(np.asarray(self.covariates, dtype=float))
        if x.shape[0] != y.size:
            raise ContractViolation(f"{y.size} responses but {x.shape[0]} covariate rows")
        if not np.all((y == 0) | (y == 1)):
            raise ContractViolation("responses must be 0/1")
        if not np.all(np.isfinite(x)):
            raise ContractViolation("covariates must be finite")
        y.setflags(write=False)
        x.setflags(write=False)
        object.__setattr__(self, "responses", y)
        object.__setattr__(self, "covariates", x)

    @property
    def m(self) -> int:
        return self.covariates.shape[0]

    @property
    def k(self) -> int:
        return self.covariates.shape[1]

    def to_csv(self, path) -> Path:
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["y"] + [f"x{j + 1}" for j in range(self.k)])
            for yi, row in zip(self.responses, self.covariates):
                w.writerow([int(yi)] + [repr(float(v)) for v in row])
        return path

    @classmethod
    def from_csv(cls, path) -> "GlmDataset":
        with Path(path).open(newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], [r for r in rows[1:] if r]
        if not header or header[0] != "y" or header[1:] != [f"x{j + 1}" for j in range(len(header) - 1)]:
            raise ContractViolation(f"unexpected dataset header {header}")
        data = np.array(body, dtype=float)
        return cls(data[:, 0], data[:, 1:])


def generate_glm_dataset(seed: int, m: int = 50, k: int = 4, z_star: Sequence[float] = DEFAULT_Z_STAR) -> GlmDataset:
    """Synthetic logit data with covariates 1 and 2 strongly correlated.

    Columns start as i.i.d. standard normals ``Z_1..Z_k``; column 2 is then
    replaced by ``0.9 Z_1 + 0.1 Z_2``.
    """
    z_star = np.asarray(z_star, dtype=float)
    if z_star.size != k:
        raise ContractViolation(f"z_star has {z_star.size} entries for k={k}")
    rng = np.random.Generator(np.random.Philox(seed))
    base = rng.standard_normal((k, m)).T
    cov = base.copy()
    if k >= 2:
        cov[:, 1] = 0.9 * base[:, 0] + 0.1 * base[:, 1]
    y = (rng.random(m) < expit(cov @ z_star)).astype(float)
    return GlmDataset(y, cov)


def inclusion_from_model_id(model_id: int, k: int) -> Tuple[int, ...]:
    if not 0 <= model_id < 2**k:
        raise ContractViolation(f"model id {model_id} out of range for k={k}")
    return tuple((model_id >> (k - 1 - j)) & 1 for j in range(k))


def model_id_from_inclusion(incl: Sequence[int]) -> int:
    out = 0
    for bit in incl:
        if bit not in (0, 1):
            raise ContractViolation(f"inclusion entries must be 0/1, got {incl}")
        out = (out << 1) | int(bit)
    return out


def _as_inclusion(theta, k):
    if isinstance(theta, ParameterPoint):
        return inclusion_from_model_id(theta.model_id, k)
    incl = tuple(int(b) for b in theta)
    if len(incl) != k:
        raise ContractViolation(f"inclusion vector has length {len(incl)}, expected {k}")
    return incl


def fit_glm_mle(theta, dataset: GlmDataset, ridge: float = 1e-6, max_iter: int = 100, tol: float = 1e-8):
    """Newton-Raphson (IRLS) fit of the logit likelihood restricted to ``theta``.

    Maximises ``loglik(z) - ridge * |z|^2 / 2`` with step halving. Returns the
    mode and the inverse of the negative Hessian there.
    """
    incl = _as_inclusion(theta, dataset.k)
    cols = [j for j, b in enumerate(incl) if b]
    if not cols:
        raise ContractViolation("cannot fit the empty model")
    x = dataset.covariates[:, cols]
    y = dataset.responses

    def objective(z):
        eta = x @ z
        return float(np.sum(y * eta - np.logaddexp(0.0, eta)) - 0.5 * ridge * z @ z)

    z = np.zeros(len(cols))
    f = objective(z)
    for _ in range(max_iter):
        p = expit(x @ z)
        grad = x.T @ (y - p) - ridge * z
        neg_hess = (x.T * (p * (1 - p))) @ x + ridge * np.eye(len(cols))
        if np.linalg.norm(grad) < tol:
            return z, np.linalg.inv(neg_hess)
        step = np.linalg.solve(neg_hess, grad)
        t = 1.0
        while t > 1e-12:
            cand = z + t * step
            fc = objective(cand)
            if fc >= f:
                break
            t *= 0.5
        z, f = cand, fc
    p = expit(x @ z)
    grad = x.T @ (y - p) - ridge * z
    if np.linalg.norm(grad) < tol:
        neg_hess = (x.T * (p * (1 - p))) @ x + ridge * np.eye(len(cols))
        return z, np.linalg.inv(neg_hess)
    raise FitError(f"IRLS did not converge for model {''.join(map(str, incl))} after {max_iter} iterations")


@dataclass(frozen=True, eq=False)
class _ModelCache:
    cols: Tuple[int, ...]
    covariates: np.ndarray
    prior_precision: np.ndarray
    log_const: float
    density: LogisticDensity
    mle: Optional[np.ndarray]
    mle_cov: Optional[np.ndarray]


class GlmTarget:
    """Posterior over (model, coefficients) for logit variable selection.

    The coefficient prior is ``N(0, 4M (C_t^T C_t)^{-1})`` under the default
    ``"unit-information"`` reading and ``N(0, (4M C_t^T C_t)^{-1})`` under
    ``"literal"``. The model-size prior is ``lam^|t| / |t|!``. All
    normalising constants that vary across models are included.
    """

    def __init__(self, dataset: GlmDataset, lam: float = 1.0, prior_reading: str = "unit-information",
                 ridge: float = 1e-6, fit_mle: bool = True):
        if not lam > 0:
            raise ContractViolation("lam must be > 0")
        if prior_reading not in PRIOR_READINGS:
            raise ContractViolation(f"prior_reading must be one of {PRIOR_READINGS}")
        self.dataset = dataset
        self.lam = float(lam)
        self.prior_reading = prior_reading
        self.k = dataset.k
        self.models = tuple(range(1, 2**self.k))
        self._cache: Dict[int, _ModelCache] = {}
        m = dataset.m
        for mid in self.models:
            cols = tuple(j for j, b in enumerate(inclusion_from_model_id(mid, self.k)) if b)
            x = np.ascontiguousarray(dataset.covariates[:, cols])
            gram = x.T @ x
            prec = gram / (4 * m) if prior_reading == "unit-information" else gram * (4 * m)
            try:
                chol = np.linalg.cholesky(prec)
            except np.linalg.LinAlgError:
                raise ContractViolation(f"prior precision for model {mid} is singular") from None
            d = len(cols)
            log_const = (
                float(np.log(np.diag(chol)).sum())
                - 0.5 * d * math.log(2 * math.pi)
                + d * math.log(self.lam)
                - float(gammaln(d + 1))
            )
            dens = LogisticDensity(x, dataset.responses, prec, log_const)
            mle = mle_cov = None
            if fit_mle:
                mle, mle_cov = fit_glm_mle(inclusion_from_model_id(mid, self.k), dataset, ridge=ridge)
            self._cache[mid] = _ModelCache(cols, x, prec, log_const, dens, mle, mle_cov)

    def _get(self, theta: ParameterPoint) -> _ModelCache:
        try:
            return self._cache[theta.model_id]
        except KeyError:
            raise ContractViolation(f"model {theta.model_id} is not in the model space") from None

    def aux_dim(self, model_id: int) -> int:
        return bin(model_id).count("1")

    def supports(self, theta: ParameterPoint) -> bool:
        return theta.model_id in self._cache

    def inclusion(self, theta: ParameterPoint) -> Tuple[int, ...]:
        return inclusion_from_model_id(theta.model_id, self.k)

    def prior_precision(self, theta: ParameterPoint) -> np.ndarray:
        return self._get(theta).prior_precision

    def density(self, theta: ParameterPoint) -> LogisticDensity:
        return self._get(theta).density

    def log_joint(self, theta: ParameterPoint, z):
        if theta.model_id == 0:
            return -math.inf
        check_model_dims(self, theta, z)
        return self._get(theta).density.log_density(z)

    def grad_log_joint(self, theta: ParameterPoint, z):
        check_model_dims(self, theta, z)
        return self._get(theta).density.grad(z)

    def mle(self, theta: ParameterPoint):
        c = self._get(theta)
        if c.mle is None:
            raise ContractViolation("target was built with fit_mle=False")
        return c.mle, c.mle_cov

    def init_proposal(self, theta: ParameterPoint) -> GaussianAuxProposal:
        mean, cov = self.mle(theta)
        return GaussianAuxProposal(mean, cov)


def glm_log_joint(target: GlmTarget, incl: Sequence[int], z) -> float:
    return target.log_joint(ParameterPoint(model_id_from_inclusion(incl)), z)


def glm_grad_log_joint(target: GlmTarget, incl: Sequence[int], z):
    return target.grad_log_joint(ParameterPoint(model_id_from_inclusion(incl)), z)


def rj_birth_death_proposal(incl: Sequence[int], rng) -> Tuple[Tuple[int, ...], float]:
    """One birth/death proposal on an inclusion vector.

    Returns ``(new_inclusion, log q(new, old) - log q(old, new))``. A birth
    attempted from the full model is a null proposal ``(incl, 0.0)``. A death
    from a single-covariate model proposes the empty model, which carries no
    target mass.
    """
    incl = tuple(int(b) for b in incl)
    k, size = len(incl), sum(incl)
    if size == 0:
        raise ContractViolation("the empty model cannot be a current state")
    if rng.random() < 0.5:
        if size == k:
            return incl, 0.0
        off = [j for j, b in enumerate(incl) if not b]
        j = off[int(rng.integers(len(off)))]
        new = list(incl)
        new[j] = 1
        return tuple(new), math.log((1.0 / (size + 1)) / (1.0 / (k - size)))
    on = [j for j, b in enumerate(incl) if b]
    j = on[int(rng.integers(len(on)))]
    new = list(incl)
    new[j] = 0
    return tuple(new), math.log((1.0 / (k - size + 1)) / (1.0 / size))


@dataclass(frozen=True)
class BirthDeathProposal:
    """Birth/death moves between inclusion vectors, as a kernel proposal."""

    k: int

    def propose(self, theta: ParameterPoint, rng):
        incl = inclusion_from_model_id(theta.model_id, self.k)
        new, corr = rj_birth_death_proposal(incl, rng)
        if new == incl:
            return None, 0.0
        return ParameterPoint(model_id_from_inclusion(new)), corr

    def log_density(self, theta: ParameterPoint, theta_star: ParameterPoint) -> float:
        a = inclusion_from_model_id(theta.model_id, self.k)
        b = inclusion_from_model_id(theta_star.model_id, self.k)
        diff = [j for j in range(self.k) if a[j] != b[j]]
        size = sum(a)
        if len(diff) != 1:
            return -math.inf
        if b[diff[0]] == 1:
            return math.log(0.5 / (self.k - size))
        return math.log(0.5 / size)
