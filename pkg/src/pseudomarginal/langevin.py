"""Truncated-Langevin auxiliary chains: the hot loop of the sequential scheme.

A block is ``z(1) ~ init`` followed by ``N - 1`` steps of a normal random walk
with drift ``(sigma2 / 2) * grad log pi_theta`` truncated to the ball of
radius ``eta * sigma`` around the step mean. Sampling returns the draws and
the per-draw log ratios ``log pi(theta, z(i)) - log(step density)``.

Two interchangeable implementations live here: compiled kernels for the
closed-form densities in :mod:`pseudomarginal.densities` and a numpy loop
that works with any density object. Both draw from the generator in the
same order.
"""

from __future__ import annotations

import functools
import math

import numpy as np
from scipy.special import gammainc

from . import _accel
from ._accel import njit

MAX_REJECTIONS = 1_000_000

STATUS_OK = -1
STATUS_REJECTION_CAP = -2


@functools.lru_cache(maxsize=256)
def truncation_log_mass(dim: int, eta: float) -> float:
    """Log of the standard ``dim``-variate normal mass inside radius ``eta``."""
    if eta <= 0:
        raise ValueError("truncation radius must be positive")
    if math.isinf(eta):
        return 0.0
    return math.log(gammainc(0.5 * dim, 0.5 * eta * eta))


def step_log_density(z, mean, sigma2: float, eta: float, log_mass: float) -> np.ndarray:
    """Truncated isotropic normal log density, ``-inf`` outside the ball.

    ``z`` and ``mean`` broadcast over a leading batch axis.
    """
    z = np.asarray(z, dtype=float)
    d = z.shape[-1]
    r2 = np.sum((z - mean) ** 2, axis=-1) / sigma2
    out = -0.5 * d * math.log(2 * math.pi * sigma2) - 0.5 * r2 - log_mass
    return np.where(r2 <= eta * eta, out, -np.inf)


def step_means(density, z, sigma2: float) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    return z + 0.5 * sigma2 * density.grad(z)


# ---------------------------------------------------------------------------
# numpy path


def chain_numpy(density, init, theta, sigma2, eta, log_mass, n, rng):
    d = density.dim
    draws = np.empty((n, d))
    terms = np.empty(n)
    z = np.asarray(init.sample(theta, rng), dtype=float).reshape(d)
    draws[0] = z
    terms[0] = density.log_density(z) - init.log_density(theta, z)
    sigma = math.sqrt(sigma2)
    const = -0.5 * d * math.log(2 * math.pi * sigma2) - log_mass
    eta2 = eta * eta
    for i in range(1, n):
        g = density.grad(z)
        if not np.all(np.isfinite(g)):
            return draws, terms, i - 1
        mean = z + 0.5 * sigma2 * g
        for _ in range(MAX_REJECTIONS):
            e = rng.standard_normal(d)
            r2 = float(e @ e)
            if r2 <= eta2:
                break
        else:
            return draws, terms, STATUS_REJECTION_CAP
        z = mean + sigma * e
        draws[i] = z
        terms[i] = density.log_density(z) - (const - 0.5 * r2)
    return draws, terms, STATUS_OK


# ---------------------------------------------------------------------------
# compiled path


@njit
def _gaussian_logpdf(z, params):
    mean, prec, c = params
    d = z.shape[0]
    q = 0.0
    for i in range(d):
        ri = z[i] - mean[i]
        for j in range(d):
            q += ri * prec[i, j] * (z[j] - mean[j])
    return c - 0.5 * q


@njit
def _gaussian_grad(z, params):
    mean, prec, c = params
    d = z.shape[0]
    g = np.empty(d)
    for i in range(d):
        s = 0.0
        for j in range(d):
            s += prec[i, j] * (z[j] - mean[j])
        g[i] = -s
    return g


@njit
def _log_expit(x):
    if x >= 0:
        return -math.log1p(math.exp(-x))
    return x - math.log1p(math.exp(x))


@njit
def _logistic_logpdf(z, params):
    x, y, prec, c = params
    m, d = x.shape
    ll = 0.0
    for i in range(m):
        eta = 0.0
        for j in range(d):
            eta += x[i, j] * z[j]
        ll += y[i] * _log_expit(eta) + (1.0 - y[i]) * _log_expit(-eta)
    q = 0.0
    for i in range(d):
        for j in range(d):
            q += z[i] * prec[i, j] * z[j]
    return ll - 0.5 * q + c


@njit
def _logistic_grad(z, params):
    x, y, prec, c = params
    m, d = x.shape
    g = np.zeros(d)
    for i in range(m):
        eta = 0.0
        for j in range(d):
            eta += x[i, j] * z[j]
        r = y[i] - 1.0 / (1.0 + math.exp(-eta))
        for j in range(d):
            g[j] += r * x[i, j]
    for i in range(d):
        s = 0.0
        for j in range(d):
            s += prec[i, j] * z[j]
        g[i] -= s
    return g


def _make_chain(logpdf, grad):
    @njit
    def chain(params, init_mean, init_chol, init_log_const, sigma2, eta, log_mass, n, rng):
        d = init_mean.shape[0]
        draws = np.empty((n, d))
        terms = np.empty(n)
        e = np.empty(d)
        for j in range(d):
            e[j] = rng.standard_normal()
        z = init_mean.copy()
        for i in range(d):
            for j in range(i + 1):
                z[i] += init_chol[i, j] * e[j]
        q0 = 0.0
        for j in range(d):
            q0 += e[j] * e[j]
        draws[0] = z
        terms[0] = logpdf(z, params) - (init_log_const - 0.5 * q0)
        sigma = math.sqrt(sigma2)
        const = -0.5 * d * math.log(2 * math.pi * sigma2) - log_mass
        eta2 = eta * eta
        for k in range(1, n):
            g = grad(z, params)
            for j in range(d):
                if not math.isfinite(g[j]):
                    return draws, terms, k - 1
            mean = z + 0.5 * sigma2 * g
            found = False
            r2 = 0.0
            for _ in range(MAX_REJECTIONS):
                for j in range(d):
                    e[j] = rng.standard_normal()
                r2 = 0.0
                for j in range(d):
                    r2 += e[j] * e[j]
                if r2 <= eta2:
                    found = True
                    break
            if not found:
                return draws, terms, STATUS_REJECTION_CAP
            z = mean + sigma * e
            draws[k] = z
            terms[k] = logpdf(z, params) - (const - 0.5 * r2)
        return draws, terms, STATUS_OK

    return chain


_COMPILED = {}


_KERNELS = {
    "gaussian": (_gaussian_logpdf, _gaussian_grad),
    "logistic": (_logistic_logpdf, _logistic_grad),
}


def compiled_kinds():
    return tuple(_KERNELS)


def _compiled_logpdf(kind):
    return _KERNELS[kind][0]


def _compiled(kind):
    if kind not in _COMPILED:
        _COMPILED[kind] = _make_chain(*_KERNELS[kind])
    return _COMPILED[kind]


def _params(density):
    if density.kind == "gaussian":
        return (density.mean, density.precision, float(density.log_const))
    return (density.covariates, density.responses, density.prior_precision, float(density.log_const))


def can_compile(density, init) -> bool:
    return (
        _accel.NUMBA_AVAILABLE
        and getattr(density, "kind", None) in _KERNELS
        and getattr(init, "kind", None) == "gaussian"
    )


def sample_chain(density, init, theta, sigma2, eta, n, rng, use_numba=None):
    """Draw one truncated-Langevin block.

    Returns ``(draws, log_terms, status)`` where ``status`` is
    :data:`STATUS_OK`, :data:`STATUS_REJECTION_CAP`, or the index of the
    draw whose gradient was not finite.
    """
    log_mass = truncation_log_mass(density.dim, eta)
    if use_numba is None:
        use_numba = _accel.USE_NUMBA
    compiled = use_numba and can_compile(density, init)
    if compiled:
        chain = _compiled(density.kind)
        return chain(
            _params(density),
            init.mean,
            init.chol,
            float(init.log_const),
            float(sigma2),
            float(eta),
            float(log_mass),
            int(n),
            rng,
        )
    return chain_numpy(density, init, theta, sigma2, eta, log_mass, n, rng)
