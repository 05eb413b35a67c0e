"""Single-coordinate random-walk Metropolis scans on a fixed density.

Used for the within-model moves of the ``N = 1`` chain, where the extended
target given theta reduces to ``pi(theta, z)``. Each coordinate update draws
one normal then one uniform, in the same order on both code paths.
"""

from __future__ import annotations

import math

import numpy as np

from . import _accel
from .langevin import _compiled_logpdf, _params, compiled_kinds


def rw_scans_numpy(density, z, scale, n_scans, rng):
    z = np.array(z, dtype=float)
    cur = float(density.log_density(z))
    accepted = 0
    for _ in range(n_scans):
        for j in range(z.size):
            old = z[j]
            z[j] = old + scale * rng.standard_normal()
            new = float(density.log_density(z))
            u = rng.random()
            if (math.log(u) if u > 0 else -math.inf) < new - cur:
                cur = new
                accepted += 1
            else:
                z[j] = old
    return z, accepted


_SCANS = {}


def _make_scans(logpdf):
    @_accel.njit
    def scans(params, z0, scale, n_scans, rng):
        z = z0.copy()
        cur = logpdf(z, params)
        accepted = 0
        for _ in range(n_scans):
            for j in range(z.shape[0]):
                old = z[j]
                z[j] = old + scale * rng.standard_normal()
                new = logpdf(z, params)
                u = rng.random()
                lu = math.log(u) if u > 0 else -math.inf
                if lu < new - cur:
                    cur = new
                    accepted += 1
                else:
                    z[j] = old
        return z, accepted

    return scans


def rw_scans(density, z, scale: float, n_scans: int, rng, use_numba=None):
    """Run ``n_scans`` systematic scans; returns ``(z, n_accepted)``."""
    if use_numba is None:
        use_numba = _accel.USE_NUMBA
    kind = getattr(density, "kind", None)
    if use_numba and _accel.NUMBA_AVAILABLE and kind in compiled_kinds():
        if kind not in _SCANS:
            _SCANS[kind] = _make_scans(_compiled_logpdf(kind))
        return _SCANS[kind](_params(density), np.asarray(z, dtype=float), float(scale), int(n_scans), rng)
    return rw_scans_numpy(density, z, scale, n_scans, rng)
