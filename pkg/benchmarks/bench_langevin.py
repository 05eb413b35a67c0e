"""Compiled vs numpy truncated-Langevin block sampling.

Run with ``python benchmarks/bench_langevin.py``. Both backends consume the
same random stream, so the first block from each is also compared.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from pseudomarginal import langevin
from pseudomarginal.core import ParameterPoint
from pseudomarginal.estimators import GaussianAuxProposal
from pseudomarginal.targets.glm import GlmTarget, generate_glm_dataset
from pseudomarginal.targets.toy import ToyTarget


def _time(density, init, theta, n, reps, use_numba):
    rng = np.random.Generator(np.random.Philox(0))
    langevin.sample_chain(density, init, theta, 0.1, 10.0, n, rng, use_numba=use_numba)
    t0 = time.perf_counter()
    for _ in range(reps):
        langevin.sample_chain(density, init, theta, 0.1, 10.0, n, rng, use_numba=use_numba)
    return (time.perf_counter() - t0) / reps


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--reps", type=int, default=200)
    args = ap.parse_args()
    toy = ToyTarget()
    glm = GlmTarget(generate_glm_dataset(2009))
    cases = [
        ("toy model 2", toy.density(ParameterPoint(2)), GaussianAuxProposal([3.0, 3.0], np.eye(2)), ParameterPoint(2)),
        ("glm model 15", glm.density(ParameterPoint(15)), glm.init_proposal(ParameterPoint(15)), ParameterPoint(15)),
    ]
    print(f"{'case':<14} {'N':>5} {'numpy ms':>10} {'numba ms':>10} {'speedup':>8} {'max |diff|':>11}")
    for name, dens, init, theta in cases:
        for n in (10, 50, 200):
            t_np = _time(dens, init, theta, n, args.reps, False)
            t_nb = _time(dens, init, theta, n, args.reps, True)
            a = langevin.sample_chain(dens, init, theta, 0.1, 10.0, n, np.random.Generator(np.random.Philox(1)), use_numba=False)
            b = langevin.sample_chain(dens, init, theta, 0.1, 10.0, n, np.random.Generator(np.random.Philox(1)), use_numba=True)
            diff = float(np.max(np.abs(a[0] - b[0])))
            print(f"{name:<14} {n:>5} {1e3 * t_np:>10.3f} {1e3 * t_nb:>10.3f} {t_np / t_nb:>8.1f} {diff:>11.2e}")


if __name__ == "__main__":
    main()
