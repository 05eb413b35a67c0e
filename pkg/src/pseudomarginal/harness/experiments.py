"""Build targets and estimators from a config, run chains, and persist results."""

from __future__ import annotations

import itertools
import time
from dataclasses import replace
from concurrent.futures import ProcessPoolExecutor
from functools import lru_cache
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from .. import _accel
from ..core import Conditioning, ContractViolation, ParameterPoint, WeightScheme
from ..diagnostics import acceptance_rate, holding_time_stats, model_probabilities, tv_distance_discrete, weight_tail_report
from ..estimators import GaussianAuxProposal, IidEstimator, LangevinAuxProposal, LangevinEstimator, PerModelEstimator
from ..kernels import Schedule, run_chain
from ..targets.glm import BirthDeathProposal, GlmDataset, GlmTarget, generate_glm_dataset
from ..targets.toy import ToyFlipProposal, ToyTarget
from ..trace import ChainTrace
from .config import ExperimentConfig
from .io import write_json, write_trace

RNG_NAME = "numpy Philox4x64-10, seeded by SeedSequence([seed, replica])"


def make_rng(seed: int, replica: int = 0) -> np.random.Generator:
    """The documented stream for replica ``replica`` of master seed ``seed``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(replica)])))


# ---------------------------------------------------------------------------
# toy


def toy_estimator(cfg: ExperimentConfig, n: Optional[int] = None, use_numba=None) -> PerModelEstimator:
    """Model 1: i.i.d. normal proposal; model 2: truncated Langevin or i.i.d. normal."""
    target = ToyTarget()
    n = cfg.n if n is None else n
    est1 = IidEstimator(target, GaussianAuxProposal([0.0], [[cfg.model1_proposal_var]]), WeightScheme.uniform(n))
    if cfg.model2_scheme == "langevin":
        init = GaussianAuxProposal(list(cfg.init_mean), cfg.init_var * np.eye(2))
        lp = LangevinAuxProposal.for_target(target, cfg.step_variance, cfg.truncation_radius, init)
        est2 = LangevinEstimator(target, lp, WeightScheme.uniform(n, Conditioning.MARKOV), use_numba=use_numba)
    else:
        est2 = IidEstimator(target, GaussianAuxProposal([0.0, 0.0], cfg.model2_iid_var * np.eye(2)), WeightScheme.uniform(n))
    return PerModelEstimator({1: est1, 2: est2})


# ---------------------------------------------------------------------------
# glm


def load_dataset(cfg: ExperimentConfig) -> GlmDataset:
    if cfg.dataset_path is not None:
        return GlmDataset.from_csv(cfg.dataset_path)
    return generate_glm_dataset(cfg.dataset_seed, cfg.m, cfg.k, cfg.z_star)


@lru_cache(maxsize=8)
def _glm_target_cached(key, lam, prior_reading):
    dataset = GlmDataset.from_csv(key[1]) if key[0] == "path" else generate_glm_dataset(key[1], key[2], key[3], key[4])
    return GlmTarget(dataset, lam=lam, prior_reading=prior_reading)


def glm_target(cfg: ExperimentConfig) -> GlmTarget:
    key = ("path", cfg.dataset_path) if cfg.dataset_path else ("gen", cfg.dataset_seed, cfg.m, cfg.k, cfg.z_star)
    return _glm_target_cached(key, cfg.lam, cfg.prior_reading)


def glm_estimator(target: GlmTarget, cfg: ExperimentConfig, use_numba=None) -> PerModelEstimator:
    """Per-model truncated Langevin blocks started from ``N(mle, inverse Hessian)``."""
    weights = WeightScheme.uniform(cfg.n, Conditioning.MARKOV)
    by_model = {}
    for mid in target.models:
        init = target.init_proposal(ParameterPoint(mid))
        lp = LangevinAuxProposal.for_target(target, cfg.step_variance, cfg.truncation_radius, init)
        by_model[mid] = LangevinEstimator(target, lp, weights, use_numba=use_numba)
    return PerModelEstimator(by_model)


# ---------------------------------------------------------------------------
# running


def build_chain(cfg: ExperimentConfig):
    """``(target, proposal, estimator, initial theta, schedule)`` for a chain config."""
    if cfg.experiment == "toy":
        target = ToyTarget()
        estimator = toy_estimator(cfg) if cfg.kernel != "marginal" else None
        schedule = Schedule(cfg.kernel, refresh_moves=cfg.refresh_moves)
        return target, ToyFlipProposal(), estimator, ParameterPoint(cfg.initial_model), schedule
    if cfg.experiment == "glm":
        if cfg.kernel == "marginal":
            raise ContractViolation("the logit posterior has no closed-form marginal")
        target = glm_target(cfg)
        schedule = Schedule(cfg.kernel, cfg.refresh_moves, cfg.within_moves, cfg.within_scale)
        return target, BirthDeathProposal(target.k), glm_estimator(target, cfg), ParameterPoint(cfg.initial_model), schedule
    raise ContractViolation(f"experiment {cfg.experiment!r} does not run a chain")


def run_trace(cfg: ExperimentConfig, replica: int = 0) -> ChainTrace:
    target, proposal, estimator, theta0, schedule = build_chain(cfg)
    rng = make_rng(cfg.seed, replica)
    return run_chain(target, proposal, estimator, theta0, cfg.sweeps, rng, schedule,
                     seed=cfg.seed, fingerprint=cfg.fingerprint())


def summarize(trace: ChainTrace, burn_in: int = 0) -> Dict:
    """Every statistic that can be recomputed from the persisted trace alone."""
    h = holding_time_stats(trace)
    return {
        "sweeps": len(trace),
        "model_probabilities": {str(k): v for k, v in model_probabilities(trace).items()},
        "model_probabilities_after_burn_in": {str(k): v for k, v in model_probabilities(trace, burn_in).items()},
        "acceptance_rate": acceptance_rate(trace),
        "acceptance_rate_after_burn_in": acceptance_rate(trace, burn_in),
        "burn_in": burn_in,
        "holding_time": {"max": h.max, "mean": h.mean, "q999": h.q999},
    }


def _replica_dir(cfg: ExperimentConfig, replica: int) -> Path:
    base = Path(cfg.out_dir)
    return base if cfg.replicas == 1 else base / f"replica_{replica}"


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> Dict:
    """Run one config (all replicas); returns the summary of replica 0 plus per-replica summaries."""
    if cfg.experiment == "weight-diagnostic":
        return run_weight_diagnostic(cfg, write)
    out = []
    for r in range(cfg.replicas):
        t0 = time.perf_counter()
        trace = run_trace(cfg, r)
        wall = time.perf_counter() - t0
        summary = summarize(trace, cfg.burn_in)
        summary.update(
            block_draw_count=trace.block_draw_count,
            wall_clock_seconds=wall,
            fingerprint=cfg.fingerprint(),
            replica=r,
            rng=RNG_NAME,
            backend=_accel.backend(),
            config=cfg.to_dict(),
        )
        if write:
            d = _replica_dir(cfg, r)
            write_trace(trace, d / "trace.csv")
            write_json(summary, d / "summary.json")
        out.append(summary)
    result = dict(out[0])
    if cfg.replicas > 1:
        result["replicas"] = out
    return result


def run_weight_diagnostic(cfg: ExperimentConfig, write: bool = True) -> Dict:
    target = ToyTarget()
    theta = ParameterPoint(cfg.model)
    rows = []
    for i, n in enumerate(cfg.n_values):
        est = toy_estimator(cfg, n)
        rep = weight_tail_report(target, est, theta, cfg.epsilon, cfg.n_samples, make_rng(cfg.seed, i))
        rows.append({"n": n, "epsilon": rep.epsilon, "estimate": rep.estimate, "std_error": rep.std_error,
                     "max_log_gamma": rep.max_log_gamma, "n_samples": rep.n_samples})
    summary = {"experiment": cfg.experiment, "model": cfg.model, "reports": rows,
               "fingerprint": cfg.fingerprint(), "rng": RNG_NAME, "config": cfg.to_dict()}
    if write:
        write_json(summary, Path(cfg.out_dir) / "summary.json")
    return summary


def _run_row(cfg: ExperimentConfig) -> Dict:
    return run_experiment(cfg)


def run_comparison_suite(configs: Sequence[ExperimentConfig], workers: int = 1, out_dir=None) -> Dict:
    """Run every config and tabulate acceptance, model tables and pairwise TV."""
    configs = list(configs)
    if not configs:
        raise ContractViolation("empty grid")
    if len({c.experiment for c in configs}) != 1:
        raise ContractViolation("all grid rows must share the experiment")
    if configs[0].experiment == "weight-diagnostic":
        raise ContractViolation("grids compare chain experiments")
    if configs[0].experiment == "glm":
        data_keys = {(c.dataset_path, c.dataset_seed, c.m, c.k, c.z_star) for c in configs}
        if len(data_keys) != 1:
            raise ContractViolation("all glm grid rows must share the dataset")
    configs = sorted(configs, key=ExperimentConfig.sort_key)
    base = Path(out_dir if out_dir is not None else configs[0].out_dir)
    configs = [replace(c, out_dir=str(base / f"row_{i:02d}")) for i, c in enumerate(configs)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            summaries = list(pool.map(_run_row, configs))
    else:
        summaries = [_run_row(c) for c in configs]
    rows = []
    for i, (c, s) in enumerate(zip(configs, summaries)):
        rows.append({"row": i, "kernel": c.kernel, "n": c.n, "sweeps": c.sweeps, "seed": c.seed,
                     "acceptance_rate": s["acceptance_rate"], "block_draw_count": s["block_draw_count"],
                     "model_probabilities": s["model_probabilities"]})
    tables = [{int(k): v for k, v in r["model_probabilities"].items()} for r in rows]
    tv = [[0.0] * len(rows) for _ in rows]
    for i, j in itertools.combinations(range(len(rows)), 2):
        tv[i][j] = tv[j][i] = tv_distance_discrete(tables[i], tables[j])
    table = {"experiment": configs[0].experiment, "rows": rows, "pairwise_tv": tv}
    write_json(table, base / "comparison.json")
    return table
