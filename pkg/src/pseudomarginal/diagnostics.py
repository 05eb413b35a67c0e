"""Trace statistics and importance-weight tail diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Mapping, Optional

import numpy as np

from .core import ContractViolation, ParameterPoint, require_marginal
from .trace import ChainTrace


def _nonempty(trace: ChainTrace):
    if len(trace) == 0:
        raise ContractViolation("trace is empty")


def running_model_probability(trace: ChainTrace, model_id: int) -> np.ndarray:
    """Fraction of the first k states at ``model_id``, for every k."""
    _nonempty(trace)
    hits = (trace.model_ids == model_id).astype(float)
    return np.cumsum(hits) / np.arange(1, hits.size + 1)


def model_probabilities(trace: ChainTrace, burn_in: int = 0) -> Dict[int, float]:
    """Occupation frequencies of each visited model after ``burn_in`` sweeps."""
    _nonempty(trace)
    ids = trace.model_ids[burn_in:]
    if ids.size == 0:
        raise ContractViolation("burn_in leaves no sweeps")
    values, counts = np.unique(ids, return_counts=True)
    return {int(v): float(c) / ids.size for v, c in zip(values, counts)}


def acceptance_rate(trace: ChainTrace, burn_in: int = 0) -> float:
    _nonempty(trace)
    acc = trace.accepted[burn_in:]
    if acc.size == 0:
        raise ContractViolation("burn_in leaves no sweeps")
    return float(np.mean(acc))


def tv_distance_discrete(empirical: Mapping[int, float], reference: Mapping[int, float]) -> float:
    """Half the L1 distance; keys missing from either side count as 0."""
    if abs(sum(reference.values()) - 1.0) > 1e-9:
        raise ContractViolation(f"reference sums to {sum(reference.values())!r}, not 1")
    keys = set(empirical) | set(reference)
    return 0.5 * sum(abs(empirical.get(m, 0.0) - reference.get(m, 0.0)) for m in keys)


def _run_lengths(rejected: np.ndarray) -> np.ndarray:
    r = np.concatenate([[0], rejected.astype(np.int8), [0]])
    d = np.diff(r)
    return np.flatnonzero(d == -1) - np.flatnonzero(d == 1)


@dataclass(frozen=True)
class HoldingTimeStats:
    max: int
    mean: float
    q999: int


def holding_time_stats(trace_or_flags) -> HoldingTimeStats:
    """Statistics of maximal runs of consecutive rejections.

    The mean and the 0.999 quantile (nearest rank) are over the rejection
    runs; a chain that never rejects reports zeros.
    """
    acc = trace_or_flags.accepted if isinstance(trace_or_flags, ChainTrace) else np.asarray(trace_or_flags, dtype=bool)
    if acc.size == 0:
        raise ContractViolation("trace is empty")
    runs = _run_lengths(~acc)
    if runs.size == 0:
        return HoldingTimeStats(0, 0.0, 0)
    srt = np.sort(runs)
    rank = max(1, math.ceil(0.999 * srt.size))
    return HoldingTimeStats(int(srt[-1]), float(runs.mean()), int(srt[rank - 1]))


@dataclass(frozen=True)
class WeightTailReport:
    epsilon: float
    n: int
    estimate: float
    std_error: float
    max_log_gamma: float
    n_samples: int


def weight_tail_report(target, estimator, theta: ParameterPoint, epsilon: float, n_samples: int, rng,
                       n: Optional[int] = None) -> WeightTailReport:
    """Empirical ``P(lambda > epsilon)`` with ``lambda = |log_gamma - log pi(theta)|``."""
    require_marginal(target)
    if not epsilon > 0:
        raise ContractViolation("epsilon must be > 0")
    if n_samples < 100:
        raise ContractViolation("n_samples must be >= 100")
    if n is not None and n != estimator.n:
        raise ContractViolation(f"estimator has n={estimator.n}, requested n={n}")
    log_pi = target.log_marginal(theta)
    lg = np.array([estimator.draw(theta, rng).log_gamma for _ in range(n_samples)])
    lam = np.abs(lg - log_pi)
    hits = lam > epsilon
    p = float(hits.mean())
    return WeightTailReport(float(epsilon), int(estimator.n), p, math.sqrt(p * (1 - p) / n_samples), float(lg.max()), n_samples)


def weight_mean_ratio(target, estimator, theta: ParameterPoint, n_samples: int, rng):
    """Mean of ``exp(log_gamma - log pi(theta))`` over fresh blocks, with its standard error."""
    require_marginal(target)
    log_pi = target.log_marginal(theta)
    w = np.exp(np.array([estimator.draw(theta, rng).log_gamma for _ in range(n_samples)]) - log_pi)
    return float(w.mean()), float(w.std(ddof=1) / math.sqrt(n_samples))
