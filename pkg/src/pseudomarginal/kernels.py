"""Marginal, exact pseudo-marginal (GIMH) and noisy (MCWM) transition kernels.

Every kernel funnels its decision through :func:`accept`, which consumes
exactly one uniform from ``rng`` per call. Auxiliary blocks are drawn from
``aux_rng`` when one is given (default: ``rng``), which lets two kernels be
driven by identical theta-level streams.

For pseudo-marginal kernels the cached ``log_gamma`` already contains every
factor of the target that depends on theta, so the log acceptance ratio is
``log_gamma(theta*) - log_gamma(theta) + log q(theta*, theta) - log q(theta, theta*)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .core import AuxBlock, ContractViolation, EstimatorError, InitializationError, ParameterPoint, require_marginal
from .randomwalk import rw_scans
from .trace import ChainTrace, PmState, StepOutcome, TraceBuilder

KERNELS = ("marginal", "gimh", "mcwm")


def accept(log_ratio: float, rng) -> bool:
    """Metropolis decision ``U < exp(log_ratio)``; one uniform per call."""
    u = rng.random()
    if math.isnan(log_ratio):
        raise ContractViolation("log acceptance ratio is NaN")
    return (math.log(u) if u > 0 else -math.inf) < log_ratio


def _supported(target, theta) -> bool:
    return theta is not None and target.supports(theta)


def _reject_null(state, proposal_theta, rng, blocks=0) -> StepOutcome:
    accept(-math.inf, rng)
    return StepOutcome(state, False, -math.inf, proposal_theta, blocks)


def marginal_step(theta: ParameterPoint, target, proposal, rng) -> StepOutcome:
    """Metropolis-Hastings on theta with the exact marginal ``pi(theta)``.

    A proposal with ``pi(theta*) = 0`` is rejected; from a state with
    ``pi(theta) = 0`` any positive-mass proposal is accepted.
    """
    require_marginal(target)
    lp = target.log_marginal(theta) if target.supports(theta) else -math.inf
    here = PmState(theta, None, lp)
    prop, corr = proposal.propose(theta, rng)
    if not _supported(target, prop):
        return _reject_null(here, prop, rng)
    lp_star = target.log_marginal(prop)
    if lp_star == -math.inf:
        lr = -math.inf
    elif lp == -math.inf:
        lr = math.inf
    else:
        lr = lp_star - lp + corr
    if accept(lr, rng):
        return StepOutcome(PmState(prop, None, lp_star), True, lr, prop)
    return StepOutcome(here, False, lr, prop)


def gimh_step(state: PmState, target, proposal, estimator, rng, aux_rng=None) -> StepOutcome:
    """Exact pseudo-marginal move; the current block is recycled on rejection."""
    lg = state.block.log_gamma if state.block is not None else math.nan
    if not lg > -math.inf:
        raise ContractViolation("GIMH state must carry a block with log_gamma > -inf")
    prop, corr = proposal.propose(state.theta, rng)
    if not _supported(target, prop):
        return _reject_null(state, prop, rng)
    block = estimator.draw(prop, rng if aux_rng is None else aux_rng)
    lr = -math.inf if block.log_gamma == -math.inf else block.log_gamma - lg + corr
    if accept(lr, rng):
        return StepOutcome(PmState(prop, block), True, lr, prop, 1)
    return StepOutcome(state, False, lr, prop, 1)


def mcwm_step(theta: ParameterPoint, target, proposal, estimator, rng, aux_rng=None) -> StepOutcome:
    """Noisy move: fresh blocks for both theta and theta* every iteration.

    The returned state carries the fresh block of whichever side the chain
    ends on; the next step ignores it.
    """
    prop, corr = proposal.propose(theta, rng)
    if not _supported(target, prop):
        return _reject_null(PmState(theta), prop, rng)
    arng = rng if aux_rng is None else aux_rng
    here = estimator.draw(theta, arng)
    there = estimator.draw(prop, arng)
    lg, lg_star = here.log_gamma, there.log_gamma
    if lg_star == -math.inf:
        lr = -math.inf
    elif lg == -math.inf:
        lr = math.inf
    else:
        lr = lg_star - lg + corr
    if accept(lr, rng):
        return StepOutcome(PmState(prop, there), True, lr, prop, 2)
    return StepOutcome(PmState(theta, here), False, lr, prop, 2)


def refresh_aux(state: PmState, estimator, rng, aux_rng=None) -> StepOutcome:
    """Independence MH on ``Z`` given theta, accepted with ``1 ^ gamma(Z') / gamma(Z)``."""
    lg = state.block.log_gamma if state.block is not None else math.nan
    if not lg > -math.inf:
        raise ContractViolation("refresh needs a block with log_gamma > -inf")
    block = estimator.draw(state.theta, rng if aux_rng is None else aux_rng)
    lr = -math.inf if block.log_gamma == -math.inf else block.log_gamma - lg
    if accept(lr, rng):
        return StepOutcome(PmState(state.theta, block), True, lr, state.theta, 1)
    return StepOutcome(state, False, lr, state.theta, 1)


def rw_within_step(state: PmState, target, estimator, scale: float, rng, n_scans: int = 1) -> PmState:
    """Systematic scans of single-coordinate random-walk MH moves on ``Z``.

    Targets the conditional of the extended law given theta, proportional to
    ``Q(Z) gamma(Z)``. For ``N = 1`` that is ``pi(theta, z)`` itself and the
    scans run on the target density directly.
    """
    theta, block = state.theta, state.block
    if block.n == 1 and hasattr(target, "density"):
        z, _ = rw_scans(target.density(theta), block.draws[0], scale, n_scans, rng)
        new = AuxBlock(z[None, :])
        return PmState(theta, new.with_log_gamma(estimator.log_gamma(theta, new)))
    draws = np.array(block.draws)
    cur = estimator.log_block_density(theta, block) + block.log_gamma
    for _ in range(n_scans):
        for k in range(draws.shape[0]):
            for j in range(draws.shape[1]):
                old = draws[k, j]
                draws[k, j] = old + scale * rng.standard_normal()
                cand = AuxBlock(draws)
                try:
                    lg = estimator.log_gamma(theta, cand)
                    new = estimator.log_block_density(theta, cand) + lg
                except EstimatorError:
                    new = -math.inf
                if accept(new - cur if new > -math.inf else -math.inf, rng):
                    block, cur = cand.with_log_gamma(lg), new
                else:
                    draws[k, j] = old
    return PmState(theta, block)


def gimh_log_ratio_extended(state: PmState, theta_star, block_star: AuxBlock, proposal, estimator) -> float:
    """GIMH log ratio assembled from the extended target and extended proposal.

    ``log pi~(theta*, Z*) - log pi~(theta, Z)`` plus the joint proposal terms,
    with ``log pi~(theta, Z) = log Q_theta(Z) + log_gamma(theta, Z)``. Equal to
    the weight-ratio form used by :func:`gimh_step`.
    """
    theta, block = state.theta, state.block
    log_q_block = estimator.log_block_density(theta, block)
    log_q_block_star = estimator.log_block_density(theta_star, block_star)
    num = log_q_block_star + block_star.log_gamma + proposal.log_density(theta_star, theta) + log_q_block
    den = log_q_block + block.log_gamma + proposal.log_density(theta, theta_star) + log_q_block_star
    return num - den


def init_state(target, theta0: ParameterPoint, estimator, rng, max_retries: int = 1000, aux_rng=None) -> PmState:
    """Draw blocks at ``theta0`` until one has positive weight."""
    if not target.supports(theta0):
        raise InitializationError(f"initial model {theta0.model_id} is outside the target's support")
    arng = rng if aux_rng is None else aux_rng
    for _ in range(max_retries):
        block = estimator.draw(theta0, arng)
        if block.log_gamma > -math.inf:
            return PmState(theta0, block)
    raise InitializationError(f"no positive-weight block at model {theta0.model_id} after {max_retries} draws")


@dataclass(frozen=True)
class Schedule:
    """What one sweep does: a theta move, then optional refreshes and within-model scans."""

    kernel: str = "gimh"
    refresh_moves: int = 0
    within_moves: int = 0
    within_scale: float = 0.5

    def __post_init__(self):
        if self.kernel not in KERNELS:
            raise ContractViolation(f"kernel must be one of {KERNELS}, got {self.kernel!r}")
        if self.refresh_moves < 0 or self.within_moves < 0:
            raise ContractViolation("move counts must be >= 0")
        if self.kernel != "gimh" and (self.refresh_moves or self.within_moves):
            raise ContractViolation("refresh and within-model moves need the gimh kernel")
        if not self.within_scale > 0:
            raise ContractViolation("within_scale must be > 0")


def run_chain(target, proposal, estimator, initial: Union[ParameterPoint, PmState], n_sweeps: int, rng,
              schedule: Schedule = Schedule(), aux_rng=None, max_init_retries: int = 1000,
              seed=None, fingerprint: str = "") -> ChainTrace:
    """Run ``n_sweeps`` sweeps and return the trace.

    For GIMH a bare ``ParameterPoint`` start is turned into a state with
    :func:`init_state`; the initial block counts towards the block tally.
    """
    if n_sweeps < 1:
        raise ContractViolation("n_sweeps must be >= 1")
    kernel = schedule.kernel
    theta = initial.theta if isinstance(initial, PmState) else initial
    builder = TraceBuilder(n_sweeps, theta.dim)
    init_blocks = 0
    if kernel == "gimh":
        if isinstance(initial, PmState) and initial.block is not None:
            state = initial
        else:
            state = init_state(target, theta, estimator, rng, max_init_retries, aux_rng)
            init_blocks = 1
    for _ in range(n_sweeps):
        extra = init_blocks
        init_blocks = 0
        if kernel == "marginal":
            move = marginal_step(theta, target, proposal, rng)
            theta, state = move.state.theta, move.state
        elif kernel == "mcwm":
            move = mcwm_step(theta, target, proposal, estimator, rng, aux_rng)
            theta, state = move.state.theta, move.state
        else:
            move = gimh_step(state, target, proposal, estimator, rng, aux_rng)
            state = move.state
            for _ in range(schedule.refresh_moves):
                state = refresh_aux(state, estimator, rng, aux_rng).state
                extra += 1
            if schedule.within_moves:
                state = rw_within_step(state, target, estimator, schedule.within_scale, rng, schedule.within_moves)
        builder.record(state, move, extra)
    return builder.build(seed, fingerprint, state)
