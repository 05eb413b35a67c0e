"""Chain states, per-step outcomes and the columnar chain trace."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .core import AuxBlock, ContractViolation, ParameterPoint


@dataclass(frozen=True)
class PmState:
    """``(theta, Z)`` with the block's cached log weight.

    ``block`` is ``None`` for the marginal chain, which carries the exact
    ``log_target_theta`` instead.
    """

    theta: ParameterPoint
    block: Optional[AuxBlock] = None
    log_target_theta: Optional[float] = None

    @property
    def log_gamma(self) -> float:
        if self.block is not None:
            return self.block.log_gamma
        return math.nan if self.log_target_theta is None else self.log_target_theta


@dataclass(frozen=True)
class StepOutcome:
    state: PmState
    accepted: bool
    log_ratio: float
    proposal_theta: Optional[ParameterPoint]
    blocks_drawn: int = 0

    def __post_init__(self):
        if self.accepted and self.proposal_theta is not None and self.state.theta != self.proposal_theta:
            raise ContractViolation("accepted outcome must sit at the proposed theta")


NO_PROPOSAL = -1


@dataclass(eq=False)
class ChainTrace:
    """One row per sweep, stored column-wise.

    ``accepted`` and ``log_ratio`` describe the sweep's theta move; the
    state columns are taken after every move of the sweep.
    ``coords`` is padded with NaN up to the largest theta dimension seen.
    """

    model_ids: np.ndarray
    coords: np.ndarray
    accepted: np.ndarray
    log_ratio: np.ndarray
    log_gamma: np.ndarray
    proposal_ids: np.ndarray
    block_draw_count: int = 0
    seed: Optional[int] = None
    fingerprint: str = ""
    final_state: Optional[PmState] = field(default=None, repr=False)

    def __post_init__(self):
        n = len(self.model_ids)
        for name in ("coords", "accepted", "log_ratio", "log_gamma", "proposal_ids"):
            if len(getattr(self, name)) != n:
                raise ContractViolation(f"column {name} has length {len(getattr(self, name))}, expected {n}")

    def __len__(self) -> int:
        return len(self.model_ids)

    @property
    def n_sweeps(self) -> int:
        return len(self)

    def outcome(self, i: int) -> StepOutcome:
        """Rebuild the i-th sweep as a :class:`StepOutcome` (the block is not stored)."""
        c = self.coords[i]
        theta = ParameterPoint(int(self.model_ids[i]), tuple(c[~np.isnan(c)]))
        pid = int(self.proposal_ids[i])
        prop = None if pid == NO_PROPOSAL else (theta if self.accepted[i] else ParameterPoint(pid))
        return StepOutcome(
            PmState(theta, None, float(self.log_gamma[i])),
            bool(self.accepted[i]),
            float(self.log_ratio[i]),
            prop,
        )

    @property
    def outcomes(self):
        return [self.outcome(i) for i in range(len(self))]


class TraceBuilder:
    """Preallocated column buffers filled one sweep at a time."""

    def __init__(self, n_sweeps: int, coord_dim: int = 0):
        self.model_ids = np.empty(n_sweeps, dtype=np.int64)
        self.coords = np.full((n_sweeps, coord_dim), np.nan)
        self.accepted = np.empty(n_sweeps, dtype=bool)
        self.log_ratio = np.empty(n_sweeps)
        self.log_gamma = np.empty(n_sweeps)
        self.proposal_ids = np.empty(n_sweeps, dtype=np.int64)
        self.blocks = 0
        self._i = 0

    def record(self, state: PmState, move: StepOutcome, extra_blocks: int = 0):
        i = self._i
        self.model_ids[i] = state.theta.model_id
        c = state.theta.coords
        if len(c) > self.coords.shape[1]:
            pad = np.full((self.coords.shape[0], len(c) - self.coords.shape[1]), np.nan)
            self.coords = np.hstack([self.coords, pad])
        if c:
            self.coords[i, : len(c)] = c
        self.accepted[i] = move.accepted
        self.log_ratio[i] = move.log_ratio
        self.log_gamma[i] = state.log_gamma
        self.proposal_ids[i] = NO_PROPOSAL if move.proposal_theta is None else move.proposal_theta.model_id
        self.blocks += move.blocks_drawn + extra_blocks
        self._i += 1

    def build(self, seed=None, fingerprint="", final_state=None) -> ChainTrace:
        k = self._i
        return ChainTrace(
            self.model_ids[:k],
            self.coords[:k],
            self.accepted[:k],
            self.log_ratio[:k],
            self.log_gamma[:k],
            self.proposal_ids[:k],
            self.blocks,
            seed,
            fingerprint,
            final_state,
        )
