"""Finite targets whose every transition probability can be enumerated."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from ..core import ContractViolation, ParameterPoint


class DiscreteTarget:
    """``pi(theta, z)`` given as a table over finite theta and z sets.

    ``table[t, a]`` is the (possibly unnormalised) mass of parameter ``t``
    with auxiliary value ``a``. Auxiliary draws are stored as 1-d points
    holding the value index, so blocks look like any other ``(N, 1)`` block.
    """

    def __init__(self, table):
        table = np.asarray(table, dtype=float)
        if table.ndim != 2 or np.any(table < 0):
            raise ContractViolation("table must be a non-negative 2-d array")
        self.table = table
        self.models = tuple(range(table.shape[0]))
        self.n_aux = table.shape[1]

    def aux_dim(self, model_id: int) -> int:
        return 1

    def supports(self, theta: ParameterPoint) -> bool:
        return theta.model_id in self.models and self.table[theta.model_id].sum() > 0

    def log_marginal(self, theta: ParameterPoint) -> float:
        s = self.table[theta.model_id].sum()
        return math.log(s) if s > 0 else -math.inf

    def marginal(self) -> np.ndarray:
        m = self.table.sum(axis=1)
        return m / m.sum()

    def log_joint(self, theta: ParameterPoint, z):
        idx = np.asarray(z, dtype=float)
        single = idx.ndim == 1
        idx = np.atleast_2d(idx)[:, 0].astype(int)
        with np.errstate(divide="ignore"):
            out = np.log(self.table[theta.model_id, idx])
        return float(out[0]) if single else out


@dataclass(frozen=True, eq=False)
class DiscreteAuxProposal:
    """I.i.d. auxiliary proposal ``q_theta(a)`` from a row-stochastic table."""

    table: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.table, dtype=float)
        if not np.allclose(t.sum(axis=1), 1.0, atol=1e-12):
            raise ContractViolation("rows of the auxiliary proposal table must sum to 1")
        object.__setattr__(self, "table", t)

    def sample(self, theta, rng, size=None):
        p = self.table[theta.model_id]
        if size is None:
            return np.array([float(rng.choice(p.size, p=p))])
        return rng.choice(p.size, size=size, p=p).astype(float)[:, None]

    def log_density(self, theta, z):
        idx = np.asarray(z, dtype=float)
        single = idx.ndim == 1
        idx = np.atleast_2d(idx)[:, 0].astype(int)
        with np.errstate(divide="ignore"):
            out = np.log(self.table[theta.model_id, idx])
        return float(out[0]) if single else out


@dataclass(frozen=True, eq=False)
class MatrixProposal:
    """Theta proposal given by a row-stochastic matrix over model ids."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or not np.allclose(m.sum(axis=1), 1.0, atol=1e-12):
            raise ContractViolation("proposal matrix must be square and row-stochastic")
        object.__setattr__(self, "matrix", m)

    def propose(self, theta, rng) -> Tuple[Optional[ParameterPoint], float]:
        row = self.matrix[theta.model_id]
        j = int(rng.choice(row.size, p=row))
        return ParameterPoint(j), self.log_density(ParameterPoint(j), theta) - self.log_density(theta, ParameterPoint(j))

    def log_density(self, theta, theta_star) -> float:
        v = self.matrix[theta.model_id, theta_star.model_id]
        return math.log(v) if v > 0 else -math.inf


def enumerable_instance(pi_table: Optional[Sequence[Sequence[float]]] = None,
                        q_table: Optional[Sequence[Sequence[float]]] = None):
    """The two-parameter, two-value instance used by the exactness checks.

    Defaults: ``pi(theta, z)`` over ``theta in {0, 1}``, ``z in {a, b}`` with
    ``pi(0, .) = (1/10, 2/10)``, ``pi(1, .) = (6/10, 1/10)`` so that
    ``pi(theta) = (3/10, 7/10)``, and auxiliary proposals
    ``q_0 = (1/2, 1/2)``, ``q_1 = (1/4, 3/4)``.
    """
    pi = DiscreteTarget(pi_table if pi_table is not None else [[0.1, 0.2], [0.6, 0.1]])
    q = DiscreteAuxProposal(q_table if q_table is not None else [[0.5, 0.5], [0.25, 0.75]])
    flip = MatrixProposal(np.array([[0.0, 1.0], [1.0, 0.0]]))
    return pi, q, flip
