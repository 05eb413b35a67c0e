"""Two-model transdimensional toy target.

Model 1 carries a scalar standard normal with mass 1/4; model 2 carries a
bivariate normal with correlation -0.9 and mass 3/4. The model masses are
known exactly, which makes this the reference target for every exactness
and bias check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ..core import ContractViolation, ParameterPoint, check_model_dims
from ..densities import GaussianDensity

MODEL_WEIGHTS = {1: 0.25, 2: 0.75}
MODEL2_COV = np.array([[1.0, -0.9], [-0.9, 1.0]])
INIT_MEAN = (3.0, 3.0)


class ToyTarget:
    models: Tuple[int, ...] = (1, 2)

    def __init__(self):
        self._dens = {
            1: GaussianDensity.normal(np.eye(1), scale=MODEL_WEIGHTS[1]),
            2: GaussianDensity.normal(MODEL2_COV, scale=MODEL_WEIGHTS[2]),
        }

    def _check(self, theta):
        if theta.model_id not in self._dens:
            raise ContractViolation(f"toy target has models 1 and 2, got {theta.model_id}")

    def aux_dim(self, model_id: int) -> int:
        return {1: 1, 2: 2}[model_id]

    def supports(self, theta: ParameterPoint) -> bool:
        return theta.model_id in self._dens

    def log_marginal(self, theta: ParameterPoint) -> float:
        self._check(theta)
        return math.log(MODEL_WEIGHTS[theta.model_id])

    def density(self, theta: ParameterPoint) -> GaussianDensity:
        self._check(theta)
        return self._dens[theta.model_id]

    def log_joint(self, theta: ParameterPoint, z):
        self._check(theta)
        check_model_dims(self, theta, z)
        return self._dens[theta.model_id].log_density(z)

    def grad_log_conditional(self, theta: ParameterPoint, z):
        """Gradient in ``z`` of ``log pi(theta, z)`` (the conditional up to a constant)."""
        self._check(theta)
        check_model_dims(self, theta, z)
        return self._dens[theta.model_id].grad(z)


def toy_log_joint(theta: ParameterPoint, z) -> float:
    return ToyTarget().log_joint(theta, z)


def toy_grad_log_conditional(theta: ParameterPoint, z):
    return ToyTarget().grad_log_conditional(theta, z)


@dataclass(frozen=True)
class ToyFlipProposal:
    """Always propose the other model."""

    def propose(self, theta, rng) -> Tuple[Optional[ParameterPoint], float]:
        return ParameterPoint(3 - theta.model_id), 0.0

    def log_density(self, theta, theta_star) -> float:
        return 0.0 if theta_star.model_id == 3 - theta.model_id else -math.inf
