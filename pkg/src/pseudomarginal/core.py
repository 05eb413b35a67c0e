"""Domain types shared by estimators, kernels and targets.

All densities are carried on the log scale. A zero importance weight is a
``log_gamma`` of ``-inf``; arithmetic that would produce ``(-inf) - (-inf)``
raises instead of returning NaN.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Protocol, Tuple, runtime_checkable

import numpy as np

WEIGHT_SUM_ATOL = 1e-12


class ContractViolation(ValueError):
    """A precondition of an operation was broken by the caller."""


class EstimatorError(RuntimeError):
    """An importance-weight computation could not be carried out."""


class AbsoluteContinuityError(EstimatorError):
    """A supplied auxiliary draw has zero proposal density."""


class InitializationError(RuntimeError):
    """A chain could not be started from a positive-weight state."""


class CapabilityError(TypeError):
    """The target does not provide a capability the operation needs."""


@dataclass(frozen=True)
class ParameterPoint:
    """A point of a (possibly transdimensional) parameter space.

    ``model_id`` is always present, even for single-model targets where it is
    fixed to 0. ``coords`` holds the within-model coordinates and is empty
    for purely discrete parameters.
    """

    model_id: int
    coords: Tuple[float, ...] = ()

    def __post_init__(self):
        if int(self.model_id) != self.model_id or self.model_id < 0:
            raise ContractViolation(f"model_id must be a non-negative integer, got {self.model_id!r}")
        object.__setattr__(self, "model_id", int(self.model_id))
        object.__setattr__(self, "coords", tuple(float(c) for c in self.coords))

    @property
    def dim(self) -> int:
        return len(self.coords)


@dataclass(frozen=True, eq=False)
class AuxBlock:
    """The auxiliary draws ``z(1..N)`` together with their cached log weight.

    ``draws`` is a read-only ``(N, d)`` array. ``log_gamma`` is the log of the
    weighted sum of ``pi(theta, z(k)) / Q(z(k) | ...)`` computed from the
    target's (possibly unnormalised) joint density, so for a normalised
    reference target ``log_gamma - log_marginal(theta)`` is the log of the
    mean-one importance weight. NaN means "not yet weighted".
    """

    draws: np.ndarray
    log_gamma: float = math.nan

    def __post_init__(self):
        draws = np.array(self.draws, dtype=float, copy=True)
        if draws.ndim == 1:
            draws = draws[:, None]
        if draws.ndim != 2 or draws.shape[0] < 1:
            raise ContractViolation(f"draws must be a non-empty (N, d) array, got shape {draws.shape}")
        draws.setflags(write=False)
        object.__setattr__(self, "draws", draws)
        object.__setattr__(self, "log_gamma", float(self.log_gamma))

    @property
    def n(self) -> int:
        return self.draws.shape[0]

    @property
    def dim(self) -> int:
        return self.draws.shape[1]

    @property
    def is_weighted(self) -> bool:
        return not math.isnan(self.log_gamma)

    def with_log_gamma(self, log_gamma: float) -> "AuxBlock":
        return AuxBlock(self.draws, log_gamma)

    def __repr__(self):
        return f"AuxBlock(n={self.n}, dim={self.dim}, log_gamma={self.log_gamma!r})"


class Conditioning(enum.Enum):
    """How the k-th draw is conditioned on the others in the block proposal."""

    IID = "iid"
    MARKOV = "markov"
    CUSTOM = "custom"


@dataclass(frozen=True)
class WeightScheme:
    """Mixture weights ``w_1..w_N`` plus the conditioning structure.

    For ``CUSTOM`` conditioning ``parents[k]`` lists the indices of the draws
    that the k-th draw is conditioned on; the matching conditional density is
    target specific and must be supplied by the caller's estimator.
    """

    weights: Tuple[float, ...]
    conditioning: Conditioning = Conditioning.IID
    parents: Optional[Tuple[Tuple[int, ...], ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if self.parents is not None:
            object.__setattr__(self, "parents", tuple(tuple(int(i) for i in p) for p in self.parents))

    @property
    def n(self) -> int:
        return len(self.weights)

    @classmethod
    def uniform(cls, n: int, conditioning: Conditioning = Conditioning.IID) -> "WeightScheme":
        if n < 1:
            raise ContractViolation(f"n must be >= 1, got {n}")
        return cls((1.0 / n,) * n, conditioning)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=float)


@dataclass(frozen=True)
class ValidationReport:
    violations: Tuple[str, ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok


def validate_weight_scheme(scheme: WeightScheme) -> ValidationReport:
    """Check the weight-scheme preconditions; never raises."""
    problems = []
    w = np.asarray(scheme.weights, dtype=float)
    if w.size < 1:
        problems.append("n must be >= 1")
    if not np.all(np.isfinite(w)):
        problems.append("weights must be finite")
    if np.any(w < 0):
        problems.append(f"negative weights at indices {np.flatnonzero(w < 0).tolist()}")
    total = float(w.sum()) if w.size else 0.0
    if abs(total - 1.0) > WEIGHT_SUM_ATOL:
        problems.append(f"weights sum to {total:.12g}")
    if scheme.conditioning is Conditioning.CUSTOM:
        if scheme.parents is None or len(scheme.parents) != w.size:
            problems.append("CUSTOM conditioning needs one parent-index tuple per draw")
        else:
            for k, par in enumerate(scheme.parents):
                bad = [i for i in par if i == k or not 0 <= i < w.size]
                if bad:
                    problems.append(f"draw {k} has invalid parent indices {bad}")
    elif scheme.parents is not None:
        problems.append(f"parents given for {scheme.conditioning.value} conditioning")
    return ValidationReport(tuple(problems))


def log_sum_exp_weighted(log_terms, weights) -> float:
    """Stable ``log(sum_k w_k exp(log_terms_k))`` with ``-inf`` terms allowed."""
    a = np.asarray(log_terms, dtype=float).ravel()
    w = np.asarray(weights, dtype=float).ravel()
    if a.shape != w.shape:
        raise ContractViolation(f"length mismatch: {a.size} terms vs {w.size} weights")
    if a.size == 0:
        return -math.inf
    if not w.min() >= 0:
        raise ContractViolation("weights must be non-negative")
    if not a.max() < math.inf:
        raise ContractViolation("log terms must be finite or -inf")
    live = np.where(w > 0, a, -np.inf)
    shift = live.max()
    if shift == -math.inf:
        return -math.inf
    return float(shift + math.log(np.dot(w, np.exp(live - shift))))


def ext_sub(a: float, b: float) -> float:
    """Extended-real subtraction; ``(-inf) - (-inf)`` is a contract violation."""
    if a == -math.inf and b == -math.inf:
        raise ContractViolation("(-inf) - (-inf) is undefined")
    if math.isnan(a) or math.isnan(b):
        raise ContractViolation("NaN in extended-real arithmetic")
    return a - b


@runtime_checkable
class TargetModel(Protocol):
    """Unnormalised joint density ``pi(theta, z)`` over a model-indexed space."""

    def log_joint(self, theta: ParameterPoint, z: np.ndarray) -> float: ...

    def aux_dim(self, model_id: int) -> int: ...

    def supports(self, theta: ParameterPoint) -> bool: ...


@runtime_checkable
class ThetaProposal(Protocol):
    """Proposal ``Q(theta, .)`` on the parameter space.

    ``propose`` returns ``(theta_star, log q(theta_star, theta) - log q(theta,
    theta_star))``; a ``None`` proposal is a null move that kernels reject.
    """

    def propose(self, theta: ParameterPoint, rng: np.random.Generator) -> Tuple[Optional[ParameterPoint], float]: ...

    def log_density(self, theta: ParameterPoint, theta_star: ParameterPoint) -> float: ...


def has_marginal(target) -> bool:
    return callable(getattr(target, "log_marginal", None))


def require_marginal(target):
    if not has_marginal(target):
        raise CapabilityError(f"{type(target).__name__} does not expose log_marginal")


def check_model_dims(target, theta: ParameterPoint, z: np.ndarray):
    d = target.aux_dim(theta.model_id)
    if np.shape(z)[-1] != d:
        raise ContractViolation(f"model {theta.model_id} expects auxiliary dimension {d}, got {np.shape(z)[-1]}")


__all__ = [
    "AbsoluteContinuityError",
    "AuxBlock",
    "CapabilityError",
    "Conditioning",
    "ContractViolation",
    "EstimatorError",
    "InitializationError",
    "ParameterPoint",
    "TargetModel",
    "ThetaProposal",
    "ValidationReport",
    "WeightScheme",
    "ext_sub",
    "has_marginal",
    "log_sum_exp_weighted",
    "require_marginal",
    "validate_weight_scheme",
]

