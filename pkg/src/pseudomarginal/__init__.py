"""Pseudo-marginal MCMC: exact (GIMH), noisy (MCWM) and marginal kernels over pluggable importance weights."""

from ._accel import backend
from .core import (
    AbsoluteContinuityError,
    AuxBlock,
    CapabilityError,
    Conditioning,
    ContractViolation,
    EstimatorError,
    InitializationError,
    ParameterPoint,
    WeightScheme,
    log_sum_exp_weighted,
    validate_weight_scheme,
)
from .diagnostics import (
    acceptance_rate,
    holding_time_stats,
    model_probabilities,
    running_model_probability,
    tv_distance_discrete,
    weight_tail_report,
)
from .estimators import (
    GaussianAuxProposal,
    IidEstimator,
    LangevinAuxProposal,
    LangevinEstimator,
    PerModelEstimator,
    PerModelProposal,
    log_gamma_iid,
    log_gamma_markov,
    sample_aux_iid,
    sample_aux_langevin,
)
from .kernels import Schedule, accept, gimh_step, init_state, marginal_step, mcwm_step, refresh_aux, run_chain
from .trace import ChainTrace, PmState, StepOutcome

__version__ = "0.1.0"
