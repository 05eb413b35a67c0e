"""Reference targets: the two-model toy, the logit variable-selection posterior and finite tables."""

from .discrete import DiscreteAuxProposal, DiscreteTarget, MatrixProposal, enumerable_instance
from .glm import (
    BirthDeathProposal,
    FitError,
    GlmDataset,
    GlmTarget,
    fit_glm_mle,
    generate_glm_dataset,
    glm_grad_log_joint,
    glm_log_joint,
    inclusion_from_model_id,
    model_id_from_inclusion,
    rj_birth_death_proposal,
)
from .toy import ToyFlipProposal, ToyTarget, toy_grad_log_conditional, toy_log_joint

__all__ = [
    "BirthDeathProposal",
    "DiscreteAuxProposal",
    "DiscreteTarget",
    "FitError",
    "GlmDataset",
    "GlmTarget",
    "MatrixProposal",
    "ToyFlipProposal",
    "ToyTarget",
    "enumerable_instance",
    "fit_glm_mle",
    "generate_glm_dataset",
    "glm_grad_log_joint",
    "glm_log_joint",
    "inclusion_from_model_id",
    "model_id_from_inclusion",
    "rj_birth_death_proposal",
    "toy_grad_log_conditional",
    "toy_log_joint",
]
