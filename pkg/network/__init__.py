from .errors import (
    ContractViolation, DataError, DivergenceError, LabError, SchemaError,
)
from .grad import (
    bptt, finite_diff, grad_check, random_problem, state_jacobian,
)
from .initialization import (
    InitSpec, NetworkSizes, SpectralEstimate, dense_spectral_radius,
    init_params, rescale_spectral, sparse_gaussian, spectral_radius,
)
from .model import (
    ForwardTrace, Gradients, RnnParams, SequenceBatch, ce_loss, evaluate,
    forward,
)
from .optim import OptimizerConfig, OptimizerState, step
from .perturb import (
    PerturbationPlan, PerturbationSpec, RegPenaltySpec, effective_weights,
    noisy_moments, norm_penalty, sample_plan, sampled_activation_grad,
)

__all__ = [
    "ContractViolation", "DataError", "DivergenceError", "LabError",
    "SchemaError", "bptt", "finite_diff", "grad_check", "random_problem",
    "state_jacobian",
    "InitSpec", "NetworkSizes", "SpectralEstimate", "dense_spectral_radius",
    "init_params", "rescale_spectral", "sparse_gaussian", "spectral_radius",
    "ForwardTrace", "Gradients", "RnnParams", "SequenceBatch", "ce_loss",
    "evaluate", "forward", "OptimizerConfig", "OptimizerState", "step",
    "PerturbationPlan", "PerturbationSpec", "RegPenaltySpec",
    "effective_weights", "noisy_moments", "norm_penalty", "sample_plan",
    "sampled_activation_grad",
]
