from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

from corpus.dataset import DEFAULT_CHUNK_LENGTH
from network.errors import ContractViolation
from network.initialization import InitSpec
from network.optim import OptimizerConfig
from network.perturb import PerturbationSpec, RegPenaltySpec

VariantName = Literal[
    "plain", "norm_penalty", "additive_step", "additive_sequence",
    "multiplicative_step", "multiplicative_sequence", "dropconnect_step",
    "dropconnect_sequence", "feedforward_noise",
]

# Perturbation kind and scope of each named model variant.
VARIANTS: dict[str, tuple[str, str] | None] = {
    "plain": None,
    "norm_penalty": None,
    "additive_step": ("additive", "per_time_step"),
    "additive_sequence": ("additive", "per_sequence"),
    "multiplicative_step": ("multiplicative", "per_time_step"),
    "multiplicative_sequence": ("multiplicative", "per_sequence"),
    "dropconnect_step": ("dropconnect", "per_time_step"),
    "dropconnect_sequence": ("dropconnect", "per_sequence"),
    "feedforward_noise": ("feedforward_additive", "per_time_step"),
}


class HyperConfig(BaseModel):
    """
    One training run.
    Attributes:
        init (InitSpec): Initialization of the parameters.
        perturbation (PerturbationSpec): Noise or DropConnect used while
            computing gradients, None for none.
        penalty (RegPenaltySpec): Norm penalty added to the loss, None for
            none.
        optimizer (OptimizerConfig): Update rule.
        batch_size (int): Chunks per mini-batch.
        hidden_units (int): Hidden layer width.
        max_epochs (int): Epoch cap.
        patience (int): Epochs without validation improvement before
            stopping.
        chunk_length (int): Frames per training chunk.
        seed (int): Seed of the mini-batch order and perturbation draws.
    """
    model_config = ConfigDict(extra="forbid")

    init: InitSpec = Field(default_factory=InitSpec)
    perturbation: PerturbationSpec | None = None
    penalty: RegPenaltySpec | None = None
    optimizer: OptimizerConfig = Field(default_factory=OptimizerConfig)
    batch_size: int = Field(default=81, ge=1)
    hidden_units: int = Field(default=200, ge=1)
    max_epochs: int = Field(default=1000, ge=0)
    patience: int = Field(default=20, ge=1)
    chunk_length: int = Field(default=DEFAULT_CHUNK_LENGTH, ge=1)
    seed: int = 0

    def with_seed(self, seed: int) -> "HyperConfig":
        """Same run with both the training and the initialization seed moved."""
        return self.model_copy(update={
            "seed": seed,
            "init": self.init.model_copy(update={"seed": seed}),
        })


def variant_regularizers(
    variant: str,
    sigma: float | None = None,
    drop_p: float | None = None,
    norm: str = "L2",
    lam: float | None = None,
) -> tuple[PerturbationSpec | None, RegPenaltySpec | None]:
    """
    Perturbation and penalty of a named variant.
    Returns:
        tuple: (PerturbationSpec or None, RegPenaltySpec or None).
    """
    if variant not in VARIANTS:
        raise ContractViolation(f"Unknown variant '{variant}'")
    if variant == "norm_penalty":
        return None, RegPenaltySpec(norm=norm, lam=lam or 0.0)
    if VARIANTS[variant] is None:
        return None, None
    kind, scope = VARIANTS[variant]
    if kind == "dropconnect":
        return PerturbationSpec(kind=kind, scope=scope, drop_p=drop_p), None
    return PerturbationSpec(kind=kind, scope=scope, sigma=sigma), None


class SearchRanges(BaseModel):
    """
    Random-search space. Discrete entries are sampled uniformly, lambda
    log-uniformly within 10**log_lambda, drop_p and noise_sigma uniformly.
    """
    model_config = ConfigDict(extra="forbid")

    variant: VariantName = "plain"
    sigma_hh: list[float] = [1e-3, 1.0, 1e-4]
    sigma_ih: list[float] = [1e-1, 1e-2, 1e-3]
    sparsify_k: list[int] = [15, 25, 50]
    rho_target: list[float] = [0.9, 1.0, 1.1]
    norms: list[Literal["L1", "L2"]] = ["L1", "L2"]
    log_lambda: tuple[float, float] = (-4.0, -2.0)
    drop_p: tuple[float, float] = (0.0, 1.0)
    noise_sigma: tuple[float, float] = (0.01, 0.1)
    momentum: list[float] = [0.9, 0.95, 0.99]
    step_rate: list[float] = [1e-2, 1e-3, 1e-4]
    batch_size: list[int] = [27, 81]
    hidden_units: list[int] = [200]
    max_epochs: int = Field(default=1000, ge=0)
    patience: int = Field(default=20, ge=1)
    chunk_length: int = Field(default=DEFAULT_CHUNK_LENGTH, ge=1)
