"""
Regularizers applied while training: norm penalties on the weight
matrices, Gaussian weight noise (additive or multiplicative, per time step
or per sequence), feedforward weight noise and DropConnect masks.

Perturbations only exist inside a gradient computation. A plan is sampled
for every optimizer iteration, the forward and backward passes read the
plan's effective weights, and the stored parameters stay clean.
"""
from dataclasses import dataclass, field
from typing import Literal, NamedTuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .errors import ContractViolation
from .model import WEIGHT_NAMES, Gradients, RnnParams

PerturbationKind = Literal[
    "none", "additive", "multiplicative", "dropconnect",
    "feedforward_additive",
]
PerturbationScope = Literal["per_time_step", "per_sequence"]
WeightName = Literal["w_ih", "w_hh", "w_ho"]

NOISE_KINDS = ("additive", "multiplicative", "feedforward_additive")
FEEDFORWARD_WEIGHTS = ("w_ih", "w_ho")


class PerturbationSpec(BaseModel):
    """
    Declarative description of the perturbation used during training.
    Attributes:
        kind (str): none, additive, multiplicative, dropconnect or
            feedforward_additive.
        scope (str): per_time_step draws a realization for every unrolled
            step; per_sequence reuses one realization at all steps.
        sigma (float): Standard deviation of the Gaussian noise.
        drop_p (float): Probability that a single weight is zeroed.
        targets (tuple[str, ...]): Matrices to perturb. Defaults to w_hh,
            or to w_ih and w_ho for feedforward noise.
    """
    model_config = ConfigDict(extra="forbid")

    kind: PerturbationKind = "none"
    scope: PerturbationScope = "per_time_step"
    sigma: float | None = None
    drop_p: float | None = None
    targets: tuple[WeightName, ...] | None = None

    @model_validator(mode="after")
    def check_combination(self):
        if self.kind in NOISE_KINDS and (self.sigma is None or self.sigma <= 0):
            raise ValueError(f"{self.kind} noise needs sigma > 0")
        if self.kind == "dropconnect" and (
            self.drop_p is None or not 0.0 <= self.drop_p <= 1.0
        ):
            raise ValueError("dropconnect needs drop_p within [0, 1]")
        if self.kind == "feedforward_additive":
            if self.scope != "per_time_step":
                raise ValueError("feedforward noise is sampled per time step")
            if not set(self.active_targets) <= set(FEEDFORWARD_WEIGHTS):
                raise ValueError("feedforward noise targets w_ih and w_ho only")
        return self

    @property
    def active_targets(self) -> tuple[str, ...]:
        if self.kind == "none":
            return ()
        if self.targets is not None:
            return tuple(name for name in WEIGHT_NAMES if name in self.targets)
        if self.kind == "feedforward_additive":
            return FEEDFORWARD_WEIGHTS
        return ("w_hh",)


class RegPenaltySpec(BaseModel):
    """L1 or L2 penalty on w_ih, w_hh and w_ho; biases are not penalized."""
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    norm: Literal["L1", "L2"] = "L2"
    lam: float = Field(default=0.0, ge=0.0, alias="lambda")


class EffectiveWeights(NamedTuple):
    w_ih: np.ndarray
    w_hh: np.ndarray
    w_ho: np.ndarray


@dataclass
class PerturbationPlan:
    """
    One sampled realization of a PerturbationSpec.
    Attributes:
        kind (str): Perturbation kind of the spec it was sampled from.
        scope (str): per_time_step or per_sequence.
        steps (int): Sequence length the plan was sampled for.
        realizations (dict[str, np.ndarray]): Per targeted matrix, an array
            [R x rows x cols] holding Gaussian noise or boolean keep masks,
            where R is `steps` per time step and 1 per sequence.
        seed (int): Seed that produced the realizations, if known.
    """
    kind: str
    scope: str
    steps: int
    realizations: dict[str, np.ndarray] = field(default_factory=dict)
    seed: int | None = None

    def _index(self, t: int) -> int:
        if not 0 <= t < self.steps:
            raise ContractViolation(
                f"Step {t} is outside the plan's {self.steps} steps"
            )
        return 0 if self.scope == "per_sequence" else t

    def check_compatible(self, params: RnnParams, steps: int):
        if self.scope == "per_time_step" and self.steps != steps:
            raise ContractViolation(
                f"Plan was sampled for {self.steps} steps, batch has {steps}"
            )
        for name, realization in self.realizations.items():
            if realization.shape[1:] != getattr(params, name).shape:
                raise ContractViolation(
                    f"Plan realization for {name} has shape "
                    f"{realization.shape[1:]}, parameters have "
                    f"{getattr(params, name).shape}"
                )

    def weights_at(self, params: RnnParams, t: int) -> EffectiveWeights:
        index = self._index(t)
        weights = {}
        for name in WEIGHT_NAMES:
            clean = getattr(params, name)
            realization = self.realizations.get(name)
            if realization is None:
                weights[name] = clean
            elif self.kind == "multiplicative":
                weights[name] = clean * (1.0 + realization[index])
            elif self.kind == "dropconnect":
                weights[name] = clean * realization[index]
            else:
                weights[name] = clean + realization[index]
        return EffectiveWeights(**weights)

    def chain_factor(self, name: str, t: int) -> np.ndarray | None:
        """
        Elementwise derivative of the step-t effective weight with respect
        to the clean weight, or None when it is 1 everywhere.
        """
        realization = self.realizations.get(name)
        if realization is None:
            return None
        index = self._index(t)
        if self.kind == "multiplicative":
            return 1.0 + realization[index]
        if self.kind == "dropconnect":
            return realization[index].astype(np.float64)
        return None


def sample_plan(
    spec: PerturbationSpec,
    shapes: dict[str, tuple[int, ...]] | RnnParams,
    steps: int,
    rng: np.random.Generator | int | None = None,
) -> PerturbationPlan:
    """
    Draw a fresh realization of `spec`.
    Args:
        spec (PerturbationSpec): What to sample.
        shapes (dict | RnnParams): Shapes of the weight matrices.
        steps (int): Sequence length T.
        rng (Generator | int): Random source, or a seed to build one from.
    Returns:
        PerturbationPlan: T realizations per target for per_time_step
        scope, a single one for per_sequence scope.
    Raises:
        ContractViolation: If steps < 1 or a target shape is missing.
    """
    if steps < 1:
        raise ContractViolation("A plan needs at least one time step.")
    if isinstance(shapes, RnnParams):
        shapes = shapes.weight_shapes()
    seed = None
    if rng is None or isinstance(rng, (int, np.integer)):
        seed = None if rng is None else int(rng)
        rng = np.random.default_rng(seed)

    count = steps if spec.scope == "per_time_step" else 1
    realizations = {}
    for name in spec.active_targets:
        if name not in shapes:
            raise ContractViolation(f"No shape given for target {name}")
        size = (count, *shapes[name])
        if spec.kind == "dropconnect":
            realizations[name] = rng.random(size) >= spec.drop_p
        else:
            realizations[name] = rng.normal(0.0, spec.sigma, size)
    return PerturbationPlan(spec.kind, spec.scope, steps, realizations, seed)


def effective_weights(
    params: RnnParams, plan: PerturbationPlan | None, t: int
) -> EffectiveWeights:
    """
    Weights seen at step t: W + D for additive noise, W * (1 + D) for
    multiplicative noise, W * M for DropConnect. Untargeted matrices come
    back as the clean arrays; `params` is never modified.
    """
    if plan is None:
        return EffectiveWeights(params.w_ih, params.w_hh, params.w_ho)
    return plan.weights_at(params, t)


def norm_penalty(
    params: RnnParams, spec: RegPenaltySpec
) -> tuple[float, Gradients]:
    """
    Norm penalty over the three weight matrices.
    L1 is lam * sum|w| with subgradient lam * sign(w), sign(0) = 0.
    L2 is lam * sum(w^2) with gradient 2 * lam * w.
    Returns:
        tuple[float, Gradients]: Penalty value and its gradient; bias
        gradients are zero.
    """
    grads = Gradients.zeros_like(params)
    value = 0.0
    for name in WEIGHT_NAMES:
        weights = getattr(params, name)
        if spec.norm == "L1":
            value += spec.lam * float(np.abs(weights).sum())
            setattr(grads, name, spec.lam * np.sign(weights))
        else:
            value += spec.lam * float(np.square(weights).sum())
            setattr(grads, name, 2.0 * spec.lam * weights)
    return value, grads


def noisy_moments(w: np.ndarray, x: np.ndarray, sigma: float) -> tuple[float, float]:
    """
    Mean and variance of the pre-synaptic activation a = (w + D*w)^T x
    under multiplicative Gaussian noise of standard deviation sigma.
    Returns:
        tuple[float, float]: (w^T x, sigma^2 (w^T x)^2).
    """
    if sigma <= 0:
        raise ContractViolation("sigma must be positive")
    a = float(np.dot(w, x))
    return a, sigma ** 2 * a ** 2


def independent_noise_variance(
    w: np.ndarray, x: np.ndarray, sigma: float
) -> float:
    """Variance of a when every weight draws its own noise: sigma^2 sum (w_i x_i)^2."""
    return float(sigma ** 2 * np.sum((np.asarray(w) * np.asarray(x)) ** 2))


def simulate_noisy_activation(
    w: np.ndarray,
    x: np.ndarray,
    sigma: float,
    n_draws: int,
    rng: np.random.Generator,
    shared: bool = True,
) -> np.ndarray:
    """
    Monte-Carlo draws of a = (w + D*w)^T x.
    Args:
        shared (bool): One noise factor per draw for the whole incoming
            weight vector, the setting in which the closed-form variance
            sigma^2 (w^T x)^2 is exact. False draws one factor per weight,
            as the effective-weight sampler does.
    Returns:
        np.ndarray: `n_draws` activation samples.
    """
    w = np.asarray(w, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    width = 1 if shared else w.shape[0]
    noise = rng.normal(0.0, sigma, (n_draws, width))
    return (w + noise * w) @ x


def sampled_activation_grad(
    w: np.ndarray,
    x: np.ndarray,
    sigma: float,
    s: float,
    sign_corrected: bool = True,
) -> tuple[float, np.ndarray, np.ndarray]:
    """
    Sampled activation a_hat = E[a] + s * sqrt(V[a]) and its gradient with
    respect to w, split into the ordinary term x and the noise-induced
    regularization term.
    Args:
        w (np.ndarray): Incoming weights.
        x (np.ndarray): Pre-synaptic inputs.
        sigma (float): Noise standard deviation.
        s (float): Standard-normal sample.
        sign_corrected (bool): Include the sign(w^T x) factor that the
            derivative of |w^T x| produces. False returns s * sigma * x.
    Returns:
        tuple: (a_hat, grad_w, reg_term) with grad_w = x + reg_term.
    """
    if not np.isfinite(s):
        raise ContractViolation("s must be finite")
    x = np.asarray(x, dtype=np.float64)
    a = float(np.dot(w, x))
    a_hat = a + s * sigma * abs(a)
    factor = np.sign(a) if sign_corrected else 1.0
    reg_term = s * sigma * factor * x
    return a_hat, x + reg_term, reg_term
