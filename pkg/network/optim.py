"""
First-order optimizers: classical momentum, Nesterov accelerated gradient
and rmsprop combined with momentum.
"""
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .errors import DivergenceError
from .model import Gradients, RnnParams

GradFn = Callable[[RnnParams], Gradients]


class OptimizerConfig(BaseModel):
    """
    Attributes:
        method (str): momentum, nag or rmsprop.
        mu (float): Momentum coefficient in [0, 1).
        step_rate (float): Learning rate.
        decay (float): Decay of the rmsprop squared-gradient average.
        epsilon (float): Floor added under the rmsprop square root.
    """
    model_config = ConfigDict(extra="forbid")

    method: Literal["momentum", "nag", "rmsprop"] = "rmsprop"
    mu: float = Field(default=0.9, ge=0.0, lt=1.0)
    step_rate: float = Field(default=1e-3, gt=0.0)
    decay: float = Field(default=0.9, gt=0.0, lt=1.0)
    epsilon: float = Field(default=1e-8, gt=0.0)


@dataclass
class OptimizerState:
    config: OptimizerConfig
    velocity: Gradients
    accumulator: Gradients | None = None

    @classmethod
    def create(cls, config: OptimizerConfig, params: RnnParams) -> "OptimizerState":
        accumulator = (
            Gradients.zeros_like(params) if config.method == "rmsprop" else None
        )
        return cls(config, Gradients.zeros_like(params), accumulator)


def _require_finite(grads: Gradients, what: str):
    if not grads.all_finite():
        raise DivergenceError(f"Non-finite {what}; step aborted.")


def step(
    state: OptimizerState, params: RnnParams, grad_fn: GradFn
) -> tuple[OptimizerState, RnnParams]:
    """
    Apply one update.
    momentum: v <- mu v - lr grad(theta); theta <- theta + v
    nag:      v <- mu v - lr grad(theta + mu v); theta <- theta + v
    rmsprop:  r <- decay r + (1 - decay) g^2;
              v <- mu v - lr g / sqrt(r + epsilon); theta <- theta + v
    Args:
        state (OptimizerState): Velocity and accumulator, not modified.
        params (RnnParams): Current parameters, not modified.
        grad_fn (Callable): Returns the gradient at any parameters.
    Returns:
        tuple[OptimizerState, RnnParams]: The updated state and parameters.
    Raises:
        DivergenceError: If the gradient or the update is not finite.
    """
    config = state.config
    mu, rate = config.mu, config.step_rate
    accumulator = state.accumulator

    if config.method == "nag":
        lookahead = params.map(lambda p, v: p + mu * v, state.velocity)
        grads = grad_fn(lookahead)
        _require_finite(grads, "gradient")
        velocity = state.velocity.map(lambda v, g: mu * v - rate * g, grads)
    elif config.method == "rmsprop":
        grads = grad_fn(params)
        _require_finite(grads, "gradient")
        accumulator = state.accumulator.map(
            lambda r, g: config.decay * r + (1.0 - config.decay) * g * g, grads
        )
        velocity = state.velocity.map(
            lambda v, g, r: mu * v - rate * g / np.sqrt(r + config.epsilon),
            grads, accumulator,
        )
    else:
        grads = grad_fn(params)
        _require_finite(grads, "gradient")
        velocity = state.velocity.map(lambda v, g: mu * v - rate * g, grads)

    _require_finite(velocity, "update")
    updated = params.map(lambda p, v: p + v, velocity)
    return OptimizerState(config, velocity, accumulator), updated
