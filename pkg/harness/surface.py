"""
Loss surface of a single sigmoid unit driven from x_0 = 0 towards a target
value, the smallest recurrent system in which gradients explode: near the
bifurcation where the low fixed point disappears, x_T jumps, and the loss
forms a steep wall whose slope grows with T.
"""
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from network.errors import ContractViolation
from network.model import sigmoid
from network.perturb import RegPenaltySpec

DEFAULT_W_RANGE = (-2.0, 8.0)
DEFAULT_B_RANGE = (-6.0, 2.0)
DEFAULT_RESOLUTION = 100


@dataclass
class SurfaceGrid:
    """
    Attributes:
        w_values (np.ndarray): Recurrent weights, one per column.
        b_values (np.ndarray): Biases, one per row.
        loss (np.ndarray): [len(b_values) x len(w_values)] loss values.
        grad_w (np.ndarray): Central-difference dL/dW on the grid.
        grad_b (np.ndarray): Central-difference dL/db on the grid.
        steps (int): Number of iterations T.
        target (float): Target value z.
    """
    w_values: np.ndarray
    b_values: np.ndarray
    loss: np.ndarray
    grad_w: np.ndarray
    grad_b: np.ndarray
    steps: int
    target: float

    @property
    def row_max_gradient(self) -> np.ndarray:
        """Largest gradient norm within each row (fixed b)."""
        return np.max(np.hypot(self.grad_w, self.grad_b), axis=1)

    def rows(self) -> Iterator[dict]:
        for i, b in enumerate(self.b_values):
            for j, w in enumerate(self.w_values):
                yield {"w": float(w), "b": float(b), "loss": float(self.loss[i, j])}

    def row_summaries(self) -> Iterator[dict]:
        for b, gradient in zip(self.b_values, self.row_max_gradient):
            yield {"b": float(b), "max_gradient": float(gradient)}


def unit_state(w: np.ndarray, b: np.ndarray, steps: int) -> np.ndarray:
    """x_T of x_t = sigmoid(w x_{t-1} + b) from x_0 = 0, elementwise."""
    x = np.zeros(np.broadcast(w, b).shape)
    for _ in range(steps):
        x = sigmoid(w * x + b)
    return x


def surface_penalty(w: np.ndarray, b: np.ndarray, penalty: RegPenaltySpec | None) -> np.ndarray:
    if penalty is None:
        return np.zeros(np.broadcast(w, b).shape)
    if penalty.norm == "L1":
        return penalty.lam * (np.abs(w) + np.abs(b))
    return penalty.lam * (w * w + b * b)


def demo_surface(
    steps: int = 50,
    target_z: float = 0.7,
    w_range: tuple[float, float] = DEFAULT_W_RANGE,
    b_range: tuple[float, float] = DEFAULT_B_RANGE,
    resolution: int = DEFAULT_RESOLUTION,
    penalty: RegPenaltySpec | None = None,
) -> SurfaceGrid:
    """
    Evaluate L(W, b) = (x_T - z)^2, plus an optional penalty, on a square
    grid.
    Args:
        steps (int): T, at least 1.
        target_z (float): Target value z.
        w_range (tuple[float, float]): Inclusive range of W.
        b_range (tuple[float, float]): Inclusive range of b.
        resolution (int): Points per axis, at least 2.
        penalty (RegPenaltySpec, optional): lam (W^2 + b^2) for L2,
            lam (|W| + |b|) for L1.
    Returns:
        SurfaceGrid: Loss and its grid derivatives.
    """
    if resolution < 2:
        raise ContractViolation("resolution must be at least 2")
    if steps < 1:
        raise ContractViolation("steps must be at least 1")
    w_values = np.linspace(*w_range, resolution)
    b_values = np.linspace(*b_range, resolution)
    w, b = np.meshgrid(w_values, b_values)
    loss = (unit_state(w, b, steps) - target_z) ** 2 + surface_penalty(w, b, penalty)
    grad_b, grad_w = np.gradient(loss, b_values, w_values)
    return SurfaceGrid(w_values, b_values, loss, grad_w, grad_b, steps, target_z)


def max_weight_gradient(surface: SurfaceGrid, w_min: float | None = None) -> float:
    """Largest |dL/dW| on the grid, restricted to W > w_min when given."""
    columns = np.ones(len(surface.w_values), dtype=bool)
    if w_min is not None:
        columns = surface.w_values > w_min
    if not np.any(columns):
        raise ContractViolation(f"No grid column has W > {w_min}")
    return float(np.max(np.abs(surface.grad_w[:, columns])))


def fixed_point(w: float, b: float, iterations: int = 1000) -> float:
    """Scalar oracle: the state reached after `iterations` steps from 0."""
    x = 0.0
    for _ in range(iterations):
        x = float(sigmoid(np.float64(w * x + b)))
    return x
