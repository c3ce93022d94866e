"""
Sparse Gaussian initialization with spectral-radius control.

Each hidden unit keeps k non-zero incoming recurrent weights, then the
whole recurrent matrix is rescaled to a target spectral radius, the
echo-state rule of thumb for keeping long-range gradients alive.
"""
import logging
from typing import NamedTuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from .errors import ContractViolation
from .model import RnnParams

POWER_TOLERANCE = 1e-10
POWER_MAX_ITERATIONS = 10_000
# Width of the block iterated by spectral_radius; a block catches complex
# conjugate pairs and speeds up convergence when moduli are close.
POWER_BLOCK = 8


class InitSpec(BaseModel):
    """
    Initialization hyperparameters.
    Attributes:
        sigma_hh (float): Standard deviation of recurrent weights.
        sigma_ih (float): Standard deviation of input and output weights.
        sparsify_k (int): Non-zero incoming recurrent weights per unit.
        rho_target (float): Spectral radius of w_hh after rescaling.
        seed (int): Seed of the initialization streams.
    """
    model_config = ConfigDict(extra="forbid")

    sigma_hh: float = Field(default=1e-4, gt=0)
    sigma_ih: float = Field(default=0.1, gt=0)
    sparsify_k: int = Field(default=15, ge=1)
    rho_target: float = Field(default=1.1, gt=0)
    seed: int = 0


class NetworkSizes(NamedTuple):
    n_input: int
    n_hidden: int
    n_output: int


class SpectralEstimate(NamedTuple):
    radius: float
    iterations: int
    converged: bool


def sparse_gaussian(
    rows: int, cols: int, k: int, sigma: float, rng: np.random.Generator
) -> np.ndarray:
    """
    Matrix whose every row holds exactly k Normal(0, sigma) entries at
    uniformly chosen columns, zeros elsewhere.
    Raises:
        ContractViolation: If k is not within [1, cols].
    """
    if not 1 <= k <= cols:
        raise ContractViolation(f"k={k} must lie within [1, {cols}]")
    matrix = np.zeros((rows, cols))
    columns = np.argsort(rng.random((rows, cols)), axis=1)[:, :k]
    values = rng.normal(0.0, sigma, (rows, k))
    # A draw of exactly 0.0 would lose a connection.
    values[values == 0.0] = sigma
    np.put_along_axis(matrix, columns, values, axis=1)
    return matrix


def _check_square(matrix: np.ndarray):
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ContractViolation(f"Expected a square matrix, got {matrix.shape}")


def dense_spectral_radius(matrix: np.ndarray) -> float:
    """Largest eigenvalue modulus from a full eigendecomposition."""
    matrix = np.asarray(matrix, dtype=np.float64)
    _check_square(matrix)
    return float(np.max(np.abs(np.linalg.eigvals(matrix)), initial=0.0))


def spectral_radius(
    matrix: np.ndarray,
    tol: float = POWER_TOLERANCE,
    max_iterations: int = POWER_MAX_ITERATIONS,
    seed: int = 0,
) -> SpectralEstimate:
    """
    Spectral radius by block power iteration.
    A small orthonormal block is multiplied by the matrix and
    re-orthonormalized each round; the largest modulus among the Ritz
    values of the projected matrix is the estimate. A block that collapses
    to zero is restarted from a fresh random draw.
    Args:
        matrix (np.ndarray): Square matrix.
        tol (float): Relative change of the estimate that ends iteration.
        max_iterations (int): Iteration cap.
        seed (int): Seed of the starting block.
    Returns:
        SpectralEstimate: Radius, iterations used, and whether the
        tolerance was met. A non-converged result carries the best
        estimate.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    _check_square(matrix)
    n = matrix.shape[0]
    if n == 1:
        return SpectralEstimate(abs(float(matrix[0, 0])), 0, True)
    if not np.any(matrix):
        return SpectralEstimate(0.0, 0, True)

    rng = np.random.default_rng(seed)
    block = min(n, POWER_BLOCK)
    basis, _ = np.linalg.qr(rng.normal(size=(n, block)))
    estimate = 0.0
    restarts = 0
    for iteration in range(1, max_iterations + 1):
        image = matrix @ basis
        if not np.any(image):
            restarts += 1
            if restarts > 3:
                return SpectralEstimate(0.0, iteration, True)
            basis, _ = np.linalg.qr(rng.normal(size=(n, block)))
            continue
        ritz = np.linalg.eigvals(basis.T @ image)
        previous, estimate = estimate, float(np.max(np.abs(ritz)))
        basis, _ = np.linalg.qr(image)
        if abs(estimate - previous) <= tol * max(estimate, 1e-300):
            return SpectralEstimate(estimate, iteration, True)
    logging.warning(
        f"Power iteration stopped after {max_iterations} iterations "
        f"at radius {estimate:.12g}"
    )
    return SpectralEstimate(estimate, max_iterations, False)


def rescale_spectral(matrix: np.ndarray, rho_target: float) -> np.ndarray:
    """
    Scale `matrix` so its spectral radius equals `rho_target`.
    The zero pattern is kept and every entry is multiplied by the same
    factor.
    Raises:
        ContractViolation: If the current spectral radius is zero.
    """
    current = spectral_radius(matrix).radius
    if current == 0.0:
        raise ContractViolation(
            "Cannot rescale a matrix whose spectral radius is zero."
        )
    return np.asarray(matrix, dtype=np.float64) * (rho_target / current)


def init_params(spec: InitSpec, sizes: NetworkSizes | tuple[int, int, int]) -> RnnParams:
    """
    Build starting parameters.
    w_hh is a sparse Gaussian matrix with sparsify_k entries per row,
    rescaled to rho_target. w_ih and w_ho are dense Gaussian with
    sigma_ih. Biases start at zero. The three matrices use independent
    random streams derived from spec.seed.
    Args:
        spec (InitSpec): Initialization hyperparameters.
        sizes (NetworkSizes): (n_input, n_hidden, n_output).
    Returns:
        RnnParams: Fresh parameters.
    """
    sizes = NetworkSizes(*sizes)
    if spec.sparsify_k > sizes.n_hidden:
        raise ContractViolation(
            f"sparsify_k={spec.sparsify_k} exceeds {sizes.n_hidden} hidden units"
        )
    hh_rng, ih_rng, ho_rng = (
        np.random.default_rng(stream)
        for stream in np.random.SeedSequence(spec.seed).spawn(3)
    )
    w_hh = sparse_gaussian(
        sizes.n_hidden, sizes.n_hidden, spec.sparsify_k, spec.sigma_hh, hh_rng
    )
    return RnnParams(
        w_ih=ih_rng.normal(0.0, spec.sigma_ih, (sizes.n_hidden, sizes.n_input)),
        w_hh=rescale_spectral(w_hh, spec.rho_target),
        w_ho=ho_rng.normal(0.0, spec.sigma_ih, (sizes.n_output, sizes.n_hidden)),
        b_h=np.zeros(sizes.n_hidden),
        b_o=np.zeros(sizes.n_output),
    )
