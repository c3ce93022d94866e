import numpy as np
import pytest

from network.errors import ContractViolation
from network.initialization import (
    InitSpec, dense_spectral_radius, init_params, rescale_spectral,
    sparse_gaussian, spectral_radius,
)


def test_sparse_gaussian_keeps_k_entries_per_row():
    rng = np.random.default_rng(7)
    for _ in range(100):
        matrix = sparse_gaussian(200, 200, 15, 1e-3, rng)
        assert (np.count_nonzero(matrix, axis=1) == 15).all()


@pytest.mark.parametrize("k", [0, 11])
def test_sparse_gaussian_rejects_bad_k(k):
    with pytest.raises(ContractViolation):
        sparse_gaussian(4, 10, k, 1.0, np.random.default_rng(0))


@pytest.mark.parametrize("rho", [0.9, 1.0, 1.1])
def test_init_params_hits_the_target_radius(rho):
    spec = InitSpec(sparsify_k=15, rho_target=rho, seed=11)
    params = init_params(spec, (88, 100, 88))
    assert abs(dense_spectral_radius(params.w_hh) - rho) < 1e-6
    assert (np.count_nonzero(params.w_hh, axis=1) == 15).all()
    assert not np.any(params.b_h) and not np.any(params.b_o)
    assert params.w_ih.shape == (100, 88) and params.w_ho.shape == (88, 100)


def test_init_params_is_deterministic():
    spec = InitSpec(sparsify_k=5, seed=3)
    assert init_params(spec, (6, 20, 6)).digest() == init_params(spec, (6, 20, 6)).digest()
    other = spec.model_copy(update={"seed": 4})
    assert init_params(other, (6, 20, 6)).digest() != init_params(spec, (6, 20, 6)).digest()


def test_init_params_rejects_oversized_k():
    with pytest.raises(ContractViolation):
        init_params(InitSpec(sparsify_k=15), (4, 10, 4))


def test_power_iteration_matches_dense_solver():
    rng = np.random.default_rng(2024)
    for _ in range(50):
        matrix = sparse_gaussian(100, 100, 15, 1.0, rng)
        estimate = spectral_radius(matrix)
        assert estimate.converged
        assert abs(estimate.radius - dense_spectral_radius(matrix)) < 1e-6


def test_power_iteration_handles_rotations():
    # Eigenvalues +-2i: a single power vector never settles.
    rotation = np.array([[0.0, -2.0], [2.0, 0.0]])
    assert spectral_radius(rotation).radius == pytest.approx(2.0)


def test_power_iteration_on_trivial_matrices():
    assert spectral_radius(np.zeros((3, 3))).radius == 0.0
    assert spectral_radius(np.array([[-3.0]])).radius == 3.0


def test_spectral_radius_needs_a_square_matrix():
    with pytest.raises(ContractViolation):
        spectral_radius(np.ones((2, 3)))


def test_rescale_keeps_the_zero_pattern():
    matrix = sparse_gaussian(30, 30, 4, 1.0, np.random.default_rng(1))
    scaled = rescale_spectral(matrix, 0.7)
    np.testing.assert_array_equal(scaled != 0, matrix != 0)
    assert dense_spectral_radius(scaled) == pytest.approx(0.7, abs=1e-6)


def test_rescale_rejects_zero_radius():
    with pytest.raises(ContractViolation):
        rescale_spectral(np.zeros((3, 3)), 1.0)


def test_init_spec_validates_ranges():
    with pytest.raises(ValueError):
        InitSpec(sigma_hh=0.0)
    with pytest.raises(ValueError):
        InitSpec(extra_field=1)
