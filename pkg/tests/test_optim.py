import math

import numpy as np
import pytest

from network.errors import DivergenceError
from network.grad import bptt
from network.model import Gradients, RnnParams
from network.optim import OptimizerConfig, OptimizerState, step


def constant_gradient(params, scale=1.0, seed=0):
    rng = np.random.default_rng(seed)
    signs = lambda a: np.where(rng.random(a.shape) < 0.5, -1.0, 1.0)
    base = params.map(lambda a: signs(a) * rng.uniform(0.5, 1.5, a.shape))
    grads = Gradients(**{name: scale * a for name, a in base.arrays().items()})
    return lambda _: grads


def quadratic_gradient(params):
    # Gradient of 0.5 * |theta|^2.
    return Gradients(**params.copy().arrays())


def run(config, params, grad_fn, n_steps):
    state = OptimizerState.create(config, params)
    for _ in range(n_steps):
        state, params = step(state, params, grad_fn)
    return params


def test_zero_momentum_reduces_to_gradient_descent(small_problem):
    params, _ = small_problem
    rate = 0.01
    results = {
        method: run(OptimizerConfig(method=method, mu=0.0, step_rate=rate),
                    params, quadratic_gradient, 100)
        for method in ("momentum", "nag")
    }
    sgd = params
    for _ in range(100):
        sgd = sgd.map(lambda p: p + -(rate * p))
    for result in results.values():
        for name, array in result.arrays().items():
            np.testing.assert_array_equal(array, getattr(sgd, name))


def test_rmsprop_is_scale_invariant(small_problem):
    params, _ = small_problem
    config = OptimizerConfig(method="rmsprop", mu=0.9, step_rate=1e-3)
    moved = {}
    for scale in (1.0, 100.0):
        result = run(config, params, constant_gradient(params, scale), 50)
        moved[scale] = result.map(lambda a, b: a - b, params)
    for name, displacement in moved[1.0].arrays().items():
        np.testing.assert_allclose(getattr(moved[100.0], name), displacement, rtol=0.01)


def test_momentum_accumulates_velocity(small_problem):
    params, _ = small_problem
    config = OptimizerConfig(method="momentum", mu=0.5, step_rate=0.1)
    grad_fn = constant_gradient(params)
    grads = grad_fn(params)
    state = OptimizerState.create(config, params)
    state, first = step(state, params, grad_fn)
    state, second = step(state, first, grad_fn)
    # v1 = -lr g, v2 = mu v1 - lr g
    np.testing.assert_allclose(second.w_hh - first.w_hh, -0.1 * 1.5 * grads.w_hh)


def test_nag_evaluates_the_gradient_ahead(small_problem):
    params, _ = small_problem
    config = OptimizerConfig(method="nag", mu=0.9, step_rate=0.1)
    seen = []

    def grad_fn(at):
        seen.append(at.copy())
        return quadratic_gradient(at)

    state, updated = step(OptimizerState.create(config, params), params, grad_fn)
    step(state, updated, grad_fn)
    lookahead = updated.map(lambda p, v: p + 0.9 * v, state.velocity)
    np.testing.assert_array_equal(seen[0].w_hh, params.w_hh)
    np.testing.assert_array_equal(seen[1].w_hh, lookahead.w_hh)


def test_step_leaves_inputs_untouched(small_problem):
    params, _ = small_problem
    state = OptimizerState.create(OptimizerConfig(method="rmsprop"), params)
    digest = params.digest()
    velocity = state.velocity.copy()
    new_state, _ = step(state, params, quadratic_gradient)
    assert params.digest() == digest
    np.testing.assert_array_equal(state.velocity.w_hh, velocity.w_hh)
    assert not np.any(state.accumulator.w_hh)
    assert np.any(new_state.accumulator.w_hh)


@pytest.mark.parametrize("method", ["momentum", "nag", "rmsprop"])
def test_non_finite_gradient_diverges(method, small_problem):
    params, _ = small_problem

    def grad_fn(at):
        grads = quadratic_gradient(at)
        grads.w_hh[0, 0] = np.nan
        return grads

    state = OptimizerState.create(OptimizerConfig(method=method), params)
    with pytest.raises(DivergenceError):
        step(state, params, grad_fn)


def test_overflowing_update_diverges(small_problem):
    params, _ = small_problem
    config = OptimizerConfig(method="momentum", step_rate=1e300)
    grad_fn = constant_gradient(params, scale=1e300)
    with pytest.raises(DivergenceError):
        step(OptimizerState.create(config, params), params, grad_fn)


def test_config_validation():
    with pytest.raises(ValueError):
        OptimizerConfig(mu=1.0)
    with pytest.raises(ValueError):
        OptimizerConfig(step_rate=0.0)
    with pytest.raises(ValueError):
        OptimizerConfig(method="adam")


def scalar_params(value: float) -> RnnParams:
    return RnnParams(
        w_ih=[[value]], w_hh=[[value]], w_ho=[[value]], b_h=[value], b_o=[value],
    )


def trajectory(config, n_steps, start=1.0, grad_fn=quadratic_gradient):
    params = scalar_params(start)
    state = OptimizerState.create(config, params)
    values = [start]
    for _ in range(n_steps):
        state, params = step(state, params, grad_fn)
        values.append(float(params.w_hh[0, 0]))
    return values


def test_momentum_converges_on_a_quadratic():
    values = trajectory(OptimizerConfig(method="momentum", mu=0.9, step_rate=0.1), 200)
    # theta_{k+1} = 1.8 theta_k - 0.9 theta_{k-1} with theta_1 = 0.9
    angle = math.atan2(0.3, 0.9)
    for k in (1, 10, 100, 200):
        assert values[k] == pytest.approx(0.9 ** (k / 2) * math.cos(k * angle), abs=1e-12)
    assert all(abs(value) <= 0.9 ** (k / 2) + 1e-15 for k, value in enumerate(values))
    assert max(abs(value) for value in values[140:]) < 1e-3


def test_nag_departs_from_momentum_on_the_second_step():
    momentum = trajectory(OptimizerConfig(method="momentum", mu=0.9, step_rate=0.1), 2)
    nag = trajectory(OptimizerConfig(method="nag", mu=0.9, step_rate=0.1), 2)
    assert momentum[1] == nag[1] == pytest.approx(0.9)
    assert momentum[2] == pytest.approx(0.72)
    assert nag[2] == pytest.approx(0.729)


def test_rmsprop_scalar_update():
    config = OptimizerConfig(method="rmsprop", mu=0.0, step_rate=0.01, decay=0.9, epsilon=1e-8)
    params = scalar_params(0.0)
    grad_fn = lambda at: Gradients(**scalar_params(3.0).arrays())
    state, updated = step(OptimizerState.create(config, params), params, grad_fn)
    assert float(state.accumulator.w_hh[0, 0]) == pytest.approx(0.9)
    assert float(updated.w_hh[0, 0]) == pytest.approx(-0.031623, abs=1e-6)


def test_zero_momentum_reduces_to_gradient_descent_on_a_network(small_problem):
    params, batch = small_problem
    rate = 0.05
    grad_fn = lambda at: bptt(at, batch)[1]
    sgd = params
    for _ in range(100):
        sgd = sgd.map(lambda p, g: p - rate * g, grad_fn(sgd))
    for method in ("momentum", "nag"):
        result = run(OptimizerConfig(method=method, mu=0.0, step_rate=rate), params, grad_fn, 100)
        for name, array in result.arrays().items():
            np.testing.assert_array_equal(array, getattr(sgd, name))
