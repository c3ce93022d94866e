"""
Backpropagation through time for the plain recurrent network, with a
central-difference oracle to check it.
"""
import numpy as np

from .errors import ContractViolation
from .model import (
    LOG_CLAMP, PARAM_NAMES, ForwardTrace, Gradients, RnnParams,
    SequenceBatch, ce_loss, forward, get_activation, step_weights,
    with_array,
)


def _accumulate(total: np.ndarray, step_grad: np.ndarray, plan, name: str, t: int):
    factor = None if plan is None else plan.chain_factor(name, t)
    if factor is None:
        total += step_grad
    else:
        total += step_grad * factor


def bptt(
    params: RnnParams,
    batch: SequenceBatch,
    plan=None,
    activation: str = "tanh",
) -> tuple[float, Gradients]:
    """
    Exact gradient of the mean cross-entropy with respect to the clean
    parameters.
    When the plan perturbs a matrix, every step has its own effective copy
    of it. The gradient of the clean matrix is the sum over steps of the
    gradient through each copy, times (1 + D_t) for multiplicative noise or
    the mask M_t for DropConnect.
    Args:
        params (RnnParams): Clean parameters, left untouched.
        batch (SequenceBatch): Training frames.
        plan (PerturbationPlan, optional): A fixed realization.
        activation (str): Hidden non-linearity.
    Returns:
        tuple[float, Gradients]: The loss and its gradient, both averaged
        over the sequences of the batch.
    """
    trace = forward(params, batch, plan, activation)
    loss = ce_loss(trace, batch)
    grads = Gradients.zeros_like(params)
    n, steps = batch.n_sequences, batch.steps
    if steps < 2:
        return loss, grads

    act = get_activation(activation)
    outputs = trace.outputs
    d_out = (outputs - batch.frames[:, 1:]) / (n * (steps - 1))
    # Clamped outputs do not move the loss.
    d_out[(outputs < LOG_CLAMP) | (outputs > 1.0 - LOG_CLAMP)] = 0.0

    d_next = np.zeros((n, params.n_hidden))
    for t in reversed(range(steps)):
        _, w_hh, w_ho = step_weights(params, plan, t)
        h_t = trace.hidden[:, t]
        d_hidden = d_next
        if t < steps - 1:
            d_o = d_out[:, t]
            _accumulate(grads.w_ho, d_o.T @ h_t, plan, "w_ho", t)
            grads.b_o += d_o.sum(axis=0)
            d_hidden = d_hidden + d_o @ w_ho
        d_pre = d_hidden * act.derivative(h_t)
        h_prev = trace.hidden[:, t - 1] if t > 0 else np.zeros_like(h_t)
        _accumulate(grads.w_hh, d_pre.T @ h_prev, plan, "w_hh", t)
        _accumulate(grads.w_ih, d_pre.T @ batch.frames[:, t], plan, "w_ih", t)
        grads.b_h += d_pre.sum(axis=0)
        d_next = d_pre @ w_hh
    return loss, grads


# Probe offsets and weights of each stencil, divided by eps.
STENCILS = {
    "central": ((1.0, 0.5), (-1.0, -0.5)),
    "five_point": ((2.0, -1.0 / 12.0), (1.0, 8.0 / 12.0),
                   (-1.0, -8.0 / 12.0), (-2.0, 1.0 / 12.0)),
}
DEFAULT_EPS = {"central": 1e-5, "five_point": 1e-3}


def batch_loss(
    params: RnnParams, batch: SequenceBatch, plan=None, activation: str = "tanh"
) -> float:
    return ce_loss(forward(params, batch, plan, activation), batch)


def finite_diff(
    params: RnnParams,
    batch: SequenceBatch,
    plan=None,
    eps: float | None = None,
    activation: str = "tanh",
    stencil: str = "central",
) -> Gradients:
    """
    Numerical gradient, one component at a time. The same plan realization
    is reused for every probe.
    Args:
        params (RnnParams): Point of evaluation.
        batch (SequenceBatch): Frames.
        plan (PerturbationPlan, optional): Fixed realization.
        eps (float, optional): Probe distance; 1e-5 for the central
            stencil, 1e-3 for the five-point one.
        activation (str): Hidden non-linearity.
        stencil (str): "central" is (L(p + eps) - L(p - eps)) / (2 eps);
            "five_point" adds the probes at +-2 eps, which cancels the
            eps^2 error term and tolerates a larger eps.
    Returns:
        Gradients: The numerical gradient.
    """
    if stencil not in STENCILS:
        raise ContractViolation(
            f"Unknown stencil '{stencil}', expected one of {sorted(STENCILS)}"
        )
    eps = DEFAULT_EPS[stencil] if eps is None else eps
    if eps <= 0:
        raise ContractViolation("eps must be positive")
    result = {}
    for name in PARAM_NAMES:
        array = getattr(params, name)
        grad = np.zeros_like(array)
        for index in np.ndindex(array.shape):
            total = 0.0
            for offset, weight in STENCILS[stencil]:
                probe = array.copy()
                probe[index] += offset * eps
                total += weight * batch_loss(
                    with_array(params, name, probe), batch, plan, activation
                )
            grad[index] = total / eps
        result[name] = grad
    return Gradients(**result)


def relative_errors(analytic: Gradients, numeric: Gradients) -> Gradients:
    return analytic.map(
        lambda a, b: np.abs(a - b) / np.maximum(1e-8, np.abs(a) + np.abs(b)),
        numeric,
    )


def grad_check(
    params: RnnParams,
    batch: SequenceBatch,
    plan=None,
    eps: float | None = None,
    activation: str = "tanh",
    stencil: str = "central",
) -> float:
    """
    Compare bptt against finite_diff.
    Returns:
        float: max over components of |a - b| / max(1e-8, |a| + |b|).
    """
    _, analytic = bptt(params, batch, plan, activation)
    numeric = finite_diff(params, batch, plan, eps, activation, stencil)
    errors = relative_errors(analytic, numeric)
    return max(float(np.max(e, initial=0.0)) for e in errors.arrays().values())


def random_problem(
    n_hidden: int,
    steps: int,
    batch_size: int = 2,
    notes: int = 4,
    seed: int = 0,
    weight_scale: float = 0.5,
    density: float = 0.3,
) -> tuple[RnnParams, SequenceBatch]:
    """
    Dense Gaussian parameters and random binary frames for checking
    gradients away from any trained regime.
    """
    if min(n_hidden, steps, batch_size, notes) < 1:
        raise ContractViolation("Sizes of a random problem must be positive.")
    rng = np.random.default_rng(seed)
    params = RnnParams(
        w_ih=rng.normal(0.0, weight_scale, (n_hidden, notes)),
        w_hh=rng.normal(0.0, weight_scale, (n_hidden, n_hidden)),
        w_ho=rng.normal(0.0, weight_scale, (notes, n_hidden)),
        b_h=rng.normal(0.0, weight_scale, n_hidden),
        b_o=rng.normal(0.0, weight_scale, notes),
    )
    frames = (rng.random((batch_size, steps, notes)) < density).astype(np.float64)
    return params, SequenceBatch(frames)


def state_jacobian(
    params: RnnParams,
    trace: ForwardTrace,
    t: int,
    k: int,
    sequence: int = 0,
    plan=None,
) -> np.ndarray:
    """
    Jacobian dX_t/dX_k of one sequence: the product over steps j = k+1..t
    of diag(f'(X_j)) W_hh(j). Its norm grows or shrinks geometrically with
    the spectral radius of W_hh.
    """
    steps = trace.hidden.shape[1]
    if not 0 <= k <= t < steps:
        raise ContractViolation(f"Need 0 <= k <= t < {steps}, got k={k}, t={t}")
    act = get_activation(trace.activation)
    jacobian = np.eye(params.n_hidden)
    for j in range(k + 1, t + 1):
        _, w_hh, _ = step_weights(params, plan, j)
        slope = act.derivative(trace.hidden[sequence, j])
        jacobian = (slope[:, None] * w_hh) @ jacobian
    return jacobian
