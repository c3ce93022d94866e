"""
Parameterization, forward pass and frame-level cross-entropy of a plain
recurrent network.

The hidden state follows X_t = f(W_hh X_{t-1} + W_ih u_t + b_h) with
X_{-1} = 0, and the output Y_t = sigmoid(W_ho X_t + b_o) is the predicted
distribution of frame t + 1. Every frame entry is an independent Bernoulli
variable.
"""
import hashlib
import zipfile
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import ContractViolation, DataError

PARAM_NAMES = ("w_ih", "w_hh", "w_ho", "b_h", "b_o")
WEIGHT_NAMES = ("w_ih", "w_hh", "w_ho")

# Log arguments are clamped to [LOG_CLAMP, 1 - LOG_CLAMP].
LOG_CLAMP = 1e-8
ZIP_TIMESTAMP = (1980, 1, 1, 0, 0, 0)


def sigmoid(x: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * x))


class Activation(NamedTuple):
    function: Callable[[np.ndarray], np.ndarray]
    # Derivative expressed through the activation's output.
    derivative: Callable[[np.ndarray], np.ndarray]


ACTIVATIONS = {
    "tanh": Activation(np.tanh, lambda h: 1.0 - h * h),
    "sigmoid": Activation(sigmoid, lambda h: h * (1.0 - h)),
    # Linear mode, only meant for closed-form checks of the Jacobian product.
    "identity": Activation(lambda x: x.copy(), np.ones_like),
}


def get_activation(name: str) -> Activation:
    try:
        return ACTIVATIONS[name]
    except KeyError:
        raise ContractViolation(
            f"Unknown activation '{name}', expected one of "
            f"{sorted(ACTIVATIONS)}"
        )


@dataclass
class ParamSet:
    """
    The five arrays of the network: input-to-hidden, hidden-to-hidden and
    hidden-to-output weights plus the hidden and output biases.
    """
    w_ih: np.ndarray
    w_hh: np.ndarray
    w_ho: np.ndarray
    b_h: np.ndarray
    b_o: np.ndarray

    def __post_init__(self):
        for field in fields(self):
            setattr(
                self, field.name,
                np.asarray(getattr(self, field.name), dtype=np.float64)
            )

    def arrays(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in PARAM_NAMES}

    def map(self, function: Callable, *others: "ParamSet"):
        """
        Apply `function` array-wise across this set and `others`.
        Args:
            function (Callable): Called as function(a, *b) for each of the
                five arrays.
            *others (ParamSet): Sets with the same shapes.
        Returns:
            ParamSet: A new set of the same class as this one.
        """
        return type(self)(**{
            name: function(getattr(self, name),
                           *(getattr(other, name) for other in others))
            for name in PARAM_NAMES
        })

    def copy(self):
        return self.map(np.copy)

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(a)) for a in self.arrays().values())

    @classmethod
    def zeros_like(cls, other: "ParamSet"):
        return cls(**{
            name: np.zeros_like(array)
            for name, array in other.arrays().items()
        })


@dataclass
class RnnParams(ParamSet):
    """
    Learnable parameters of the network.
    Shapes are w_ih [hidden x input], w_hh [hidden x hidden],
    w_ho [output x hidden], b_h [hidden] and b_o [output]. All entries must
    be finite.
    """

    def __post_init__(self):
        super().__post_init__()
        hidden = self.w_hh.shape[0] if self.w_hh.ndim == 2 else -1
        expected = {
            "w_ih": (hidden, self.w_ih.shape[-1] if self.w_ih.ndim else -1),
            "w_hh": (hidden, hidden),
            "w_ho": (self.w_ho.shape[0] if self.w_ho.ndim else -1, hidden),
            "b_h": (hidden,),
            "b_o": (self.w_ho.shape[0] if self.w_ho.ndim else -1,),
        }
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise ContractViolation(
                    f"{name} has shape {getattr(self, name).shape}, "
                    f"expected {shape}"
                )
        if not self.all_finite():
            raise ContractViolation("Parameters contain NaN or Inf entries.")

    @property
    def n_input(self) -> int:
        return self.w_ih.shape[1]

    @property
    def n_hidden(self) -> int:
        return self.w_hh.shape[0]

    @property
    def n_output(self) -> int:
        return self.w_ho.shape[0]

    def weight_shapes(self) -> dict[str, tuple[int, ...]]:
        return {name: getattr(self, name).shape for name in WEIGHT_NAMES}

    def digest(self) -> str:
        """SHA-256 over the raw bytes of the five arrays, in fixed order."""
        sha = hashlib.sha256()
        for name in PARAM_NAMES:
            sha.update(np.ascontiguousarray(getattr(self, name)).tobytes())
        return sha.hexdigest()

    def save(self, path: str | Path):
        """
        Write an .npz archive readable by numpy.load. Entries carry a fixed
        timestamp, so equal parameters give equal files.
        """
        with zipfile.ZipFile(path, "w") as archive:
            for name in PARAM_NAMES:
                info = zipfile.ZipInfo(f"{name}.npy", date_time=ZIP_TIMESTAMP)
                with archive.open(info, "w") as handle:
                    np.lib.format.write_array(handle, getattr(self, name))

    @classmethod
    def load(cls, path: str | Path) -> "RnnParams":
        with np.load(path) as archive:
            missing = [name for name in PARAM_NAMES if name not in archive]
            if missing:
                raise DataError(f"Parameter file {path} lacks {missing}")
            return cls(**{name: archive[name] for name in PARAM_NAMES})


@dataclass
class Gradients(ParamSet):
    """Derivatives of the loss, one array per parameter, same shapes."""

    def max_abs(self) -> float:
        return max(float(np.max(np.abs(a), initial=0.0))
                   for a in self.arrays().values())


@dataclass
class SequenceBatch:
    """
    Binary piano-roll frames [batch x T x notes].
    Attributes:
        frames (np.ndarray): Frame entries, each 0 or 1.
        lengths (np.ndarray): True length of each sequence, i.e. T minus
            its zero-padded prefix.
        pad_prefix (np.ndarray): Number of leading zero frames added by
            the chunking protocol.
        sources (np.ndarray): Index of the sequence each row was cut from,
            -1 when unknown.
    """
    frames: np.ndarray
    lengths: np.ndarray | None = None
    pad_prefix: np.ndarray | None = None
    sources: np.ndarray | None = None

    def __post_init__(self):
        self.frames = np.asarray(self.frames, dtype=np.float64)
        if self.frames.ndim != 3:
            raise ContractViolation(
                f"Frames must be [batch x T x notes], got shape "
                f"{self.frames.shape}"
            )
        if not np.all((self.frames == 0.0) | (self.frames == 1.0)):
            raise DataError("Frame entries must be binary (0 or 1).")
        n, steps = self.frames.shape[:2]
        if self.pad_prefix is None:
            self.pad_prefix = np.zeros(n, dtype=np.int64)
        self.pad_prefix = np.asarray(self.pad_prefix, dtype=np.int64)
        if self.lengths is None:
            self.lengths = steps - self.pad_prefix
        self.lengths = np.asarray(self.lengths, dtype=np.int64)
        if self.sources is None:
            self.sources = np.full(n, -1, dtype=np.int64)
        self.sources = np.asarray(self.sources, dtype=np.int64)
        for name in ("lengths", "pad_prefix", "sources"):
            if getattr(self, name).shape != (n,):
                raise ContractViolation(f"{name} must hold one entry per row")
        if np.any(self.pad_prefix < 0) or np.any(self.pad_prefix > steps):
            raise DataError(f"pad_prefix must lie within [0, {steps}]")
        for row, pad in enumerate(self.pad_prefix):
            if np.any(self.frames[row, :pad]):
                raise DataError(f"Row {row} has notes inside its padding.")

    @property
    def n_sequences(self) -> int:
        return self.frames.shape[0]

    @property
    def steps(self) -> int:
        return self.frames.shape[1]

    @property
    def frame_dim(self) -> int:
        return self.frames.shape[2]

    def select(self, indices: Sequence[int] | np.ndarray) -> "SequenceBatch":
        indices = np.asarray(indices, dtype=np.int64)
        return SequenceBatch(
            self.frames[indices],
            self.lengths[indices],
            self.pad_prefix[indices],
            self.sources[indices],
        )

    def split_rows(self) -> list["SequenceBatch"]:
        return [self.select([row]) for row in range(self.n_sequences)]


@dataclass
class ForwardTrace:
    """
    Everything the backward pass needs from one forward pass.
    Attributes:
        hidden (np.ndarray): X_t, [batch x T x hidden].
        hidden_pre (np.ndarray): Hidden pre-activations.
        outputs (np.ndarray): Y_t for t < T - 1, [batch x (T-1) x notes].
        output_pre (np.ndarray): Output pre-activations.
        activation (str): Name of the hidden non-linearity used.
    """
    hidden: np.ndarray
    hidden_pre: np.ndarray
    outputs: np.ndarray
    output_pre: np.ndarray
    activation: str = "tanh"


def step_weights(params: RnnParams, plan, t: int):
    """Weights used at step t: the plan's effective copy, or the clean ones."""
    if plan is None:
        return params.w_ih, params.w_hh, params.w_ho
    return plan.weights_at(params, t)


def check_compatible(params: RnnParams, batch: SequenceBatch, plan=None):
    if batch.frame_dim != params.n_input:
        raise ContractViolation(
            f"Frames have {batch.frame_dim} notes but w_ih expects "
            f"{params.n_input}"
        )
    if params.n_output != batch.frame_dim:
        raise ContractViolation(
            f"Outputs predict {params.n_output} notes but frames have "
            f"{batch.frame_dim}"
        )
    if plan is not None:
        plan.check_compatible(params, batch.steps)


def forward(
    params: RnnParams,
    batch: SequenceBatch,
    plan=None,
    activation: str = "tanh",
) -> ForwardTrace:
    """
    Run the network over a batch.
    Args:
        params (RnnParams): Clean parameters, never modified.
        batch (SequenceBatch): Input frames.
        plan (PerturbationPlan, optional): Realized noise or masks; the
            weights at step t are the plan's effective weights.
        activation (str): Hidden non-linearity, "tanh" by default.
    Returns:
        ForwardTrace: Hidden states, outputs and pre-activations.
    Raises:
        ContractViolation: If shapes do not match.
    """
    check_compatible(params, batch, plan)
    act = get_activation(activation)
    n, steps = batch.n_sequences, batch.steps
    hidden = np.zeros((n, steps, params.n_hidden))
    hidden_pre = np.zeros_like(hidden)
    outputs = np.zeros((n, max(steps - 1, 0), params.n_output))
    output_pre = np.zeros_like(outputs)

    state = np.zeros((n, params.n_hidden))
    for t in range(steps):
        w_ih, w_hh, w_ho = step_weights(params, plan, t)
        pre = state @ w_hh.T + batch.frames[:, t] @ w_ih.T + params.b_h
        state = act.function(pre)
        hidden_pre[:, t] = pre
        hidden[:, t] = state
        if t < steps - 1:
            output_pre[:, t] = state @ w_ho.T + params.b_o
            outputs[:, t] = sigmoid(output_pre[:, t])
    return ForwardTrace(hidden, hidden_pre, outputs, output_pre, activation)


def clamped_outputs(trace: ForwardTrace) -> np.ndarray:
    return np.clip(trace.outputs, LOG_CLAMP, 1.0 - LOG_CLAMP)


def sequence_losses(trace: ForwardTrace, batch: SequenceBatch) -> np.ndarray:
    """
    Cross-entropy of each sequence, summed over notes and averaged over the
    T - 1 predicted frames. Sequences shorter than two frames score 0.
    """
    if trace.outputs.shape[:2] != (batch.n_sequences, max(batch.steps - 1, 0)):
        raise ContractViolation("Trace was not produced from this batch.")
    if batch.steps < 2:
        return np.zeros(batch.n_sequences)
    y = clamped_outputs(trace)
    x = batch.frames[:, 1:]
    nll = -(x * np.log(y) + (1.0 - x) * np.log1p(-y))
    return nll.sum(axis=(1, 2)) / (batch.steps - 1)


def ce_loss(trace: ForwardTrace, batch: SequenceBatch) -> float:
    """
    Mean frame-level cross-entropy in nats.
    The output at step t predicts frame t + 1; the 88 note terms are
    summed, time steps and sequences averaged. Padded prefix frames count
    as ordinary silent frames.
    Args:
        trace (ForwardTrace): Forward pass over `batch`.
        batch (SequenceBatch): The frames that produced `trace`.
    Returns:
        float: The loss, 0 when the batch has fewer than two frames.
    """
    return float(np.mean(sequence_losses(trace, batch)))


def evaluate(
    params: RnnParams,
    test: SequenceBatch | Sequence[SequenceBatch],
    activation: str = "tanh",
) -> float:
    """
    Clean-weight cross-entropy of a test set whose sequences may differ in
    length: each sequence is averaged over its own time steps, then the
    sequence values are averaged.
    Args:
        params (RnnParams): Parameters to evaluate, without perturbation.
        test (SequenceBatch | Sequence[SequenceBatch]): Unchunked test
            sequences, as one batch or one batch per length.
    Returns:
        float: Mean per-sequence cross-entropy.
    Raises:
        DataError: If no test sequence has at least two frames.
    """
    batches = [test] if isinstance(test, SequenceBatch) else list(test)
    losses = []
    for batch in batches:
        if batch.steps < 2:
            continue
        trace = forward(params, batch, activation=activation)
        losses.append(sequence_losses(trace, batch))
    if not losses or sum(len(item) for item in losses) == 0:
        raise DataError("Test set holds no sequence with two or more frames.")
    return float(np.mean(np.concatenate(losses)))


def with_array(params: RnnParams, name: str, array: np.ndarray) -> RnnParams:
    """Copy of `params` with one array swapped."""
    return replace(params, **{name: array})
