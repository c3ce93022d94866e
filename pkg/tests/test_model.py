import math

import numpy as np
import pytest

from network.errors import ContractViolation, DataError
from network.model import (
    LOG_CLAMP, RnnParams, SequenceBatch, ce_loss, evaluate, forward,
    get_activation, sequence_losses,
)


def zero_params(n_hidden: int, notes: int) -> RnnParams:
    return RnnParams(
        w_ih=np.zeros((n_hidden, notes)),
        w_hh=np.zeros((n_hidden, n_hidden)),
        w_ho=np.zeros((notes, n_hidden)),
        b_h=np.zeros(n_hidden),
        b_o=np.zeros(notes),
    )


def test_forward_shapes(small_problem):
    params, batch = small_problem
    trace = forward(params, batch)
    assert trace.hidden.shape == (2, 7, 5)
    assert trace.outputs.shape == (2, 6, 4)
    assert np.all((trace.outputs > 0) & (trace.outputs < 1))


def test_uninformative_network_scores_ln2_per_note(rng):
    batch = SequenceBatch((rng.random((3, 5, 4)) < 0.5).astype(float))
    trace = forward(zero_params(2, 4), batch)
    assert ce_loss(trace, batch) == pytest.approx(4 * math.log(2))


def test_output_predicts_next_frame():
    frames = np.zeros((1, 3, 1))
    frames[0, 1, 0] = 1.0
    params = zero_params(1, 1)
    params.b_o[:] = 2.0
    trace = forward(params, SequenceBatch(frames))
    y = 1 / (1 + math.exp(-2.0))
    # Step 0 predicts the active frame 1, step 1 predicts the silent frame 2.
    expected = (-math.log(y) - math.log(1 - y)) / 2
    assert ce_loss(trace, SequenceBatch(frames)) == pytest.approx(expected)


def test_saturated_output_is_clamped():
    frames = np.zeros((1, 2, 1))
    params = zero_params(1, 1)
    params.b_o[:] = 100.0
    batch = SequenceBatch(frames)
    loss = ce_loss(forward(params, batch), batch)
    assert math.isfinite(loss)
    assert loss == pytest.approx(-math.log(LOG_CLAMP), rel=1e-6)


def test_short_sequences_score_zero():
    batch = SequenceBatch(np.ones((2, 1, 3)))
    trace = forward(zero_params(2, 3), batch)
    assert trace.outputs.shape == (2, 0, 3)
    assert ce_loss(trace, batch) == 0.0


def test_forward_leaves_params_untouched(small_problem):
    params, batch = small_problem
    digest = params.digest()
    forward(params, batch)
    assert params.digest() == digest


def test_params_reject_bad_shapes():
    params = zero_params(3, 4)
    with pytest.raises(ContractViolation):
        RnnParams(params.w_ih, params.w_hh, params.w_ho, np.zeros(2), params.b_o)
    with pytest.raises(ContractViolation):
        RnnParams(params.w_ih, np.zeros((3, 2)), params.w_ho, params.b_h, params.b_o)


def test_params_reject_non_finite():
    params = zero_params(2, 2)
    w_hh = params.w_hh.copy()
    w_hh[0, 0] = np.nan
    with pytest.raises(ContractViolation):
        RnnParams(params.w_ih, w_hh, params.w_ho, params.b_h, params.b_o)


def test_forward_rejects_wrong_frame_width(small_problem):
    params, _ = small_problem
    with pytest.raises(ContractViolation):
        forward(params, SequenceBatch(np.zeros((1, 3, 6))))


def test_batch_rejects_non_binary_frames():
    with pytest.raises(DataError):
        SequenceBatch(np.full((1, 2, 2), 0.5))


def test_batch_rejects_notes_inside_padding():
    frames = np.zeros((1, 4, 2))
    frames[0, 0, 1] = 1.0
    with pytest.raises(DataError):
        SequenceBatch(frames, pad_prefix=[2])


def test_batch_lengths_follow_padding():
    batch = SequenceBatch(np.zeros((2, 5, 2)), pad_prefix=[0, 3])
    assert batch.lengths.tolist() == [5, 2]
    assert batch.select([1]).pad_prefix.tolist() == [3]


def test_evaluate_averages_sequences_of_different_lengths(small_problem):
    params, _ = small_problem
    rng = np.random.default_rng(4)
    long = SequenceBatch((rng.random((1, 9, 4)) < 0.3).astype(float))
    short = SequenceBatch((rng.random((2, 3, 4)) < 0.3).astype(float))
    single = SequenceBatch(np.ones((1, 1, 4)))
    per_sequence = np.concatenate([
        sequence_losses(forward(params, long), long),
        sequence_losses(forward(params, short), short),
    ])
    assert evaluate(params, [long, short, single]) == pytest.approx(per_sequence.mean())


def test_evaluate_needs_a_usable_sequence(small_problem):
    params, _ = small_problem
    with pytest.raises(DataError):
        evaluate(params, [SequenceBatch(np.zeros((2, 1, 4)))])


def test_unknown_activation():
    with pytest.raises(ContractViolation):
        get_activation("relu")


def test_save_and_load(tmp_path, small_problem):
    params, _ = small_problem
    first, second = tmp_path / "a.npz", tmp_path / "b.npz"
    params.save(first)
    params.copy().save(second)
    assert RnnParams.load(first).digest() == params.digest()
    assert first.read_bytes() == second.read_bytes()


def test_forward_matches_a_scalar_loop():
    rng = np.random.default_rng(11)
    n_hidden, notes, steps = 4, 3, 3
    params = RnnParams(
        w_ih=rng.normal(0.0, 0.5, (n_hidden, notes)),
        w_hh=rng.normal(0.0, 0.5, (n_hidden, n_hidden)),
        w_ho=rng.normal(0.0, 0.5, (notes, n_hidden)),
        b_h=rng.normal(0.0, 0.5, n_hidden),
        b_o=rng.normal(0.0, 0.5, notes),
    )
    frames = (rng.random((1, steps, notes)) < 0.5).astype(float)
    batch = SequenceBatch(frames)
    trace = forward(params, batch)

    state = [0.0] * n_hidden
    total = 0.0
    for t in range(steps):
        state = [
            math.tanh(
                params.b_h[i]
                + sum(params.w_hh[i, j] * state[j] for j in range(n_hidden))
                + sum(params.w_ih[i, k] * frames[0, t, k] for k in range(notes))
            )
            for i in range(n_hidden)
        ]
        for i in range(n_hidden):
            assert trace.hidden[0, t, i] == pytest.approx(state[i], abs=1e-12)
        if t == steps - 1:
            break
        for k in range(notes):
            y = 1.0 / (1.0 + math.exp(-(
                params.b_o[k] + sum(params.w_ho[k, i] * state[i] for i in range(n_hidden))
            )))
            assert trace.outputs[0, t, k] == pytest.approx(y, abs=1e-12)
            x = frames[0, t + 1, k]
            total -= x * math.log(y) + (1.0 - x) * math.log(1.0 - y)
    assert ce_loss(trace, batch) == pytest.approx(total / (steps - 1), abs=1e-12)
