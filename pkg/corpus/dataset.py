"""
Piano-roll corpora: the JSON on-disk format, the chunk-and-pad protocol
used for training, and a synthetic corpus with a known memory length.

On disk a dataset is a JSON object with keys "train", "valid" and "test".
Each split is a list of sequences, each sequence a list of frames, each
frame a sorted list of active note indices in [0, 88) (MIDI pitch minus
21, so index 0 is A0).
"""
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from network.errors import ContractViolation, DataError
from network.model import SequenceBatch

NOTE_COUNT = 88
MIDI_OFFSET = 21
DEFAULT_CHUNK_LENGTH = 100
SPLITS = ("train", "valid", "test")
SPLIT_FRACTIONS = (0.6, 0.2, 0.2)

# Synthetic corpus: chords live in the low register, noise notes in the
# high register, so the two never collide.
CHORD_REGISTER = NOTE_COUNT // 2
NOISE_NOTES = NOTE_COUNT - CHORD_REGISTER

Frame = tuple[int, ...]


@dataclass
class PianoRollDataset:
    """
    Three splits of note-index sequences.
    Attributes:
        train (list): Training sequences.
        valid (list): Validation sequences.
        test (list): Test sequences.
    """
    train: list[list[Frame]] = field(default_factory=list)
    valid: list[list[Frame]] = field(default_factory=list)
    test: list[list[Frame]] = field(default_factory=list)

    def splits(self) -> dict[str, list[list[Frame]]]:
        return {name: getattr(self, name) for name in SPLITS}

    def to_json(self) -> dict:
        return {
            name: [[list(frame) for frame in sequence] for sequence in split]
            for name, split in self.splits().items()
        }

    def save(self, path: str | Path):
        Path(path).write_text(json.dumps(self.to_json()))


def _parse_split(name: str, raw) -> list[list[Frame]]:
    if not isinstance(raw, list):
        raise DataError(f"Split '{name}' must be a list of sequences.")
    sequences = []
    for i, sequence in enumerate(raw):
        if not isinstance(sequence, list):
            raise DataError(f"{name}[{i}] must be a list of frames.")
        frames = []
        for j, frame in enumerate(sequence):
            if not isinstance(frame, list) or not all(
                isinstance(note, int) and not isinstance(note, bool)
                for note in frame
            ):
                raise DataError(
                    f"{name}[{i}] frame {j} must be a list of integers."
                )
            bad = [note for note in frame if not 0 <= note < NOTE_COUNT]
            if bad:
                raise DataError(
                    f"{name}[{i}] frame {j} has notes {bad} outside "
                    f"[0, {NOTE_COUNT})."
                )
            frames.append(tuple(sorted(set(frame))))
        sequences.append(frames)
    return sequences


def from_json(raw: dict) -> PianoRollDataset:
    if not isinstance(raw, dict):
        raise DataError("Dataset must be a JSON object.")
    unknown = sorted(set(raw) - set(SPLITS))
    missing = sorted(set(SPLITS) - set(raw))
    if unknown or missing:
        raise DataError(
            f"Dataset keys must be {list(SPLITS)}; unknown {unknown}, "
            f"missing {missing}."
        )
    return PianoRollDataset(**{
        name: _parse_split(name, raw[name]) for name in SPLITS
    })


def load(path: str | Path, manifest_path: str | Path | None = None) -> PianoRollDataset:
    """
    Read a dataset from its JSON file.
    Args:
        path (str | Path): Dataset file.
        manifest_path (str | Path, optional): Where to write the
            reproducibility manifest.
    Returns:
        PianoRollDataset: The parsed dataset.
    Raises:
        DataError: If the file is missing, malformed, or holds notes out of
            range.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise DataError(f"Dataset file {path} not found.")
    except json.JSONDecodeError as e:
        raise DataError(f"{path}: malformed JSON at line {e.lineno}: {e.msg}")
    dataset = from_json(raw)
    counts = {name: len(split) for name, split in dataset.splits().items()}
    logging.info(f"Loaded dataset {path} with sequence counts {counts}")
    if manifest_path is not None:
        write_manifest(dataset, manifest_path)
    return dataset


def dataset_manifest(dataset: PianoRollDataset) -> dict:
    """Sequence counts, frame counts and note range per split."""
    manifest = {"note_count": NOTE_COUNT, "splits": {}}
    for name, split in dataset.splits().items():
        notes = [note for sequence in split for frame in sequence for note in frame]
        manifest["splits"][name] = {
            "sequences": len(split),
            "frames": sum(len(sequence) for sequence in split),
            "active_notes": len(notes),
            "min_note": min(notes) if notes else None,
            "max_note": max(notes) if notes else None,
        }
    return manifest


def write_manifest(dataset: PianoRollDataset, path: str | Path):
    Path(path).write_text(json.dumps(dataset_manifest(dataset), indent=2))


def to_piano_roll(sequence: Sequence[Frame], note_count: int = NOTE_COUNT) -> np.ndarray:
    """Binary [T x note_count] matrix of one sequence."""
    roll = np.zeros((len(sequence), note_count))
    for t, frame in enumerate(sequence):
        roll[t, list(frame)] = 1.0
    return roll


@dataclass
class ChunkedDataset:
    """
    Attributes:
        train (SequenceBatch): Fixed-length training chunks.
        valid (SequenceBatch): Fixed-length validation chunks.
        test (list[SequenceBatch]): Unchunked test sequences, one batch per
            distinct length.
    """
    train: SequenceBatch
    valid: SequenceBatch
    test: list[SequenceBatch]


def chunk_sequences(
    sequences: Sequence[Sequence[Frame]], length: int = DEFAULT_CHUNK_LENGTH
) -> SequenceBatch:
    """
    Cut sequences into consecutive windows of `length` frames.
    A window shorter than `length`, either the tail of a sequence or a
    whole short sequence, is zero-padded at the front and its padding
    recorded in pad_prefix.
    """
    if length < 1:
        raise ContractViolation("Chunk length must be at least 1.")
    windows, pads, sources = [], [], []
    for source, sequence in enumerate(sequences):
        roll = to_piano_roll(sequence)
        for start in range(0, len(roll), length):
            window = roll[start:start + length]
            pad = length - len(window)
            windows.append(np.vstack([np.zeros((pad, NOTE_COUNT)), window]))
            pads.append(pad)
            sources.append(source)
    if not windows:
        return SequenceBatch(np.zeros((0, length, NOTE_COUNT)))
    pads = np.asarray(pads)
    return SequenceBatch(np.stack(windows), length - pads, pads, sources)


def join_chunks(batch: SequenceBatch) -> list[np.ndarray]:
    """Rebuild the source sequences of a chunked batch, dropping padding."""
    pieces: dict[int, list[np.ndarray]] = {}
    for row in range(batch.n_sequences):
        pad = batch.pad_prefix[row]
        pieces.setdefault(int(batch.sources[row]), []).append(
            batch.frames[row, pad:]
        )
    return [np.vstack(pieces[source]) for source in sorted(pieces)]


def sequence_batches(sequences: Sequence[Sequence[Frame]]) -> list[SequenceBatch]:
    """Unchunked sequences grouped into one batch per distinct length."""
    by_length: dict[int, list[int]] = {}
    for index, sequence in enumerate(sequences):
        by_length.setdefault(len(sequence), []).append(index)
    return [
        SequenceBatch(
            np.stack([to_piano_roll(sequences[i]) for i in indices]),
            sources=indices,
        )
        for steps, indices in sorted(by_length.items())
        if steps > 0
    ]


def chunk(dataset: PianoRollDataset, length: int = DEFAULT_CHUNK_LENGTH) -> ChunkedDataset:
    """
    Apply the training protocol: train and validation sequences become
    `length`-frame chunks, test sequences keep their original lengths.
    """
    return ChunkedDataset(
        train=chunk_sequences(dataset.train, length),
        valid=chunk_sequences(dataset.valid, length),
        test=sequence_batches(dataset.test),
    )


def split_sequences(
    sequences: Sequence[list[Frame]],
    seed: int = 0,
    fractions: tuple[float, float, float] = SPLIT_FRACTIONS,
) -> PianoRollDataset:
    """Shuffle sequences and split them approximately 60/20/20."""
    order = np.random.default_rng(seed).permutation(len(sequences))
    n_train = int(round(fractions[0] * len(sequences)))
    n_valid = int(round(fractions[1] * len(sequences)))
    pick = lambda indices: [list(sequences[i]) for i in indices]
    return PianoRollDataset(
        train=pick(order[:n_train]),
        valid=pick(order[n_train:n_train + n_valid]),
        test=pick(order[n_train + n_valid:]),
    )


def convert_pitch_lists(raw: dict, offset: int = MIDI_OFFSET) -> PianoRollDataset:
    """
    Convert a corpus stored as MIDI pitch numbers (the layout of the
    published polyphonic music pickles) to 0-based note indices.
    """
    converted = {}
    for name in SPLITS:
        converted[name] = [
            [sorted(int(pitch) - offset for pitch in frame) for frame in sequence]
            for sequence in raw.get(name, [])
        ]
    return from_json(converted)


def synthesize(
    seed: int,
    n_sequences: int,
    steps: int,
    motif_gap: int,
    noise_rate: float = 0.05,
    chord_size: int = 3,
) -> PianoRollDataset:
    """
    Synthetic corpus whose best predictor needs a memory of `motif_gap`
    frames.
    Each sequence opens with `motif_gap` random chords of `chord_size`
    low-register notes; from then on the chord at t repeats the chord at
    t - motif_gap. Every high-register note is also switched on
    independently with probability `noise_rate` in every frame.
    Args:
        seed (int): Seed; equal seeds give identical datasets.
        n_sequences (int): Number of sequences, split 60/20/20.
        steps (int): Frames per sequence.
        motif_gap (int): Repetition distance, smaller than `steps`.
    Returns:
        PianoRollDataset: The generated dataset.
    """
    if not 1 <= motif_gap < steps:
        raise ContractViolation(f"motif_gap must lie within [1, {steps})")
    if not 1 <= chord_size <= CHORD_REGISTER:
        raise ContractViolation(f"chord_size must lie within [1, {CHORD_REGISTER}]")
    rng = np.random.default_rng(seed)
    sequences = []
    for _ in range(n_sequences):
        motif = [
            rng.choice(CHORD_REGISTER, size=chord_size, replace=False)
            for _ in range(motif_gap)
        ]
        noise = rng.random((steps, NOISE_NOTES)) < noise_rate
        sequence = []
        for t in range(steps):
            chord = motif[t % motif_gap]
            extra = CHORD_REGISTER + np.flatnonzero(noise[t])
            sequence.append(tuple(sorted(int(n) for n in np.concatenate([chord, extra]))))
        sequences.append(sequence)
    return split_sequences(sequences, seed)


def bernoulli_entropy(p: float) -> float:
    if p in (0.0, 1.0):
        return 0.0
    return float(-p * np.log(p) - (1.0 - p) * np.log1p(-p))


def oracle_cross_entropy(noise_rate: float) -> float:
    """
    Per-frame cross-entropy of the best predictor of a synthetic frame
    once its chord is known: only the noise notes remain uncertain.
    """
    return NOISE_NOTES * bernoulli_entropy(noise_rate)


def oracle_predictions(roll: np.ndarray, motif_gap: int, noise_rate: float) -> np.ndarray:
    """
    Note probabilities for frames motif_gap.. of a synthetic piano roll:
    the chord register copies frame t - motif_gap, noise notes get
    `noise_rate`.
    """
    predictions = np.full((len(roll) - motif_gap, NOTE_COUNT), noise_rate)
    predictions[:, :CHORD_REGISTER] = roll[:-motif_gap, :CHORD_REGISTER]
    return predictions

