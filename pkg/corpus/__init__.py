from .dataset import (
    DEFAULT_CHUNK_LENGTH, NOTE_COUNT, ChunkedDataset, PianoRollDataset,
    chunk, dataset_manifest, join_chunks, load, synthesize,
)

__all__ = [
    "DEFAULT_CHUNK_LENGTH", "NOTE_COUNT", "ChunkedDataset",
    "PianoRollDataset", "chunk", "dataset_manifest", "join_chunks", "load",
    "synthesize",
]
