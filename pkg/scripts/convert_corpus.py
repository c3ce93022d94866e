"""
Convert a published polyphonic music pickle into the dataset JSON format.

The pickles hold a dict with "train", "valid" and "test" keys; every
sequence is a list of frames and every frame a collection of MIDI pitch
numbers. Pitches are shifted by --offset (21, so A0 becomes note 0).

    python scripts/convert_corpus.py JSB_Chorales.pickle jsb_chorales.json
"""
import logging
import os
import pickle
import sys
from pathlib import Path

import click

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from corpus.dataset import MIDI_OFFSET, convert_pitch_lists, write_manifest  # noqa: E402
from network.errors import DataError  # noqa: E402


@click.command()
@click.argument("source", type=click.Path(exists=True, dir_okay=False))
@click.argument("target", type=click.Path(dir_okay=False))
@click.option("--offset", type=int, default=MIDI_OFFSET, show_default=True,
              help="MIDI pitch of note index 0.")
def main(source: str, target: str, offset: int):
    logging.basicConfig(level=logging.INFO)
    with open(source, "rb") as handle:
        raw = pickle.load(handle)
    if not isinstance(raw, dict):
        raise click.ClickException(f"{source} does not hold a dict of splits")
    try:
        dataset = convert_pitch_lists(raw, offset)
    except DataError as e:
        raise click.ClickException(str(e))
    target = Path(target)
    dataset.save(target)
    manifest = target.with_suffix(".manifest.json")
    write_manifest(dataset, manifest)
    counts = {name: len(split) for name, split in dataset.splits().items()}
    logging.info(f"Wrote {target} with sequence counts {counts} and manifest {manifest}")


if __name__ == "__main__":
    main()
