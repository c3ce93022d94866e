"""
Long-running reproduction of the published test cross-entropies: trains
the shipped preset of every requested variant on a converted corpus and
compares the result with the reported number. Expect hours per variant
on the full corpora; nothing in the test suite runs this.

    python scripts/reproduce_results.py --corpus jsb_chorales \
        --dataset jsb_chorales.json --variant plain
"""
import logging
import os
import sys
from pathlib import Path

import click

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from corpus.dataset import load  # noqa: E402
from harness.outputs import write_json, write_trace_csv  # noqa: E402
from harness.presets import (  # noqa: E402
    BEST_CONFIGURATIONS, COLUMNS, REPORTED_TEST_CE, preset,
)
from harness.training import train  # noqa: E402


@click.command()
@click.option("--corpus", type=click.Choice(sorted(BEST_CONFIGURATIONS)), required=True)
@click.option("--dataset", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--variant", "variants", multiple=True,
              type=click.Choice(("plain",) + COLUMNS),
              help="Variants to train; all of them by default.")
@click.option("--rho", type=float, default=None,
              help="Override the published spectral radius of every variant.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--output-dir", default="reproduction", show_default=True)
def main(corpus, dataset, variants, rho, seed, output_dir):
    logging.basicConfig(level=logging.INFO)
    out = Path(output_dir) / corpus
    out.mkdir(parents=True, exist_ok=True)
    data = load(dataset, manifest_path=out / "manifest.json")
    results = {}
    for variant in variants or ("plain",) + COLUMNS:
        config = preset(corpus, variant, rho).with_seed(seed)
        trace = train(config, data, label=f"{corpus}/{variant}")
        write_trace_csv(out / f"trace_{variant}.csv", trace)
        trace.params.save(out / f"params_{variant}.npz")
        reported = REPORTED_TEST_CE[corpus][variant]
        results[variant] = {
            "test_ce": trace.test_ce,
            "reported_test_ce": reported,
            "difference": trace.test_ce - reported,
            "best_epoch": trace.best_epoch,
            "final_spectral_radius": trace.records[-1].spectral_radius,
            "diverged": trace.diverged,
        }
        click.echo(f"{variant}: test_ce={trace.test_ce:.3f} reported={reported:.2f}")
    write_json(out / "results.json", results)


if __name__ == "__main__":
    main()
