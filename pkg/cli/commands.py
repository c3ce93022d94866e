import functools
import json
import logging
import os
from pathlib import Path

import click
from pydantic import ValidationError

from corpus.dataset import (
    NOTE_COUNT, SPLITS, load, oracle_cross_entropy, sequence_batches,
    synthesize, write_manifest,
)
from harness.config import VARIANTS, HyperConfig, SearchRanges, variant_regularizers
from harness.database import ResultStore
from harness.outputs import (
    write_json, write_search_json, write_surface_csv, write_surface_rows_csv,
    write_sweep_csv, write_trace_csv,
)
from harness.presets import preset_by_name
from harness.search import random_search
from harness.surface import demo_surface, max_weight_gradient
from harness.sweep import SWEEP_AXES, sweep
from harness.training import train
from network.errors import (
    ContractViolation, DataError, DivergenceError, LabError, SchemaError,
)
from network.grad import DEFAULT_EPS, STENCILS, grad_check, random_problem
from network.model import RnnParams, evaluate
from network.perturb import PerturbationSpec, RegPenaltySpec, sample_plan

OUTPUT_DIR_ENV = "RNNLAB_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "runs"
GRADCHECK_TOLERANCE = 1e-5

# Sections that exist only when a run asks for them.
OPTIONAL_SECTIONS = ("perturbation", "penalty")

# Command-line flag -> dotted configuration key.
FLAG_KEYS = {
    "max_epochs": "max_epochs",
    "patience": "patience",
    "hidden": "hidden_units",
    "batch_size": "batch_size",
    "chunk_length": "chunk_length",
    "method": "optimizer.method",
    "step_rate": "optimizer.step_rate",
    "momentum": "optimizer.mu",
    "rho": "init.rho_target",
    "sparsify": "init.sparsify_k",
    "sigma_hh": "init.sigma_hh",
    "sigma_ih": "init.sigma_ih",
    "sigma": "perturbation.sigma",
    "drop_p": "perturbation.drop_p",
    "lam": "penalty.lambda",
    "norm": "penalty.norm",
}

# Checked in order: the first matching class decides the exit status.
EXIT_CODES = (
    (SchemaError, 2),
    (ValidationError, 2),
    (DataError, 3),
    (ContractViolation, 4),
    (DivergenceError, 5),
    (LabError, 1),
)


class RunConfig(HyperConfig):
    """
    A config file: one training run plus where its data and outputs live.
    Attributes:
        dataset (str): Path of the dataset JSON file.
        output_dir (str): Directory receiving the result files.
    """
    dataset: str | None = None
    output_dir: str | None = None


class CommandError(click.ClickException):
    def __init__(self, message: str, exit_code: int):
        super().__init__(message)
        self.exit_code = exit_code


def validation_keys(error: ValidationError) -> list[str]:
    return [".".join(str(part) for part in item["loc"]) for item in error.errors()]


def describe(error: Exception) -> str:
    if isinstance(error, ValidationError):
        return f"Invalid configuration, offending keys: {validation_keys(error)}"
    if isinstance(error, SchemaError) and error.keys:
        return f"{error} (keys: {error.keys})"
    return str(error)


def handle_errors(command):
    """Turn domain errors into a one-line message and an exit status."""
    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except (LabError, ValidationError) as e:
            code = next(code for kind, code in EXIT_CODES if isinstance(e, kind))
            logging.debug(f"{type(e).__name__}: {e}")
            raise CommandError(describe(e), code)
    return wrapper


def merge(base: dict, update: dict) -> dict:
    merged = dict(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def set_key(raw: dict, dotted: str, value):
    *parents, leaf = dotted.split(".")
    node = raw
    for key in parents:
        if node.get(key) is None:
            if key in OPTIONAL_SECTIONS:
                raise SchemaError(
                    f"Cannot set {dotted}: the run has no {key}", [dotted]
                )
            node[key] = {}
        node = node[key]
    node[leaf] = value


def parse_assignment(text: str) -> tuple[str, object]:
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise SchemaError(f"Expected KEY=VALUE, got '{text}'", [text])
    try:
        return key, json.loads(value)
    except json.JSONDecodeError:
        return key, value


def read_json(path: str | Path, what: str) -> dict:
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise SchemaError(f"{what} {path} is not valid JSON: {e.msg} at line {e.lineno}")
    if not isinstance(raw, dict):
        raise SchemaError(f"{what} {path} must hold a JSON object")
    return raw


def build_config(
    config_path: str | None,
    preset: str | None,
    flags: dict,
    assignments: tuple[str, ...] = (),
    variant: str | None = None,
    seed: int | None = None,
) -> RunConfig:
    """
    Layer a run configuration: preset, then config file, then flags.
    Raises:
        SchemaError: Listing the offending keys when validation fails.
    """
    raw = {}
    if preset is not None:
        try:
            raw = preset_by_name(preset).model_dump(mode="json", by_alias=True)
        except ContractViolation as e:
            raise SchemaError(str(e), ["preset"])
    if config_path is not None:
        raw = merge(raw, read_json(config_path, "Config file"))
    if variant is not None:
        perturbation, penalty = variant_regularizers(
            variant,
            sigma=flags.pop("sigma", None),
            drop_p=flags.pop("drop_p", None),
            norm=flags.pop("norm", None) or "L2",
            lam=flags.pop("lam", None),
        )
        raw["perturbation"] = perturbation and perturbation.model_dump(mode="json")
        raw["penalty"] = penalty and penalty.model_dump(mode="json", by_alias=True)
    for name, value in flags.items():
        if value is not None:
            set_key(raw, FLAG_KEYS[name], value)
    for text in assignments:
        set_key(raw, *parse_assignment(text))
    try:
        config = RunConfig.model_validate(raw)
    except ValidationError as e:
        keys = validation_keys(e)
        raise SchemaError(f"Invalid configuration, offending keys: {keys}", keys)
    if seed is not None:
        config = config.with_seed(seed)
    return config


def output_dir(flag: str | None, config: RunConfig | None = None) -> Path:
    """The --output-dir flag, else the config's, else $RNNLAB_OUTPUT_DIR."""
    chosen = flag or (config.output_dir if config else None) \
        or os.environ.get(OUTPUT_DIR_ENV, DEFAULT_OUTPUT_DIR)
    path = Path(chosen)
    path.mkdir(parents=True, exist_ok=True)
    return path


def dataset_path(flag: str | None, config: RunConfig | None = None) -> str:
    chosen = flag or (config.dataset if config else None)
    if not chosen:
        raise DataError("No dataset given; pass --dataset or set it in the config file.")
    return chosen


def hyper_options(command):
    """Options shared by every command that trains networks."""
    options = [
        click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
                     help="JSON run configuration."),
        click.option("--preset", default=None,
                     help="Published configuration, written corpus/variant."),
        click.option("--variant", type=click.Choice(sorted(VARIANTS)), default=None,
                     help="Replace the regularizer by a named variant."),
        click.option("--dataset", default=None, type=click.Path(dir_okay=False),
                     help="Dataset JSON file."),
        click.option("--output-dir", default=None, help="Directory for result files."),
        click.option("--seed", type=int, default=None,
                     help="Seed of initialization and training."),
        click.option("--max-epochs", type=int, default=None),
        click.option("--patience", type=int, default=None),
        click.option("--hidden", type=int, default=None),
        click.option("--batch-size", type=int, default=None),
        click.option("--chunk-length", type=int, default=None),
        click.option("--method", type=click.Choice(["momentum", "nag", "rmsprop"]), default=None),
        click.option("--step-rate", type=float, default=None),
        click.option("--momentum", type=float, default=None),
        click.option("--rho", type=float, default=None, help="Target spectral radius."),
        click.option("--sparsify", type=int, default=None),
        click.option("--sigma-hh", type=float, default=None),
        click.option("--sigma-ih", type=float, default=None),
        click.option("--sigma", type=float, default=None, help="Weight-noise sigma."),
        click.option("--drop-p", type=float, default=None, help="DropConnect probability."),
        click.option("--lam", type=float, default=None, help="Penalty weight lambda."),
        click.option("--norm", type=click.Choice(["L1", "L2"]), default=None),
        click.option("--set", "assignments", multiple=True, metavar="KEY=VALUE",
                     help="Set any configuration key, e.g. init.seed=3."),
    ]
    for option in reversed(options):
        command = option(command)
    return command


def config_from_options(options: dict) -> RunConfig:
    flags = {name: options.pop(name) for name in FLAG_KEYS}
    return build_config(
        options.pop("config_path"),
        options.pop("preset"),
        flags,
        options.pop("assignments"),
        variant=options.pop("variant"),
        seed=options.pop("seed"),
    )


@click.group()
@click.option("--verbose", is_flag=True, help="Log debug messages.")
@click.option("--quiet", is_flag=True, help="Log warnings and errors only.")
def cli(verbose: bool, quiet: bool):
    """Training laboratory for regularized recurrent networks."""
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level)
    logging.getLogger().setLevel(level)


@cli.command("train")
@hyper_options
@handle_errors
def train_command(**options):
    """Train one network; writes trace.csv, params.npz and manifest.json."""
    dataset_flag, out_flag = options.pop("dataset"), options.pop("output_dir")
    config = config_from_options(options)
    out = output_dir(out_flag, config)
    dataset = load(dataset_path(dataset_flag, config), manifest_path=out / "manifest.json")
    trace = train(config, dataset)
    write_trace_csv(out / "trace.csv", trace)
    trace.params.save(out / "params.npz")
    write_json(out / "config.json", config.model_dump(mode="json", by_alias=True))
    click.echo(
        f"test_ce={trace.test_ce:.6f} best_epoch={trace.best_epoch} "
        f"epochs={len(trace.records) - 1} diverged={trace.diverged}"
    )
    if trace.diverged:
        raise DivergenceError(f"Training diverged after epoch {len(trace.records) - 1}")


@cli.command("search")
@click.option("--ranges", "ranges_path", type=click.Path(exists=True, dir_okay=False),
              help="JSON search space.")
@click.option("--variant", type=click.Choice(sorted(VARIANTS)), default=None)
@click.option("--trials", type=int, default=50, show_default=True)
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--max-epochs", type=int, default=None)
@click.option("--patience", type=int, default=None)
@click.option("--dataset", required=True, type=click.Path(dir_okay=False))
@click.option("--output-dir", "out_flag", default=None)
@click.option("--search-id", default="search", show_default=True)
@handle_errors
def search_command(ranges_path, variant, trials, jobs, seed, max_epochs, patience,
                   dataset, out_flag, search_id):
    """Random search; writes search.json and the search.db trial store."""
    raw = read_json(ranges_path, "Ranges file") if ranges_path else {}
    for key, value in (("variant", variant), ("max_epochs", max_epochs),
                       ("patience", patience)):
        if value is not None:
            raw[key] = value
    try:
        ranges = SearchRanges.model_validate(raw)
    except ValidationError as e:
        keys = validation_keys(e)
        raise SchemaError(f"Invalid search ranges, offending keys: {keys}", keys)
    out = output_dir(out_flag)
    data = load(dataset, manifest_path=out / "manifest.json")
    store = ResultStore(f"sqlite:///{out / 'search.db'}")
    try:
        store.clear_search(search_id)
        report = random_search(ranges, trials, data, parallelism=jobs, seed=seed,
                               store=store, search_id=search_id)
    finally:
        store.close()
    write_search_json(out / "search.json", report)
    summary = report.to_json()
    click.echo(
        f"best_test_ce={summary['best_test_ce']} mean_test_ce={summary['mean_test_ce']} "
        f"trials={report.n_trials} diverged={report.n_diverged}"
    )
    if report.all_diverged:
        raise DivergenceError("Every trial diverged; the ranking is empty.")


@cli.command("sweep")
@click.option("--axis", type=click.Choice(SWEEP_AXES), required=True)
@click.option("--values", "values_text", required=True,
              help="Comma separated values, e.g. 0.01,0.05,0.1.")
@click.option("--seeds", type=int, default=3, show_default=True)
@click.option("--jobs", type=int, default=1, show_default=True)
@hyper_options
@handle_errors
def sweep_command(axis, values_text, seeds, jobs, **options):
    """Train each value with several seeds; writes sweep_<axis>.csv."""
    try:
        values = [float(item) for item in values_text.split(",") if item.strip()]
    except ValueError:
        raise SchemaError(f"--values must be numbers, got '{values_text}'", ["values"])
    dataset_flag, out_flag = options.pop("dataset"), options.pop("output_dir")
    config = config_from_options(options)
    out = output_dir(out_flag, config)
    dataset = load(dataset_path(dataset_flag, config), manifest_path=out / "manifest.json")
    table = sweep(axis, values, config, dataset, seeds=seeds, parallelism=jobs)
    rows = write_sweep_csv(out / f"sweep_{axis}.csv", table)
    click.echo(f"rows={rows} trend={table.trend}")
    if all(row.n_diverged == row.n_runs for row in table.rows):
        raise DivergenceError("Every sweep run diverged.")


@cli.command("demo-surface")
@click.option("--steps", type=int, default=50, show_default=True)
@click.option("--target", type=float, default=0.7, show_default=True)
@click.option("--w-range", type=(float, float), default=(-2.0, 8.0), show_default=True)
@click.option("--b-range", type=(float, float), default=(-6.0, 2.0), show_default=True)
@click.option("--resolution", type=int, default=100, show_default=True)
@click.option("--lam", type=float, default=0.0, show_default=True,
              help="Penalty weight; 0 disables the penalty.")
@click.option("--norm", type=click.Choice(["L1", "L2"]), default="L2", show_default=True)
@click.option("--w-min", type=float, default=1.0, show_default=True,
              help="Report the largest |dL/dW| over W > w-min.")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="CSV path; surface.csv in the output directory by default.")
@handle_errors
def demo_surface_command(steps, target, w_range, b_range, resolution, lam, norm, w_min, out):
    """Single-unit loss surface as (w, b, loss) rows plus a per-b max-gradient file."""
    penalty = RegPenaltySpec(norm=norm, lam=lam) if lam > 0 else None
    surface = demo_surface(steps, target, w_range, b_range, resolution, penalty)
    path = Path(out) if out else output_dir(None) / "surface.csv"
    rows = write_surface_csv(path, surface)
    write_surface_rows_csv(path.with_name(f"{path.stem}_rows.csv"), surface)
    click.echo(f"rows={rows} max_weight_gradient={max_weight_gradient(surface, w_min):.6g}")


@cli.command("gradcheck")
@click.option("--hidden", type=int, default=5, show_default=True)
@click.option("--steps", type=int, default=7, show_default=True)
@click.option("--batch", type=int, default=2, show_default=True)
@click.option("--notes", type=int, default=NOTE_COUNT, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--kind", default="none", show_default=True,
              type=click.Choice(["none", "additive", "multiplicative", "dropconnect",
                                 "feedforward_additive"]))
@click.option("--scope", type=click.Choice(["per_time_step", "per_sequence"]),
              default="per_time_step", show_default=True)
@click.option("--sigma", type=float, default=0.1, show_default=True)
@click.option("--drop-p", type=float, default=0.5, show_default=True)
@click.option("--stencil", type=click.Choice(sorted(STENCILS)), default="five_point",
              show_default=True)
@click.option("--eps", type=float, default=None,
              help=f"Probe distance; defaults to {DEFAULT_EPS}.")
@click.pass_context
@handle_errors
def gradcheck_command(ctx, hidden, steps, batch, notes, seed, kind, scope, sigma,
                      drop_p, stencil, eps):
    """Compare BPTT with finite differences; exit 0 iff the error < 1e-5."""
    params, frames = random_problem(hidden, steps, batch, notes, seed)
    plan = None
    if kind != "none":
        spec = PerturbationSpec(
            kind=kind, scope=scope,
            sigma=None if kind == "dropconnect" else sigma,
            drop_p=drop_p if kind == "dropconnect" else None,
        )
        plan = sample_plan(spec, params, steps, seed)
    error = grad_check(params, frames, plan, eps=eps, stencil=stencil)
    click.echo(f"max_relative_error={error:.17g}")
    if not error < GRADCHECK_TOLERANCE:
        ctx.exit(1)


@cli.command("eval")
@click.option("--params", "params_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--dataset", required=True, type=click.Path(dir_okay=False))
@click.option("--split", type=click.Choice(SPLITS), default="test", show_default=True)
@handle_errors
def eval_command(params_path, dataset, split):
    """Clean-weight cross-entropy of saved parameters on one split."""
    params = RnnParams.load(params_path)
    sequences = getattr(load(dataset), split)
    ce = evaluate(params, sequence_batches(sequences))
    click.echo(f"{split}_ce={ce:.6f} sequences={len(sequences)}")


@cli.command("synth-data")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--sequences", type=int, default=200, show_default=True)
@click.option("--steps", type=int, default=100, show_default=True)
@click.option("--motif-gap", type=int, default=1, show_default=True)
@click.option("--noise-rate", type=float, default=0.05, show_default=True)
@click.option("--chord-size", type=int, default=3, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Dataset path; synthetic.json in the output directory by default.")
@handle_errors
def synth_data_command(seed, sequences, steps, motif_gap, noise_rate, chord_size, out):
    """Generate a synthetic corpus with a known memory length."""
    dataset = synthesize(seed, sequences, steps, motif_gap, noise_rate, chord_size)
    path = Path(out) if out else output_dir(None) / "synthetic.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    dataset.save(path)
    write_manifest(dataset, path.with_suffix(".manifest.json"))
    counts = {name: len(split) for name, split in dataset.splits().items()}
    click.echo(f"sequences={counts} oracle_ce={oracle_cross_entropy(noise_rate):.6f}")
