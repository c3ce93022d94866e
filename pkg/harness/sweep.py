import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy import stats

from corpus.dataset import ChunkedDataset, PianoRollDataset, chunk
from network.errors import ContractViolation
from network.perturb import NOISE_KINDS, PerturbationSpec, RegPenaltySpec

from .config import HyperConfig
from .training import TrainingTrace, log_event, train

SweepAxis = Literal["lambda", "sigma", "drop_p"]
SWEEP_AXES = ("lambda", "sigma", "drop_p")
DEFAULT_SEEDS = 3


@dataclass
class SweepRow:
    value: float
    mean_test_ce: float
    stddev: float
    n_runs: int
    n_diverged: int


@dataclass
class SweepTable:
    """
    Attributes:
        axis (str): Swept hyperparameter.
        rows (list[SweepRow]): One row per value, in the order given.
        trend (float | None): Spearman rank correlation between value and
            mean test CE, None with fewer than two usable rows.
    """
    axis: str
    rows: list[SweepRow] = field(default_factory=list)
    trend: float | None = None


def apply_axis(config: HyperConfig, axis: str, value: float) -> HyperConfig:
    """
    Copy of `config` with one regularization strength replaced.
    lambda sets the penalty weight, keeping the configured norm (L2 when
    there is no penalty yet). sigma needs a noise perturbation in the base
    configuration. drop_p updates a DropConnect perturbation, or adds a
    per-time-step one to a configuration without perturbation.
    Raises:
        ContractViolation: For an unknown axis or an incompatible base.
    """
    if axis == "lambda":
        norm = config.penalty.norm if config.penalty else "L2"
        return config.model_copy(update={
            "penalty": RegPenaltySpec(norm=norm, lam=value),
        })
    perturbation = config.perturbation
    if axis == "sigma":
        if perturbation is None or perturbation.kind not in NOISE_KINDS:
            raise ContractViolation(
                "A sigma sweep needs a weight-noise perturbation in the "
                "base configuration."
            )
        updated = perturbation.model_dump()
        updated["sigma"] = value
        return config.model_copy(update={
            "perturbation": PerturbationSpec(**updated),
        })
    if axis == "drop_p":
        if perturbation is None or perturbation.kind == "none":
            updated = {"kind": "dropconnect", "scope": "per_time_step"}
        elif perturbation.kind == "dropconnect":
            updated = perturbation.model_dump()
        else:
            raise ContractViolation(
                f"A drop_p sweep cannot modify a {perturbation.kind} "
                "perturbation."
            )
        updated["drop_p"] = value
        return config.model_copy(update={
            "perturbation": PerturbationSpec(**updated),
        })
    raise ContractViolation(f"Unknown sweep axis '{axis}', expected {SWEEP_AXES}")


def rank_trend(rows: list[SweepRow]) -> float | None:
    usable = [row for row in rows if math.isfinite(row.mean_test_ce)]
    values = [row.value for row in usable]
    means = [row.mean_test_ce for row in usable]
    if len(set(values)) < 2 or len(set(means)) < 2:
        return None
    return float(stats.spearmanr(values, means).statistic)


def summarize(value: float, traces: list[TrainingTrace]) -> SweepRow:
    finished = [
        trace.test_ce for trace in traces
        if not trace.diverged and math.isfinite(trace.test_ce)
    ]
    return SweepRow(
        value=value,
        mean_test_ce=float(np.mean(finished)) if finished else float("nan"),
        stddev=float(np.std(finished)) if finished else float("nan"),
        n_runs=len(traces),
        n_diverged=sum(trace.diverged for trace in traces),
    )


def sweep(
    axis: str,
    values: list[float],
    base_config: HyperConfig,
    dataset: ChunkedDataset | PianoRollDataset,
    seeds: int = DEFAULT_SEEDS,
    parallelism: int = 1,
) -> SweepTable:
    """
    Train one model per value and seed and report the mean test CE of
    every value.
    Run i of a value uses seed base_config.seed + i for both the training
    streams and the initialization, so equal seeds see equal initial
    weights across values.
    Args:
        axis (str): lambda, sigma or drop_p.
        values (list[float]): Values to visit, at least one.
        base_config (HyperConfig): Everything that stays fixed.
        dataset (ChunkedDataset | PianoRollDataset): Training data.
        seeds (int): Runs per value.
        parallelism (int): Runs trained concurrently.
    Returns:
        SweepTable: Rows in the order of `values` plus the rank trend.
    """
    if not values:
        raise ContractViolation("A sweep needs at least one value.")
    if seeds < 1:
        raise ContractViolation("A sweep needs at least one seed per value.")
    if isinstance(dataset, PianoRollDataset):
        dataset = chunk(dataset, base_config.chunk_length)
    jobs = [
        (value, apply_axis(base_config, axis, value).with_seed(base_config.seed + i))
        for value in values
        for i in range(seeds)
    ]

    def run(job: tuple[float, HyperConfig]) -> TrainingTrace:
        value, config = job
        return train(config, dataset, label=f"sweep/{axis}={value:g}/seed-{config.seed}")

    with ThreadPoolExecutor(max_workers=max(1, parallelism)) as pool:
        traces = list(pool.map(run, jobs))

    rows = [
        summarize(value, traces[i * seeds:(i + 1) * seeds])
        for i, value in enumerate(values)
    ]
    table = SweepTable(axis=axis, rows=rows, trend=rank_trend(rows))
    for row in rows:
        log_event(f"sweep/{axis}", vars(row))
    log_event(f"sweep/{axis}", {"trend": table.trend})
    return table
