import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from corpus.dataset import ChunkedDataset, PianoRollDataset, chunk
from network.errors import ContractViolation
from network.initialization import InitSpec
from network.optim import OptimizerConfig

from .config import HyperConfig, SearchRanges, variant_regularizers
from .database import ResultStore
from .training import TrainingTrace, log_event, train


def finite_or_none(value: float | None) -> float | None:
    """JSON has no NaN: missing or non-finite values become null."""
    if value is None or not math.isfinite(value):
        return None
    return float(value)


def _pick(rng: np.random.Generator, options: list):
    return options[int(rng.integers(len(options)))]


def sample_config(ranges: SearchRanges, rng: np.random.Generator) -> HyperConfig:
    """
    Draw one configuration: discrete options uniformly, lambda
    log-uniformly, drop_p and noise sigma uniformly.
    """
    init = InitSpec(
        sigma_hh=_pick(rng, ranges.sigma_hh),
        sigma_ih=_pick(rng, ranges.sigma_ih),
        sparsify_k=_pick(rng, ranges.sparsify_k),
        rho_target=_pick(rng, ranges.rho_target),
        seed=int(rng.integers(2 ** 31)),
    )
    perturbation, penalty = variant_regularizers(
        ranges.variant,
        sigma=float(rng.uniform(*ranges.noise_sigma)),
        drop_p=float(rng.uniform(*ranges.drop_p)),
        norm=_pick(rng, ranges.norms),
        lam=float(10.0 ** rng.uniform(*ranges.log_lambda)),
    )
    return HyperConfig(
        init=init,
        perturbation=perturbation,
        penalty=penalty,
        optimizer=OptimizerConfig(
            method="rmsprop",
            mu=_pick(rng, ranges.momentum),
            step_rate=_pick(rng, ranges.step_rate),
        ),
        batch_size=_pick(rng, ranges.batch_size),
        hidden_units=_pick(rng, ranges.hidden_units),
        max_epochs=ranges.max_epochs,
        patience=ranges.patience,
        chunk_length=ranges.chunk_length,
        seed=int(rng.integers(2 ** 31)),
    )


def config_table_row(config: HyperConfig) -> dict:
    """A configuration in the layout of the best-configuration tables."""
    perturbation, penalty = config.perturbation, config.penalty
    noise = perturbation is not None and perturbation.sigma is not None
    return {
        "sigma_hh": config.init.sigma_hh,
        "sigma_ih": config.init.sigma_ih,
        "sparsify": config.init.sparsify_k,
        "rho": config.init.rho_target,
        "regularizer": penalty.norm if penalty else None,
        "log_lambda": math.log10(penalty.lam) if penalty and penalty.lam > 0 else None,
        "dropout_p": perturbation.drop_p if perturbation else None,
        "noise_sigma": perturbation.sigma if noise else None,
        "momentum": config.optimizer.mu,
        "step_rate": config.optimizer.step_rate,
        "batch_size": config.batch_size,
        "hidden": config.hidden_units,
    }


@dataclass
class TrialSummary:
    trial: int
    valid_ce: float
    test_ce: float
    config: dict


@dataclass
class SearchReport:
    """
    Ranked outcome of a random search.
    Attributes:
        variant (str): Model variant searched.
        n_trials (int): Trials run.
        n_diverged (int): Trials that diverged.
        ranking (list[TrialSummary]): Non-diverged trials, best validation
            cross-entropy first.
        mean_test_ce (float): Mean test CE over the ranked trials.
    """
    variant: str
    n_trials: int
    n_diverged: int
    ranking: list[TrialSummary] = field(default_factory=list)
    mean_test_ce: float = float("nan")

    @property
    def all_diverged(self) -> bool:
        return not self.ranking

    @property
    def best(self) -> TrialSummary | None:
        return self.ranking[0] if self.ranking else None

    def to_json(self) -> dict:
        best = self.best
        return {
            "variant": self.variant,
            "n_trials": self.n_trials,
            "n_diverged": self.n_diverged,
            "all_diverged": self.all_diverged,
            "best_test_ce": finite_or_none(best.test_ce) if best else None,
            "mean_test_ce": finite_or_none(self.mean_test_ce),
            "best_configuration": (
                config_table_row(HyperConfig.model_validate(best.config))
                if best else None
            ),
            "ranking": [
                {
                    "trial": item.trial,
                    "valid_ce": finite_or_none(item.valid_ce),
                    "test_ce": finite_or_none(item.test_ce),
                    "configuration": config_table_row(
                        HyperConfig.model_validate(item.config)
                    ),
                }
                for item in self.ranking
            ],
        }


def random_search(
    ranges: SearchRanges,
    n_trials: int,
    dataset: ChunkedDataset | PianoRollDataset,
    parallelism: int = 1,
    seed: int = 0,
    store: ResultStore | None = None,
    search_id: str = "search",
) -> SearchReport:
    """
    Train `n_trials` sampled configurations and rank them by validation
    cross-entropy.
    Configurations are drawn up front from `seed`, so the ranking does not
    depend on `parallelism`. Every trial is recorded in `store`.
    Args:
        ranges (SearchRanges): Search space.
        n_trials (int): Number of trials, at least 1.
        dataset (ChunkedDataset | PianoRollDataset): Training data.
        parallelism (int): Trials trained concurrently.
        seed (int): Master seed.
        store (ResultStore, optional): Where trials are recorded; an
            in-memory store by default.
        search_id (str): Name of this search inside the store.
    Returns:
        SearchReport: Ranked trials; empty ranking if all diverged.
    """
    if n_trials < 1:
        raise ContractViolation("n_trials must be at least 1")
    if isinstance(dataset, PianoRollDataset):
        dataset = chunk(dataset, ranges.chunk_length)
    rng = np.random.default_rng(seed)
    configs = [sample_config(ranges, rng) for _ in range(n_trials)]

    def run(indexed: tuple[int, HyperConfig]) -> TrainingTrace:
        index, config = indexed
        return train(config, dataset, label=f"{search_id}/trial-{index}")

    with ThreadPoolExecutor(max_workers=max(1, parallelism)) as pool:
        traces = list(pool.map(run, enumerate(configs)))

    store = store or ResultStore()
    for index, (config, trace) in enumerate(zip(configs, traces)):
        store.add_trial(
            search_id=search_id,
            trial=index,
            variant=ranges.variant,
            valid_ce=trace.best_valid_ce,
            test_ce=trace.test_ce,
            diverged=trace.diverged,
            epochs=len(trace.records),
            config=config.model_dump(mode="json", by_alias=True),
        )
    ranking = [
        TrialSummary(record.trial, record.valid_ce, record.test_ce, record.config)
        for record in store.ranked_trials(search_id)
    ]
    test_ces = [
        item.test_ce for item in ranking
        if item.test_ce is not None and math.isfinite(item.test_ce)
    ]
    report = SearchReport(
        variant=ranges.variant,
        n_trials=n_trials,
        n_diverged=sum(trace.diverged for trace in traces),
        ranking=ranking,
        mean_test_ce=float(np.mean(test_ces)) if test_ces else float("nan"),
    )
    log_event(search_id, {
        "trials": n_trials,
        "diverged": report.n_diverged,
        "best_valid_ce": report.best.valid_ce if report.best else None,
    })
    return report
