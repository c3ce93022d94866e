import math

import numpy as np
import pytest

from corpus.dataset import chunk
from harness.config import SearchRanges
from harness.database import ResultStore
from harness.search import config_table_row, random_search, sample_config
from harness.training import TrainingTrace, train
from network.errors import ContractViolation


@pytest.fixture
def tiny_ranges():
    return SearchRanges(
        variant="plain",
        sparsify_k=[3],
        hidden_units=[8],
        batch_size=[4],
        step_rate=[1e-2, 1e-3],
        max_epochs=2,
        patience=5,
        chunk_length=6,
    )


@pytest.mark.parametrize("variant", ["norm_penalty", "dropconnect_step", "additive_sequence"])
def test_sampled_configs_stay_in_range(variant):
    ranges = SearchRanges(variant=variant)
    rng = np.random.default_rng(0)
    for _ in range(50):
        config = sample_config(ranges, rng)
        assert config.init.sigma_hh in ranges.sigma_hh
        assert config.init.sparsify_k in ranges.sparsify_k
        assert config.optimizer.mu in ranges.momentum
        assert config.batch_size in ranges.batch_size
        row = config_table_row(config)
        if variant == "norm_penalty":
            assert config.perturbation is None
            assert -4.0 <= row["log_lambda"] <= -2.0
            assert row["regularizer"] in ("L1", "L2")
        elif variant == "dropconnect_step":
            assert 0.0 <= config.perturbation.drop_p <= 1.0
            assert row["noise_sigma"] is None
        else:
            assert config.perturbation.scope == "per_sequence"
            assert 0.01 <= row["noise_sigma"] <= 0.1


def test_single_trial_matches_a_direct_run(tiny_ranges, tiny_dataset):
    report = random_search(tiny_ranges, 1, tiny_dataset, seed=7)
    config = sample_config(tiny_ranges, np.random.default_rng(7))
    trace = train(config, chunk(tiny_dataset, tiny_ranges.chunk_length))
    assert report.n_trials == 1 and report.n_diverged == 0
    assert report.best.valid_ce == trace.best_valid_ce
    assert report.best.test_ce == trace.test_ce
    assert report.mean_test_ce == trace.test_ce


def test_search_is_reproducible_across_parallelism(tiny_ranges, tiny_dataset):
    serial = random_search(tiny_ranges, 4, tiny_dataset, parallelism=1, seed=1)
    threaded = random_search(tiny_ranges, 4, tiny_dataset, parallelism=2, seed=1)
    assert serial.to_json() == threaded.to_json()
    valid = [item.valid_ce for item in serial.ranking]
    assert valid == sorted(valid)
    assert serial.best.valid_ce <= float(np.median(valid))


def test_search_records_trials(tiny_ranges, tiny_dataset):
    store = ResultStore()
    random_search(tiny_ranges, 3, tiny_dataset, store=store, search_id="recorded")
    trials = store.trials("recorded")
    assert [record.trial for record in trials] == [0, 1, 2]
    assert all(record.epochs >= 1 for record in trials)
    assert all(record.config["hidden_units"] == 8 for record in trials)
    store.close()


def test_search_report_json(tiny_ranges, tiny_dataset):
    payload = random_search(tiny_ranges, 2, tiny_dataset).to_json()
    assert payload["variant"] == "plain"
    assert payload["all_diverged"] is False
    assert payload["best_test_ce"] == payload["ranking"][0]["test_ce"]
    assert payload["best_configuration"]["hidden"] == 8
    assert payload["best_configuration"]["regularizer"] is None


def test_all_diverged_search(tiny_ranges, tiny_dataset, monkeypatch):
    monkeypatch.setattr(
        "harness.search.train",
        lambda config, dataset, label="train": TrainingTrace(diverged=True),
    )
    report = random_search(tiny_ranges, 3, tiny_dataset)
    assert report.all_diverged
    assert report.n_diverged == 3
    assert report.best is None
    assert math.isnan(report.mean_test_ce)
    payload = report.to_json()
    assert payload["best_test_ce"] is None and payload["ranking"] == []


def test_search_needs_a_trial(tiny_ranges, tiny_dataset):
    with pytest.raises(ContractViolation):
        random_search(tiny_ranges, 0, tiny_dataset)
