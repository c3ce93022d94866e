import pytest

from harness.sweep import SweepRow, apply_axis, rank_trend, sweep
from harness.training import train
from network.errors import ContractViolation
from network.perturb import PerturbationSpec, RegPenaltySpec


def test_single_value_matches_a_direct_run(tiny_config, tiny_dataset):
    table = sweep("lambda", [1e-3], tiny_config, tiny_dataset, seeds=1)
    expected = train(apply_axis(tiny_config, "lambda", 1e-3).with_seed(tiny_config.seed),
                     tiny_dataset)
    assert len(table.rows) == 1
    assert table.rows[0].mean_test_ce == expected.test_ce
    assert table.rows[0].stddev == 0.0
    assert table.trend is None


def test_zero_drop_probability_matches_the_plain_run(tiny_config, tiny_dataset):
    table = sweep("drop_p", [0.0], tiny_config, tiny_dataset, seeds=1)
    plain = train(tiny_config.with_seed(tiny_config.seed), tiny_dataset)
    assert table.rows[0].mean_test_ce == pytest.approx(plain.test_ce, rel=1e-12)


def test_sigma_sweep(tiny_config, tiny_dataset):
    base = tiny_config.model_copy(update={
        "perturbation": PerturbationSpec(kind="additive", sigma=0.1),
    })
    table = sweep("sigma", [0.01, 0.05, 0.1], base, tiny_dataset, seeds=2, parallelism=2)
    assert [row.value for row in table.rows] == [0.01, 0.05, 0.1]
    assert all(row.n_runs == 2 for row in table.rows)
    assert table.trend is None or -1.0 <= table.trend <= 1.0


def test_apply_axis():
    from harness.config import HyperConfig
    base = HyperConfig(penalty=RegPenaltySpec(norm="L1", lam=0.1))
    assert apply_axis(base, "lambda", 0.5).penalty == RegPenaltySpec(norm="L1", lam=0.5)
    assert apply_axis(HyperConfig(), "lambda", 0.5).penalty.norm == "L2"
    dropped = apply_axis(HyperConfig(), "drop_p", 0.3).perturbation
    assert (dropped.kind, dropped.scope, dropped.drop_p) == ("dropconnect", "per_time_step", 0.3)
    sequence = HyperConfig(perturbation=PerturbationSpec(
        kind="dropconnect", scope="per_sequence", drop_p=0.5))
    assert apply_axis(sequence, "drop_p", 0.1).perturbation.scope == "per_sequence"
    noisy = HyperConfig(perturbation=PerturbationSpec(kind="multiplicative", sigma=0.1))
    assert apply_axis(noisy, "sigma", 0.2).perturbation.sigma == 0.2
    assert noisy.perturbation.sigma == 0.1


def test_apply_axis_rejects_incompatible_bases():
    from harness.config import HyperConfig
    with pytest.raises(ContractViolation):
        apply_axis(HyperConfig(), "sigma", 0.1)
    with pytest.raises(ContractViolation):
        apply_axis(HyperConfig(perturbation=PerturbationSpec(kind="additive", sigma=0.1)),
                   "drop_p", 0.5)
    with pytest.raises(ContractViolation):
        apply_axis(HyperConfig(), "rho", 1.0)


def test_sweep_rejects_empty_inputs(tiny_config, tiny_dataset):
    with pytest.raises(ContractViolation):
        sweep("lambda", [], tiny_config, tiny_dataset)
    with pytest.raises(ContractViolation):
        sweep("lambda", [0.1], tiny_config, tiny_dataset, seeds=0)


def test_rank_trend():
    rows = [SweepRow(v, ce, 0.0, 1, 0) for v, ce in [(0.1, 5.0), (0.2, 6.0), (0.3, 9.0)]]
    assert rank_trend(rows) == pytest.approx(1.0)
    rows.append(SweepRow(0.4, float("nan"), float("nan"), 1, 1))
    assert rank_trend(rows) == pytest.approx(1.0)
    assert rank_trend(rows[:1]) is None
