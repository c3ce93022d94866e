import math

import pytest

from harness.presets import (
    BEST_CONFIGURATIONS, COLUMNS, REPORTED_TEST_CE, preset, preset_by_name,
    preset_names,
)
from network.errors import ContractViolation


def test_every_preset_builds():
    names = preset_names()
    assert len(names) == 4 * 9
    for name in names:
        config = preset_by_name(name)
        assert config.optimizer.method == "rmsprop"
        assert config.init.rho_target in (0.9, 1.0, 1.1)


def test_table_columns_are_complete():
    for table in BEST_CONFIGURATIONS.values():
        for key in ("sigma_hh", "sigma_ih", "sparsify_k", "rho_target", "momentum", "step_rate", "batch_size"):
            assert len(table[key]) == len(COLUMNS)
    for results in REPORTED_TEST_CE.values():
        assert set(results) == {"plain", *COLUMNS}


def test_dropconnect_preset():
    config = preset("jsb_chorales", "dropconnect_step")
    assert config.perturbation.kind == "dropconnect"
    assert config.perturbation.scope == "per_time_step"
    assert config.perturbation.drop_p == 0.92
    assert config.penalty is None
    assert config.init.sparsify_k == 25
    assert config.batch_size == 81


def test_norm_penalty_preset():
    config = preset("musedata", "norm_penalty")
    assert config.penalty.norm == "L1"
    assert math.log10(config.penalty.lam) == pytest.approx(-3.80)
    assert config.hidden_units == 600


def test_plain_preset_reuses_the_penalty_column():
    plain = preset("nottingham", "plain", rho_target=1.0)
    penalized = preset("nottingham", "norm_penalty")
    assert plain.penalty is None and plain.perturbation is None
    assert plain.init.sigma_ih == penalized.init.sigma_ih
    assert plain.optimizer.step_rate == penalized.optimizer.step_rate
    assert plain.init.rho_target == 1.0


def test_noise_preset():
    config = preset("piano_midi", "feedforward_noise")
    assert config.perturbation.kind == "feedforward_additive"
    assert config.perturbation.sigma == 0.08


@pytest.mark.parametrize("corpus, variant", [("bach", "plain"), ("nottingham", "dropout")])
def test_unknown_presets(corpus, variant):
    with pytest.raises(ContractViolation):
        preset(corpus, variant)


@pytest.mark.parametrize("corpus, rhos", [
    ("jsb_chorales", [1.1, 0.9, 1.0, 0.9, 0.9, 1.0, 1.0, 0.9]),
    ("nottingham", [0.9, 1.1, 1.0, 1.0, 1.0, 0.9, 1.1, 1.1]),
    ("piano_midi", [0.9, 1.0, 1.0, 1.0, 0.9, 1.0, 0.9, 0.9]),
    ("musedata", [1.0, 0.9, 1.1, 1.0, 1.0, 1.1, 1.0, 0.9]),
])
def test_spectral_radius_follows_each_column(corpus, rhos):
    assert [preset(corpus, variant).init.rho_target for variant in COLUMNS] == rhos
    assert preset(corpus, "plain").init.rho_target == rhos[0]


def test_spectral_radius_override():
    assert preset("piano_midi", "additive_step", rho_target=1.1).init.rho_target == 1.1
