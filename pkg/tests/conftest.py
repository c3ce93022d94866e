import sys
import os

sys.path.insert(
    0,
    os.path.abspath(
        os.path.join(os.path.dirname(__file__), "..")
    )
)

import numpy as np  # noqa: E402
import pytest  # noqa: E402

from corpus.dataset import synthesize  # noqa: E402
from harness.config import HyperConfig  # noqa: E402
from network.grad import random_problem  # noqa: E402
from network.initialization import InitSpec  # noqa: E402
from network.optim import OptimizerConfig  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def small_problem():
    return random_problem(n_hidden=5, steps=7, batch_size=2, notes=4, seed=1)


@pytest.fixture(scope="session")
def tiny_dataset():
    return synthesize(seed=3, n_sequences=20, steps=12, motif_gap=1)


@pytest.fixture
def tiny_config():
    return HyperConfig(
        init=InitSpec(sparsify_k=3, seed=0),
        optimizer=OptimizerConfig(step_rate=1e-2),
        batch_size=4,
        hidden_units=8,
        max_epochs=3,
        patience=5,
        chunk_length=6,
        seed=0,
    )


@pytest.fixture
def dataset_file(tmp_path, tiny_dataset):
    path = tmp_path / "data.json"
    tiny_dataset.save(path)
    return path
