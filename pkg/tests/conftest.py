"""
Общие фикстуры тестов
"""
import numpy as np
import pytest

from app.autograd import precision
from app.data import load_dataset, write_synthetic_dataset
from app.services.gradcheck_service import micro_config, micro_network


@pytest.fixture
def float64():
    """Граф в двойной точности на время теста"""
    with precision("float64"):
        yield


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def config():
    return micro_config()


@pytest.fixture
def network(float64):
    return micro_network(seed=0)


@pytest.fixture(scope="session")
def dataset_root(tmp_path_factory):
    root = tmp_path_factory.mktemp("synthetic")
    write_synthetic_dataset(root, identities=12, cameras=2, views_per_camera=2, seed=0)
    return root


@pytest.fixture
def split(dataset_root, config):
    return load_dataset(
        dataset_root, (0.5, 0.0, 0.5), seed=0,
        image_size=(config.input_height, config.input_width),
    )
