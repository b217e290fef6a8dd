"""
Shared fixtures: small synthetic datasets và các CVAE nhỏ dùng chung cho cả session
"""
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import numpy as np
import pytest

from modules.ans import reset_table_counters
from modules.cvae import build_model, train
from modules.geometry import gen_dataset, voxelize

TINY = dict(latent_dim=8, hidden=32, channels=(2, 4, 8))


@pytest.fixture(scope="session")
def object_clouds():
    return gen_dataset('objects', 120, 500, seed=11)


@pytest.fixture(scope="session")
def tiny_model_d3():
    """Untrained random model, d=3"""
    return build_model(3, seed=1, **TINY)


@pytest.fixture(scope="session")
def uniform_model_d3():
    """All weights and biases zero: p = 0.5 per voxel, posterior N(0, I)"""
    return build_model(3, latent_dim=4, hidden=8, channels=(2, 2, 2), zero=True)


@pytest.fixture(scope="session")
def trained_model_d3(object_clouds):
    grids = [voxelize(pc, 3) for pc in object_clouds[:40]]
    model = build_model(3, latent_dim=8, hidden=64, channels=(4, 8, 16), seed=2)
    return train(model, grids, epochs=30, lr=0.003, batch_size=8, seed=0).model


@pytest.fixture(autouse=True)
def clean_counters():
    reset_table_counters()
    yield


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
