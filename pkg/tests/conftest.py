"""Shared fixtures: seeded generators and randomly drawn instances."""

import numpy as np
import pytest

from beamtrack.config import OUTPUT_PATH_ENV, SEED_ENV
from beamtrack.model.sampling import sample_channel
from beamtrack.model.system import SensorNetwork


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def network(rng) -> SensorNetwork:
    return SensorNetwork.draw(6, rng)


@pytest.fixture
def channel(network, rng):
    return sample_channel(network, rng)


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    """Keep a developer's .env from leaking into config resolution."""
    monkeypatch.delenv(SEED_ENV, raising=False)
    monkeypatch.delenv(OUTPUT_PATH_ENV, raising=False)
