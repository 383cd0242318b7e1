"""
Shared fixtures: bundled scenarios, their sample sets and the probe point.
Scenario objects are immutable, so they are loaded once per session.
"""

from functools import lru_cache

import pytest

from connection_engine import ConnectionEngine
from lift_engine import LiftEngine
from scenario_manager import ScenarioManager, probe_point, sample


@lru_cache(maxsize=None)
def load(name):
    return ScenarioManager().load(name)


@lru_cache(maxsize=None)
def lifts_for(name):
    return LiftEngine(ConnectionEngine(load(name)))


@pytest.fixture(scope="session")
def scenario():
    return load


@pytest.fixture(scope="session")
def lifts():
    return lifts_for


@pytest.fixture(scope="session")
def samples():
    def build(name, count=5):
        return sample(load(name), count=count)
    return build


@pytest.fixture
def probe():
    return probe_point
