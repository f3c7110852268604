import math
import os
from dataclasses import asdict

import numpy as np
import pytest

import linalg_core
import scenario as sc

@pytest.fixture(autouse=True)
def default_tolerances():
    linalg_core.configure_tolerances(**asdict(linalg_core.Tolerances()))
    yield
    linalg_core.configure_tolerances(**asdict(linalg_core.Tolerances()))

@pytest.fixture(autouse=True)
def no_seed_env(monkeypatch):
    monkeypatch.delenv('BELLBOUND_SEED', raising=False)

@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(7))

@pytest.fixture
def optimal_scenario():
    return sc.optimal_chsh_scenario()

@pytest.fixture
def all_z_scenario():
    z = sc.pauli_z()
    return sc.build_scenario(z, z, z, z)

@pytest.fixture
def tsirelson():
    return 2 * math.sqrt(2)

@pytest.fixture
def scenario_dir():
    return os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), 'scenarios')
