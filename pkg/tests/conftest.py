import numpy as np
import pytest
from hypothesis import settings

import micropolar as mp
from micropolar.cli import lambda_chain_cap

settings.register_profile("fast", max_examples=25, deadline=None)
settings.load_profile("fast")


@pytest.fixture(scope="session")
def grid2d():
    return mp.GridSpec(dim=2, n=16)


@pytest.fixture(scope="session")
def grid3d():
    return mp.GridSpec(dim=3, n=8)


@pytest.fixture(scope="session")
def params():
    return mp.CouplingParams()


@pytest.fixture(scope="session")
def cfg2(grid2d, params):
    base = mp.ExponentConfig(p=2, q=2, r=2, alpha0=0.5, beta0=0.5, gamma0=0.0)
    sel = mp.select_intermediate(base, lambda_cap=lambda_chain_cap(grid2d, params))
    assert sel.feasible
    return sel.config


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
