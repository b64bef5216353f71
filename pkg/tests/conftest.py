import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ucadoa import reference_array, reference_coupling, reference_sources, synthesize

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def cfg():
    return reference_array()


@pytest.fixture(scope="session")
def noiseless(cfg):
    """Reference scenario with zero noise: (X, truth)."""
    return synthesize(cfg, reference_sources(), reference_coupling(), 200, np.inf, seed=1)


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
