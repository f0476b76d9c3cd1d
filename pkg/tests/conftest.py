import numpy as np
import pytest

from hazeflow import synth


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def small_corpus():
    """Three scenes at three haze levels, 64 x 64."""
    return list(synth.generate(n_scenes=3, seed=7, size=64))


@pytest.fixture
def dark_rgb(rng):
    return np.clip(rng.uniform(0.0, 0.35, (48, 48, 3)), 0, 1)
