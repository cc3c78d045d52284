import numpy as np
import pytest

from stead.engine import DenoiseSchedule, GenerationConfig
from stead.prng import SteganoKey
from stead.sampling import SamplingConfig, canonicalize
from stead.synthetic import SyntheticModel, SyntheticModelSpec


def key_from_int(i: int) -> SteganoKey:
    return SteganoKey(i.to_bytes(32, "big"))


def random_distribution(rng: np.random.Generator, size: int = None):
    """Random canonical distribution for property tests."""
    n = size or int(rng.integers(2, 40))
    probs = rng.dirichlet(np.full(n, 0.7))
    ids = rng.choice(10 * n, size=n, replace=False)
    return canonicalize(list(zip(ids.tolist(), probs.tolist())), SamplingConfig())


@pytest.fixture
def model():
    return SyntheticModel(SyntheticModelSpec())


@pytest.fixture
def small_config():
    return GenerationConfig(length=64, schedule=DenoiseSchedule(16))


@pytest.fixture
def mid_config():
    return GenerationConfig(length=128, schedule=DenoiseSchedule(32))
