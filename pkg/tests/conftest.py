import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from palette_forge.colorspace import DistanceParams
from palette_forge.histogram import HsvHistogram
from palette_forge.transport import ground_distance, similarity

settings.register_profile("dev", max_examples=50)
settings.register_profile(
    "thorough", max_examples=400, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "dev"))

SMALL_DIMS = (6, 4, 3)


@pytest.fixture(scope="session")
def small_ground():
    return ground_distance(DistanceParams(), SMALL_DIMS)


@pytest.fixture(scope="session")
def small_similarity():
    return similarity(DistanceParams(), SMALL_DIMS)


def sparse_histogram(rng: np.random.Generator, dims, max_support: int = 12) -> HsvHistogram:
    """Random normalized histogram with a small support."""
    n = dims[0] * dims[1] * dims[2]
    support = rng.integers(1, min(max_support, n) + 1)
    idx = rng.choice(n, size=support, replace=False)
    mass = np.zeros(n)
    mass[idx] = rng.random(support) + 1e-3
    return HsvHistogram(mass / mass.sum(), dims)
