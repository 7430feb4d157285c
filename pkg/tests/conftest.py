import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def rand_matrix(seed: int, m: int, n: int, scale: float = 1.0) -> np.ndarray:
    return scale * np.random.default_rng(seed).standard_normal((m, n))


def rand_vector(seed: int, m: int, scale: float = 1.0) -> np.ndarray:
    return scale * np.random.default_rng(seed).standard_normal(m)
