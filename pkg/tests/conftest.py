import numpy as np
import pytest

from dsbm_ns import VarianceProfile

# The three 4x4 worked examples: same normal form, different permutation
# interaction, invariants 1/2, 1/3, 1/4.
EXAMPLE1 = np.array([[0, 1, 1, 0],
                     [0, 0, 1, 1],
                     [1, 0, 0, 1],
                     [1, 0, 0, 0]], dtype=float)
EXAMPLE2 = np.array([[0, 0, 1, 1],
                     [1, 0, 0, 1],
                     [1, 1, 0, 0],
                     [0, 1, 0, 0]], dtype=float)
EXAMPLE3 = np.array([[0, 0, 1, 1],
                     [0, 1, 1, 0],
                     [1, 1, 0, 0],
                     [1, 0, 0, 0]], dtype=float)


@pytest.fixture
def example1():
    return VarianceProfile(EXAMPLE1.copy())


@pytest.fixture
def example2():
    return VarianceProfile(EXAMPLE2.copy())


@pytest.fixture
def example3():
    return VarianceProfile(EXAMPLE3.copy())


@pytest.fixture
def single_block():
    return VarianceProfile(np.array([[0.25]]))


@pytest.fixture
def all_ones3():
    return VarianceProfile(np.ones((3, 3)))


def random_supported_irreducible(rng, max_k=8):
    """Random zero pattern that has support and is irreducible, as a 0/1
    variance profile (rejection sampling)."""
    from dsbm_ns import has_support, is_irreducible, zero_pattern, PositiveDiagonal

    while True:
        k = int(rng.integers(1, max_k + 1))
        density = rng.uniform(0.2, 0.7)
        mask = rng.random((k, k)) < density
        m = VarianceProfile(mask.astype(float))
        zp = zero_pattern(m)
        if isinstance(has_support(zp), PositiveDiagonal) and is_irreducible(zp):
            return m
