import numpy as np
import pytest

import champagne as ch


@pytest.fixture(scope="session")
def small_lattice():
    return ch.generate_ring_lattice(0.5, 1.0, 6, seed=13)


@pytest.fixture(scope="session")
def one_bubble_domain():
    # pseudo bubble D(0.5, 0.25): one-hole measure at 0 is exactly 0.5
    return ch.domain_from_pseudo([(0.5 + 0j, 0.25)])


@pytest.fixture(scope="session")
def two_bubble_domain():
    return ch.domain_from_pseudo([(0.5 + 0j, 0.25), (-0.4 + 0.3j, 0.2)])


@pytest.fixture(scope="session")
def empty_domain():
    return ch.domain_from_pseudo([], truncation_R=1.0)


def rand_disk_points(rng: np.random.Generator, n: int, max_mod: float = 0.95) -> np.ndarray:
    r = max_mod * np.sqrt(rng.uniform(0.0, 1.0, n))
    th = rng.uniform(0.0, 2.0 * np.pi, n)
    return r * np.exp(1j * th)
