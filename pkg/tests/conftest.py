from __future__ import annotations

import numpy as np
import pytest

from qmemnet.linsys import random_passive_system
from qmemnet.presets import AtomicNetworkParams, build_atomic_network, reference_frame
from qmemnet.pulses import compose_input, writing_pulse

SUITE_SEED = 20240611
SUITE_SIZE = 20


def make_suite(seed: int = SUITE_SEED, size: int = SUITE_SIZE):
    """Randomized passive Hurwitz systems, every n in 1..6 represented."""
    rng = np.random.default_rng(seed)
    dims = [1 + (k % 6) for k in range(size)]
    return [random_passive_system(n, rng) for n in dims]


def unit_vector(n: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    return v / np.linalg.norm(v)


@pytest.fixture(scope="session")
def suite():
    return make_suite()


@pytest.fixture(scope="session")
def atomic():
    return build_atomic_network(AtomicNetworkParams(kappa=2.0, g=1.0, delta=1.0))


@pytest.fixture(scope="session")
def atomic_store():
    return build_atomic_network(AtomicNetworkParams(kappa=2.0, g=1.0, delta=0.0))


@pytest.fixture(scope="session")
def matched_signal(atomic):
    """Unit photon on the two dark combinations, composed in the ensemble basis."""
    fam = writing_pulse(atomic.transformed(reference_frame()), 0.0)
    return compose_input(fam, [0, 0, 1 / np.sqrt(2), 1 / np.sqrt(2)])
