import numpy as np
import pytest

from covertdmc import examples


@pytest.fixture(scope="session")
def bundled():
    """Name -> (channel, closed form) for the four shipped channels."""
    return examples.bundled_channels()


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)


def random_pmf(rng, n, full_support=True):
    from covertdmc.prob import Pmf

    probs = rng.dirichlet(np.ones(n))
    if full_support:
        probs = (probs + 0.01) / (1.0 + 0.01 * n)
    return Pmf(tuple(f"a{i}" for i in range(n)), probs)
