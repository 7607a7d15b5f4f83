import pytest

from anderson2p.disorder import (
    DistributionSpec,
    InteractionSpec,
    domain_for_boxes,
    sample_potential,
)
from anderson2p.geometry import Box2, Point2
from anderson2p.msa import desk_schedule


@pytest.fixture(scope="session")
def uniform01_dist():
    return DistributionSpec.uniform()


@pytest.fixture(scope="session")
def interaction_r1():
    return InteractionSpec.triangular(r0=1, u0=1.0)


@pytest.fixture(scope="session")
def desk():
    return desk_schedule()


def random_point2(rng, d, half_width):
    c = rng.integers(-half_width, half_width + 1, size=2 * d)
    return Point2.of(c[:d], c[d:])


def box_with_sample(center, radius, seed=0, trial=0, dist=None):
    """A box plus a disorder sample covering it."""
    box = Box2(center, radius)
    dist = dist or DistributionSpec.uniform()
    sample = sample_potential(dist, seed, trial, domain_for_boxes([box]))
    return box, sample
