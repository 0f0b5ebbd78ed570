import numpy as np
import pytest

from lmr import RandomSpec, sample_grd
from lmr.manifold import GroundTruth


@pytest.fixture
def rng():
    return np.random.default_rng(20240117)


def random_truth(rng, n, r, spsd=False, lo=0.5, hi=2.0):
    """Random ground truth with a distinct spectrum (a.s.)."""
    d = np.sort(rng.uniform(lo, hi, r))[::-1]
    return GroundTruth.from_singular_values(d, rng=rng, n=n, spsd=spsd)


def random_point(rng, n, r, spsd=False):
    return sample_grd(RandomSpec(n=n, r=r, spsd=spsd), rng)
