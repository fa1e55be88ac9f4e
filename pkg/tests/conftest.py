import numpy as np
import pytest

from loewnerlab.measures import MeasureS1, bin_centers


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_positive_trig_density(rng, m_bins=256, degree=4, floor=0.2):
    """A strictly positive trig-polynomial density, binned and normalized."""
    theta = bin_centers(m_bins)
    vals = np.ones(m_bins)
    for k in range(1, degree + 1):
        vals += (rng.normal(0, 0.3 / k) * np.cos(k * theta)
                 + rng.normal(0, 0.3 / k) * np.sin(k * theta))
    vals = np.maximum(vals, floor) + floor
    return MeasureS1.from_density(vals / vals.sum())
