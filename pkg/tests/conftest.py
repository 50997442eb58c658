import numpy as np
import pytest

from prefopt.core import Bounds, Dataset, Preference, PreferenceSet


@pytest.fixture
def unit_bounds2():
    return Bounds(np.zeros(2), np.ones(2))


def chained_preferences(values) -> PreferenceSet:
    """Compare each point against the running best, as the loop does."""
    values = np.asarray(values, dtype=float)
    items, inc = [], 0
    for k in range(1, values.size):
        label = -1 if values[k] < values[inc] else +1
        items.append(Preference(i=k, j=inc, label=label))
        if label == -1:
            inc = k
    return PreferenceSet(tuple(items))


def random_dataset(rng, n_points, dim, lo=0.03, hi=0.97) -> Dataset:
    bounds = Bounds(np.zeros(dim), np.ones(dim))
    return Dataset(bounds, rng.uniform(lo, hi, size=(n_points, dim)))
