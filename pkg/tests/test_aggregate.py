from datetime import datetime

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cluster_dispatch.aggregate import BuildingModel, aggregate
from cluster_dispatch.profiles import KWH, ProfileError, TimeSeries
from cluster_dispatch.storage import BatterySpec

START = datetime(2020, 7, 6)


def building(bid, demand, generation, cap=20.0, rate=6.0, phi0=0.0, start=START):
    return BuildingModel(bid, TimeSeries(start, demand, KWH), TimeSeries(start, generation, KWH),
                         BatterySpec(cap, rate), phi0)


def test_examples():
    one = building("A", [1.0, 2.0], [0.5, 3.0], 10, 3, 4)
    rep = aggregate([one])
    assert np.array_equal(rep.demand.values, one.demand.values)
    assert (rep.capacity, rep.max_rate, rep.initial_stored) == (10, 3, 4)
    three = [building(c, [1.0], [0.0]) for c in "ABC"]
    assert aggregate(three).capacity == 60
    pair = aggregate([building("A", [1.0, 2.0], [0, 0]), building("B", [3.0, 4.0], [0, 0])])
    assert np.array_equal(pair.demand.values, [4.0, 6.0])


def test_errors():
    with pytest.raises(ValueError):
        aggregate([])
    with pytest.raises(ProfileError):
        aggregate([building("A", [1.0, 2.0], [0, 0]), building("B", [1.0], [0])])
    with pytest.raises(ProfileError):
        aggregate([building("A", [1.0], [0]), building("B", [1.0], [0], start=datetime(2020, 7, 7))])


values = st.lists(st.floats(0, 20), min_size=4, max_size=4)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(values, values, st.floats(1, 30), st.floats(0.5, 8)), min_size=1, max_size=5),
       st.randoms(use_true_random=False))
def test_sums_and_permutation_invariance(rows, rnd):
    members = [building(str(k), d, g, c, r) for k, (d, g, c, r) in enumerate(rows)]
    rep = aggregate(members)
    shuffled = list(members)
    rnd.shuffle(shuffled)
    other = aggregate(shuffled)
    assert np.allclose(rep.demand.values, other.demand.values)
    assert rep.capacity == pytest.approx(other.capacity)
    assert np.allclose(rep.mismatch(), sum(b.mismatch() for b in members))
    half = len(members) // 2
    if half:
        nested = aggregate([building("L", aggregate(members[:half]).demand.values,
                                     aggregate(members[:half]).generation.values),
                            *members[half:]])
        assert np.allclose(nested.demand.values, rep.demand.values)
