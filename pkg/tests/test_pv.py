from datetime import datetime

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cluster_dispatch.profiles import KWH, W_PER_M2, ProfileError, TimeSeries
from cluster_dispatch.pv import PVSpec, generation_series, pv_power

SPEC = PVSpec(area=100, efficiency=0.15, cover_transmittance=0.9, incidence_modifier=1.0)
START = datetime(2020, 7, 6)


def test_hand_values():
    assert pv_power(SPEC, 0) == 0
    assert pv_power(SPEC, 1000) == pytest.approx(13.5, abs=1e-12)
    double = PVSpec(area=200, efficiency=0.15, cover_transmittance=0.9)
    assert pv_power(double, 640) == pytest.approx(2 * pv_power(SPEC, 640))


def test_negative_irradiance_rejected():
    with pytest.raises(ValueError):
        pv_power(SPEC, -1)


def test_generation_series():
    zero = generation_series(SPEC, TimeSeries(START, np.zeros(24), W_PER_M2))
    assert zero.unit == KWH and np.all(zero.values == 0)
    assert generation_series(SPEC, TimeSeries(START, [1000.0], W_PER_M2)).values[0] == pytest.approx(13.5)
    irr = np.random.default_rng(0).uniform(0, 900, 24)
    gen = generation_series(SPEC, TimeSeries(START, irr, W_PER_M2))
    assert gen.values.sum() == pytest.approx(pv_power(SPEC, irr.sum()))
    with pytest.raises(ProfileError):
        generation_series(SPEC, TimeSeries(START, irr, KWH))


def zero_or(lo, hi):
    return st.one_of(st.just(0.0), st.floats(lo, hi))


@given(
    irr=zero_or(1e-3, 1500), area=st.floats(0.1, 1000),
    eta=st.floats(0.01, 1), trans=zero_or(1e-3, 1), iam=zero_or(1e-3, 1),
)
def test_linear_and_monotone(irr, area, eta, trans, iam):
    spec = PVSpec(area, eta, trans, iam)
    p = pv_power(spec, irr)
    assert p == pytest.approx(spec.gain * irr, rel=1e-12, abs=1e-15)
    assert pv_power(spec, irr * 2) == pytest.approx(2 * p, rel=1e-12, abs=1e-15)
    assert pv_power(PVSpec(area * 1.5, eta, trans, iam), irr) >= p
    assert (p == 0) == (irr == 0 or trans == 0 or iam == 0)
