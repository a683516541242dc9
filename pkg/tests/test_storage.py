import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cluster_dispatch.storage import (
    BatterySpec, BatteryViolation, EVSession, InfeasibleSession, apply_battery_schedule,
    check_ev_schedule, draw_arrival_soc, immediate_charge_schedule,
)

EV1 = EVSession("EV1", 0, 13, 22.0, 4.0, 0.29)
EV3 = EVSession("EV3", 0, 8, 53.0, 10.0, 0.62)


def test_battery_examples():
    spec = BatterySpec(20, 6)
    assert np.array_equal(apply_battery_schedule(spec, 0, np.zeros(24)), np.zeros(24))
    with pytest.raises(BatteryViolation) as err:
        apply_battery_schedule(spec, 5, [6, 6, 6])
    assert (err.value.kind, err.value.hour) == ("soc", 3)
    assert err.value.amount == pytest.approx(3)
    with pytest.raises(BatteryViolation) as err:
        apply_battery_schedule(spec, 20, [-6, -6, -6, -6])
    assert (err.value.hour, err.value.amount) == (4, pytest.approx(4))
    with pytest.raises(BatteryViolation) as err:
        apply_battery_schedule(spec, 0, [1, 7])
    assert (err.value.kind, err.value.hour) == ("rate", 2)


def test_ev_examples():
    rates = [4, 4, 4, 3.62] + [0] * 9
    check = check_ev_schedule(EV1, rates)
    assert check.valid and check.delivered == pytest.approx(15.62)
    assert [v.kind for v in check_ev_schedule(EV1, np.zeros(13)).violations] == ["departure"]
    bad = check_ev_schedule(EV1, [5] + [4] * 12)
    assert any(v.kind == "rate" and v.hour == 1 for v in bad.violations)
    assert not check_ev_schedule(EV1, [-1] + rates[1:]).valid
    assert not check_ev_schedule(EV1, [4, 4, 4, 4, -0.38] + [0] * 8).valid


def test_v2b_flag_allows_discharge():
    session = EVSession("V", 0, 3, 10.0, 2.0, 0.5, 0.5)
    assert not check_ev_schedule(session, [-1, 1, 0]).valid
    assert check_ev_schedule(session, [-1, 1, 0], allow_v2b=True).valid


def test_immediate_examples():
    assert np.allclose(immediate_charge_schedule(EV1), [4, 4, 4, 3.62] + [0] * 9)
    assert np.allclose(immediate_charge_schedule(EV3), [10, 10, 0.14, 0, 0, 0, 0, 0])
    assert np.all(immediate_charge_schedule(EVSession("F", 0, 4, 10.0, 2.0, 0.7, 0.7)) == 0)
    with pytest.raises(InfeasibleSession, match="'X'"):
        immediate_charge_schedule(EVSession("X", 0, 2, 40.0, 4.0, 0.1))


sessions = st.builds(
    lambda dur, cap, rate, soc0, gap: EVSession("S", 0, dur, cap, rate, soc0, min(1.0, soc0 + gap)),
    st.integers(1, 14), st.floats(5, 60), st.floats(1, 11), st.floats(0, 1), st.floats(0, 1),
).filter(lambda s: s.is_feasible())


@settings(max_examples=200, deadline=None)
@given(session=sessions, trailing=st.integers(0, 5))
def test_immediate_is_earliest_completion(session, trailing):
    rates = immediate_charge_schedule(session)
    check = check_ev_schedule(session, rates)
    assert check.valid
    assert check.delivered == pytest.approx(session.energy_needed, abs=1e-9)
    assert check_ev_schedule(session, np.concatenate([rates, np.zeros(trailing)])).valid
    # No valid schedule gets closer to the target sooner.
    rng = np.random.default_rng(0)
    for _ in range(20):
        other = rng.uniform(0, session.max_rate, session.duration)
        if check_ev_schedule(session, other).valid:
            reached = np.minimum(np.cumsum(other), session.energy_needed)
            assert np.all(reached <= np.cumsum(rates) + 1e-9)


@settings(max_examples=200, deadline=None)
@given(
    cap=st.floats(1, 50), rate=st.floats(0.5, 10), start=st.floats(0, 1),
    rates=st.lists(st.floats(-1, 1), min_size=1, max_size=24),
)
def test_battery_energy_balance(cap, rate, start, rates):
    spec = BatterySpec(cap, rate)
    phi0 = start * cap
    u = np.array(rates) * rate
    try:
        traj = apply_battery_schedule(spec, phi0, u)
    except BatteryViolation:
        return
    assert traj[-1] - phi0 == pytest.approx(u.sum(), abs=1e-9)
    assert np.all(traj >= -1e-9) and np.all(traj <= cap + 1e-9)


def test_draw_arrival_soc_redraws_until_feasible():
    tight = EVSession("T", 0, 1, 50.0, 5.0, 0.0)  # needs arrival SOC >= 0.9
    rng = np.random.default_rng(3)
    socs = [draw_arrival_soc(tight, rng) for _ in range(20)]
    assert all(0.9 - 1e-12 <= s <= 1.0 for s in socs)
    again = [draw_arrival_soc(tight, np.random.default_rng(3)) for _ in range(1)]
    assert again[0] == socs[0]
