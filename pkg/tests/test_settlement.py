import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cluster_dispatch.profiles import PricingScheme
from cluster_dispatch.settlement import (
    build_ledger, cluster_cost, compare_scenarios, comparison_csv, daily_cluster_cost, day_report,
    self_consumption, settle_hour,
)

PRICING = PricingScheme(0.16, 0.05, 0.1)


def flat_ledger(generation, export, sharing=False):
    """One building, one hour, with the given generation and grid export."""
    demand = generation - export
    return build_ledger(["A"], [[demand]], [[generation]], [[0.0]], [[0.0]], [[0.0, 0.0]], sharing, PRICING)


def test_pro_rata_matching():
    row = settle_hour([5.0, -3.0, -4.0], True, PRICING)
    assert np.allclose(row.cluster_trade, [5, -15 / 7, -20 / 7])
    assert np.allclose(row.grid_flow, [0, -6 / 7, -8 / 7])
    assert -row.grid_flow.sum() == pytest.approx(2.0)  # residual deficit bought from the grid
    alone = settle_hour([5.0, -3.0, -4.0], False, PRICING)
    assert np.array_equal(alone.grid_flow, [5, -3, -4]) and np.all(alone.cluster_trade == 0)
    zero = settle_hour([0.0, 0.0, 0.0], True, PRICING)
    assert np.all(zero.grid_flow == 0) and np.all(zero.cluster_trade == 0)


def test_self_consumption_examples():
    assert self_consumption(flat_ledger(100, 0)) == 1.0
    assert self_consumption(flat_ledger(100, 100)) == 0.0
    assert self_consumption(flat_ledger(50, 14.1)) == pytest.approx(0.718)
    dark = build_ledger(["A"], [[1.0]], [[0.0]], [[0.0]], [[0.0]], [[0.0, 0.0]], False, PRICING)
    assert self_consumption(dark) is None
    assert day_report(dark, PRICING, "S1", 1).to_dict()["self_consumption"] is None


def test_daily_cost_examples():
    importing = build_ledger(["A"], [[10.0]], [[0.0]], [[0.0]], [[0.0]], [[0.0, 0.0]], False, PRICING)
    assert daily_cluster_cost(importing, PRICING) == pytest.approx(1.60)
    assert daily_cluster_cost(flat_ledger(10, 10), PRICING) == pytest.approx(-0.50)
    assert daily_cluster_cost(flat_ledger(0, 0), PRICING) == 0


def test_compare_reference_rows():
    sc = {"S1": [{"day": 2, "self_consumption": 0.602, "cost": 1.0}],
          "S2": [{"day": 2, "self_consumption": 0.642, "cost": 1.0}],
          "S3": [{"day": 2, "self_consumption": 0.662, "cost": 1.0}]}
    row = compare_scenarios(sc)[0]
    assert (round(row.sc_improvement["S2"]), round(row.sc_improvement["S3"])) == (7, 10)
    cost = {"S1": [{"day": 1, "self_consumption": 0.837, "cost": 29.2}],
            "S2": [{"day": 1, "self_consumption": 0.91, "cost": 24.2}],
            "S3": [{"day": 1, "self_consumption": 1.0, "cost": 21.7}]}
    row = compare_scenarios(cost)[0]
    assert (round(row.cost_improvement["S2"]), round(row.cost_improvement["S3"])) == (17, 26)
    assert (round(row.sc_improvement["S2"]), round(row.sc_improvement["S3"])) == (9, 19)


def test_compare_identical_and_mismatched():
    same = {s: [{"day": 1, "self_consumption": 0.5, "cost": 3.0}] for s in ("S1", "S2", "S3")}
    row = compare_scenarios(same)[0]
    assert all(v == 0 for v in row.sc_improvement.values())
    assert all(v == 0 for v in row.cost_improvement.values())
    with pytest.raises(ValueError):
        compare_scenarios({"S1": same["S1"], "S2": same["S2"] * 2})
    with pytest.raises(ValueError):
        compare_scenarios({"S1": same["S1"], "S2": [{"day": 2, "self_consumption": 0.5, "cost": 3.0}]})


def test_comparison_csv_layout():
    rows = compare_scenarios({"S1": [{"day": 1, "self_consumption": 0.837, "cost": 29.2}],
                              "S3": [{"day": 1, "self_consumption": None, "cost": 21.7}]})
    lines = comparison_csv(rows).splitlines()
    assert lines[0] == ("day,self_consumption_S1_pct,self_consumption_S3_pct,sc_improvement_S3_pct,"
                        "cost_S1,cost_S3,cost_improvement_S3_pct")
    assert lines[1] == "1,83.7,n/a,n/a,29.200,21.700,25.7"


nets_strategy = st.lists(st.floats(-20, 20), min_size=1, max_size=5)


@settings(max_examples=300, deadline=None)
@given(nets_strategy, st.booleans())
def test_hour_invariants(nets, sharing):
    row = settle_hour(nets, sharing, PRICING)
    assert np.allclose(row.cluster_trade + row.grid_flow, nets, atol=1e-9, rtol=0)
    assert abs(row.cluster_trade.sum()) <= 1e-9
    assert abs((row.cluster_trade * PRICING.cluster).sum()) <= 1e-9
    alone = settle_hour(nets, False, PRICING)
    assert np.clip(row.grid_flow, 0, None).sum() <= np.clip(alone.grid_flow, 0, None).sum() + 1e-9


@settings(max_examples=100, deadline=None)
@given(st.integers(1, 4), st.integers(1, 6), st.integers(0, 10 ** 6), st.floats(0.05, 0.16))
def test_cluster_cost_ignores_cluster_price(n, hours, seed, chi):
    rng = np.random.default_rng(seed)
    demand, generation = rng.uniform(0, 6, (2, n, hours))
    zeros = np.zeros((n, hours))
    stored = np.zeros((n, hours + 1))
    other = PricingScheme(PRICING.buy, PRICING.sell, chi)
    a = build_ledger(list(range(n)), demand, generation, zeros, zeros, stored, True, PRICING)
    b = build_ledger(list(range(n)), demand, generation, zeros, zeros, stored, True, other)
    assert a.cost.sum() == pytest.approx(b.cost.sum(), abs=1e-9)
    assert daily_cluster_cost(a, PRICING) == pytest.approx(a.cost.sum(), abs=1e-9)
    assert cluster_cost(generation - demand, True, PRICING) == pytest.approx(a.cost.sum(), abs=1e-9)
    for ledger in (a, b):
        ledger.check()
    if n > 1 and chi != PRICING.cluster and np.any(np.abs(a.cluster_trade) > 1e-6):
        assert not np.allclose(a.cost.sum(1), b.cost.sum(1))


def test_report_json_round_trip():
    ledger = build_ledger(["A", "B"], [[1.0, 2.0], [0.5, 0.0]], [[3.0, 0.0], [0.0, 1.0]],
                          [[0.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]], np.zeros((2, 3)), True, PRICING)
    report = day_report(ledger, PRICING, "S2", 1)
    text = json.dumps(report.to_dict())
    back = json.loads(text)
    assert back["grid_export_kwh"] == pytest.approx(report.grid_export)
    assert set(back["buildings"]) == {"A", "B"}
    assert json.dumps(ledger.to_dict())
