"""Genetic-algorithm plan against exhaustive search on a 6-hour cluster.

The oracle searches battery rates on the grid (-3, 0, 3) kW only, so the
continuous GA can come out slightly below it.

    python3 demos/04_optimizer_vs_oracle.py
"""
import time

import numpy as np

from cluster_dispatch import (BatterySpec, EVSession, OracleInstance, PricingScheme, ScenarioConfig,
                              brute_force_optimal, solve_instance)

pricing = PricingScheme(buy=0.16, sell=0.05, cluster=0.10)
instance = OracleInstance(
    demand=[[2.0, 2.5, 3.0, 1.5, 1.0, 2.0], [1.0, 1.5, 1.0, 3.5, 3.0, 2.5]],
    generation=[[4.0, 4.5, 1.0, 0.5, 0.0, 0.0], [0.5, 3.0, 4.0, 1.0, 0.0, 0.0]],
    batteries=[BatterySpec(6.0, 3.0), BatterySpec(6.0, 3.0)],
    sessions=[EVSession("EV1", 1, 4, 10.0, 2.0, 0.4, building="B")],
    building_ids=["A", "B"],
    battery_levels=[(-3, 0, 3), (-3, 0, 3)],
)
print(f"search space per scenario: S1/S2 {instance.search_space('S2'):,}, S3 {instance.search_space('S3'):,}")

for sid in ("S1", "S2", "S3"):
    t0 = time.perf_counter()
    best = brute_force_optimal(instance, pricing, sid)
    t1 = time.perf_counter()
    ga = solve_instance(instance.buildings(), instance.sessions, pricing, ScenarioConfig.preset(sid, seed=1))
    t2 = time.perf_counter()
    print(f"{sid}: oracle {best.cost:7.4f} ({t1 - t0:4.2f} s)   GA pipeline {ga.cost:7.4f} ({t2 - t1:4.2f} s)")

best = brute_force_optimal(instance, pricing, "S3")
print("\noracle S3 battery rates:\n", best.battery_rates)
print("oracle S3 EV rates:", np.round(best.ev_rates[0], 3))
