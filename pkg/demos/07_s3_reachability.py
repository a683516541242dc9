"""A case where coordinated EV charging ends up dearer than S2.

S2 optimises the member batteries jointly. S3 plans one representative
battery with the GA and then splits its hourly rate over the members with
an allocator that sees one hour at a time. Some representative plans
cannot be split that way, so the GA is only offered the ones that can. On
this 6-hour instance with mismatched batteries, the S2 pipeline reaches a
lower cost than anything the S3 pipeline can reach, although with EV
freedom S3 should never be worse. The oracle columns are optima over a
coarse rate grid, shown for scale.

    python3 demos/07_s3_reachability.py
"""
import numpy as np

from cluster_dispatch import (BatterySpec, EVSession, OracleInstance, PricingScheme, ScenarioConfig,
                              brute_force_optimal, solve_instance)

pricing = PricingScheme(buy=0.16, sell=0.05, cluster=0.10)

rng = np.random.default_rng(18)
demand = np.round(rng.uniform(1.0, 4.0, (2, 6)), 1)
generation = np.round(rng.uniform(0.0, 4.5, (2, 6)), 1)
batteries = [BatterySpec(float(rng.choice([4.0, 6.0, 8.0])), float(rng.choice([1.0, 2.0]))) for _ in range(2)]
duration = int(rng.integers(2, 5))
arrival = int(rng.integers(0, 6 - duration + 1))
building = "AB"[int(rng.integers(2))]
capacity, max_rate = float(rng.choice([6.0, 8.0, 10.0])), float(rng.choice([1.0, 2.0, 3.0]))
low = max(0.0, 1.0 - max_rate * duration / capacity)
soc = float(np.round(rng.uniform(low + 0.05, 0.95), 2))
instance = OracleInstance(demand, generation, batteries, building_ids=["A", "B"],
                          sessions=[EVSession("EV1", arrival, duration, capacity, max_rate, soc, building=building)])

print("batteries:", [(b.capacity, b.max_rate) for b in batteries])
for sid in ("S1", "S2", "S3"):
    best = brute_force_optimal(instance, pricing, sid).cost
    got = solve_instance(instance.buildings(), instance.sessions, pricing, ScenarioConfig.preset(sid, seed=18)).cost
    print(f"{sid}: oracle {best:7.4f}   pipeline {got:7.4f}")
