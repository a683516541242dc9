"""Splitting one representative battery rate over member batteries.

The allocator levels the price-weighted net loads (water filling) within
each battery's rate and SOC limits.

    python3 demos/05_hourly_allocation.py
"""
import numpy as np

from cluster_dispatch import AllocationInfeasible, HourAllocationProblem, allocate_hour

problem = HourAllocationProblem(
    target=-3.0,                       # the cluster discharges 3 kW in total
    net_load=np.array([3.0, -1.5, 0.5]),
    stored=np.array([5.0, 1.0, 0.2]),
    capacity=np.array([10.0, 6.0, 4.0]),
    max_rate=np.array([3.0, 3.0, 3.0]),
    price=0.16,
)
rates = allocate_hour(problem)
print("rates (kW):", rates.round(4), " sum", rates.sum().round(6))
print("net load after:", (problem.net_load + rates).round(4))

lo, hi = problem.bounds()
print("per-battery limits (kW):", [(float(a), float(b)) for a, b in zip(lo.round(2), hi.round(2))])

try:
    allocate_hour(HourAllocationProblem(-7.0, problem.net_load, problem.stored, problem.capacity,
                                        problem.max_rate, 0.16))
except AllocationInfeasible as err:
    print(f"infeasible target: {err} (slack {err.slack:+.2f} kW)")
