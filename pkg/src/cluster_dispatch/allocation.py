"""Hourly split of the representative battery rate across buildings.

Each hour solves

    min  sum_j (price * (net_j + u_j))**2
    s.t. sum_j u_j = target,   lo_j <= u_j <= hi_j

where ``net_j`` is the building's grid-side load before battery action
(demand + EV - PV). For a positive price the minimiser equalises the
post-battery loads ``net_j + u_j`` at a common level, clamped at the box
bounds; the level is found exactly by scanning the breakpoints of the
piecewise-linear total ``sum_j clip(level - net_j, lo_j, hi_j)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .profiles import TAU_HOURS

EQ_TOL = 1e-6


class AllocationInfeasible(ValueError):
    def __init__(self, message: str, slack: float, hour: int | None = None):
        super().__init__(message)
        self.slack = slack
        self.hour = hour


def feasible_interval(stored, capacity, max_rate, tau: float = TAU_HOURS):
    """Per-building rate bounds from the power limit and the stored energy."""
    stored = np.clip(np.asarray(stored, dtype=float), 0.0, capacity)
    lo = np.maximum(-np.asarray(max_rate, dtype=float), -stored / tau)
    hi = np.minimum(np.asarray(max_rate, dtype=float), (capacity - stored) / tau)
    return lo, hi


def water_fill(net, lo, hi, target, flat=None) -> np.ndarray:
    """Vectorised equal-level allocation.

    All array arguments carry a leading batch axis: ``net``, ``lo``, ``hi``
    are ``(P, N)`` and ``target`` is ``(P,)``. Targets are clipped into
    ``[sum(lo), sum(hi)]``. Rows flagged in ``flat`` (zero price, so every
    split is optimal) are split in proportion to the headroom in the
    direction of the target.
    """
    net = np.asarray(net, dtype=float)
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    target = np.clip(np.asarray(target, dtype=float), lo.sum(1), hi.sum(1))
    P, N = net.shape

    bps = np.sort(np.concatenate([net + lo, net + hi], axis=1), axis=1)
    totals = np.clip(bps[:, :, None] - net[:, None, :], lo[:, None, :], hi[:, None, :]).sum(-1)
    below = (totals < target[:, None]).sum(1)
    k = np.clip(below, 1, 2 * N - 1)[:, None]
    b0 = np.take_along_axis(bps, k - 1, 1)[:, 0]
    b1 = np.take_along_axis(bps, k, 1)[:, 0]
    g0 = np.take_along_axis(totals, k - 1, 1)[:, 0]
    g1 = np.take_along_axis(totals, k, 1)[:, 0]
    span = g1 - g0
    level = b0 + (target - g0) * (b1 - b0) / np.where(span > 0, span, 1.0)
    level = np.where(below == 0, bps[:, 0], level)
    rates = np.clip(level[:, None] - net, lo, hi)

    if flat is not None and np.any(flat):
        flat = np.asarray(flat, dtype=bool)
        up = hi.sum(1)
        down = lo.sum(1)
        share_up = hi / np.where(up > 0, up, 1.0)[:, None]
        share_down = lo / np.where(down < 0, down, -1.0)[:, None]
        proportional = np.where(
            (target >= 0)[:, None], target[:, None] * share_up, target[:, None] * share_down
        )
        rates = np.where(flat[:, None], proportional, rates)
    return rates


@dataclass(frozen=True)
class HourAllocationProblem:
    target: float
    net_load: np.ndarray
    stored: np.ndarray
    capacity: np.ndarray
    max_rate: np.ndarray
    price: float
    tau: float = TAU_HOURS

    def bounds(self):
        return feasible_interval(self.stored, np.asarray(self.capacity, dtype=float), self.max_rate, self.tau)

    def objective(self, rates) -> float:
        load = np.asarray(self.net_load, dtype=float) + np.asarray(rates, dtype=float) * self.tau
        return float(np.sum((load * self.price) ** 2))


def allocate_hour(problem: HourAllocationProblem) -> np.ndarray:
    lo, hi = problem.bounds()
    total_lo, total_hi = float(lo.sum()), float(hi.sum())
    tol = EQ_TOL * max(1.0, abs(problem.target))
    if problem.target < total_lo - tol:
        slack = problem.target - total_lo
        raise AllocationInfeasible(
            f"target {problem.target:.6g} kW below the aggregate discharge limit {total_lo:.6g} kW",
            slack,
        )
    if problem.target > total_hi + tol:
        slack = problem.target - total_hi
        raise AllocationInfeasible(
            f"target {problem.target:.6g} kW above the aggregate charge limit {total_hi:.6g} kW",
            slack,
        )
    # Net loads are energies per slot; the rate enters as u * tau.
    net = np.asarray(problem.net_load, dtype=float) / problem.tau
    rates = water_fill(
        net[None, :], lo[None, :], hi[None, :], np.array([problem.target]),
        flat=np.array([problem.price == 0]),
    )
    return rates[0]


@dataclass(frozen=True)
class DayAllocation:
    rates: np.ndarray   # (N, H) kW
    stored: np.ndarray  # (N, H + 1) kWh, column 0 is the initial level


def hour_prices(exchange, pricing) -> np.ndarray:
    """Tariff applied to each hour's net exchange (buy when importing)."""
    exchange = np.asarray(exchange, dtype=float)
    return np.where(exchange > 0, pricing.buy, pricing.sell)


def allocate_day(plan, buildings, pricing, tau: float = TAU_HOURS) -> DayAllocation:
    """Run :func:`allocate_hour` for every hour, chaining stored energy."""
    buildings = list(buildings)
    ids = [b.id for b in buildings]
    H = plan.battery_rates.size
    demand = np.array([b.demand.values for b in buildings])
    generation = np.array([b.generation.values for b in buildings])
    net = demand + plan.ev_load_by_building(ids) - generation
    capacity = np.array([b.battery.capacity for b in buildings])
    max_rate = np.array([b.battery.max_rate for b in buildings])
    prices = hour_prices(net.sum(0) + plan.battery_rates * tau, pricing)

    stored = np.zeros((len(buildings), H + 1))
    stored[:, 0] = [b.initial_stored for b in buildings]
    rates = np.zeros((len(buildings), H))
    for i in range(H):
        problem = HourAllocationProblem(
            target=float(plan.battery_rates[i]), net_load=net[:, i], stored=stored[:, i],
            capacity=capacity, max_rate=max_rate, price=float(prices[i]), tau=tau,
        )
        try:
            rates[:, i] = allocate_hour(problem)
        except AllocationInfeasible as exc:
            raise AllocationInfeasible(f"hour {i + 1}: {exc}", exc.slack, hour=i + 1) from None
        stored[:, i + 1] = stored[:, i] + rates[:, i] * tau
    return DayAllocation(rates, stored)
