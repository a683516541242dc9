"""Exhaustive search over discretised rate grids, for small instances.

Every battery and EV rate is restricted to a short list of levels and
every combination is scored. Candidate sequences are screened one block at
a time (each building's battery, each EV) with the storage checks, which
is exact because the storage constraints do not couple blocks; the
surviving combinations are then settled in full. Ties are broken towards
the lexicographically smallest plan vector
``[battery_1, ..., battery_N, ev_1, ..., ev_K]``.

Scenario semantics:

* ``S1`` - EVs charge immediately, no sharing.
* ``S2`` - EVs charge immediately, full sharing.
* ``S3`` - EV rates are searched (grid plus the immediate schedule), full sharing.

The immediate schedule is always an S3 candidate, so the S3 search space
contains the S2 one even when that schedule is off the grid.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from datetime import datetime

import numpy as np

from .aggregate import BuildingModel
from .profiles import KWH, TAU_HOURS, TimeSeries
from .settlement import cluster_cost
from .storage import BatterySpec, BatteryViolation, EVSession, apply_battery_schedule, check_ev_schedule, immediate_charge_schedule

MAX_HOURS = 8
MAX_BUILDINGS = 3
MAX_EVS = 2
MAX_COMBINATIONS = 10 ** 8
TIE_TOL = 1e-9
_CHUNK = 1 << 16


class SearchSpaceTooLarge(ValueError):
    pass


@dataclass
class OracleInstance:
    demand: np.ndarray            # (N, H) kWh
    generation: np.ndarray        # (N, H) kWh
    batteries: list               # BatterySpec per building
    initial_stored: np.ndarray = None
    sessions: list = field(default_factory=list)   # EVSession, local hours, building = id
    building_ids: list = None
    battery_levels: list = None   # per building; default (-max, 0, max)
    ev_levels: list = None        # per session; default (0, max/2, max)
    tau: float = TAU_HOURS

    def __post_init__(self):
        self.demand = np.atleast_2d(np.asarray(self.demand, dtype=float))
        self.generation = np.atleast_2d(np.asarray(self.generation, dtype=float))
        N, H = self.demand.shape
        if self.generation.shape != (N, H):
            raise ValueError("demand and generation must have the same shape")
        if H > MAX_HOURS or N > MAX_BUILDINGS or len(self.sessions) > MAX_EVS:
            raise ValueError(
                f"oracle instances are limited to {MAX_HOURS} h, {MAX_BUILDINGS} buildings, {MAX_EVS} EVs"
            )
        if len(self.batteries) != N:
            raise ValueError("one battery spec per building required")
        if self.initial_stored is None:
            self.initial_stored = np.zeros(N)
        self.initial_stored = np.asarray(self.initial_stored, dtype=float)
        if self.building_ids is None:
            self.building_ids = [str(j) for j in range(N)]
        if self.battery_levels is None:
            self.battery_levels = [(-b.max_rate, 0.0, b.max_rate) for b in self.batteries]
        if self.ev_levels is None:
            self.ev_levels = [(0.0, s.max_rate / 2, s.max_rate) for s in self.sessions]
        self.battery_levels = [tuple(sorted(set(map(float, lv)))) for lv in self.battery_levels]
        self.ev_levels = [tuple(sorted(set(map(float, lv)))) for lv in self.ev_levels]
        for s in self.sessions:
            if s.departure > H:
                raise ValueError(f"EV {s.id!r}: window exceeds the {H}-hour horizon")
            if s.building not in self.building_ids:
                raise ValueError(f"EV {s.id!r}: unknown building {s.building!r}")

    @property
    def shape(self):
        return self.demand.shape

    def buildings(self, start: datetime = datetime(2020, 1, 1)) -> list:
        """The instance as :class:`BuildingModel` objects, for the GA pipeline."""
        return [
            BuildingModel(bid, TimeSeries(start, self.demand[j], KWH), TimeSeries(start, self.generation[j], KWH),
                          self.batteries[j], float(self.initial_stored[j]))
            for j, bid in enumerate(self.building_ids)
        ]

    def search_space(self, scenario: str) -> int:
        N, H = self.shape
        size = math.prod(len(lv) ** H for lv in self.battery_levels)
        if scenario == "S3":
            for s, lv in zip(self.sessions, self.ev_levels):
                size *= len(lv) ** s.duration + 1
        return size


@dataclass
class OracleResult:
    cost: float
    battery_rates: np.ndarray   # (N, H)
    ev_rates: tuple
    scenario: str
    combinations: int           # size of the raw grid
    feasible: int               # combinations left after storage screening

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "cost": self.cost,
            "battery_rates": self.battery_rates.tolist(),
            "ev_rates": [r.tolist() for r in self.ev_rates],
            "combinations": self.combinations,
            "feasible": self.feasible,
        }


def _battery_candidates(spec: BatterySpec, initial: float, levels, H: int, tau: float) -> np.ndarray:
    keep = []
    for seq in itertools.product(levels, repeat=H):
        try:
            apply_battery_schedule(spec, initial, seq, tau)
        except BatteryViolation:
            continue
        keep.append(seq)
    return np.array(keep, dtype=float).reshape(-1, H)


def _ev_candidates(session: EVSession, levels, searched: bool, tau: float, allow_v2b: bool) -> np.ndarray:
    immediate = immediate_charge_schedule(session, tau)
    if not searched:
        return immediate[None]
    keep = [seq for seq in itertools.product(levels, repeat=session.duration)
            if check_ev_schedule(session, seq, tau, allow_v2b).valid]
    rows = np.array(keep + [tuple(immediate)], dtype=float).reshape(-1, session.duration)
    rows = np.unique(rows, axis=0)  # sorted lexicographically
    return rows


def plan_nets(instance: OracleInstance, battery_rates, ev_rates) -> np.ndarray:
    """Surplus positions (N, H) of a complete plan."""
    tau = instance.tau
    nets = instance.generation - instance.demand - np.asarray(battery_rates, dtype=float) * tau
    for s, rates in zip(instance.sessions, ev_rates):
        j = instance.building_ids.index(s.building)
        nets[j, s.arrival:s.departure] -= np.asarray(rates, dtype=float) * tau
    return nets


def plan_cost(instance: OracleInstance, battery_rates, ev_rates, sharing: bool, pricing) -> float:
    return float(cluster_cost(plan_nets(instance, battery_rates, ev_rates), sharing, pricing, instance.tau))


def brute_force_optimal(instance: OracleInstance, pricing, scenario: str = "S3",
                        allow_v2b: bool = False) -> OracleResult:
    if scenario not in ("S1", "S2", "S3"):
        raise ValueError(f"unknown scenario {scenario!r}")
    total = instance.search_space(scenario)
    if total > MAX_COMBINATIONS:
        raise SearchSpaceTooLarge(f"{total} combinations exceed the limit of {MAX_COMBINATIONS}")
    N, H = instance.shape
    tau = instance.tau
    sharing = scenario != "S1"

    # Each block: (candidate rows, building row index, first hour).
    blocks = []
    for j, spec in enumerate(instance.batteries):
        rows = _battery_candidates(spec, instance.initial_stored[j], instance.battery_levels[j], H, tau)
        blocks.append((rows, j, 0))
    for s, levels in zip(instance.sessions, instance.ev_levels):
        rows = _ev_candidates(s, levels, scenario == "S3", tau, allow_v2b)
        blocks.append((rows, instance.building_ids.index(s.building), s.arrival))

    shape = tuple(len(rows) for rows, _, _ in blocks)
    feasible = math.prod(shape)
    base = instance.generation - instance.demand
    if feasible == 0:
        raise ValueError("no feasible combination on this grid")

    def chunk_costs(start, stop):
        idx = np.unravel_index(np.arange(start, stop), shape)
        nets = np.broadcast_to(base, (stop - start, N, H)).copy()
        for (rows, j, first), k in zip(blocks, idx):
            width = rows.shape[1]
            nets[:, j, first:first + width] -= rows[k] * tau
        return cluster_cost(nets, sharing, pricing, tau)

    best = math.inf
    for start in range(0, feasible, _CHUNK):
        best = min(best, float(chunk_costs(start, min(start + _CHUNK, feasible)).min()))
    chosen = None
    for start in range(0, feasible, _CHUNK):
        costs = chunk_costs(start, min(start + _CHUNK, feasible))
        hits = np.flatnonzero(costs <= best + TIE_TOL)
        if hits.size:
            chosen = start + int(hits[0])
            break

    picks = np.unravel_index(chosen, shape)
    battery = np.array([blocks[j][0][picks[j]] for j in range(N)])
    ev = tuple(blocks[N + k][0][picks[N + k]].copy() for k in range(len(instance.sessions)))
    return OracleResult(
        cost=plan_cost(instance, battery, ev, sharing, pricing),
        battery_rates=battery, ev_rates=ev, scenario=scenario,
        combinations=total, feasible=feasible,
    )
