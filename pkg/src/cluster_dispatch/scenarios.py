"""End-to-end runs of the three cluster controls over consecutive days.

==========  ====================  ============  =====================================
scenario    EV charging           sharing       battery control
==========  ====================  ============  =====================================
S1          immediate             none          GA per building
S2          immediate             full          joint GA over all buildings
S3          optimised             full          representative GA + hourly allocation
==========  ====================  ============  =====================================

Days are optimised one at a time with perfect foresight of that day's
profiles. Battery levels and partly-charged EVs carry over to the next day.
EV sessions whose window runs past the last simulated hour are cut at that
hour (their target is lowered if it no longer fits).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .aggregate import BuildingModel, aggregate
from .allocation import allocate_day
from .ga import GAParams
from .optimizer import optimize_batteries, optimize_horizon
from .profiles import KWH, TAU_HOURS, ProfileError, TimeSeries, slice_horizon
from .settlement import EnergyFlowLedger, build_ledger, day_report, _plain
from .storage import (
    SOC_TOL, EVSession, InfeasibleSession, apply_battery_schedule, check_ev_schedule,
    draw_arrival_soc, immediate_charge_schedule,
)

log = logging.getLogger(__name__)

HOURS = 24
SCENARIOS = {
    "S1": ("immediate", False),
    "S2": ("immediate", True),
    "S3": ("optimized", True),
}

_KIND_BATTERY = 1
_KIND_REPRESENTATIVE = 2
_KIND_ARRIVAL_SOC = 3


@dataclass(frozen=True)
class ScenarioConfig:
    id: str
    ev_mode: str
    sharing: bool
    ga: GAParams = field(default_factory=GAParams)
    seed: int = 0

    def __post_init__(self):
        if self.id not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.id!r}; expected one of {sorted(SCENARIOS)}")
        if (self.ev_mode, self.sharing) != SCENARIOS[self.id]:
            raise ValueError(f"scenario {self.id} is fixed to ev_mode/sharing {SCENARIOS[self.id]}")

    @classmethod
    def preset(cls, scenario_id: str, ga: GAParams | None = None, seed: int = 0) -> "ScenarioConfig":
        ev_mode, sharing = SCENARIOS[scenario_id]
        return cls(scenario_id, ev_mode, sharing, ga or GAParams(), seed)


def derive_seed(*key: int) -> int:
    """Stable 32-bit seed for a tuple of non-negative integers."""
    return int(np.random.SeedSequence(list(key)).generate_state(1)[0])


def session_instances(cluster, days: int, seed: int, tau: float = TAU_HOURS) -> list[EVSession]:
    """Concrete EV sessions for ``days`` days, in hours from the run start.

    Arrival SOCs come from the templates or are drawn from ``seed``; the
    draws do not depend on the scenario, so all controls see the same fleet.
    """
    end = HOURS * days
    out = []
    for d in range(days):
        for k, tpl in enumerate(cluster.ev_sessions):
            soc = tpl.soc_for_day(d)
            full = tpl.session(d, 0.0 if soc is None else min(soc, tpl.target_soc))
            if soc is None:
                rng = np.random.default_rng(derive_seed(seed, _KIND_ARRIVAL_SOC, d, k))
                full = full.with_arrival_soc(draw_arrival_soc(full, rng, tau))
            elif not full.is_feasible(tau):
                raise InfeasibleSession(
                    full, f"needs {full.energy_needed:.4g} kWh but at most "
                    f"{full.max_rate * full.duration * tau:.4g} kWh fits in {full.duration} h",
                )
            session = replace(full, id=f"{tpl.id}/day{d + 1}")
            if session.departure > end:
                session = replace(session, duration=end - session.arrival)
                if not session.is_feasible(tau):
                    reachable = session.arrival_soc + session.max_rate * session.duration * tau / session.capacity
                    log.info("EV %s: window cut at the end of the run, target lowered to %.3f",
                             session.id, reachable)
                    session = replace(session, target_soc=min(1.0, reachable))
            out.append(session)
    return out


@dataclass
class CarryState:
    stored: np.ndarray
    ev_rates: dict = field(default_factory=dict)  # session id -> committed rates over its window


@dataclass
class DayResult:
    scenario: str
    day: int
    ledger: EnergyFlowLedger
    report: object
    battery_rates: np.ndarray
    ev_rates: dict
    state: CarryState
    seed: int

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "day": self.day,
            "seed": self.seed,
            "report": self.report.to_dict(),
            "ledger": self.ledger.to_dict(),
            "ev_rates": _plain(self.ev_rates),
        }


@dataclass
class ScenarioResult:
    scenario: str
    days: list
    sessions: list

    @property
    def reports(self):
        return [d.report for d in self.days]


def _day_buildings(cluster, day: int, stored, extra_demand=None) -> list[BuildingModel]:
    start = HOURS * day
    if start + HOURS > cluster.hours_available:
        raise ProfileError(
            f"profiles cover {cluster.hours_available} h; day {day + 1} needs hours {start}..{start + HOURS - 1}"
        )
    out = []
    for j, b in enumerate(cluster.buildings):
        demand = slice_horizon(b.demand, start, HOURS)
        if extra_demand is not None:
            demand = TimeSeries(demand.start, demand.values + extra_demand[j], KWH)
        out.append(BuildingModel(
            b.id, demand, slice_horizon(b.generation, start, HOURS), b.battery,
            float(np.clip(stored[j], 0.0, b.battery.capacity)), b.pv,
        ))
    return out


def _immediate_ev(cluster, sessions, day: int, tau: float):
    """EV load per building for the day plus the committed per-session slices."""
    ids = cluster.building_ids()
    load = np.zeros((len(ids), HOURS))
    committed = {}
    lo, hi = HOURS * day, HOURS * (day + 1)
    for s in sessions:
        if s.departure <= lo or s.arrival >= hi:
            continue
        rates = immediate_charge_schedule(s, tau)
        a, b = max(s.arrival, lo), min(s.departure, hi)
        part = rates[a - s.arrival:b - s.arrival]
        load[ids.index(s.building), a - lo:b - lo] += part * tau
        committed[s.id] = (a, part)
    return load, committed


def _segments(sessions, state: CarryState, day: int, tau: float):
    """Per-day pieces of the sessions overlapping ``day``, as local EVSessions.

    A piece must end at or above the level from which the rest of the
    window can still reach the target at full rate.
    """
    lo, hi = HOURS * day, HOURS * (day + 1)
    out = []
    for s in sessions:
        if s.departure <= lo or s.arrival >= hi:
            continue
        a, b = max(s.arrival, lo), min(s.departure, hi)
        before = state.ev_rates.get(s.id, np.zeros(0))
        level = s.arrival_soc * s.capacity + float(np.sum(before) * tau)
        floor = s.target_soc * s.capacity - s.max_rate * (s.departure - b) * tau
        target = max(level, floor)
        out.append((s, a, replace(
            s, arrival=a - lo, duration=b - a,
            arrival_soc=min(1.0, max(0.0, level / s.capacity)),
            target_soc=min(1.0, max(0.0, target / s.capacity)),
        )))
    return out


def _fixed_ev_batteries(buildings, ev_load, scenario: ScenarioConfig, day: int, pricing, tau: float):
    """Battery rates with the EV load fixed: one GA per building, or one joint GA when shared."""
    n, H = len(buildings), buildings[0].horizon
    nets = np.array([b.mismatch() for b in buildings]) + ev_load
    if scenario.sharing:
        ga = replace(scenario.ga, seed=derive_seed(scenario.seed, _KIND_BATTERY, day, *range(n)))
        rates = optimize_batteries(nets, [b.battery for b in buildings],
                                   [b.initial_stored for b in buildings], pricing, ga, tau)
    else:
        rates = np.zeros((n, H))
        for j, b in enumerate(buildings):
            own = replace(b, demand=TimeSeries(b.demand.start, b.demand.values + ev_load[j], KWH))
            ga = replace(scenario.ga, seed=derive_seed(scenario.seed, _KIND_BATTERY, day, j))
            rates[j] = optimize_horizon(aggregate([own]), [], pricing, ga, tau=tau).battery_rates
    stored = np.zeros((n, H + 1))
    stored[:, 0] = [b.initial_stored for b in buildings]
    stored[:, 1:] = stored[:, :1] + np.cumsum(rates * tau, axis=1)
    return rates, stored


def _optimised_ev(buildings, sessions, scenario: ScenarioConfig, day: int, pricing, allow_v2b: bool, tau: float):
    """Representative plan over batteries and EVs, split back over the buildings."""
    ga = replace(scenario.ga, seed=derive_seed(scenario.seed, _KIND_REPRESENTATIVE, day))
    plan = optimize_horizon(aggregate(buildings), sessions, pricing, ga,
                            buildings=buildings, allow_v2b=allow_v2b, tau=tau)
    alloc = allocate_day(plan, buildings, pricing, tau)
    return alloc.rates, alloc.stored, plan


@dataclass
class InstanceResult:
    scenario: str
    battery_rates: np.ndarray  # (N, H)
    ev_rates: tuple            # one array per session, over its window
    ledger: EnergyFlowLedger
    plan: object = None        # representative HorizonPlan (S3 only)

    @property
    def cost(self) -> float:
        return float(self.ledger.cost.sum())


def solve_instance(buildings, sessions, pricing, scenario: ScenarioConfig,
                   allow_v2b: bool = False, tau: float = TAU_HOURS) -> InstanceResult:
    """Run one control on a single horizon (any length) and settle it.

    ``sessions`` use the local hours of the horizon and must end inside it.
    """
    buildings = list(buildings)
    ids = [b.id for b in buildings]
    H = buildings[0].horizon
    for s in sessions:
        if s.departure > H:
            raise ValueError(f"EV {s.id!r}: window ends after hour {H} of the horizon")
    if scenario.ev_mode == "immediate":
        ev_rates = tuple(immediate_charge_schedule(s, tau) for s in sessions)
        ev_load = np.zeros((len(ids), H))
        for s, r in zip(sessions, ev_rates):
            ev_load[ids.index(s.building), s.arrival:s.departure] += r * tau
        rates, stored = _fixed_ev_batteries(buildings, ev_load, scenario, 0, pricing, tau)
        plan = None
    else:
        rates, stored, plan = _optimised_ev(buildings, list(sessions), scenario, 0, pricing, allow_v2b, tau)
        ev_rates = plan.ev_rates
        ev_load = plan.ev_load_by_building(ids) * tau
    ledger = build_ledger(
        ids, np.array([b.demand.values for b in buildings]), np.array([b.generation.values for b in buildings]),
        ev_load, rates, stored, scenario.sharing, pricing, tau,
    )
    ledger.check()
    return InstanceResult(scenario.id, rates, tuple(ev_rates), ledger, plan)


def run_day_ahead(cluster, scenario: ScenarioConfig, day: int, state: CarryState,
                  sessions: list, tau: float = TAU_HOURS) -> DayResult:
    """Optimise, allocate and settle one day; returns the committed day."""
    ids = cluster.building_ids()
    seed = scenario.seed
    ev_committed = {}

    if scenario.ev_mode == "immediate":
        ev_load, committed = _immediate_ev(cluster, sessions, day, tau)
        ev_committed.update(committed)
        buildings = _day_buildings(cluster, day, state.stored)
        rates, stored = _fixed_ev_batteries(buildings, ev_load, scenario, day, cluster.pricing, tau)
    else:
        buildings = _day_buildings(cluster, day, state.stored)
        pieces = _segments(sessions, state, day, tau)
        rates, stored, plan = _optimised_ev(buildings, [p[2] for p in pieces], scenario, day,
                                            cluster.pricing, cluster.allow_v2b, tau)
        ev_load = plan.ev_load_by_building(ids) * tau
        for (s, a, _), part in zip(pieces, plan.ev_rates):
            ev_committed[s.id] = (a, part)

    for b, row in zip(buildings, rates):
        apply_battery_schedule(b.battery, b.initial_stored, row, tau)

    ledger = build_ledger(
        ids,
        np.array([b.demand.values for b in buildings]),
        np.array([b.generation.values for b in buildings]),
        ev_load, rates, stored, scenario.sharing, cluster.pricing, tau,
    )
    ledger.check()
    report = day_report(ledger, cluster.pricing, scenario.id, day + 1)

    ev_rates = dict(state.ev_rates)
    for sid, (_, part) in ev_committed.items():
        ev_rates[sid] = np.concatenate([ev_rates.get(sid, np.zeros(0)), part])
    new_state = CarryState(stored=stored[:, -1].copy(), ev_rates=ev_rates)
    day_ev = {sid: {"start_hour": a - HOURS * day, "rates": part} for sid, (a, part) in sorted(ev_committed.items())}
    return DayResult(scenario.id, day + 1, ledger, report, rates, day_ev, new_state, seed)


def run_scenario(cluster, scenario: ScenarioConfig, days: int, tau: float = TAU_HOURS) -> ScenarioResult:
    """Chain :func:`run_day_ahead` over ``days`` days and verify every EV."""
    if days < 1:
        raise ValueError("days must be >= 1")
    if HOURS * days > cluster.hours_available:
        raise ProfileError(f"profiles cover {cluster.hours_available} h, {days} day(s) need {HOURS * days} h")
    sessions = session_instances(cluster, days, scenario.seed, tau)
    state = CarryState(stored=np.array([b.initial_stored for b in cluster.buildings], dtype=float))
    results = []
    for day in range(days):
        result = run_day_ahead(cluster, scenario, day, state, sessions, tau)
        results.append(result)
        state = result.state
    for s in sessions:
        rates = state.ev_rates.get(s.id, np.zeros(s.duration))
        check = check_ev_schedule(s, rates, tau, cluster.allow_v2b)
        if not check.valid:
            raise InfeasibleSession(s, f"committed schedule violates {check.violations[0]}")
    return ScenarioResult(scenario.id, results, sessions)
