"""Day-ahead battery and EV schedule search.

Two entry points share one GA problem:

* :func:`optimize_horizon` searches the representative building's battery
  rates together with every EV's charging rates.
* :func:`optimize_batteries` searches each building's battery rates jointly
  (EV loads fixed), with the cost evaluated on the cluster's net exchange.

Genome layout: one block of ``H`` battery rates per battery, followed by
one block per EV session covering its parking window. Every genome is
repaired before evaluation:

* EV rates are clipped to the rate box and, hour by hour, to the space left
  in the EV battery; any shortfall against the departure requirement is
  then filled at the hours with the lowest base net load.
* Battery rates are clipped hour by hour to the power limit and to the
  room left in the battery. With ``buildings`` given, the representative
  rate is further clipped to what the hourly allocator can actually spread
  over the member batteries, so every decoded plan survives allocation.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .allocation import feasible_interval, water_fill
from .ga import GAParams, evolve
from .profiles import TAU_HOURS
from .storage import SOC_TOL, EVSession, apply_battery_schedule, check_ev_schedule, immediate_charge_schedule


class OptimizationError(RuntimeError):
    pass


@dataclass(frozen=True)
class HorizonPlan:
    battery_rates: np.ndarray
    sessions: tuple = ()
    ev_rates: tuple = ()

    @property
    def horizon(self) -> int:
        return self.battery_rates.size

    def ev_load(self) -> np.ndarray:
        load = np.zeros(self.horizon)
        for s, rates in zip(self.sessions, self.ev_rates):
            load[s.arrival:s.departure] += rates
        return load

    def ev_load_by_building(self, building_ids) -> np.ndarray:
        building_ids = list(building_ids)
        load = np.zeros((len(building_ids), self.horizon))
        for s, rates in zip(self.sessions, self.ev_rates):
            if s.building not in building_ids:
                raise ValueError(f"EV {s.id!r} is assigned to unknown building {s.building!r}")
            load[building_ids.index(s.building), s.arrival:s.departure] += rates
        return load


def exchange_cost(exchange, pricing, tau: float = TAU_HOURS):
    """Cost of net exchanges (last axis = hours), buying above zero."""
    exchange = np.asarray(exchange, dtype=float)
    price = np.where(exchange > 0, pricing.buy, pricing.sell)
    return np.sum(exchange * tau * price, axis=-1)


def net_exchange(rep, plan: HorizonPlan, hour: int, tau: float = TAU_HOURS) -> float:
    """Grid exchange of the representative building at ``hour`` (positive = import)."""
    ev = sum(
        rates[hour - s.arrival]
        for s, rates in zip(plan.sessions, plan.ev_rates)
        if s.arrival <= hour < s.departure
    )
    return float(
        rep.demand.values[hour] + ev * tau + plan.battery_rates[hour] * tau - rep.generation.values[hour]
    )


def daily_cost(rep, plan: HorizonPlan, pricing, tau: float = TAU_HOURS) -> float:
    exchange = rep.demand.values + (plan.ev_load() + plan.battery_rates) * tau - rep.generation.values
    return float(exchange_cost(exchange, pricing, tau))


@dataclass
class _Problem:
    """Vectorised decode and fitness over a population of genomes."""

    base_net: np.ndarray        # (B, H) net load of each battery owner before EV/battery
    capacity: np.ndarray        # (B,)
    max_rate: np.ndarray        # (B,)
    initial: np.ndarray         # (B,)
    pricing: object
    penalty_weight: float
    sessions: list = field(default_factory=list)
    session_owner: list = field(default_factory=list)  # battery-block index of each EV (cost only)
    allow_v2b: bool = False
    tau: float = TAU_HOURS
    # allocation-aware mode (single representative block)
    bld_net: np.ndarray | None = None     # (N, H)
    bld_capacity: np.ndarray | None = None
    bld_max_rate: np.ndarray | None = None
    bld_initial: np.ndarray | None = None
    ev_building: list = field(default_factory=list)

    def __post_init__(self):
        self.B, self.H = self.base_net.shape
        self.offsets = []
        pos = self.B * self.H
        for s in self.sessions:
            self.offsets.append(pos)
            pos += s.duration
        self.size = pos
        cluster_net = self.base_net.sum(0)
        self.preference = [
            s.arrival + np.argsort(cluster_net[s.arrival:s.departure], kind="stable")
            for s in self.sessions
        ]

    def bounds(self):
        lower = np.concatenate([np.repeat(-self.max_rate, self.H)] + [
            np.full(s.duration, -s.max_rate if self.allow_v2b else 0.0) for s in self.sessions
        ])
        upper = np.concatenate([np.repeat(self.max_rate, self.H)] + [
            np.full(s.duration, s.max_rate) for s in self.sessions
        ])
        return lower, upper

    def ev_slice(self, k):
        return slice(self.offsets[k], self.offsets[k] + self.sessions[k].duration)

    def battery_slice(self, b):
        return slice(b * self.H, (b + 1) * self.H)

    # --- decoding -----------------------------------------------------------
    def _decode_ev(self, pop):
        tau = self.tau
        for k, s in enumerate(self.sessions):
            u = pop[:, self.ev_slice(k)]
            lo = -s.max_rate if self.allow_v2b else 0.0
            level = np.full(len(pop), s.arrival_soc * s.capacity)
            for h in range(s.duration):
                u[:, h] = np.clip(u[:, h], np.maximum(lo, -level / tau),
                                  np.minimum(s.max_rate, (s.capacity - level) / tau))
                level = level + u[:, h] * tau
            shortfall = s.target_soc * s.capacity - level
            for hour in self.preference[k]:
                h = hour - s.arrival
                if not np.any(shortfall > 0):
                    break
                room = (s.max_rate - u[:, h]) * tau
                if self.allow_v2b:
                    running = s.arrival_soc * s.capacity + np.cumsum(u[:, h:] * tau, axis=1)
                    room = np.minimum(room, s.capacity - running.max(1))
                add = np.clip(np.minimum(room, shortfall), 0.0, None)
                u[:, h] += add / tau
                shortfall = shortfall - add
            pop[:, self.ev_slice(k)] = u
        return pop

    def ev_loads(self, pop):
        """EV energy per hour charged to each battery block, (P, B, H)."""
        load = np.zeros((len(pop), self.B, self.H))
        for k, s in enumerate(self.sessions):
            load[:, self.session_owner[k], s.arrival:s.departure] += pop[:, self.ev_slice(k)] * self.tau
        return load

    def _decode_batteries(self, pop):
        tau = self.tau
        for b in range(self.B):
            u = pop[:, self.battery_slice(b)]
            level = np.full(len(pop), self.initial[b])
            for i in range(self.H):
                u[:, i] = np.clip(u[:, i], np.maximum(-self.max_rate[b], -level / tau),
                                  np.minimum(self.max_rate[b], (self.capacity[b] - level) / tau))
                level = level + u[:, i] * tau
            pop[:, self.battery_slice(b)] = u
        return pop

    def _decode_allocatable(self, pop):
        tau = self.tau
        P = len(pop)
        ev = np.zeros((P, len(self.bld_net), self.H))
        for k, s in enumerate(self.sessions):
            ev[:, self.ev_building[k], s.arrival:s.departure] += pop[:, self.ev_slice(k)] * tau
        net = self.bld_net[None] + ev
        stored = np.tile(self.bld_initial, (P, 1))
        u = pop[:, :self.H]
        for i in range(self.H):
            lo, hi = feasible_interval(stored, self.bld_capacity, self.bld_max_rate, tau)
            target = np.clip(u[:, i], lo.sum(1), hi.sum(1))
            exchange = net[:, :, i].sum(1) + target * tau
            price = np.where(exchange > 0, self.pricing.buy, self.pricing.sell)
            rates = water_fill(net[:, :, i] / tau, lo, hi, target, flat=price == 0)
            u[:, i] = target
            stored = stored + rates * tau
        pop[:, :self.H] = u
        return pop

    def decode(self, pop):
        pop = self._decode_ev(np.array(pop, dtype=float))
        if self.bld_net is not None:
            return self._decode_allocatable(pop)
        return self._decode_batteries(pop)

    # --- evaluation ---------------------------------------------------------
    def exchange(self, pop):
        battery = pop[:, :self.B * self.H].reshape(len(pop), self.B, self.H) * self.tau
        return (self.base_net[None] + battery + self.ev_loads(pop)).sum(1)

    def violation(self, pop):
        """Total kWh by which decoded genomes still break storage limits."""
        total = np.zeros(len(pop))
        battery = pop[:, :self.B * self.H].reshape(len(pop), self.B, self.H)
        levels = self.initial[None, :, None] + np.cumsum(battery * self.tau, axis=2)
        total += np.clip(-levels, 0, None).sum((1, 2))
        total += np.clip(levels - self.capacity[None, :, None], 0, None).sum((1, 2))
        for k, s in enumerate(self.sessions):
            lvl = s.arrival_soc * s.capacity + np.cumsum(pop[:, self.ev_slice(k)] * self.tau, axis=1)
            total += np.clip(-lvl, 0, None).sum(1) + np.clip(lvl - s.capacity, 0, None).sum(1)
            total += np.clip(s.target_soc * s.capacity - lvl[:, -1], 0, None)
        return total

    def fitness(self, pop):
        cost = exchange_cost(self.exchange(pop), self.pricing, self.tau)
        return cost + self.penalty_weight * self.violation(pop)

    # --- seeding ------------------------------------------------------------
    def seeds(self):
        lower, upper = self.bounds()
        ev_variants = [np.zeros(self.size)]
        if self.sessions:
            immediate = np.zeros(self.size)
            for k, s in enumerate(self.sessions):
                immediate[self.ev_slice(k)] = immediate_charge_schedule(s, self.tau)
            ev_variants.append(immediate)
        out = []
        for base in ev_variants:
            out.append(base.copy())
            genome = self._decode_ev(base[None].copy())
            load = self.base_net + self.ev_loads(genome)[0]
            own = genome[0].copy()
            for b in range(self.B):
                own[self.battery_slice(b)] = -load[b] / self.tau
            out.append(own)
            if self.B > 1:
                pooled = genome[0].copy()
                share = self.max_rate / self.max_rate.sum()
                for b in range(self.B):
                    pooled[self.battery_slice(b)] = -load.sum(0) * share[b] / self.tau
                out.append(pooled)
        return np.clip(np.array(out), lower, upper)


def _penalty(params: GAParams, pricing) -> float:
    return params.penalty_weight if params.penalty_weight is not None else 10.0 * pricing.buy


def _run(problem: _Problem, params: GAParams):
    lower, upper = problem.bounds()
    rng = np.random.default_rng(params.seed)
    return evolve(lower, upper, problem.decode, problem.fitness, params, rng, seeds=problem.seeds())


def optimize_horizon(rep, sessions, pricing, params: GAParams | None = None, buildings=None,
                     allow_v2b: bool = False, tau: float = TAU_HOURS) -> HorizonPlan:
    """GA search over the representative battery rates and EV charging rates.

    ``sessions`` are expressed in the local hours of this horizon; a
    session's ``target_soc`` is the level required at the end of its
    window. If ``buildings`` (the cluster members, aligned with ``rep``) is
    given and has more than one member, the representative rates are kept
    within what :func:`~cluster_dispatch.allocation.allocate_day` can split
    over the member batteries.
    """
    params = params or GAParams()
    sessions = list(sessions)
    H = rep.horizon
    for s in sessions:
        if s.departure > H:
            raise ValueError(f"EV {s.id!r}: window ends after hour {H} of the horizon")
        if not s.is_feasible(tau):
            raise OptimizationError(f"EV {s.id!r}: target unreachable within its window")
    problem = _Problem(
        base_net=rep.mismatch()[None],
        capacity=np.array([rep.capacity]),
        max_rate=np.array([rep.max_rate]),
        initial=np.array([rep.initial_stored]),
        pricing=pricing,
        penalty_weight=_penalty(params, pricing),
        sessions=sessions,
        session_owner=[0] * len(sessions),
        allow_v2b=allow_v2b,
        tau=tau,
    )
    if buildings is not None and len(buildings) > 1:
        ids = [b.id for b in buildings]
        problem.bld_net = np.array([b.mismatch() for b in buildings])
        problem.bld_capacity = np.array([b.battery.capacity for b in buildings], dtype=float)
        problem.bld_max_rate = np.array([b.battery.max_rate for b in buildings], dtype=float)
        problem.bld_initial = np.array([b.initial_stored for b in buildings], dtype=float)
        for s in sessions:
            if s.building not in ids:
                raise ValueError(f"EV {s.id!r} is assigned to unknown building {s.building!r}")
        problem.ev_building = [ids.index(s.building) for s in sessions]

    result = _run(problem, params)
    genome = result.genome
    plan = HorizonPlan(
        battery_rates=genome[:H].copy(),
        sessions=tuple(sessions),
        ev_rates=tuple(genome[problem.ev_slice(k)].copy() for k in range(len(sessions))),
    )
    _verify(plan, rep.battery, rep.initial_stored, allow_v2b, tau, result.fitness, problem)
    return plan


def _verify(plan, spec, initial, allow_v2b, tau, fitness, problem):
    if problem.violation(np.concatenate([plan.battery_rates, *plan.ev_rates])[None])[0] > SOC_TOL:
        raise OptimizationError(f"no feasible plan found (best penalised fitness {fitness:.6g})")
    apply_battery_schedule(spec, initial, plan.battery_rates, tau)
    for s, rates in zip(plan.sessions, plan.ev_rates):
        check = check_ev_schedule(s, rates, tau, allow_v2b)
        if not check.valid:
            raise OptimizationError(f"EV {s.id!r}: returned plan violates {check.violations[0]}")


def optimize_batteries(net_loads, specs, initial, pricing, params: GAParams | None = None,
                       tau: float = TAU_HOURS) -> np.ndarray:
    """Joint GA over every building's battery rates; returns ``(N, H)`` rates.

    ``net_loads`` is ``(N, H)``: demand plus fixed EV load minus PV, per
    building. The objective prices the summed exchange of all buildings,
    i.e. the cluster bill under full sharing. With a single building this
    is exactly the individual optimisation.
    """
    params = params or GAParams()
    net_loads = np.atleast_2d(np.asarray(net_loads, dtype=float))
    specs = list(specs)
    problem = _Problem(
        base_net=net_loads,
        capacity=np.array([s.capacity for s in specs], dtype=float),
        max_rate=np.array([s.max_rate for s in specs], dtype=float),
        initial=np.asarray(initial, dtype=float).reshape(-1),
        pricing=pricing,
        penalty_weight=_penalty(params, pricing),
        tau=tau,
    )
    result = _run(problem, params)
    rates = result.genome.reshape(len(specs), -1)
    for spec, phi0, row in zip(specs, problem.initial, rates):
        apply_battery_schedule(spec, phi0, row, tau)
    return rates
