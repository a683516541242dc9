"""Stationary battery and EV session models (lossless, hourly)."""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

from .profiles import TAU_HOURS

log = logging.getLogger(__name__)

SOC_TOL = 1e-9  # kWh


class BatteryViolation(ValueError):
    """A battery schedule breaks a rate or state-of-charge bound.

    ``hour`` is 1-based (the first rate is hour 1).
    """

    def __init__(self, kind: str, hour: int, amount: float, message: str):
        super().__init__(message)
        self.kind = kind
        self.hour = hour
        self.amount = amount


class InfeasibleSession(ValueError):
    def __init__(self, session: "EVSession", message: str):
        super().__init__(f"EV session {session.id!r}: {message}")
        self.session = session


@dataclass(frozen=True)
class BatterySpec:
    capacity: float
    max_rate: float

    def __post_init__(self):
        if not self.capacity > 0:
            raise ValueError(f"battery capacity must be > 0, got {self.capacity}")
        if not self.max_rate > 0:
            raise ValueError(f"battery max_rate must be > 0, got {self.max_rate}")


@dataclass(frozen=True)
class BatteryState:
    stored: float = 0.0

    def check(self, spec: BatterySpec) -> None:
        if not -SOC_TOL <= self.stored <= spec.capacity + SOC_TOL:
            raise ValueError(f"stored energy {self.stored} outside [0, {spec.capacity}]")


@dataclass(frozen=True)
class EVSession:
    """One parking window at a charging port.

    The vehicle is connected for hours ``arrival .. arrival + duration - 1``
    of the horizon it is expressed in.
    """

    id: str
    arrival: int
    duration: int
    capacity: float
    max_rate: float
    arrival_soc: float
    target_soc: float = 1.0
    building: str | None = None

    def __post_init__(self):
        if self.duration < 1:
            raise ValueError(f"EV {self.id!r}: duration must be >= 1 hour")
        if self.arrival < 0:
            raise ValueError(f"EV {self.id!r}: arrival hour must be >= 0")
        if not self.capacity > 0 or not self.max_rate > 0:
            raise ValueError(f"EV {self.id!r}: capacity and max_rate must be > 0")
        for name in ("arrival_soc", "target_soc"):
            value = getattr(self, name)
            if not 0 <= value <= 1:
                raise ValueError(f"EV {self.id!r}: {name} must be in [0, 1], got {value}")
        if self.arrival_soc > self.target_soc:
            raise ValueError(f"EV {self.id!r}: arrival_soc exceeds target_soc")

    @property
    def departure(self) -> int:
        """First hour after the parking window."""
        return self.arrival + self.duration

    @property
    def energy_needed(self) -> float:
        return (self.target_soc - self.arrival_soc) * self.capacity

    def is_feasible(self, tau: float = TAU_HOURS) -> bool:
        return self.energy_needed <= self.max_rate * self.duration * tau + SOC_TOL

    def with_arrival_soc(self, soc: float) -> "EVSession":
        return replace(self, arrival_soc=soc)


def apply_battery_schedule(spec: BatterySpec, initial: float, rates, tau: float = TAU_HOURS) -> np.ndarray:
    """Stored-energy trajectory after each hour of ``rates``.

    Raises :class:`BatteryViolation` at the first hour whose rate exceeds
    ``max_rate`` or whose stored energy leaves ``[0, capacity]`` by more
    than ``SOC_TOL``.
    """
    rates = np.asarray(rates, dtype=float)
    if not -SOC_TOL <= initial <= spec.capacity + SOC_TOL:
        raise ValueError(f"initial stored energy {initial} outside [0, {spec.capacity}]")
    over_rate = np.abs(rates) > spec.max_rate + SOC_TOL
    if over_rate.any():
        k = int(np.argmax(over_rate))
        raise BatteryViolation(
            "rate", k + 1, float(abs(rates[k]) - spec.max_rate),
            f"hour {k + 1}: rate {rates[k]} exceeds max_rate {spec.max_rate}",
        )
    trajectory = initial + np.cumsum(rates * tau)
    low = trajectory < -SOC_TOL
    high = trajectory > spec.capacity + SOC_TOL
    bad = low | high
    if bad.any():
        k = int(np.argmax(bad))
        if high[k]:
            over = float(trajectory[k] - spec.capacity)
            msg = f"hour {k + 1}: stored energy {trajectory[k]:.6g} exceeds capacity {spec.capacity} by {over:.6g}"
        else:
            over = float(-trajectory[k])
            msg = f"hour {k + 1}: stored energy {trajectory[k]:.6g} falls below 0 by {over:.6g}"
        raise BatteryViolation("soc", k + 1, over, msg)
    return trajectory


@dataclass(frozen=True)
class Violation:
    kind: str  # "rate", "soc_low", "soc_high", "departure", "outside_window"
    hour: int  # 1-based within the window; 0 for the departure check
    amount: float


@dataclass(frozen=True)
class EVCheck:
    violations: tuple[Violation, ...]
    delivered: float

    @property
    def valid(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.valid


def check_ev_schedule(session: EVSession, rates, tau: float = TAU_HOURS, allow_v2b: bool = False) -> EVCheck:
    """Check per-hour rates over the parking window against the EV constraints.

    ``rates[0]`` is the first parked hour. Trailing entries beyond the window
    are tolerated only if they are zero.
    """
    rates = np.asarray(rates, dtype=float)
    if rates.size < session.duration:
        raise ValueError(
            f"EV {session.id!r}: {rates.size} rates given for a {session.duration}-hour window"
        )
    violations = []
    for k in np.flatnonzero(np.abs(rates[session.duration:]) > SOC_TOL):
        k = int(k) + session.duration
        violations.append(Violation("outside_window", k + 1, float(abs(rates[k]))))
    window = rates[:session.duration]

    lower = -session.max_rate if allow_v2b else 0.0
    for k, u in enumerate(window):
        if u > session.max_rate + SOC_TOL:
            violations.append(Violation("rate", k + 1, float(u - session.max_rate)))
        elif u < lower - SOC_TOL:
            violations.append(Violation("rate", k + 1, float(lower - u)))

    stored = session.arrival_soc * session.capacity + np.cumsum(window * tau)
    for k, level in enumerate(stored):
        if level < -SOC_TOL:
            violations.append(Violation("soc_low", k + 1, float(-level)))
        elif level > session.capacity + SOC_TOL:
            violations.append(Violation("soc_high", k + 1, float(level - session.capacity)))

    delivered = float(np.sum(window) * tau)
    required = session.target_soc * session.capacity
    final = stored[-1]
    if final < required - SOC_TOL:
        violations.append(Violation("departure", 0, float(required - final)))
    return EVCheck(tuple(violations), delivered)


def immediate_charge_schedule(session: EVSession, tau: float = TAU_HOURS) -> np.ndarray:
    """Charge at full rate from arrival until the target is reached."""
    if not session.is_feasible(tau):
        raise InfeasibleSession(
            session,
            f"needs {session.energy_needed:.4g} kWh but at most "
            f"{session.max_rate * session.duration * tau:.4g} kWh fits in the window",
        )
    rates = np.zeros(session.duration)
    remaining = session.energy_needed
    full_step = session.max_rate * tau
    for k in range(session.duration):
        if remaining <= 0:
            break
        step = min(full_step, remaining)
        rates[k] = step / tau
        remaining -= step
    return rates


def draw_arrival_soc(session: EVSession, rng: np.random.Generator, tau: float = TAU_HOURS,
                     max_draws: int = 1000) -> float:
    """Uniform arrival SOC in [0, 1], re-drawn until the target is reachable."""
    for attempt in range(max_draws):
        soc = float(rng.uniform(0.0, 1.0))
        soc = min(soc, session.target_soc)
        if session.with_arrival_soc(soc).is_feasible(tau):
            if attempt:
                log.info("EV %s: arrival SOC re-drawn %d time(s)", session.id, attempt)
            return soc
    raise InfeasibleSession(session, f"no reachable arrival SOC after {max_draws} draws")
