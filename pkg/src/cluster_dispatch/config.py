"""JSON cluster configuration.

Paths inside the file are resolved relative to the file's directory::

    {
      "seed": 42,
      "pricing": {"buy": 0.16, "sell": 0.05, "cluster": 0.1},
      "ga": {"population": 100, "generations": 300},
      "allow_v2b": false,
      "buildings": [
        {"id": "A", "demand": "demand_A.csv", "irradiance": "irradiance.csv",
         "pv": {"area": 100, "efficiency": 0.15},
         "battery": {"capacity": 20, "max_rate": 6, "initial_stored": 0}}
      ],
      "ev_sessions": [
        {"id": "EV1", "building": "A", "arrival_hour": 18, "duration": 13,
         "capacity": 22, "max_rate": 4, "arrival_soc": [0.29], "target_soc": 1.0}
      ]
    }

A building may give ``"generation"`` (kWh CSV) instead of irradiance.
``arrival_soc`` is a number (every day), a per-day list (days past the end
of the list are drawn), or absent (always drawn from the run seed).
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

from .ga import GAParams
from .profiles import KW, KWH, W_PER_M2, PricingScheme, ProfileError, TimeSeries, load_profile
from .pv import PVSpec, generation_series
from .storage import BatterySpec, EVSession


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class BuildingSetup:
    id: str
    demand: TimeSeries
    generation: TimeSeries
    battery: BatterySpec
    initial_stored: float = 0.0
    pv: PVSpec | None = None


@dataclass(frozen=True)
class SessionTemplate:
    """A daily recurring parking window."""

    id: str
    building: str
    arrival_hour: int
    duration: int
    capacity: float
    max_rate: float
    arrival_soc: object = None  # float, list of floats, or None
    target_soc: float = 1.0

    def soc_for_day(self, day: int):
        if self.arrival_soc is None:
            return None
        if isinstance(self.arrival_soc, (list, tuple)):
            return self.arrival_soc[day] if day < len(self.arrival_soc) else None
        return float(self.arrival_soc)

    def session(self, day: int, arrival_soc: float) -> EVSession:
        return EVSession(
            id=self.id, arrival=24 * day + self.arrival_hour, duration=self.duration,
            capacity=self.capacity, max_rate=self.max_rate, arrival_soc=arrival_soc,
            target_soc=self.target_soc, building=self.building,
        )


@dataclass
class ClusterConfig:
    buildings: list
    ev_sessions: list = field(default_factory=list)
    pricing: PricingScheme = field(default_factory=lambda: PricingScheme(0.16, 0.05, 0.1))
    ga: GAParams = field(default_factory=GAParams)
    seed: int = 0
    allow_v2b: bool = False
    path: str | None = None

    def __post_init__(self):
        if not self.buildings:
            raise ConfigError("a cluster needs at least one building")
        ids = [b.id for b in self.buildings]
        if len(set(ids)) != len(ids):
            raise ConfigError(f"duplicate building ids in {ids}")
        first = self.buildings[0]
        for b in self.buildings:
            for name in ("demand", "generation"):
                series = getattr(b, name)
                if series.start != first.demand.start or len(series) != len(first.demand):
                    raise ConfigError(f"building {b.id!r}: {name} profile is not aligned with building {first.id!r}")
        ev_ids = [s.id for s in self.ev_sessions]
        if len(set(ev_ids)) != len(ev_ids):
            raise ConfigError(f"duplicate EV ids in {ev_ids}")
        for s in self.ev_sessions:
            if s.building not in ids:
                raise ConfigError(f"EV {s.id!r}: unknown building {s.building!r}")
            if not 0 <= s.arrival_hour <= 23:
                raise ConfigError(f"EV {s.id!r}: arrival_hour must be in 0..23")

    @property
    def start(self):
        return self.buildings[0].demand.start

    @property
    def hours_available(self) -> int:
        return len(self.buildings[0].demand)

    def building_ids(self) -> list:
        return [b.id for b in self.buildings]


def _get(d: dict, key: str, where: str, default=KeyError):
    if key in d:
        return d[key]
    if default is KeyError:
        raise ConfigError(f"{where}: missing required field {key!r}")
    return default


def _build(raw: dict, base: str, where: str) -> BuildingSetup:
    bid = str(_get(raw, "id", where))
    where = f"building {bid!r}"

    def resolve(p):
        return p if os.path.isabs(p) else os.path.join(base, p)

    demand = load_profile(resolve(_get(raw, "demand", where)), raw.get("demand_unit", KWH))
    if demand.unit == KW:
        demand = demand.as_energy()
    pv = None
    if "pv" in raw:
        pv = PVSpec(**raw["pv"])
    if "generation" in raw:
        generation = load_profile(resolve(raw["generation"]), KWH)
    elif "irradiance" in raw:
        if pv is None:
            raise ConfigError(f"{where}: irradiance given without a pv block")
        generation = generation_series(pv, load_profile(resolve(raw["irradiance"]), W_PER_M2))
    else:
        raise ConfigError(f"{where}: needs either 'generation' or 'irradiance' + 'pv'")
    bat = _get(raw, "battery", where)
    return BuildingSetup(
        id=bid, demand=demand, generation=generation,
        battery=BatterySpec(float(_get(bat, "capacity", where)), float(_get(bat, "max_rate", where))),
        initial_stored=float(bat.get("initial_stored", 0.0)), pv=pv,
    )


def load_config(path) -> ClusterConfig:
    path = os.fspath(path)
    if not os.path.isfile(path):
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    base = os.path.dirname(os.path.abspath(path))
    try:
        buildings = [_build(b, base, f"buildings[{k}]") for k, b in enumerate(_get(raw, "buildings", path))]
        sessions = []
        for k, s in enumerate(raw.get("ev_sessions", [])):
            where = f"ev_sessions[{k}]"
            sessions.append(SessionTemplate(
                id=str(_get(s, "id", where)), building=str(_get(s, "building", where)),
                arrival_hour=int(_get(s, "arrival_hour", where)), duration=int(_get(s, "duration", where)),
                capacity=float(_get(s, "capacity", where)), max_rate=float(_get(s, "max_rate", where)),
                arrival_soc=s.get("arrival_soc"), target_soc=float(s.get("target_soc", 1.0)),
            ))
        pricing = PricingScheme(**raw.get("pricing", {"buy": 0.16, "sell": 0.05, "cluster": 0.1}))
        ga = GAParams.from_dict(raw.get("ga", {}))
    except (ProfileError, ConfigError):
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return ClusterConfig(
        buildings=buildings, ev_sessions=sessions, pricing=pricing, ga=ga,
        seed=int(raw.get("seed", 0)), allow_v2b=bool(raw.get("allow_v2b", False)), path=path,
    )
