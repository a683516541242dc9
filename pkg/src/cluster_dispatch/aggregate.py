"""Representative ('virtual') building built from the cluster members."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .profiles import KWH, ProfileError, TimeSeries
from .pv import PVSpec
from .storage import BatterySpec


@dataclass(frozen=True)
class BuildingModel:
    id: str
    demand: TimeSeries
    generation: TimeSeries
    battery: BatterySpec
    initial_stored: float = 0.0
    pv: PVSpec | None = None

    def __post_init__(self):
        if self.demand.unit != KWH or self.generation.unit != KWH:
            raise ProfileError(f"building {self.id!r}: demand and generation must be tagged {KWH}")
        if self.demand.start != self.generation.start or len(self.demand) != len(self.generation):
            raise ProfileError(f"building {self.id!r}: demand and generation cover different horizons")
        if not 0 <= self.initial_stored <= self.battery.capacity + 1e-9:
            raise ValueError(f"building {self.id!r}: initial stored energy outside battery capacity")

    @property
    def horizon(self) -> int:
        return len(self.demand)

    def mismatch(self) -> np.ndarray:
        """Demand minus generation per hour (positive = deficit)."""
        return self.demand.values - self.generation.values


@dataclass(frozen=True)
class RepresentativeBuilding:
    demand: TimeSeries
    generation: TimeSeries
    capacity: float
    max_rate: float
    initial_stored: float = 0.0

    @property
    def horizon(self) -> int:
        return len(self.demand)

    @property
    def battery(self) -> BatterySpec:
        return BatterySpec(self.capacity, self.max_rate)

    def mismatch(self) -> np.ndarray:
        return self.demand.values - self.generation.values


def aggregate(buildings) -> RepresentativeBuilding:
    """Sum demand, generation, capacity, power bound and stored energy."""
    buildings = list(buildings)
    if not buildings:
        raise ValueError("cannot aggregate an empty building list")
    first = buildings[0]
    for b in buildings[1:]:
        if b.demand.start != first.demand.start or b.horizon != first.horizon:
            raise ProfileError(
                f"building {b.id!r} is not aligned with {first.id!r} "
                f"({b.demand.start.isoformat()}+{b.horizon}h vs "
                f"{first.demand.start.isoformat()}+{first.horizon}h)"
            )
    demand = np.sum([b.demand.values for b in buildings], axis=0)
    generation = np.sum([b.generation.values for b in buildings], axis=0)
    return RepresentativeBuilding(
        demand=TimeSeries(first.demand.start, demand, KWH),
        generation=TimeSeries(first.demand.start, generation, KWH),
        capacity=float(sum(b.battery.capacity for b in buildings)),
        max_rate=float(sum(b.battery.max_rate for b in buildings)),
        initial_stored=float(sum(b.initial_stored for b in buildings)),
    )
