"""PV output from plane-of-array irradiance."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .profiles import KWH, TAU_HOURS, W_PER_M2, ProfileError, TimeSeries


@dataclass(frozen=True)
class PVSpec:
    """Constant-coefficient PV array.

    ``cover_transmittance`` is the transmittance-absorptance product of the
    cover glass, unrelated to the 1-h slot duration used elsewhere.
    """

    area: float
    efficiency: float = 0.15
    cover_transmittance: float = 0.9
    incidence_modifier: float = 1.0

    def __post_init__(self):
        if not self.area > 0:
            raise ValueError(f"PV area must be > 0, got {self.area}")
        if not 0 < self.efficiency <= 1:
            raise ValueError(f"efficiency must be in (0, 1], got {self.efficiency}")
        for name in ("cover_transmittance", "incidence_modifier"):
            value = getattr(self, name)
            if not 0 <= value <= 1:
                raise ValueError(f"{name} must be in [0, 1], got {value}")

    @property
    def gain(self) -> float:
        """kW produced per W/m2 of irradiance."""
        return self.cover_transmittance * self.incidence_modifier * self.efficiency * self.area / 1000.0


def pv_power(spec: PVSpec, irradiance):
    """PV power in kW for irradiance in W/m2 (scalar or array)."""
    irr = np.asarray(irradiance, dtype=float)
    if np.any(irr < 0):
        raise ValueError("irradiance must be non-negative")
    power = (
        spec.cover_transmittance * spec.incidence_modifier * irr * spec.efficiency * spec.area
    ) / 1000.0
    return float(power) if power.ndim == 0 else power


def generation_series(spec: PVSpec, irradiance: TimeSeries) -> TimeSeries:
    if irradiance.unit != W_PER_M2:
        raise ProfileError(f"irradiance must be tagged {W_PER_M2}, got {irradiance.unit}")
    return TimeSeries(irradiance.start, pv_power(spec, irradiance.values) * TAU_HOURS, KWH)
