"""Synthetic week, profile round-trip through CSV, and PV output.

    python3 demos/01_profiles_and_pv.py
"""
import tempfile
from pathlib import Path

import numpy as np

from cluster_dispatch import PVSpec, load_profile, pv_power, synthetic_week
from cluster_dispatch.profiles import KWH, write_profile
from cluster_dispatch.pv import generation_series

week = synthetic_week(seed=2020)
irr = week["irradiance"]
print(f"{len(irr)} hourly samples from {irr.start:%Y-%m-%d %H:%M}, unit {irr.unit}")

daily_peak = irr.values.reshape(7, 24).max(axis=1)
print("daily irradiance peak (W/m2):", np.round(daily_peak).astype(int))

# A 60 m2 array with the default 15% module efficiency.
spec = PVSpec(area=60.0)
print(f"1000 W/m2 -> {pv_power(spec, 1000.0):.2f} kW  (gain {spec.gain * 1000:.2f} kW per kW/m2)")

gen = generation_series(spec, irr)
for name in ("demand_A", "demand_B", "demand_C"):
    print(f"{name}: {week[name].values.sum():7.1f} kWh over the week")
print(f"PV:       {gen.values.sum():7.1f} kWh over the week")

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "demand_A.csv"
    write_profile(week["demand_A"], path)
    print("first CSV lines:", *path.read_text().splitlines()[:3], sep="\n  ")
    back = load_profile(path, KWH)
    assert np.allclose(back.values, week["demand_A"].values)
    print("round trip OK")
