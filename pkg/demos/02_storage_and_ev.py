"""Battery bookkeeping and EV charging schedules.

    python3 demos/02_storage_and_ev.py
"""
import numpy as np

from cluster_dispatch import (BatterySpec, BatteryViolation, EVSession, apply_battery_schedule,
                              check_ev_schedule, immediate_charge_schedule)

battery = BatterySpec(capacity=10.0, max_rate=3.0)
stored = apply_battery_schedule(battery, 2.0, [3, 3, 2, -3, -3])
print("stored energy after each hour:", stored)

try:
    apply_battery_schedule(battery, 2.0, [3, 3, 3, 3])
except BatteryViolation as err:
    print(f"rejected: {err.kind} at hour {err.hour} by {err.amount:.2f} kWh")

ev = EVSession("EV1", arrival=18, duration=6, capacity=40.0, max_rate=7.0, arrival_soc=0.3)
print(f"\n{ev.id} needs {ev.energy_needed:.1f} kWh between hours {ev.arrival} and {ev.departure}")
now = immediate_charge_schedule(ev)
print("immediate schedule (kW):", now)

spread = np.full(ev.duration, ev.energy_needed / ev.duration)
print("flat schedule valid:", bool(check_ev_schedule(ev, spread)))

short = check_ev_schedule(ev, np.full(ev.duration, 2.0))
print("2 kW flat schedule valid:", short.valid)
for v in short.violations:
    print("  ", v)
