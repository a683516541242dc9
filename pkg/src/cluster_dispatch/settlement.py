"""Hourly settlement of building positions and the cluster KPIs.

Sign conventions (per building, per hour, kWh):

* net position = generation - demand - EV charge - battery charge; positive
  is a surplus.
* ``cluster_trade`` > 0 means energy sold to the other buildings.
* ``grid_flow`` > 0 means export to the grid, < 0 import.

Conservation: ``net position == cluster_trade + grid_flow``.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .profiles import TAU_HOURS

CONSERVATION_TOL = 1e-9


def cluster_cost(nets, sharing: bool, pricing, tau: float = TAU_HOURS):
    """Cluster bill for surplus positions ``nets`` (..., N, H).

    Under full sharing only the cluster's summed position reaches the grid;
    without sharing each building settles with the grid on its own.
    """
    nets = np.asarray(nets, dtype=float)
    if sharing:
        nets = nets.sum(axis=-2)
    imports = np.clip(-nets, 0, None)
    exports = np.clip(nets, 0, None)
    per = (imports * pricing.buy - exports * pricing.sell) * tau
    total = per.sum(axis=-1)
    return total if sharing else total.sum(axis=-1)


@dataclass(frozen=True)
class HourSettlement:
    cluster_trade: np.ndarray
    grid_flow: np.ndarray
    cost: np.ndarray  # per-building payment for the hour


def settle_hour(nets, sharing: bool, pricing) -> HourSettlement:
    """Match surpluses against deficits inside the cluster, pro rata.

    With sharing, the matched quantity ``min(total surplus, total deficit)``
    is sold by every surplus holder in proportion to its surplus and bought
    by every deficit holder in proportion to its deficit, at the cluster
    price. Whatever is left goes to the grid.
    """
    nets = np.asarray(nets, dtype=float)
    surplus = np.clip(nets, 0, None)
    deficit = np.clip(-nets, 0, None)
    trade = np.zeros_like(nets)
    if sharing:
        total_s, total_d = surplus.sum(), deficit.sum()
        matched = min(total_s, total_d)
        if matched > 0:
            trade = matched * surplus / total_s - matched * deficit / total_d
    grid = nets - trade
    cost = (
        np.clip(-grid, 0, None) * pricing.buy
        - np.clip(grid, 0, None) * pricing.sell
        - trade * pricing.cluster
    )
    return HourSettlement(trade, grid, cost)


@dataclass
class EnergyFlowLedger:
    """Settled flows of one day, arrays shaped ``(buildings, hours)``."""

    building_ids: list
    demand: np.ndarray
    generation: np.ndarray
    ev_charge: np.ndarray
    battery_flow: np.ndarray   # kW, positive = charging
    stored: np.ndarray         # (N, H + 1) kWh
    cluster_trade: np.ndarray
    grid_flow: np.ndarray
    cost: np.ndarray
    sharing: bool
    tau: float = TAU_HOURS

    @property
    def pv_to_load(self) -> np.ndarray:
        return np.minimum(self.generation, self.demand + self.ev_charge)

    @property
    def net_position(self) -> np.ndarray:
        return self.generation - self.demand - self.ev_charge - self.battery_flow * self.tau

    @property
    def grid_import(self) -> np.ndarray:
        return np.clip(-self.grid_flow, 0, None)

    @property
    def grid_export(self) -> np.ndarray:
        return np.clip(self.grid_flow, 0, None)

    def conservation_residual(self) -> float:
        return float(np.max(np.abs(self.net_position - self.cluster_trade - self.grid_flow), initial=0.0))

    def trade_residual(self) -> float:
        return float(np.max(np.abs(self.cluster_trade.sum(0)), initial=0.0))

    def check(self, tol: float = CONSERVATION_TOL) -> None:
        if self.conservation_residual() > tol:
            raise AssertionError(f"energy conservation broken by {self.conservation_residual():.3g} kWh")
        if self.trade_residual() > tol:
            raise AssertionError(f"cluster trades do not net to zero ({self.trade_residual():.3g} kWh)")

    def to_dict(self) -> dict:
        rows = {}
        for j, bid in enumerate(self.building_ids):
            rows[bid] = {
                "demand": self.demand[j],
                "generation": self.generation[j],
                "pv_to_load": self.pv_to_load[j],
                "ev_charge": self.ev_charge[j],
                "battery_flow": self.battery_flow[j],
                "stored": self.stored[j, 1:],
                "cluster_trade": self.cluster_trade[j],
                "grid_flow": self.grid_flow[j],
                "cost": self.cost[j],
            }
        return {"sharing": self.sharing, "buildings": _plain(rows)}


def build_ledger(building_ids, demand, generation, ev_charge, battery_flow, stored,
                 sharing: bool, pricing, tau: float = TAU_HOURS) -> EnergyFlowLedger:
    demand, generation, ev_charge, battery_flow = (
        np.atleast_2d(np.asarray(a, dtype=float)) for a in (demand, generation, ev_charge, battery_flow)
    )
    nets = generation - demand - ev_charge - battery_flow * tau
    trade = np.zeros_like(nets)
    grid = np.zeros_like(nets)
    cost = np.zeros_like(nets)
    for i in range(nets.shape[1]):
        row = settle_hour(nets[:, i], sharing, pricing)
        trade[:, i], grid[:, i], cost[:, i] = row.cluster_trade, row.grid_flow, row.cost
    return EnergyFlowLedger(
        list(building_ids), demand, generation, ev_charge, battery_flow,
        np.atleast_2d(np.asarray(stored, dtype=float)), trade, grid, cost, sharing, tau,
    )


def self_consumption(ledger: EnergyFlowLedger) -> float | None:
    """1 - exported / generated over the day; ``None`` when nothing was generated."""
    generated = float(ledger.generation.sum())
    if generated <= 0:
        return None
    return 1.0 - float(ledger.grid_export.sum()) / generated


def daily_cluster_cost(ledger: EnergyFlowLedger, pricing) -> float:
    # Cluster payments cancel, so only grid flows reach the cluster bill.
    imports = ledger.grid_import.sum() * pricing.buy
    exports = ledger.grid_export.sum() * pricing.sell
    return float((imports - exports) * ledger.tau)


@dataclass
class DayReport:
    scenario: str
    day: int
    grid_import: float
    grid_export: float
    cost: float
    self_consumption: float | None
    generation: float
    demand: float
    ev_charge: float
    buildings: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return _plain({
            "scenario": self.scenario,
            "day": self.day,
            "grid_import_kwh": self.grid_import,
            "grid_export_kwh": self.grid_export,
            "cost": self.cost,
            "self_consumption": self.self_consumption,
            "generation_kwh": self.generation,
            "demand_kwh": self.demand,
            "ev_charge_kwh": self.ev_charge,
            "buildings": self.buildings,
        })


def day_report(ledger: EnergyFlowLedger, pricing, scenario: str, day: int) -> DayReport:
    per_building = {}
    for j, bid in enumerate(ledger.building_ids):
        per_building[bid] = {
            "grid_import_kwh": float(ledger.grid_import[j].sum()),
            "grid_export_kwh": float(ledger.grid_export[j].sum()),
            "cluster_sold_kwh": float(np.clip(ledger.cluster_trade[j], 0, None).sum()),
            "cluster_bought_kwh": float(np.clip(-ledger.cluster_trade[j], 0, None).sum()),
            "cost": float(ledger.cost[j].sum()),
        }
    return DayReport(
        scenario=scenario,
        day=day,
        grid_import=float(ledger.grid_import.sum()),
        grid_export=float(ledger.grid_export.sum()),
        cost=daily_cluster_cost(ledger, pricing),
        self_consumption=self_consumption(ledger),
        generation=float(ledger.generation.sum()),
        demand=float(ledger.demand.sum()),
        ev_charge=float(ledger.ev_charge.sum()),
        buildings=per_building,
    )


def _relative_gain(new, base):
    if new is None or base is None or base == 0:
        return None
    return (new / base - 1.0) * 100.0


def _relative_saving(new, base):
    if base is None or base <= 0:
        return None
    return (base - new) / base * 100.0


@dataclass
class ComparisonRow:
    day: int
    self_consumption: dict
    cost: dict
    sc_improvement: dict   # percent, relative to the baseline scenario
    cost_improvement: dict  # percent reduction against the baseline scenario

    def to_dict(self) -> dict:
        return _plain(self.__dict__)


def compare_scenarios(reports: dict, baseline: str = "S1") -> list[ComparisonRow]:
    """Per-day KPIs of every scenario plus improvements against ``baseline``.

    ``reports`` maps scenario id to a list of :class:`DayReport` or to plain
    ``{"self_consumption": .., "cost": ..}`` dicts. Self-consumption
    improvement is the relative increase ``sc / sc_base - 1``; cost
    improvement is the relative reduction ``(base - cost) / base``. Both are
    in percent, unrounded.
    """
    if baseline not in reports:
        raise ValueError(f"baseline scenario {baseline!r} missing")
    lengths = {sid: len(r) for sid, r in reports.items()}
    if len(set(lengths.values())) != 1:
        raise ValueError(f"scenarios cover different numbers of days: {lengths}")

    def kpi(report, name):
        return report[name] if isinstance(report, dict) else getattr(report, name)

    def day_of(report, k):
        return report.get("day", k) if isinstance(report, dict) else report.day

    rows = []
    for k in range(next(iter(lengths.values()))):
        days = {day_of(r[k], k) for r in reports.values()}
        if len(days) != 1:
            raise ValueError(f"row {k}: scenarios refer to different days {sorted(days)}")
        base = reports[baseline][k]
        sc = {sid: kpi(r[k], "self_consumption") for sid, r in reports.items()}
        cost = {sid: kpi(r[k], "cost") for sid, r in reports.items()}
        others = [sid for sid in reports if sid != baseline]
        rows.append(ComparisonRow(
            day=days.pop(),
            self_consumption=sc,
            cost=cost,
            sc_improvement={sid: _relative_gain(sc[sid], kpi(base, "self_consumption")) for sid in others},
            cost_improvement={sid: _relative_saving(cost[sid], kpi(base, "cost")) for sid in others},
        ))
    return rows


def comparison_csv(rows: list[ComparisonRow], decimals: int = 1) -> str:
    """Table-shaped CSV: one row per day, KPI columns then improvement columns."""
    scenarios = list(rows[0].self_consumption) if rows else []
    others = list(rows[0].sc_improvement) if rows else []
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["day"]
        + [f"self_consumption_{s}_pct" for s in scenarios]
        + [f"sc_improvement_{s}_pct" for s in others]
        + [f"cost_{s}" for s in scenarios]
        + [f"cost_improvement_{s}_pct" for s in others]
    )

    def fmt(value, scale=1.0, digits=decimals):
        return "n/a" if value is None else f"{value * scale:.{digits}f}"

    for row in rows:
        writer.writerow(
            [row.day]
            + [fmt(row.self_consumption[s], 100.0) for s in scenarios]
            + [fmt(row.sc_improvement[s]) for s in others]
            + [fmt(row.cost[s], digits=3) for s in scenarios]
            + [fmt(row.cost_improvement[s]) for s in others]
        )
    return buf.getvalue()


def _plain(obj):
    """Convert numpy containers and -0.0 to JSON-friendly python values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        return 0.0 if value == 0 else value
    if isinstance(obj, np.integer):
        return int(obj)
    return obj
