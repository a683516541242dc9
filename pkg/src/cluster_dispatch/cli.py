"""Cluster battery and EV dispatch: simulate, compare, oracle, validate-config.

::

    cluster-dispatch simulate --scenario S3 --days 7 --seed 42 --out out
    cluster-dispatch compare --days 7 --emit json,csv,plotdata --out out
    cluster-dispatch oracle --config toy.json --scenario S3
    cluster-dispatch validate-config --config cluster.json

Without ``--config`` the bundled synthetic week is used. Exit codes: 0 on
success, 1 for configuration or profile errors, 2 when a schedule cannot be
made feasible (the message names the EV, building or hour involved).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from datetime import datetime, timezone

import numpy as np

from . import bundled_config_path
from .allocation import AllocationInfeasible
from .config import ConfigError, load_config
from .optimizer import OptimizationError
from .oracle import OracleInstance, SearchSpaceTooLarge, brute_force_optimal
from .profiles import PricingScheme, ProfileError
from .scenarios import HOURS, SCENARIOS, ScenarioConfig, run_scenario
from .settlement import _plain, compare_scenarios, comparison_csv
from .storage import BatterySpec, BatteryViolation, EVSession, InfeasibleSession

log = logging.getLogger("cluster_dispatch")

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE = 0, 1, 2
THREADS_ENV = "CLUSTER_DISPATCH_THREADS"
EMIT_CHOICES = ("json", "csv", "plotdata")


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "")
    if not raw:
        return os.cpu_count() or 1
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if value < 1:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return value


def _emit_list(text: str) -> set:
    items = {t.strip() for t in text.split(",") if t.strip()}
    unknown = items - set(EMIT_CHOICES)
    if unknown:
        raise argparse.ArgumentTypeError(f"unknown --emit value(s) {sorted(unknown)}; choose from {EMIT_CHOICES}")
    return items


def _scenario_list(values) -> list:
    if not values or "all" in values:
        return list(SCENARIOS)
    out = []
    for v in values:
        for sid in v.split(","):
            sid = sid.strip().upper()
            if sid not in SCENARIOS:
                raise ConfigError(f"unknown scenario {sid!r}; expected one of {sorted(SCENARIOS)} or 'all'")
            if sid not in out:
                out.append(sid)
    return out


def _write(path: str, text: str) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _dump(obj) -> str:
    return json.dumps(_plain(obj), indent=2, sort_keys=False) + "\n"


def _stamp(payload: dict, args) -> dict:
    if not args.no_timestamp:
        payload["generated_at"] = datetime.now(timezone.utc).isoformat(timespec="seconds")
    return payload


def _load(args):
    cluster = load_config(args.config or bundled_config_path())
    if args.seed is not None:
        cluster.seed = args.seed
    if args.allow_v2b:
        cluster.allow_v2b = True
    return cluster


def _days(args, cluster) -> int:
    days = args.days if args.days is not None else cluster.hours_available // HOURS
    if days < 1:
        raise ConfigError("--days must be >= 1")
    return days


def _run_all(cluster, scenario_ids, days):
    configs = [ScenarioConfig.preset(sid, cluster.ga, cluster.seed) for sid in scenario_ids]
    workers = min(thread_count(), len(configs))
    if workers == 1:
        return [run_scenario(cluster, c, days) for c in configs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda c: run_scenario(cluster, c, days), configs))


def _report_rows_csv(result) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["day", "grid_import_kwh", "grid_export_kwh", "cost", "self_consumption", "seed"])
    for day in result.days:
        r = day.report
        sc = "n/a" if r.self_consumption is None else repr(r.self_consumption)
        writer.writerow([r.day, repr(r.grid_import), repr(r.grid_export), repr(r.cost), sc, day.seed])
    return buf.getvalue()


def _write_scenario(result, args, emit) -> list:
    written = []
    for day in result.days:
        if "json" in emit:
            path = os.path.join(args.out, result.scenario, f"day_{day.day:02d}.json")
            _write(path, _dump(_stamp(day.to_dict(), args)))
            written.append(path)
    if "csv" in emit:
        path = os.path.join(args.out, result.scenario, "reports.csv")
        _write(path, _report_rows_csv(result))
        written.append(path)
    return written


def _plot_csvs(rows, seed) -> tuple:
    scenarios = list(rows[0].self_consumption)

    def table(field, scale):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["day"] + scenarios + ["seed"])
        for row in rows:
            values = getattr(row, field)
            writer.writerow([row.day] + ["" if values[s] is None else repr(values[s] * scale) for s in scenarios] + [seed])
        return buf.getvalue()

    return table("self_consumption", 100.0), table("cost", 1.0)


def cmd_simulate(args) -> int:
    cluster = _load(args)
    days = _days(args, cluster)
    emit = args.emit if args.emit is not None else {"json"}
    results = _run_all(cluster, _scenario_list(args.scenario), days)
    for result in results:
        for path in _write_scenario(result, args, emit):
            log.info("wrote %s", path)
        for r in result.reports:
            sc = "n/a" if r.self_consumption is None else f"{100 * r.self_consumption:.1f}%"
            print(f"{result.scenario} day {r.day}: cost {r.cost:.3f}  self-consumption {sc}")
    return EXIT_OK


def cmd_compare(args) -> int:
    cluster = _load(args)
    days = _days(args, cluster)
    emit = args.emit if args.emit is not None else {"json", "csv"}
    results = _run_all(cluster, list(SCENARIOS), days)
    for result in results:
        _write_scenario(result, args, emit - {"csv", "plotdata"})
    rows = compare_scenarios({r.scenario: r.reports for r in results})
    table = comparison_csv(rows)
    if "csv" in emit:
        _write(os.path.join(args.out, "comparison.csv"), table)
    if "json" in emit:
        payload = {"seed": cluster.seed, "days": days, "rows": [row.to_dict() for row in rows]}
        _write(os.path.join(args.out, "comparison.json"), _dump(_stamp(payload, args)))
    if "plotdata" in emit:
        sc_csv, cost_csv = _plot_csvs(rows, cluster.seed)
        _write(os.path.join(args.out, "plot_self_consumption.csv"), sc_csv)
        _write(os.path.join(args.out, "plot_cost.csv"), cost_csv)
    sys.stdout.write(table)
    return EXIT_OK


def load_oracle_instance(path: str):
    """Read a toy instance for the exhaustive search; returns (instance, pricing)."""
    if not os.path.isfile(path):
        raise ConfigError(f"instance file not found: {path}")
    try:
        with open(path) as fh:
            raw = json.load(fh)
        demand = raw["demand"]
        n = len(demand)
        ids = [str(b) for b in raw.get("buildings", range(n))]
        batteries = [BatterySpec(float(b["capacity"]), float(b["max_rate"])) for b in raw["batteries"]]
        initial = [float(b.get("initial_stored", 0.0)) for b in raw["batteries"]]
        sessions = [
            EVSession(
                id=str(s["id"]), arrival=int(s["arrival"]), duration=int(s["duration"]),
                capacity=float(s["capacity"]), max_rate=float(s["max_rate"]),
                arrival_soc=float(s["arrival_soc"]), target_soc=float(s.get("target_soc", 1.0)),
                building=str(s["building"]),
            )
            for s in raw.get("ev_sessions", [])
        ]
        instance = OracleInstance(
            demand, raw["generation"], batteries, initial, sessions, ids,
            raw.get("battery_levels"), raw.get("ev_levels"),
        )
        pricing = PricingScheme(**raw.get("pricing", {"buy": 0.16, "sell": 0.05, "cluster": 0.1}))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    except KeyError as exc:
        raise ConfigError(f"{path}: missing required field {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return instance, pricing


def cmd_oracle(args) -> int:
    if not args.config:
        raise ConfigError("oracle needs --config pointing at an instance file")
    instance, pricing = load_oracle_instance(args.config)
    payload = {"instance": os.path.basename(args.config), "seed": args.seed, "results": []}
    for sid in _scenario_list(args.scenario):
        result = brute_force_optimal(instance, pricing, sid, allow_v2b=args.allow_v2b)
        payload["results"].append(result.to_dict())
        print(f"{sid}: optimal cost {result.cost:.6f} over {result.feasible} feasible of {result.combinations} combinations")
    text = _dump(_stamp(payload, args))
    if args.out:
        _write(os.path.join(args.out, "oracle.json"), text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_validate(args) -> int:
    cluster = _load(args)
    days = cluster.hours_available // HOURS
    print(f"ok: {len(cluster.buildings)} buildings, {len(cluster.ev_sessions)} EV sessions, "
          f"{cluster.hours_available} h of profiles ({days} full days) from {cluster.start.isoformat()}")
    for tpl in cluster.ev_sessions:
        soc = tpl.soc_for_day(0)
        if soc is not None:
            session = tpl.session(0, min(soc, tpl.target_soc))
            if not session.is_feasible():
                raise InfeasibleSession(session, "target unreachable within its parking window")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cluster-dispatch", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scenario_default=None):
        p.add_argument("--config", help="cluster JSON (default: bundled synthetic week)")
        p.add_argument("--seed", type=int, help="override the seed of the config")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--allow-v2b", action="store_true", help="let EVs discharge into the building")
        p.add_argument("--no-timestamp", action="store_true", help="omit generated_at from JSON outputs")
        p.add_argument("--emit", type=_emit_list, help="comma list of " + ",".join(EMIT_CHOICES))
        p.add_argument("--days", type=int, help="number of days (default: all full days in the profiles)")
        p.add_argument("--scenario", action="append", default=scenario_default,
                       help="S1, S2, S3 or all; repeat or comma-separate")

    common(sub.add_parser("simulate", help="run scenarios and write day reports"))
    common(sub.add_parser("compare", help="run all scenarios and tabulate improvements"))
    p = sub.add_parser("oracle", help="exhaustive optimum of a toy instance")
    common(p)
    p.set_defaults(out=None)
    common(sub.add_parser("validate-config", help="load and check a config"))
    return parser


COMMANDS = {"simulate": cmd_simulate, "compare": cmd_compare, "oracle": cmd_oracle, "validate-config": cmd_validate}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (InfeasibleSession, OptimizationError, AllocationInfeasible, BatteryViolation) as exc:
        print(f"error: infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ConfigError, ProfileError, SearchSpaceTooLarge, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
