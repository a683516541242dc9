"""Hourly profile ingestion, validation and slicing.

Every series in this package has a fixed one-hour step. Demand and
generation are stored as kWh per slot; irradiance as W/m2. The unit tag is
carried on the series and checked wherever a specific unit is expected.
"""
from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from datetime import datetime, timedelta

import numpy as np

STEP = timedelta(hours=1)
TAU_HOURS = 1.0

KWH = "kWh"
KW = "kW"
W_PER_M2 = "W_per_m2"
UNITS = (KWH, KW, W_PER_M2)


class ProfileError(ValueError):
    """Raised for unreadable or invalid profile data."""

    def __init__(self, message: str, path: str | None = None, row: int | None = None):
        where = ""
        if path is not None:
            where += f"{path}"
        if row is not None:
            where += f" (row {row})"
        super().__init__(f"{where}: {message}" if where else message)
        self.path = path
        self.row = row


def _readonly(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TimeSeries:
    """Hour-aligned series with an explicit unit tag.

    ``values`` is stored as a read-only float array, so instances can be
    shared freely between threads.
    """

    start: datetime
    values: np.ndarray
    unit: str = KWH
    step: timedelta = field(default=STEP, repr=False)

    def __post_init__(self):
        if self.unit not in UNITS:
            raise ProfileError(f"unknown unit tag {self.unit!r}; expected one of {UNITS}")
        if self.step != STEP:
            raise ProfileError("only 1-hour resolution is supported")
        if self.start.minute or self.start.second or self.start.microsecond:
            raise ProfileError(f"start {self.start.isoformat()} is not hour-aligned")
        values = _readonly(self.values)
        if values.ndim != 1 or values.size < 1:
            raise ProfileError("a series needs at least one value")
        if not np.all(np.isfinite(values)):
            raise ProfileError("series values must be finite")
        if np.any(values < 0):
            hour = int(np.argmax(values < 0))
            raise ProfileError(f"negative value {values[hour]} at hour {hour}")
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.size

    @property
    def end(self) -> datetime:
        """Timestamp one step past the last slot."""
        return self.start + len(self) * self.step

    def timestamps(self) -> list[datetime]:
        return [self.start + k * self.step for k in range(len(self))]

    def index_of(self, when: datetime) -> int:
        offset = when - self.start
        if offset % self.step:
            raise ProfileError(f"{when.isoformat()} is not on the hourly grid of this series")
        return int(offset // self.step)

    def as_energy(self) -> "TimeSeries":
        """Convert a kW series to kWh per 1-h slot."""
        if self.unit == KWH:
            return self
        if self.unit != KW:
            raise ProfileError(f"cannot convert {self.unit} to {KWH}")
        return TimeSeries(self.start, self.values * TAU_HOURS, KWH)

    def with_values(self, values) -> "TimeSeries":
        return TimeSeries(self.start, values, self.unit)


@dataclass(frozen=True)
class PricingScheme:
    """Three-tier tariff: grid purchase, grid feed-in and intra-cluster price."""

    buy: float
    sell: float
    cluster: float

    def __post_init__(self):
        for name in ("buy", "sell", "cluster"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} price must be finite")
        if not 0 <= self.sell <= self.cluster <= self.buy:
            raise ValueError(
                "prices must satisfy 0 <= sell <= cluster <= buy, got "
                f"sell={self.sell}, cluster={self.cluster}, buy={self.buy}"
            )

    def scaled(self, factor: float) -> "PricingScheme":
        return PricingScheme(self.buy * factor, self.sell * factor, self.cluster * factor)


def _parse_timestamp(text: str, path, row) -> datetime:
    try:
        ts = datetime.fromisoformat(text.strip())
    except ValueError:
        raise ProfileError(f"unparseable timestamp {text!r}", path, row) from None
    if ts.minute or ts.second or ts.microsecond:
        raise ProfileError(
            f"timestamp {text.strip()} is not hour-aligned (sub-hourly data is not supported)",
            path, row,
        )
    return ts


def load_profile(path, unit: str) -> TimeSeries:
    """Read a ``timestamp,value`` CSV into a validated :class:`TimeSeries`.

    :param path: CSV file with a ``timestamp,value`` header.
    :param unit: unit tag of the value column (``kWh``, ``kW`` or ``W_per_m2``).
    :raises ProfileError: on a missing file, malformed rows, non-monotonic or
        gapped timestamps, or negative values. Row numbers count the header
        as row 1.
    """
    path = os.fspath(path)
    if unit not in UNITS:
        raise ProfileError(f"unknown unit tag {unit!r}", path)
    if not os.path.isfile(path):
        raise ProfileError("profile file not found", path)

    stamps: list[datetime] = []
    values: list[float] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header] != ["timestamp", "value"]:
            raise ProfileError("expected header 'timestamp,value'", path, 1)
        for row_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 2:
                raise ProfileError(f"expected 2 columns, got {len(row)}", path, row_no)
            ts = _parse_timestamp(row[0], path, row_no)
            try:
                value = float(row[1])
            except ValueError:
                raise ProfileError(f"non-numeric value {row[1]!r}", path, row_no) from None
            if not math.isfinite(value):
                raise ProfileError(f"non-finite value {row[1]!r}", path, row_no)
            if value < 0:
                raise ProfileError(f"negative value {value}", path, row_no)
            if stamps:
                expected = stamps[-1] + STEP
                if ts <= stamps[-1]:
                    raise ProfileError(
                        f"timestamp {ts.isoformat()} is not after {stamps[-1].isoformat()}",
                        path, row_no,
                    )
                if ts != expected:
                    raise ProfileError(
                        f"gap in timestamps: missing {expected.isoformat()}", path, row_no
                    )
            stamps.append(ts)
            values.append(value)

    if not values:
        raise ProfileError("profile has no data rows", path)
    return TimeSeries(stamps[0], values, unit)


def write_profile(series: TimeSeries, path) -> None:
    """Write a series as ``timestamp,value`` CSV (shortest round-trip floats)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["timestamp", "value"])
        for ts, value in zip(series.timestamps(), series.values):
            writer.writerow([ts.isoformat(timespec="minutes"), repr(float(value))])


def slice_horizon(series: TimeSeries, start, hours: int) -> TimeSeries:
    """Return ``hours`` consecutive values beginning at ``start``.

    ``start`` is either a timestamp on the series grid or an integer hour
    offset from the series start.
    """
    offset = series.index_of(start) if isinstance(start, datetime) else int(start)
    if hours < 1 or offset < 0 or offset + hours > len(series):
        raise ProfileError(
            f"window [{offset}, {offset + hours}) is outside the series of length {len(series)}"
        )
    return TimeSeries(
        series.start + offset * series.step,
        series.values[offset:offset + hours],
        series.unit,
    )


def _bell(hours: np.ndarray, centre: float, width: float) -> np.ndarray:
    return np.exp(-0.5 * ((hours - centre) / width) ** 2)


def synthetic_week(seed: int = 2020, start: datetime | None = None, days: int = 7) -> dict:
    """Seeded stand-in for a summer week of cluster data.

    Returns a dict with ``irradiance`` (W/m2, shared by all buildings) and
    ``demand_A``, ``demand_B``, ``demand_C`` (kWh per hour). Demand has a
    morning and an evening peak on top of a base load; building A is the
    largest consumer. Irradiance is a clear-sky bell between roughly 05:00
    and 21:00 scaled by a per-day cloudiness factor; day 1 is the dullest.
    """
    rng = np.random.default_rng(seed)
    start = start or datetime(2020, 7, 6)
    n = 24 * days
    hour = np.arange(n) % 24

    clear = np.clip(_bell(hour.astype(float), 13.0, 3.4) * 760.0 - 25.0, 0.0, None)
    day_factor = np.concatenate([[0.62], rng.uniform(0.85, 1.05, size=days - 1)])
    hourly_noise = rng.uniform(0.88, 1.0, size=n)
    irradiance = clear * np.repeat(day_factor, 24) * hourly_noise

    shape = 0.45 + 0.6 * _bell(hour, 7.5, 1.3) + 1.0 * _bell(hour, 19.0, 2.2) + 0.35 * _bell(hour, 12.5, 2.0)
    demand = {}
    for name, scale in (("A", 10.5), ("B", 4.5), ("C", 3.4)):
        noise = rng.lognormal(mean=0.0, sigma=0.12, size=n)
        demand[f"demand_{name}"] = np.round(scale * shape * noise, 3)

    out = {"irradiance": TimeSeries(start, np.round(irradiance, 2), W_PER_M2)}
    for key, values in demand.items():
        out[key] = TimeSeries(start, values, KWH)
    return out
