"""Weather and interruption ingestion.

Hourly weather rows are aggregated to the eleven daily features used by the
regressions and the network, joined with daily interruption counts by date,
and split chronologically into train / validate / test.
"""

from __future__ import annotations

import csv
import math
import os
import tempfile
from collections import defaultdict
from dataclasses import dataclass, field
from datetime import date, datetime
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import (
    BadFractions,
    DatasetTooSmall,
    DuplicateDate,
    EmptyFile,
    EmptyIntersection,
    MissingColumn,
    NegativeCount,
    UnparsableValue,
)

FEATURES = (
    "t_max", "t_ave", "t_min", "hdd", "cdd",
    "w_pea", "w_ave", "w_sus", "p_rain", "pressure_a", "lightning_l",
)

WEATHER_HEADER = ("timestamp", "temperature_f", "precip_in", "pressure_inhg", "wind_mph", "lightning")
INTERRUPTION_HEADER = ("date", "n_sustained", "m_momentary")
DATASET_HEADER = (
    "date", "t_max", "t_ave", "t_min", "hdd", "cdd", "w_pea", "w_ave", "w_sus",
    "p_rain", "pressure", "lightning", "n", "m",
)
# DailyRecord attribute for each aligned-CSV column after "date"
_DATASET_ATTRS = FEATURES + ("n_sustained", "m_momentary")

DEFAULT_BASE_TEMP = 65.0
MIN_HOURS_PER_DAY = 18
MIN_RECORDS = 30
DEFAULT_FRACTIONS = (0.60, 0.15, 0.25)


@dataclass(frozen=True)
class HourlyWeatherRow:
    timestamp: datetime
    temperature: float
    precipitation: float
    pressure: float
    wind_speed: float
    lightning_strikes: float


@dataclass(frozen=True)
class DailyWeather:
    date: date
    t_max: float
    t_ave: float
    t_min: float
    hdd: float
    cdd: float
    w_pea: float
    w_ave: float
    w_sus: float
    p_rain: float
    pressure_a: float
    lightning_l: float

    def features(self) -> tuple[float, ...]:
        return tuple(getattr(self, name) for name in FEATURES)


@dataclass(frozen=True)
class DailyRecord(DailyWeather):
    n_sustained: int = 0
    m_momentary: int = 0


@dataclass(frozen=True)
class Dataset:
    records: tuple[DailyRecord, ...]
    provenance: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))
        for prev, cur in zip(self.records, self.records[1:]):
            if cur.date <= prev.date:
                raise DuplicateDate(f"dates not strictly increasing at {cur.date}")

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, item):
        if isinstance(item, slice):
            return Dataset(self.records[item], self.provenance)
        return self.records[item]

    @property
    def dates(self) -> list[date]:
        return [r.date for r in self.records]

    def features(self) -> np.ndarray:
        """Feature matrix, one row per day, columns in ``FEATURES`` order."""
        if not self.records:
            return np.empty((0, len(FEATURES)))
        return np.array([r.features() for r in self.records], dtype=float)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records], dtype=float)

    def targets(self) -> np.ndarray:
        """(k, 2) matrix of observed (N, M) counts."""
        return np.array([[r.n_sustained, r.m_momentary] for r in self.records], dtype=float).reshape(-1, 2)

    def require_size(self, minimum: int = MIN_RECORDS) -> None:
        if len(self) < minimum:
            raise DatasetTooSmall(f"dataset has {len(self)} records, need at least {minimum}")


@dataclass(frozen=True)
class SplitDataset:
    train: Dataset
    validate: Dataset
    test: Dataset


class Aggregated(NamedTuple):
    days: list[DailyWeather]
    skipped: list[date]


# -- parsing -----------------------------------------------------------------

def _read_rows(path, required):
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise EmptyFile(f"{path}: file is empty")
        header = [h.strip() for h in header]
        for col in required:
            if col not in header:
                raise MissingColumn(col, path)
        index = {col: header.index(col) for col in required}
        rows = []
        for lineno, raw in enumerate(reader, start=2):
            if not raw or all(not cell.strip() for cell in raw):
                continue
            values = {}
            for col, i in index.items():
                values[col] = raw[i].strip() if i < len(raw) else ""
            rows.append((lineno, values))
    if not rows:
        raise EmptyFile(f"{path}: no data rows")
    return rows


def _float(values, col, lineno, path, minimum=None, integral=False):
    text = values[col]
    try:
        value = float(text)
    except ValueError:
        raise UnparsableValue(lineno, col, text, path) from None
    if not math.isfinite(value):
        raise UnparsableValue(lineno, col, text, path)
    if minimum is not None and value < minimum:
        raise UnparsableValue(lineno, col, text, path)
    if integral and value != int(value):
        raise UnparsableValue(lineno, col, text, path)
    return value


def parse_weather_csv(path) -> list[HourlyWeatherRow]:
    """Parse an hourly weather export.

    Expected header: ``timestamp,temperature_f,precip_in,pressure_inhg,wind_mph,lightning``
    with timestamps formatted ``YYYY-MM-DDTHH:00``. Row numbers in errors are
    line numbers in the file (the header is line 1).
    """
    out = []
    seen = set()
    for lineno, values in _read_rows(path, WEATHER_HEADER):
        stamp = values["timestamp"]
        try:
            ts = datetime.strptime(stamp, "%Y-%m-%dT%H:%M")
        except ValueError:
            raise UnparsableValue(lineno, "timestamp", stamp, path) from None
        if ts.minute != 0:
            raise UnparsableValue(lineno, "timestamp", stamp, path)
        if ts in seen:
            raise DuplicateDate(f"{path}: row {lineno}: duplicate timestamp {stamp}")
        seen.add(ts)
        out.append(HourlyWeatherRow(
            timestamp=ts,
            temperature=_float(values, "temperature_f", lineno, path),
            precipitation=_float(values, "precip_in", lineno, path, minimum=0.0),
            pressure=_float(values, "pressure_inhg", lineno, path),
            wind_speed=_float(values, "wind_mph", lineno, path, minimum=0.0),
            lightning_strikes=_float(values, "lightning", lineno, path, minimum=0.0, integral=True),
        ))
    out.sort(key=lambda r: r.timestamp)
    return out


def _parse_count(values, col, lineno, path):
    text = values[col]
    try:
        value = int(text)
    except ValueError:
        raise UnparsableValue(lineno, col, text, path) from None
    if value < 0:
        raise NegativeCount(f"{path}: row {lineno}: {col}={value} is negative")
    return value


def _parse_date(values, lineno, path):
    text = values["date"]
    try:
        return date.fromisoformat(text)
    except ValueError:
        raise UnparsableValue(lineno, "date", text, path) from None


def parse_interruption_csv(path) -> list[tuple[date, int, int]]:
    """Parse daily interruption counts (``date,n_sustained,m_momentary``).

    Counts must already exclude major-event days; they are taken at face value.
    """
    out = {}
    for lineno, values in _read_rows(path, INTERRUPTION_HEADER):
        day = _parse_date(values, lineno, path)
        n = _parse_count(values, "n_sustained", lineno, path)
        m = _parse_count(values, "m_momentary", lineno, path)
        if day in out:
            raise DuplicateDate(f"{path}: row {lineno}: duplicate date {day}")
        out[day] = (day, n, m)
    return [out[d] for d in sorted(out)]


# -- aggregation -------------------------------------------------------------

def daily_features(temp, precip, pressure, wind, lightning, base_temp=DEFAULT_BASE_TEMP) -> dict[str, np.ndarray]:
    """Reduce (days, 24) hourly matrices to daily feature vectors.

    Missing hours are NaN. The sustained wind is the largest mean over two
    consecutive hours that are both present.
    """
    temp = np.asarray(temp, dtype=float)
    wind = np.asarray(wind, dtype=float)
    t_max = np.nanmax(temp, axis=1)
    t_min = np.nanmin(temp, axis=1)
    # the mean can land one ulp outside [min, max]
    t_ave = np.clip(np.nanmean(temp, axis=1), t_min, t_max)
    w_pea = np.nanmax(wind, axis=1)
    w_ave = np.clip(np.nanmean(wind, axis=1), None, w_pea)
    pairs = (wind[:, :-1] + wind[:, 1:]) / 2.0
    w_sus = np.nanmax(pairs, axis=1)
    return {
        "t_max": t_max,
        "t_ave": t_ave,
        "t_min": t_min,
        "hdd": np.maximum(0.0, base_temp - t_ave),
        "cdd": np.maximum(0.0, t_ave - base_temp),
        "w_pea": w_pea,
        "w_ave": w_ave,
        "w_sus": w_sus,
        "p_rain": np.nansum(np.asarray(precip, dtype=float), axis=1),
        "pressure_a": np.nanmean(np.asarray(pressure, dtype=float), axis=1),
        "lightning_l": np.nansum(np.asarray(lightning, dtype=float), axis=1),
    }


def aggregate_daily(rows: Sequence[HourlyWeatherRow], base_temp: float = DEFAULT_BASE_TEMP,
                    min_hours: int = MIN_HOURS_PER_DAY) -> Aggregated:
    """Aggregate hourly rows to daily weather features.

    Days with fewer than ``min_hours`` hours of data are skipped, not imputed,
    and their dates returned in ``Aggregated.skipped``.
    """
    by_day = defaultdict(list)
    for row in rows:
        by_day[row.timestamp.date()].append(row)

    kept, skipped = [], []
    for day in sorted(by_day):
        hours = {r.timestamp.hour for r in by_day[day]}
        (kept if len(hours) >= min_hours else skipped).append(day)
    if not kept:
        return Aggregated([], skipped)

    grids = np.full((5, len(kept), 24), np.nan)
    for k, day in enumerate(kept):
        for r in by_day[day]:
            grids[:, k, r.timestamp.hour] = (
                r.temperature, r.precipitation, r.pressure, r.wind_speed, r.lightning_strikes,
            )
    feats = daily_features(*grids, base_temp=base_temp)
    days = [
        DailyWeather(day, *(float(feats[name][k]) for name in FEATURES))
        for k, day in enumerate(kept)
    ]
    return Aggregated(days, skipped)


def align(daily_weather: Iterable[DailyWeather], interruptions: Iterable[tuple[date, int, int]]) -> Dataset:
    """Inner-join daily weather and interruption counts on date."""
    weather = {d.date: d for d in daily_weather}
    counts = {day: (n, m) for day, n, m in interruptions}
    if not weather or not counts:
        raise EmptyIntersection("both weather and interruption inputs must be non-empty")
    common = sorted(weather.keys() & counts.keys())
    if not common:
        raise EmptyIntersection("weather and interruption files share no dates")
    records = [
        DailyRecord(day, *weather[day].features(), n_sustained=counts[day][0], m_momentary=counts[day][1])
        for day in common
    ]
    provenance = (
        f"aligned {len(common)} days; dropped {len(weather) - len(common)} weather-only "
        f"and {len(counts) - len(common)} interruption-only days"
    )
    return Dataset(tuple(records), provenance)


def split_chronological(ds: Dataset, fractions: Sequence[float] = DEFAULT_FRACTIONS) -> SplitDataset:
    fractions = tuple(float(f) for f in fractions)
    if len(fractions) != 3 or any(f < 0 for f in fractions) or abs(sum(fractions) - 1.0) > 1e-9:
        raise BadFractions(f"split fractions must be three non-negative values summing to 1, got {fractions}")
    ds.require_size()
    n = len(ds)
    # the epsilon keeps products like 0.15 * 100 from flooring to 14
    n_train = math.floor(fractions[0] * n + 1e-9)
    n_val = math.floor(fractions[1] * n + 1e-9)
    return SplitDataset(ds[:n_train], ds[n_train:n_train + n_val], ds[n_train + n_val:])


# -- aligned dataset CSV -------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def atomic_write_text(path, text: str) -> None:
    """Write ``text`` to ``path`` via a temporary file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dataset_to_csv(ds: Dataset) -> str:
    lines = [",".join(DATASET_HEADER)]
    for r in ds.records:
        lines.append(",".join([r.date.isoformat()] + [_fmt(getattr(r, a)) for a in _DATASET_ATTRS]))
    return "\n".join(lines) + "\n"


def write_dataset_csv(ds: Dataset, path) -> None:
    atomic_write_text(path, dataset_to_csv(ds))


def read_dataset_csv(path) -> Dataset:
    records = []
    seen = set()
    for lineno, values in _read_rows(path, DATASET_HEADER):
        day = _parse_date(values, lineno, path)
        if day in seen:
            raise DuplicateDate(f"{path}: row {lineno}: duplicate date {day}")
        seen.add(day)
        feats = [_float(values, col, lineno, path) for col in DATASET_HEADER[1:12]]
        n = _parse_count(values, "n", lineno, path)
        m = _parse_count(values, "m", lineno, path)
        records.append(DailyRecord(day, *feats, n_sustained=n, m_momentary=m))
    records.sort(key=lambda r: r.date)
    return Dataset(tuple(records), f"read from {Path(path).name}")


def weather_to_csv(rows: Iterable[HourlyWeatherRow]) -> str:
    lines = [",".join(WEATHER_HEADER)]
    for r in rows:
        lines.append(",".join([
            r.timestamp.strftime("%Y-%m-%dT%H:00"),
            repr(float(r.temperature)), repr(float(r.precipitation)), repr(float(r.pressure)),
            repr(float(r.wind_speed)), str(int(r.lightning_strikes)),
        ]))
    return "\n".join(lines) + "\n"


def interruptions_to_csv(rows: Iterable[tuple[date, int, int]]) -> str:
    lines = [",".join(INTERRUPTION_HEADER)]
    lines.extend(f"{d.isoformat()},{int(n)},{int(m)}" for d, n, m in rows)
    return "\n".join(lines) + "\n"

