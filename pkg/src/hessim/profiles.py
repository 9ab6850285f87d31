"""PV and load time series on a fixed 365-day, 1-minute grid.

Every simulation consumes two :class:`MinuteSeries` (PV generation and
building consumption).  Source files are resampled to minutes on ingestion:
sub-minute logger data is mean-aggregated, coarser block averages (e.g. the
15-minute DSO consumption profiles) are step-held, short gaps are linearly
filled.  Later years of the horizon are obtained by compounding PV
degradation and load growth onto the year-1 series.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np
import pandas as pd

MINUTES_PER_DAY = 1440
DAYS_PER_YEAR = 365
MINUTES_PER_YEAR = MINUTES_PER_DAY * DAYS_PER_YEAR  # 525_600
HORIZON_YEARS = 15
MAX_GAP_MINUTES = 60

Kind = Literal["pv", "load"]


class ProfileError(ValueError):
    """Base class for profile ingestion problems."""


class ProfileParseError(ProfileError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class ProfileGapError(ProfileError):
    def __init__(self, start_minute: int, length: int):
        day, minute = divmod(start_minute, MINUTES_PER_DAY)
        super().__init__(
            f"gap of {length} min starting at minute {start_minute} "
            f"(day {day}, {minute // 60:02d}:{minute % 60:02d}); "
            f"gaps >= {MAX_GAP_MINUTES} min are not filled"
        )
        self.start_minute = start_minute
        self.length = length


class ProfileLengthError(ProfileError):
    pass


@dataclass(frozen=True)
class MinuteSeries:
    """One civil year of 1-minute mean power samples in W.

    ``values[i]`` is minute ``i`` of the year, minute 0 being Jan 1 00:00.
    """

    values: np.ndarray
    kind: Kind
    year_index: int = 1

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.shape != (MINUTES_PER_YEAR,):
            raise ProfileLengthError(
                f"expected {MINUTES_PER_YEAR} samples, got {values.size}"
            )
        if not np.all(np.isfinite(values)):
            raise ProfileError("non-finite sample in series")
        if np.any(values < 0):
            raise ProfileError(f"negative power in {self.kind} series")
        if self.kind not in ("pv", "load"):
            raise ProfileError(f"unknown series kind {self.kind!r}")
        if self.year_index < 1:
            raise ProfileError("year_index must be >= 1")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def energy_wh(self) -> float:
        return float(self.values.sum()) / 60.0


@dataclass(frozen=True)
class ScalingPolicy:
    pv_degradation_rate: float = 0.0045
    load_growth_rate: float = 0.02

    def __post_init__(self):
        for name in ("pv_degradation_rate", "load_growth_rate"):
            rate = getattr(self, name)
            if not 0.0 <= rate <= 0.2:
                raise ValueError(f"{name} must lie in [0, 0.2], got {rate}")

    def factor(self, kind: Kind, year: int) -> float:
        if kind == "pv":
            return (1.0 - self.pv_degradation_rate) ** (year - 1)
        return (1.0 + self.load_growth_rate) ** (year - 1)


def scale_to_year(
    base: MinuteSeries, policy: ScalingPolicy, year: int, horizon: int = HORIZON_YEARS
) -> MinuteSeries:
    """Return ``base`` as it would look in simulation year ``year``."""
    if not 1 <= year <= horizon:
        raise ValueError(f"year {year} outside horizon [1, {horizon}]")
    if base.year_index != 1:
        raise ValueError("scale_to_year expects a year-1 base series")
    factor = policy.factor(base.kind, year)
    return MinuteSeries(base.values * factor, kind=base.kind, year_index=year)


# -- ingestion ---------------------------------------------------------------


def _minute_of_year(ts: pd.Series) -> tuple[np.ndarray, np.ndarray]:
    """Seconds since Jan 1 00:00 on a 365-day calendar, plus a Feb-29 mask."""
    leap = ts.dt.is_leap_year.to_numpy()
    month = ts.dt.month.to_numpy()
    doy = ts.dt.dayofyear.to_numpy() - 1
    feb29 = leap & (month == 2) & (ts.dt.day.to_numpy() == 29)
    doy = doy - (leap & (month > 2)).astype(np.int64)
    seconds = (
        doy * 86_400
        + ts.dt.hour.to_numpy() * 3600
        + ts.dt.minute.to_numpy() * 60
        + ts.dt.second.to_numpy()
        + ts.dt.microsecond.to_numpy() / 1e6
    )
    return seconds.astype(np.float64), feb29


def _read_csv(path: Path) -> tuple[pd.Series, np.ndarray]:
    try:
        frame = pd.read_csv(path, dtype=str, encoding="utf-8", skipinitialspace=True)
    except pd.errors.ParserError as exc:
        raise ProfileParseError(0, str(exc)) from exc
    if list(frame.columns) != ["timestamp", "power_w"]:
        raise ProfileParseError(1, f"header must be 'timestamp,power_w', got {list(frame.columns)}")
    if frame.empty:
        raise ProfileLengthError("profile file has no data rows")

    ts = pd.to_datetime(frame["timestamp"], errors="coerce", format="ISO8601")
    power = pd.to_numeric(frame["power_w"], errors="coerce").to_numpy(dtype=np.float64)
    bad = ts.isna().to_numpy() | ~np.isfinite(power)
    if bad.any():
        row = int(np.argmax(bad))
        raise ProfileParseError(row + 2, f"cannot parse row {frame.iloc[row].tolist()!r}")
    if (power < 0).any():
        row = int(np.argmax(power < 0))
        raise ProfileParseError(row + 2, f"negative power {power[row]}")
    if ts.dt.tz is not None:
        ts = ts.dt.tz_localize(None)
    diffs = np.diff(ts.to_numpy().astype("datetime64[ns]").astype(np.int64))
    if (diffs <= 0).any():
        row = int(np.argmax(diffs <= 0)) + 1
        raise ProfileParseError(row + 2, "timestamps must be strictly increasing")
    return ts, power


def _fill_gaps(minutes: np.ndarray) -> np.ndarray:
    missing = np.isnan(minutes)
    if not missing.any():
        return minutes
    # run-length encode the missing mask
    edges = np.diff(np.concatenate(([0], missing.view(np.int8), [0])))
    starts = np.flatnonzero(edges == 1)
    stops = np.flatnonzero(edges == -1)
    for start, stop in zip(starts, stops):
        if stop - start >= MAX_GAP_MINUTES:
            raise ProfileGapError(int(start), int(stop - start))
    if missing.all():
        raise ProfileGapError(0, MINUTES_PER_YEAR)
    idx = np.arange(minutes.size)
    filled = minutes.copy()
    # np.interp holds the end values for leading/trailing gaps
    filled[missing] = np.interp(idx[missing], idx[~missing], minutes[~missing])
    return filled


def resample_to_minutes(seconds: np.ndarray, power: np.ndarray, native_step: float) -> np.ndarray:
    """Place samples on the 525,600-minute grid; minutes with no data are NaN.

    ``seconds`` are offsets from Jan 1 00:00.  Sub-minute samples are averaged
    per minute, coarser samples are held for ``native_step`` seconds.
    """
    if native_step <= 60:
        minute = np.floor(seconds / 60.0).astype(np.int64)
        if minute.size and (minute.min() < 0 or minute.max() >= MINUTES_PER_YEAR):
            raise ProfileLengthError("samples outside minutes 0..525599")
        sums = np.bincount(minute, weights=power, minlength=MINUTES_PER_YEAR)
        counts = np.bincount(minute, minlength=MINUTES_PER_YEAR)
        return np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    hold = int(native_step // 60)
    first = np.floor(seconds / 60.0).astype(np.int64)
    covered = (first[:, None] + np.arange(hold)[None, :]).ravel()
    if covered.size and (covered.min() < 0 or covered.max() >= MINUTES_PER_YEAR):
        raise ProfileLengthError("samples outside minutes 0..525599")
    minutes = np.full(MINUTES_PER_YEAR, np.nan)
    minutes[covered] = np.repeat(power, hold)
    return minutes


def load_profile(path: str | Path, kind: Kind, native_step: float) -> MinuteSeries:
    """Read a ``timestamp,power_w`` CSV and resample it onto the minute grid.

    ``native_step`` (seconds) must divide 60 or be a multiple of 60.  Sub-minute
    samples are averaged per minute; coarser samples are held for their whole
    interval.  Feb-29 rows are dropped.
    """
    if native_step <= 0:
        raise ValueError("native_step must be positive")
    if native_step < 60:
        if not float(60 / native_step).is_integer():
            raise ValueError(f"native step {native_step}s does not divide 60 s")
    elif not float(native_step / 60).is_integer():
        raise ValueError(f"native step {native_step}s is not a multiple of 60 s")

    ts, power = _read_csv(Path(path))
    year0 = int(ts.iloc[0].year)
    if int(ts.iloc[-1].year) != year0:
        raise ProfileLengthError(f"profile spans more than one calendar year ({year0}..{ts.iloc[-1].year})")
    seconds, feb29 = _minute_of_year(ts)
    seconds, power = seconds[~feb29], power[~feb29]

    minutes = resample_to_minutes(seconds, power, native_step)
    have = np.flatnonzero(~np.isnan(minutes))
    if have[0] >= MAX_GAP_MINUTES or have[-1] < MINUTES_PER_YEAR - MAX_GAP_MINUTES:
        raise ProfileLengthError(
            f"profile covers minutes {have[0]}..{have[-1]} ({have.size} samples after resampling), "
            f"expected a full year of {MINUTES_PER_YEAR}"
        )
    return MinuteSeries(_fill_gaps(minutes), kind=kind, year_index=1)


def write_profile(series: MinuteSeries, path: str | Path, year: int = 2019) -> None:
    """Write a series in the ``timestamp,power_w`` CSV format at 1-min resolution."""
    stamps = pd.date_range(f"{year}-01-01", periods=MINUTES_PER_YEAR + 1440 * 2, freq="min")
    stamps = stamps[~((stamps.month == 2) & (stamps.day == 29))][:MINUTES_PER_YEAR]
    frame = pd.DataFrame({"timestamp": stamps.strftime("%Y-%m-%dT%H:%M:%S"), "power_w": series.values})
    frame.to_csv(path, index=False, float_format="%.6f")


# -- bundled synthetic sample ------------------------------------------------

# SYNTHETIC DATA: a hand-built representative week, not measured data.
_WEEK_CLOUDINESS = np.array([0.0, 0.1, 0.55, 0.25, 0.0, 0.7, 0.15])
_WEEKDAY_LOAD_15MIN = {
    # hour: W, a services building with weekday office hours
    0: 520, 6: 640, 7: 1300, 8: 2300, 10: 2600, 12: 2150, 14: 2550, 17: 2100, 19: 1100, 21: 650,
}
_WEEKEND_LOAD_W = 560.0


def _weekday_load_day() -> np.ndarray:
    hours = sorted(_WEEKDAY_LOAD_15MIN)
    day = np.empty(MINUTES_PER_DAY)
    for i, h in enumerate(hours):
        stop = hours[i + 1] * 60 if i + 1 < len(hours) else MINUTES_PER_DAY
        day[h * 60 : stop] = _WEEKDAY_LOAD_15MIN[h]
    # small deterministic ripple, held per 15-min block like DSO data
    blocks = np.arange(MINUTES_PER_DAY) // 15
    return day * (1.0 + 0.04 * np.sin(blocks * 1.7))


def synthetic_year(kind: Kind, pv_peak_w: float = 7600.0, load_scale: float = 1.0) -> MinuteSeries:
    """Deterministic SYNTHETIC sample year: one representative week tiled to 365 days.

    The load week is tiled verbatim.  PV reuses the week's cloud pattern but
    follows the seasonal day length and peak irradiance of a mid-latitude site
    (~38 N), so that summer/winter behaviour differs.  Intended for smoke
    tests and demos only.
    """
    day = np.arange(DAYS_PER_YEAR)
    minute = np.arange(MINUTES_PER_DAY)
    if kind == "load":
        weekday = _weekday_load_day()
        weekend = np.full(MINUTES_PER_DAY, _WEEKEND_LOAD_W)
        week = np.concatenate([weekday] * 5 + [weekend] * 2)
        reps = -(-MINUTES_PER_YEAR // week.size)
        return MinuteSeries(np.tile(week, reps)[:MINUTES_PER_YEAR] * load_scale, kind="load")
    if kind != "pv":
        raise ValueError(kind)

    season = np.cos(2 * np.pi * (day - 172) / DAYS_PER_YEAR)  # +1 at the June solstice
    day_len_h = 12.0 + 2.6 * season
    amplitude = pv_peak_w * (0.72 + 0.28 * season)
    sunrise = (12.5 - day_len_h / 2) * 60
    phase = (minute[None, :] - sunrise[:, None]) / (day_len_h[:, None] * 60)
    bell = np.where((phase > 0) & (phase < 1), np.sin(np.pi * np.clip(phase, 0, 1)) ** 1.3, 0.0)
    cloud = _WEEK_CLOUDINESS[day % 7][:, None]
    flicker = 0.5 + 0.5 * np.sin(2 * np.pi * minute / 23.0) * np.sin(2 * np.pi * minute / 131.0)
    transmittance = 1.0 - cloud * (0.35 + 0.65 * flicker[None, :])
    values = (amplitude[:, None] * bell * transmittance).ravel()
    return MinuteSeries(values, kind="pv")
