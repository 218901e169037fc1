"""Per-location climate series and the historical-average transform."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from ..errors import AlignmentError, InsufficientHistory

VARIABLES = ("temp", "pres", "synthetic")
DAYS_PER_YEAR = 365


def _frozen(a, dtype=float) -> np.ndarray:
    a = np.array(a, dtype=dtype)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """A scalar series at one location.

    ``times`` holds one UTC timestamp per value. After leap-day stripping the
    sampling is uniform on a 365-day calendar.

    ``average`` is only set for difference-scale series: the historical
    average that was subtracted at each step, needed to restore the
    original scale.
    """

    values: np.ndarray
    times: np.ndarray
    lat: float
    lon: float
    variable: str = "synthetic"
    step_hours: int = 6
    differenced: bool = False
    average: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))
        object.__setattr__(self, "times", _frozen(self.times, "datetime64[s]"))
        if self.average is not None:
            object.__setattr__(self, "average", _frozen(self.average))
        if self.values.ndim != 1 or self.values.size == 0:
            raise ValueError("series values must be a non-empty 1-D array")
        if self.times.shape != self.values.shape:
            raise ValueError("times and values must have equal length")
        if self.average is not None and self.average.shape != self.values.shape:
            raise ValueError("average and values must have equal length")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("series values must be finite")
        if not -90.0 <= self.lat <= 90.0:
            raise ValueError(f"latitude {self.lat} out of range")
        if not -180.0 <= self.lon < 180.0:
            raise ValueError(f"longitude {self.lon} outside [-180, 180)")
        if self.variable not in VARIABLES:
            raise ValueError(f"unknown variable {self.variable!r}")
        if self.step_hours <= 0 or 24 % self.step_hours:
            raise ValueError("step_hours must divide 24")

    def __len__(self) -> int:
        return self.values.size

    @property
    def start_time(self) -> np.datetime64:
        return self.times[0]

    @property
    def location(self) -> tuple[float, float]:
        return (self.lat, self.lon)

    @property
    def slots_per_day(self) -> int:
        return 24 // self.step_hours

    def select(self, mask_or_slice) -> "TimeSeries":
        avg = None if self.average is None else self.average[mask_or_slice]
        return replace(self, values=self.values[mask_or_slice], times=self.times[mask_or_slice], average=avg)


@dataclass(frozen=True, eq=False)
class HistoricalAverage:
    """Slot-wise mean over the ``source_years`` preceding a given year."""

    averages: np.ndarray
    source_years: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "averages", _frozen(self.averages))
        if not np.all(np.isfinite(self.averages)):
            raise ValueError("historical average must be finite")

    @property
    def slots_per_day(self) -> int:
        return self.averages.size // DAYS_PER_YEAR


def calendar_fields(times: np.ndarray) -> dict[str, np.ndarray]:
    """Year, month, day and seconds-of-day for a datetime64 array."""
    t = np.asarray(times, dtype="datetime64[s]")
    y = t.astype("datetime64[Y]")
    m = t.astype("datetime64[M]")
    d = t.astype("datetime64[D]")
    return {
        "year": y.astype(np.int64) + 1970,
        "month": (m - y.astype("datetime64[M]")).astype(np.int64) + 1,
        "day": (d - m.astype("datetime64[D]")).astype(np.int64) + 1,
        "day_of_year": (d - y.astype("datetime64[D]")).astype(np.int64) + 1,
        "second": (t - d.astype("datetime64[s]")).astype(np.int64),
    }


def is_leap_year(year) -> np.ndarray:
    year = np.asarray(year)
    return (year % 4 == 0) & ((year % 100 != 0) | (year % 400 == 0))


def leap_day_mask(times: np.ndarray) -> np.ndarray:
    f = calendar_fields(times)
    return (f["month"] == 2) & (f["day"] == 29)


def slot_index(times: np.ndarray, step_hours: int = 6) -> np.ndarray:
    """Within-year slot ``slots_per_day * (day_of_year - 1) + slot_of_day``.

    Day of year is counted on the 365-day calendar, i.e. March 1 is day 60
    in every year.

    Raises:
        AlignmentError: a timestamp falls on Feb 29 or off the sampling grid.
    """
    f = calendar_fields(times)
    step_s = step_hours * 3600
    if np.any(f["second"] % step_s):
        raise AlignmentError(f"timestamps are not aligned to the {step_hours}-hour grid")
    if np.any((f["month"] == 2) & (f["day"] == 29)):
        raise AlignmentError("Feb 29 has no slot; strip leap days first")
    doy = f["day_of_year"] - ((f["month"] > 2) & is_leap_year(f["year"]))
    return (24 // step_hours) * (doy - 1) + f["second"] // step_s


def years_of(series: TimeSeries) -> np.ndarray:
    return calendar_fields(series.times)["year"]


def strip_leap_days(series: TimeSeries) -> TimeSeries:
    """Drop every sample dated February 29."""
    mask = leap_day_mask(series.times)
    if not mask.any():
        return series
    return series.select(~mask)


def year_block(series: TimeSeries, year: int) -> TimeSeries:
    """All samples of one calendar year, required to be complete and in slot order."""
    per_year = DAYS_PER_YEAR * series.slots_per_day
    mask = years_of(series) == year
    count = int(mask.sum())
    if count != per_year:
        raise InsufficientHistory(
            f"year {year} at ({series.lat}, {series.lon}) has {count} of {per_year} steps"
        )
    block = series.select(mask)
    if not np.array_equal(slot_index(block.times, series.step_hours), np.arange(per_year)):
        raise InsufficientHistory(f"year {year} at ({series.lat}, {series.lon}) has gaps or reordering")
    return block


def historical_average(series: TimeSeries, upto_year: int, window_years: int = 3) -> HistoricalAverage:
    """Average of each within-year slot over the ``window_years`` before ``upto_year``.

    Raises:
        InsufficientHistory: any window year is missing or incomplete.
    """
    if window_years < 1:
        raise ValueError("window_years must be positive")
    clean = strip_leap_days(series)
    years = tuple(range(upto_year - window_years, upto_year))
    blocks = [year_block(clean, y).values for y in years]
    # Offset form keeps identical years exact: ref + mean(others - ref).
    ref = blocks[0]
    acc = np.zeros_like(ref)
    for b in blocks[1:]:
        acc += b - ref
    return HistoricalAverage(ref + acc / window_years, years)


def _slot_values(series: TimeSeries, avg: HistoricalAverage) -> np.ndarray:
    if avg.slots_per_day != series.slots_per_day:
        raise AlignmentError("average and series use different sampling intervals")
    return avg.averages[slot_index(series.times, series.step_hours)]


def difference(series: TimeSeries, avg: HistoricalAverage) -> TimeSeries:
    """Subtract the slot-matched historical average."""
    a = _slot_values(series, avg)
    return replace(series, values=series.values - a, differenced=True, average=a)


def restore_scale(diff: TimeSeries, avg: HistoricalAverage) -> TimeSeries:
    """Add the slot-matched historical average back.

    Inverts :func:`difference` bit for bit whenever each value and its
    average lie within a factor of two of each other (Sterbenz), which holds
    for temperatures in kelvin and pressures in pascal.
    """
    a = _slot_values(diff, avg)
    return replace(diff, values=diff.values + a, differenced=False, average=None)
