"""Transient / train / test windows for one (observation, target) pair and year."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import InsufficientHistory, MisalignedSeries
from .series import (
    DAYS_PER_YEAR,
    HistoricalAverage,
    TimeSeries,
    historical_average,
    slot_index,
    strip_leap_days,
    years_of,
)

T_TRANS = 300
AVERAGE_WINDOW_YEARS = 3


@dataclass(frozen=True, eq=False)
class DatasetSplit:
    """Difference-scale experiment windows for the dataset of Year N.

    Row 0 of every 2-row matrix is the observation point (``y1``), row 1 the
    target point (``y2``). ``ave_*`` hold the historical average subtracted at
    each step, so ``y + ave`` is the original scale.
    """

    u_trans: np.ndarray
    u_train: np.ndarray
    u_test: np.ndarray
    y_train: np.ndarray
    y_test: np.ndarray
    ave_train: np.ndarray
    ave_test: np.ndarray
    year: int
    obs_location: tuple[float, float] = (0.0, 0.0)
    target_location: tuple[float, float] = (0.0, 0.0)
    avg_obs: Optional[HistoricalAverage] = None
    avg_target: Optional[HistoricalAverage] = None
    segment_bounds: Optional[tuple[tuple[int, int], ...]] = None

    def __post_init__(self):
        for name in ("u_trans", "u_train", "u_test", "y_train", "y_test", "ave_train", "ave_test"):
            a = np.array(getattr(self, name), dtype=float)
            if not np.all(np.isfinite(a)):
                raise ValueError(f"{name} contains non-finite values")
            a.flags.writeable = False
            object.__setattr__(self, name, a)
        if self.y_train.shape != (2, self.u_train.size) or self.y_test.shape != (2, self.u_test.size):
            raise ValueError("y_train/y_test must be (2, T) matching the input lengths")
        if self.ave_train.shape != self.y_train.shape or self.ave_test.shape != self.y_test.shape:
            raise ValueError("average arrays must match the output windows")

    @property
    def lengths(self) -> tuple[int, int, int]:
        return (self.u_trans.size, self.u_train.size, self.u_test.size)

    @property
    def inputs(self) -> np.ndarray:
        """Observation-channel drive for transient, training and test in order."""
        return np.concatenate([self.u_trans, self.u_train, self.u_test])

    @property
    def y_test_original(self) -> np.ndarray:
        return self.y_test + self.ave_test


def _segments(series: TimeSeries, year_n: int, t_trans: int):
    """Yield (year, index array) for transient, train and test windows."""
    per_year = DAYS_PER_YEAR * series.slots_per_day
    years = years_of(series)
    out = []
    for year, take_last in ((year_n - 2, t_trans), (year_n - 1, None), (year_n, None)):
        idx = np.flatnonzero(years == year)
        if idx.size != per_year or not np.array_equal(
            slot_index(series.times[idx], series.step_hours), np.arange(per_year)
        ):
            raise InsufficientHistory(
                f"year {year} at ({series.lat}, {series.lon}) has {idx.size} of {per_year} steps"
            )
        if take_last is not None:
            if take_last > per_year:
                raise ValueError("transient longer than a year")
            idx = idx[per_year - take_last:]
        out.append((year, idx))
    return out


def _difference_windows(series: TimeSeries, segs, window_years: int):
    diffs, aves = [], []
    test_avg = None
    for year, idx in segs:
        vals = series.values[idx]
        if series.differenced:
            ave = series.average[idx]
            diffs.append(vals)
        else:
            avg = historical_average(series, upto_year=year, window_years=window_years)
            ave = avg.averages[slot_index(series.times[idx], series.step_hours)]
            diffs.append(vals - ave)
            test_avg = avg
        aves.append(ave)
    return diffs, aves, test_avg


def make_split(
    obs: TimeSeries,
    target: TimeSeries,
    year_n: int,
    t_trans: int = T_TRANS,
    window_years: int = AVERAGE_WINDOW_YEARS,
) -> DatasetSplit:
    """Build the Year-N dataset.

    Transient is the last ``t_trans`` steps of Year N-2, training the whole of
    Year N-1 and test the whole of Year N. Raw series are differenced per
    window against the slot average of the ``window_years`` years before that
    window's year, so no window sees its own or later data. Series already on
    the difference scale are used as-is.

    Raises:
        InsufficientHistory: a required year is missing or incomplete.
        MisalignedSeries: the two series differ in cadence, scale or timestamps.
    """
    if obs.step_hours != target.step_hours:
        raise MisalignedSeries("observation and target use different sampling intervals")
    if obs.differenced != target.differenced:
        raise MisalignedSeries("cannot pair a raw series with a difference-scale series")
    obs = strip_leap_days(obs)
    target = strip_leap_days(target)

    segs_o = _segments(obs, year_n, t_trans)
    segs_t = _segments(target, year_n, t_trans)
    for (_, io), (_, it) in zip(segs_o, segs_t):
        if not np.array_equal(obs.times[io], target.times[it]):
            raise MisalignedSeries("observation and target timestamps differ")

    d_o, a_o, avg_o = _difference_windows(obs, segs_o, window_years)
    d_t, a_t, avg_t = _difference_windows(target, segs_t, window_years)
    bounds = tuple((int(idx[0]), int(idx[-1]) + 1) for _, idx in segs_o)

    return DatasetSplit(
        u_trans=d_o[0],
        u_train=d_o[1],
        u_test=d_o[2],
        y_train=np.vstack([d_o[1], d_t[1]]),
        y_test=np.vstack([d_o[2], d_t[2]]),
        ave_train=np.vstack([a_o[1], a_t[1]]),
        ave_test=np.vstack([a_o[2], a_t[2]]),
        year=year_n,
        obs_location=obs.location,
        target_location=target.location,
        avg_obs=avg_o,
        avg_target=avg_t,
        segment_bounds=bounds,
    )
