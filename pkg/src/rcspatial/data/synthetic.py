"""Desk-scale synthetic spatiotemporal fields with tunable correlation and lag.

Each site ``s`` observes::

    seasonal(t) + rho(s) z(t - tau(s)) + sqrt(1 - rho(s)^2) eta_s(t) + noise_level eps_s(t)

where ``z`` is a shared AR(1) driver, ``eta_s`` an independent AR(1) process
with the same spectrum, ``eps_s`` white noise, ``rho(s) = exp(-dist / mixing_length)``
and ``tau(s) = round(lag_per_degree * max(east_offset, 0))`` steps. Sites to
the east see the driver late, sites to the west see it as the origin does.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy.signal import lfilter

from .series import DAYS_PER_YEAR, TimeSeries, leap_day_mask


@dataclass(frozen=True)
class SiteGrid:
    origin: tuple[float, float]
    sites: tuple[tuple[float, float], ...]

    @classmethod
    def cross(
        cls,
        origin: tuple[float, float],
        lat_offsets: Iterable[float] = (),
        lon_offsets: Iterable[float] = (),
    ) -> "SiteGrid":
        """Origin plus the latitude and longitude bands through it."""
        lat0, lon0 = origin
        pts = {(float(lat0), float(lon0))}
        pts.update((_clean(lat0 + d), float(lon0)) for d in lat_offsets)
        pts.update((float(lat0), wrap_lon(lon0 + d)) for d in lon_offsets)
        return cls((float(lat0), float(lon0)), tuple(sorted(pts)))

    @classmethod
    def rectangular(cls, origin: tuple[float, float], lats: Iterable[float], lons: Iterable[float]) -> "SiteGrid":
        pts = {(float(origin[0]), float(origin[1]))}
        pts.update((_clean(a), wrap_lon(b)) for a in lats for b in lons)
        return cls((float(origin[0]), float(origin[1])), tuple(sorted(pts)))


def _clean(x: float) -> float:
    # Round away float noise from offset arithmetic (0.1 + 0.2 style).
    return round(float(x), 6) + 0.0


def wrap_lon(lon: float) -> float:
    return _clean((float(lon) + 180.0) % 360.0 - 180.0)


def offset_degrees(site: tuple[float, float], origin: tuple[float, float]) -> tuple[float, float]:
    """(north, east) offset of ``site`` from ``origin`` with longitude wrapped."""
    dlat = site[0] - origin[0]
    dlon = (site[1] - origin[1] + 180.0) % 360.0 - 180.0
    return dlat, dlon


def site_distance(site, origin) -> float:
    dlat, dlon = offset_degrees(site, origin)
    return math.hypot(dlat, dlon)


def noleap_times(start_year: int, years: int, step_hours: int = 6) -> np.ndarray:
    """Timestamps for ``years`` whole years on a 365-day calendar."""
    start = np.datetime64(f"{start_year:04d}-01-01T00:00:00", "s")
    stop = np.datetime64(f"{start_year + years:04d}-01-01T00:00:00", "s")
    t = np.arange(start, stop, np.timedelta64(step_hours, "h"))
    return t[~leap_day_mask(t)]


def _ar1(rng: np.random.Generator, n: int, persistence: float) -> np.ndarray:
    """Unit-variance stationary AR(1) sample path."""
    e = rng.standard_normal(n)
    if n == 1 or persistence == 0.0:
        return e
    gain = math.sqrt(1.0 - persistence**2)
    rest, _ = lfilter([gain], [1.0, -persistence], e[1:], zi=[persistence * e[0]])
    return np.concatenate([e[:1], rest])


def _coord_code(x: float) -> int:
    return int(round((x + 360.0) * 1000))


def gen_synthetic(
    grid: SiteGrid,
    driver_seed: int,
    lag_per_degree: float = 0.0,
    mixing_length: float = 10.0,
    noise_level: float = 0.1,
    years: int = 6,
    start_year: int = 2016,
    persistence: float = 0.95,
    seasonal_amplitude: float = 3.0,
    step_hours: int = 6,
) -> dict[tuple[float, float], TimeSeries]:
    """Generate one series per grid site (see module docstring for the model).

    Per-site noise streams are keyed by the site coordinates, so adding or
    removing sites leaves every other site's series unchanged.
    """
    if not mixing_length > 0:
        raise ValueError("mixing_length must be positive")
    if not 0.0 <= persistence < 1.0:
        raise ValueError("persistence must lie in [0, 1)")
    times = noleap_times(start_year, years, step_hours)
    n = times.size
    per_year = DAYS_PER_YEAR * (24 // step_hours)
    seasonal = seasonal_amplitude * np.sin(2.0 * np.pi * (np.arange(n) % per_year) / per_year)

    lags = {}
    for site in grid.sites:
        _, east = offset_degrees(site, grid.origin)
        lags[site] = int(round(lag_per_degree * max(east, 0.0)))
    max_lag = max(lags.values(), default=0)
    z = _ar1(np.random.default_rng([driver_seed, 0]), n + max_lag, persistence)

    field = {}
    for site in grid.sites:
        rho = math.exp(-site_distance(site, grid.origin) / mixing_length)
        rng = np.random.default_rng([driver_seed, 1, _coord_code(site[0]), _coord_code(site[1])])
        eta = _ar1(rng, n, persistence)
        eps = rng.standard_normal(n)
        tau = lags[site]
        shared = z[max_lag - tau: max_lag - tau + n]
        values = seasonal + rho * shared + math.sqrt(max(0.0, 1.0 - rho * rho)) * eta + noise_level * eps
        field[site] = TimeSeries(
            values=values,
            times=times,
            lat=site[0],
            lon=site[1],
            variable="synthetic",
            step_hours=step_hours,
        )
    return field


def driver_with_seasonal(
    driver_seed: int,
    years: int = 6,
    start_year: int = 2016,
    persistence: float = 0.95,
    seasonal_amplitude: float = 3.0,
    step_hours: int = 6,
    max_lag: int = 0,
) -> np.ndarray:
    """The noiseless origin signal ``seasonal + z`` for diagnostics."""
    n = noleap_times(start_year, years, step_hours).size
    per_year = DAYS_PER_YEAR * (24 // step_hours)
    seasonal = seasonal_amplitude * np.sin(2.0 * np.pi * (np.arange(n) % per_year) / per_year)
    z = _ar1(np.random.default_rng([driver_seed, 0]), n + max_lag, persistence)
    return seasonal + z[max_lag:]
