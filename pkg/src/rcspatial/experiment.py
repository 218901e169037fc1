"""End-to-end experiments: observation-point sweeps around a fixed target."""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, NamedTuple, Optional, Protocol

import numpy as np

from .data.io import load_series, series_path
from .data.series import TimeSeries
from .data.split import T_TRANS, DatasetSplit, make_split
from .data.synthetic import wrap_lon
from .errors import ConfigError, MissingSeries, RCSpatialError, ZeroVariance
from .evaluation import METHODS, pearson_correlation
from .pipeline import predict_esn, predict_var, score_historical_average, score_prediction
from .report import FailedCell, PredictionRecord, SweepReport, build_report
from .reservoir import DistributedLeak, Reservoir, ReservoirParams, UniformLeak, init_reservoir

log = logging.getLogger(__name__)

AXES = ("latitude", "longitude")


@dataclass(frozen=True)
class EsnSettings:
    density: float
    input_scaling: float
    spectral_radius: float
    ridge_beta: float


# Calibrated values for the Tokyo target; synthetic runs reuse the temperature set.
CALIBRATED_ESN = {
    "temp": EsnSettings(0.02, 0.2, 0.5, 1.0),
    "pres": EsnSettings(0.07, 0.05, 0.2, 0.15),
    "synthetic": EsnSettings(0.02, 0.2, 0.5, 1.0),
}
CALIBRATED_DTS_ESN = {
    "temp": EsnSettings(0.01, 0.05, 0.1, 1.0),
    "pres": EsnSettings(0.02, 0.05, 0.3, 1.0),
    "synthetic": EsnSettings(0.01, 0.05, 0.1, 1.0),
}


@dataclass(frozen=True)
class ExperimentConfig:
    variable: str = "temp"
    target_lat: float = 35.0
    target_lon: float = 139.0
    sweep_axis: str = "latitude"
    sweep_extent: float = 25.0
    sweep_step: float = 1.0
    offsets: Optional[tuple[float, ...]] = None
    years: tuple[int, ...] = (2017, 2018, 2019, 2020, 2021)
    methods: tuple[str, ...] = ("esn", "var", "historical_average")
    esn: Optional[EsnSettings] = None
    li_leak_rate: float = 0.1
    dts_esn: Optional[EsnSettings] = None
    dts_log10_range: tuple[float, float] = (-3.0, 0.0)
    n_reservoir: int = 400
    t_trans: int = T_TRANS
    seed: int = 0
    data_root: str = "data"
    output_dir: str = "out"
    metric: str = "nrmse_target"
    margin: float = 0.05
    regression_max_offset: float = 10.0
    regression_per_year: bool = False
    workers: int = 1
    tune: dict = field(default_factory=dict)
    synthetic: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.variable not in CALIBRATED_ESN:
            raise ConfigError(f"unknown variable {self.variable!r}")
        if self.sweep_axis not in AXES:
            raise ConfigError(f"sweep_axis must be one of {AXES}")
        if not self.sweep_extent > 0 or not self.sweep_step > 0:
            raise ConfigError("sweep_extent and sweep_step must be positive")
        if not self.years:
            raise ConfigError("years must not be empty")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ConfigError(f"unknown method(s) {bad}")
        if self.metric not in ("nrmse", "nrmse_target"):
            raise ConfigError("metric must be 'nrmse' or 'nrmse_target'")
        if not -90 <= self.target_lat <= 90:
            raise ConfigError("target_lat out of range")
        if self.workers < 1:
            raise ConfigError("workers must be positive")
        try:
            for m in self.esn_family():
                self.reservoir_params(m)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"invalid reservoir settings: {exc}") from None

    @property
    def target_location(self) -> tuple[float, float]:
        return (float(self.target_lat), wrap_lon(self.target_lon))

    @property
    def esn_settings(self) -> EsnSettings:
        return self.esn or CALIBRATED_ESN[self.variable]

    @property
    def dts_settings(self) -> EsnSettings:
        return self.dts_esn or CALIBRATED_DTS_ESN[self.variable]

    def esn_family(self) -> list[str]:
        return [m for m in self.methods if m in ("esn", "li_esn", "dts_esn")]

    def settings_for(self, method: str) -> EsnSettings:
        return self.dts_settings if method == "dts_esn" else self.esn_settings

    def reservoir_params(self, method: str) -> ReservoirParams:
        s = self.settings_for(method)
        if method == "esn":
            leak = UniformLeak(1.0)
        elif method == "li_esn":
            leak = UniformLeak(self.li_leak_rate)
        else:
            leak = DistributedLeak(*self.dts_log10_range)
        return ReservoirParams(
            n_reservoir=self.n_reservoir,
            density=s.density,
            input_scaling=s.input_scaling,
            spectral_radius=s.spectral_radius,
            leak=leak,
            seed=self.seed,
        )

    def sweep_offsets(self) -> list[float]:
        if self.offsets is not None:
            offs = sorted({float(o) for o in self.offsets} | {0.0})
        else:
            k = int(math.floor(self.sweep_extent / self.sweep_step + 1e-9))
            offs = [round(i * self.sweep_step, 6) for i in range(-k, k + 1)]
        if self.sweep_axis == "latitude":
            lat0 = self.target_lat
            kept = [o for o in offs if -90.0 <= lat0 + o <= 90.0]
            if len(kept) < len(offs):
                log.warning("dropping %d offsets beyond the poles", len(offs) - len(kept))
            offs = kept
        return [o + 0.0 for o in offs]

    def obs_location(self, offset: float) -> tuple[float, float]:
        lat0, lon0 = self.target_location
        if self.sweep_axis == "latitude":
            return (round(lat0 + offset, 6) + 0.0, lon0)
        return (lat0, wrap_lon(lon0 + offset))

    # -- (de)serialization -------------------------------------------------

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        for k in ("offsets", "years", "methods", "dts_log10_range"):
            if d[k] is not None:
                d[k] = list(d[k])
        return d

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")
        d = dict(doc)
        try:
            for k in ("esn", "dts_esn"):
                if d.get(k) is not None:
                    d[k] = EsnSettings(**{n: float(v) for n, v in d[k].items()})
            if d.get("offsets") is not None:
                d["offsets"] = tuple(float(o) for o in d["offsets"])
            if "years" in d:
                d["years"] = tuple(int(y) for y in d["years"])
            if "methods" in d:
                d["methods"] = tuple(d["methods"])
            if "dts_log10_range" in d:
                d["dts_log10_range"] = tuple(float(v) for v in d["dts_log10_range"])
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def with_overrides(self, **kw) -> "ExperimentConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw) if kw else self


class SeriesStore(Protocol):
    def get(self, variable: str, lat: float, lon: float) -> TimeSeries: ...


class DirectoryStore:
    """Series files laid out as ``<root>/<variable>/<lat>_<lon>.csv``."""

    def __init__(self, root):
        self.root = Path(root)
        self._cache: dict[Path, TimeSeries] = {}

    def get(self, variable: str, lat: float, lon: float) -> TimeSeries:
        path = series_path(self.root, variable, lat, lon)
        if path not in self._cache:
            if not path.exists():
                raise MissingSeries(f"no series file {path}")
            self._cache[path] = load_series(path)
        return self._cache[path]

    def __getstate__(self):
        return {"root": self.root, "_cache": {}}


class MemoryStore:
    """In-memory field keyed by (lat, lon), e.g. straight from :func:`gen_synthetic`."""

    def __init__(self, field: dict[tuple[float, float], TimeSeries]):
        self._data = {(round(a, 6), round(b, 6)): s for (a, b), s in field.items()}

    def get(self, variable: str, lat: float, lon: float) -> TimeSeries:
        try:
            return self._data[(round(lat, 6), round(lon, 6))]
        except KeyError:
            raise MissingSeries(f"no series at ({lat}, {lon})") from None


class CellOutcome(NamedTuple):
    records: list[PredictionRecord]
    failures: list[FailedCell]


def build_models(config: ExperimentConfig) -> dict[str, Reservoir | RCSpatialError]:
    """One reservoir per ESN-family method, shared by every sweep cell."""
    models: dict[str, Reservoir | RCSpatialError] = {}
    for m in config.esn_family():
        try:
            models[m] = init_reservoir(config.reservoir_params(m))
        except RCSpatialError as exc:
            models[m] = exc
    return models


def _io_correlation(split: DatasetSplit) -> Optional[float]:
    try:
        return pearson_correlation(split.y_test[0], split.y_test[1])
    except ZeroVariance:
        return None


def evaluate_split(
    split: DatasetSplit,
    config: ExperimentConfig,
    models: dict[str, Reservoir | RCSpatialError],
    offset: float,
) -> CellOutcome:
    """Score every configured method on one dataset; failures stay per method."""
    records, failures = [], []
    corr = _io_correlation(split)
    (olat, olon), (tlat, tlon) = split.obs_location, split.target_location
    methods = sorted(set(config.methods) | {"historical_average"}, key=METHODS.index)

    def record(method, scores, diverged=False):
        joint, target = (None, None) if diverged else scores
        return PredictionRecord(
            method=method,
            axis=config.sweep_axis,
            offset=offset,
            obs_lat=olat,
            obs_lon=olon,
            target_lat=tlat,
            target_lon=tlon,
            year=split.year,
            nrmse=joint,
            nrmse_target=target,
            io_correlation=corr,
            diverged=diverged,
        )

    for method in methods:
        try:
            if method == "historical_average":
                records.append(record(method, score_historical_average(split)))
            elif method == "var":
                pred, diverged = predict_var(split)
                records.append(record(method, None if diverged else score_prediction(pred, split), diverged))
            else:
                res = models[method]
                if isinstance(res, Exception):
                    raise res
                pred = predict_esn(res, config.settings_for(method).ridge_beta, split)
                records.append(record(method, score_prediction(pred, split)))
        except RCSpatialError as exc:
            failures.append(FailedCell(method, offset, split.year, type(exc).__name__, str(exc)))
    return CellOutcome(records, failures)


def run_single(
    config: ExperimentConfig,
    offset: float,
    year: int,
    store: SeriesStore,
    models: Optional[dict] = None,
) -> CellOutcome:
    """All methods for the observation point at ``offset`` degrees and one year."""
    if models is None:
        models = build_models(config)
    lat, lon = config.obs_location(offset)
    tlat, tlon = config.target_location
    methods = sorted(set(config.methods) | {"historical_average"}, key=METHODS.index)
    try:
        target = store.get(config.variable, tlat, tlon)
        obs = store.get(config.variable, lat, lon)
        split = make_split(obs, target, year, t_trans=config.t_trans)
    except RCSpatialError as exc:
        return CellOutcome([], [FailedCell(m, offset, year, type(exc).__name__, str(exc)) for m in methods])
    return evaluate_split(split, config, models, offset)


_WORKER: dict[str, Any] = {}


def _init_worker(config, store, models):
    _WORKER.update(config=config, store=store, models=models)


def _cell_task(cell):
    offset, year = cell
    return run_single(_WORKER["config"], offset, year, _WORKER["store"], _WORKER["models"])


def run_sweep(config: ExperimentConfig, store: Optional[SeriesStore] = None) -> SweepReport:
    """Every (offset, year) cell of the configured sweep, merged deterministically."""
    if store is None:
        store = DirectoryStore(config.data_root)
    models = build_models(config)
    cells = [(o, y) for o in config.sweep_offsets() for y in config.years]

    if config.workers > 1:
        with ProcessPoolExecutor(
            max_workers=config.workers, initializer=_init_worker, initargs=(config, store, models)
        ) as pool:
            outcomes = list(pool.map(_cell_task, cells, chunksize=max(1, len(cells) // (4 * config.workers))))
    else:
        outcomes = [run_single(config, o, y, store, models) for o, y in cells]

    records = [r for oc in outcomes for r in oc.records]
    failures = [f for oc in outcomes for f in oc.failures]
    return build_report(
        records,
        failures,
        metric=config.metric,
        margin=config.margin,
        regression_max_offset=config.regression_max_offset,
        regression_per_year=config.regression_per_year,
    )
