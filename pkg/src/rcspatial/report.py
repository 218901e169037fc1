"""Prediction records, per-offset aggregates and sweep report files."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .errors import DegenerateRange, RankDeficient
from .evaluation import (
    METHODS,
    PredictableRange,
    SharedInterceptFit,
    fit_shared_intercept_lines,
    predictable_range,
    scaled_correlation_curve,
)

METRICS = ("nrmse", "nrmse_target")


@dataclass(frozen=True)
class PredictionRecord:
    """Outcome of one (method, offset, year) cell.

    ``nrmse`` is the joint two-channel score, ``nrmse_target`` the score of
    the target channel alone. Both are ``None`` exactly when ``diverged``.
    ``io_correlation`` is measured on the true difference-scale test series.
    """

    method: str
    axis: str
    offset: float
    obs_lat: float
    obs_lon: float
    target_lat: float
    target_lon: float
    year: int
    nrmse: Optional[float]
    nrmse_target: Optional[float]
    io_correlation: Optional[float]
    diverged: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")
        if (self.nrmse is None) != self.diverged or (self.nrmse_target is None) != self.diverged:
            raise ValueError("nrmse must be absent exactly when the run diverged")

    @property
    def sort_key(self):
        return (self.offset, self.year, METHODS.index(self.method))


@dataclass(frozen=True)
class FailedCell:
    method: str
    offset: float
    year: int
    error: str
    message: str


@dataclass(frozen=True)
class OffsetAggregate:
    method: str
    offset: float
    n: int
    n_diverged: int
    mean: Optional[float]
    variance: Optional[float]
    mean_io_correlation: Optional[float]


@dataclass
class SweepReport:
    records: list[PredictionRecord]
    failures: list[FailedCell] = field(default_factory=list)
    metric: str = "nrmse_target"
    aggregates: list[OffsetAggregate] = field(default_factory=list)
    baseline_nrmse: Optional[float] = None
    baseline_by_year: dict[int, float] = field(default_factory=dict)
    predictable_ranges: dict[str, PredictableRange] = field(default_factory=dict)
    regression: Optional[SharedInterceptFit] = None
    regression_note: Optional[str] = None
    scaled_correlation: dict[float, float] = field(default_factory=dict)

    def curve(self, method: str) -> tuple[np.ndarray, np.ndarray]:
        """Offsets and mean metric for one method (NaN where every year diverged)."""
        aggs = sorted((a for a in self.aggregates if a.method == method), key=lambda a: a.offset)
        off = np.array([a.offset for a in aggs])
        val = np.array([np.nan if a.mean is None else a.mean for a in aggs])
        return off, val

    def method_records(self, method: str) -> list[PredictionRecord]:
        return [r for r in self.records if r.method == method]


def _mean_var(values: list[float]) -> tuple[Optional[float], Optional[float]]:
    if not values:
        return None, None
    a = np.asarray(values, dtype=float)
    return float(a.mean()), float(a.var())


def aggregate(records: Iterable[PredictionRecord], metric: str = "nrmse_target") -> list[OffsetAggregate]:
    """Per (method, offset) mean and population variance over years, skipping diverged runs."""
    if metric not in METRICS:
        raise ValueError(f"metric must be one of {METRICS}")
    groups: dict[tuple[str, float], list[PredictionRecord]] = {}
    for r in records:
        groups.setdefault((r.method, r.offset), []).append(r)
    out = []
    for (method, offset), rs in sorted(groups.items(), key=lambda kv: (METHODS.index(kv[0][0]), kv[0][1])):
        vals = [getattr(r, metric) for r in rs if not r.diverged]
        corr = [r.io_correlation for r in rs if r.io_correlation is not None]
        mean, var = _mean_var(vals)
        out.append(
            OffsetAggregate(
                method=method,
                offset=offset,
                n=len(rs),
                n_diverged=sum(r.diverged for r in rs),
                mean=mean,
                variance=var,
                mean_io_correlation=float(np.mean(corr)) if corr else None,
            )
        )
    return out


def regression_points(
    records: Iterable[PredictionRecord],
    method: str,
    metric: str = "nrmse_target",
    max_offset: float = 10.0,
    per_year: bool = False,
) -> list[tuple[float, float]]:
    """(io_correlation, metric) pairs for cells within ``max_offset`` degrees."""
    rs = [
        r
        for r in records
        if r.method == method and abs(r.offset) <= max_offset and not r.diverged and r.io_correlation is not None
    ]
    if per_year:
        return [(r.io_correlation, getattr(r, metric)) for r in sorted(rs, key=lambda r: r.sort_key)]
    by_off: dict[float, list[PredictionRecord]] = {}
    for r in rs:
        by_off.setdefault(r.offset, []).append(r)
    return [
        (float(np.mean([r.io_correlation for r in g])), float(np.mean([getattr(r, metric) for r in g])))
        for _, g in sorted(by_off.items())
    ]


def build_report(
    records: Iterable[PredictionRecord],
    failures: Iterable[FailedCell] = (),
    metric: str = "nrmse_target",
    margin: float = 0.05,
    regression_max_offset: float = 10.0,
    regression_per_year: bool = False,
    regression_methods: tuple[str, str] = ("esn", "var"),
) -> SweepReport:
    """Assemble aggregates, baseline, predictable ranges and the shared-intercept fit.

    Everything is recomputed from ``records``; the baseline is the mean over
    years of the historical-average target-channel score.
    """
    records = sorted(records, key=lambda r: r.sort_key)
    failures = sorted(failures, key=lambda f: (f.offset, f.year, METHODS.index(f.method)))
    report = SweepReport(records=records, failures=failures, metric=metric)
    report.aggregates = aggregate(records, metric)

    by_year: dict[int, list[float]] = {}
    for r in records:
        if r.method == "historical_average" and not r.diverged:
            by_year.setdefault(r.year, []).append(r.nrmse_target)
    report.baseline_by_year = {y: float(np.mean(v)) for y, v in sorted(by_year.items())}
    if report.baseline_by_year:
        report.baseline_nrmse = float(np.mean(list(report.baseline_by_year.values())))

    methods = sorted({r.method for r in records} - {"historical_average"}, key=METHODS.index)
    if report.baseline_nrmse is not None:
        for m in methods:
            off, val = report.curve(m)
            if 0.0 in off:
                report.predictable_ranges[m] = predictable_range(off, val, report.baseline_nrmse, margin)

    ma, mb = regression_methods
    pa = regression_points(records, ma, metric, regression_max_offset, regression_per_year)
    pb = regression_points(records, mb, metric, regression_max_offset, regression_per_year)
    try:
        report.regression = fit_shared_intercept_lines(pa, pb)
    except RankDeficient as exc:
        report.regression_note = str(exc)

    ref = next((m for m in ("esn", "li_esn", "dts_esn", "var") if m in methods), None)
    if ref is not None:
        aggs = [a for a in report.aggregates if a.method == ref and a.mean is not None and a.mean_io_correlation is not None]
        try:
            curve = scaled_correlation_curve(
                [a.mean_io_correlation for a in aggs], [a.mean for a in aggs]
            )
            report.scaled_correlation = {a.offset: float(v) for a, v in zip(aggs, curve)}
        except (DegenerateRange, ValueError):
            pass
    return report


# -- files -----------------------------------------------------------------

RECORD_FIELDS = [f.name for f in fields(PredictionRecord)]


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_records_csv(path, records: Iterable[PredictionRecord]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RECORD_FIELDS)
        for r in sorted(records, key=lambda r: r.sort_key):
            w.writerow([_fmt(getattr(r, k)) for k in RECORD_FIELDS])
    return path


def read_records_csv(path) -> list[PredictionRecord]:
    def opt(s):
        return None if s == "" else float(s)

    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out.append(
                PredictionRecord(
                    method=row["method"],
                    axis=row["axis"],
                    offset=float(row["offset"]),
                    obs_lat=float(row["obs_lat"]),
                    obs_lon=float(row["obs_lon"]),
                    target_lat=float(row["target_lat"]),
                    target_lon=float(row["target_lon"]),
                    year=int(row["year"]),
                    nrmse=opt(row["nrmse"]),
                    nrmse_target=opt(row["nrmse_target"]),
                    io_correlation=opt(row["io_correlation"]),
                    diverged=row["diverged"] == "true",
                )
            )
    return out


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def summary_dict(report: SweepReport, extra: Optional[dict] = None) -> dict:
    doc = {
        "metric": report.metric,
        "baseline_nrmse": report.baseline_nrmse,
        "baseline_by_year": {str(y): v for y, v in report.baseline_by_year.items()},
        "aggregates": [{k: _jsonable(v) for k, v in asdict(a).items()} for a in report.aggregates],
        "predictable_range": {
            m: {"lo": pr.lo, "hi": pr.hi, "empty": pr.empty} for m, pr in report.predictable_ranges.items()
        },
        "scaled_correlation": [{"offset": o, "value": v} for o, v in sorted(report.scaled_correlation.items())],
        "regression": regression_dict(report),
        "n_records": len(report.records),
        "failures": [asdict(f) for f in report.failures],
    }
    if extra:
        doc.update(extra)
    return doc


def regression_dict(report: SweepReport) -> dict:
    if report.regression is None:
        return {"fit": None, "note": report.regression_note}
    return {"fit": report.regression.to_dict(), "note": report.regression_note}


def write_json(path, doc: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, allow_nan=False)
        fh.write("\n")
    return path


def write_report(output_dir, report: SweepReport, extra: Optional[dict] = None) -> dict[str, Path]:
    """Write ``records.csv``, ``summary.json`` and ``regression.json``."""
    out = Path(output_dir)
    return {
        "records": write_records_csv(out / "records.csv", report.records),
        "summary": write_json(out / "summary.json", summary_dict(report, extra)),
        "regression": write_json(out / "regression.json", regression_dict(report)),
    }
