"""CSV series files with JSON metadata sidecars.

A series ``<name>.csv`` has header ``time,value`` (difference-scale files add
an ``average`` column) and one row per step with ISO-8601 UTC timestamps.
Its sidecar ``<name>.meta.json`` carries ``lat``, ``lon``, ``variable``,
``step_hours`` and ``differenced``.
"""

from __future__ import annotations

import csv
import json
import math
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from ..errors import ParseError, SchemaError
from .series import TimeSeries

META_SUFFIX = ".meta.json"
REQUIRED_META = ("lat", "lon", "variable", "step_hours")


def meta_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + META_SUFFIX)


def format_coord(value: float) -> str:
    # +0.0 folds negative zero so file names stay stable.
    return f"{float(value) + 0.0:.2f}"


def series_path(root, variable: str, lat: float, lon: float) -> Path:
    """``<root>/<variable>/<lat>_<lon>.csv`` with signed decimal degrees."""
    return Path(root) / variable / f"{format_coord(lat)}_{format_coord(lon)}.csv"


def _parse_time(text: str) -> np.datetime64:
    text = text.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is not None:
        dt = dt.astimezone(timezone.utc).replace(tzinfo=None)
    return np.datetime64(dt, "s")


def _parse_float(text: str, what: str, row: int, path) -> float:
    try:
        v = float(text)
    except ValueError:
        raise ParseError(f"{path}: row {row}: cannot parse {what} {text!r}") from None
    if not math.isfinite(v):
        raise ParseError(f"{path}: row {row}: non-finite {what} {text!r}")
    return v


def load_meta(path) -> dict:
    mp = meta_path(path)
    try:
        with open(mp, encoding="utf-8") as fh:
            meta = json.load(fh)
    except FileNotFoundError:
        raise SchemaError(f"missing metadata sidecar {mp}") from None
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{mp}: invalid JSON ({exc})") from None
    missing = [k for k in REQUIRED_META if k not in meta]
    if missing:
        raise SchemaError(f"{mp}: missing field(s) {', '.join(missing)}")
    return meta


def load_series(path) -> TimeSeries:
    """Read a series file and its sidecar.

    Raises:
        ParseError: malformed row or non-finite value (message names the row).
        SchemaError: missing header column or metadata field.
    """
    path = Path(path)
    meta = load_meta(path)
    differenced = bool(meta.get("differenced", False))

    times, values, averages = [], [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:2]] != ["time", "value"]:
            raise SchemaError(f"{path}: header must start with 'time,value'")
        has_avg = len(header) > 2 and header[2].strip() == "average"
        if differenced and not has_avg:
            raise SchemaError(f"{path}: differenced series need an 'average' column")
        width = 3 if has_avg else 2
        for row_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != width:
                raise ParseError(f"{path}: row {row_no}: expected {width} fields, got {len(row)}")
            try:
                times.append(_parse_time(row[0]))
            except ValueError:
                raise ParseError(f"{path}: row {row_no}: bad timestamp {row[0]!r}") from None
            values.append(_parse_float(row[1], "value", row_no, path))
            if has_avg:
                averages.append(_parse_float(row[2], "average", row_no, path))
    if not values:
        raise ParseError(f"{path}: no data rows")

    try:
        return TimeSeries(
            values=np.array(values),
            times=np.array(times, dtype="datetime64[s]"),
            lat=float(meta["lat"]),
            lon=float(meta["lon"]),
            variable=str(meta["variable"]),
            step_hours=int(meta["step_hours"]),
            differenced=differenced,
            average=np.array(averages) if differenced else None,
        )
    except ValueError as exc:
        raise SchemaError(f"{path}: {exc}") from None


def write_series(path, series: TimeSeries) -> Path:
    """Write ``series`` and its sidecar; values round-trip bit for bit.

    Raises:
        ValueError: a difference-scale series without its average column,
            which could not be restored to the original scale when read back.
    """
    if series.differenced and series.average is None:
        raise ValueError("differenced series must carry its historical average")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        with_avg = series.average is not None
        w.writerow(["time", "value", "average"] if with_avg else ["time", "value"])
        stamps = np.datetime_as_string(series.times, unit="s")
        if with_avg:
            for t, v, a in zip(stamps, series.values.tolist(), series.average.tolist()):
                w.writerow([t, repr(v), repr(a)])
        else:
            for t, v in zip(stamps, series.values.tolist()):
                w.writerow([t, repr(v)])
    meta = {
        "lat": series.lat,
        "lon": series.lon,
        "variable": series.variable,
        "step_hours": series.step_hours,
        "differenced": series.differenced,
    }
    with open(meta_path(path), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")
    return path
