"""Accuracy metrics and the distance/correlation analyses built on them."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import DegenerateRange, RankDeficient, ZeroVariance

METHODS = ("esn", "li_esn", "dts_esn", "var", "historical_average")


def _as_rows(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    return a[None, :] if a.ndim == 1 else a


def nrmse(pred, target) -> float:
    """Normalized RMSE with the squared 2-norm taken over all output components.

    Both arguments are ``(components, T)`` (or 1-D for a single component) on
    the original scale. The denominator is the RMS deviation of ``target``
    from its test-period mean.
    """
    p, y = _as_rows(pred), _as_rows(target)
    if p.shape != y.shape:
        raise ValueError(f"shape mismatch {p.shape} vs {y.shape}")
    if y.shape[1] < 2:
        raise ValueError("need at least two time steps")
    num = np.mean(np.sum((y - p) ** 2, axis=0))
    dev = y - y.mean(axis=1, keepdims=True)
    den = np.mean(np.sum(dev**2, axis=0))
    if den == 0.0:
        raise ZeroVariance("target is constant over the evaluation window")
    return float(np.sqrt(num) / np.sqrt(den))


def pearson_correlation(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1 or a.size < 2:
        raise ValueError("need two equal-length 1-D series of length >= 2")
    da = a - a.mean()
    db = b - b.mean()
    saa = float(da @ da)
    sbb = float(db @ db)
    if saa == 0.0 or sbb == 0.0:
        raise ZeroVariance("correlation undefined for a constant series")
    r = float(da @ db) / math.sqrt(saa * sbb)
    return min(1.0, max(-1.0, r))


def historical_average_prediction(split) -> np.ndarray:
    """Zero on the difference scale, i.e. the slot averages themselves."""
    return np.array(split.ave_test, dtype=float)


class PredictableRange(NamedTuple):
    lo: float
    hi: float
    empty: bool


def predictable_range(
    offsets: Sequence[float],
    mean_nrmse: Sequence[Optional[float]],
    baseline: float,
    margin: float = 0.05,
) -> PredictableRange:
    """Widest contiguous run of offsets around 0 with NRMSE below ``(1 - margin) * baseline``.

    Missing values (``None``/NaN, e.g. diverged VAR cells) end the run.
    """
    off = np.asarray(offsets, dtype=float)
    vals = np.array([np.nan if v is None else v for v in mean_nrmse], dtype=float)
    if off.shape != vals.shape:
        raise ValueError("offsets and mean_nrmse must align")
    order = np.argsort(off, kind="stable")
    off, vals = off[order], vals[order]
    zero = np.flatnonzero(off == 0.0)
    if zero.size == 0:
        raise ValueError("offsets must include 0")
    ok = vals < (1.0 - margin) * baseline
    i0 = int(zero[0])
    if not ok[i0]:
        return PredictableRange(0.0, 0.0, True)
    lo = hi = i0
    while lo - 1 >= 0 and ok[lo - 1]:
        lo -= 1
    while hi + 1 < off.size and ok[hi + 1]:
        hi += 1
    return PredictableRange(float(off[lo]), float(off[hi]), False)


@dataclass(frozen=True)
class SharedInterceptFit:
    slope_a: float
    slope_b: float
    intercept: float
    n_a: int
    n_b: int

    def to_dict(self) -> dict:
        return {
            "slope_a": self.slope_a,
            "slope_b": self.slope_b,
            "intercept": self.intercept,
            "n_a": self.n_a,
            "n_b": self.n_b,
        }


def shared_intercept_objective(points_a, points_b, slope_a, slope_b, intercept) -> float:
    xa, ya = np.asarray(points_a, dtype=float).T
    xb, yb = np.asarray(points_b, dtype=float).T
    return float(np.sum((ya - slope_a * xa - intercept) ** 2) + np.sum((yb - slope_b * xb - intercept) ** 2))


def fit_shared_intercept_lines(points_a, points_b) -> SharedInterceptFit:
    """Least-squares lines with separate slopes and one common intercept.

    Args:
        points_a, points_b: Sequences of ``(x, y)`` pairs, at least two each.

    Raises:
        RankDeficient: a group has fewer than two points or all-equal x.
    """
    pa = np.asarray(points_a, dtype=float).reshape(-1, 2)
    pb = np.asarray(points_b, dtype=float).reshape(-1, 2)
    for name, p in (("a", pa), ("b", pb)):
        if p.shape[0] < 2 or np.ptp(p[:, 0]) == 0.0:
            raise RankDeficient(f"group {name} carries no slope information")
    na, nb = pa.shape[0], pb.shape[0]
    design = np.zeros((na + nb, 3))
    design[:na, 0] = pa[:, 0]
    design[na:, 1] = pb[:, 0]
    design[:, 2] = 1.0
    y = np.concatenate([pa[:, 1], pb[:, 1]])
    coef, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < 3:
        raise RankDeficient("combined design matrix is rank deficient")
    return SharedInterceptFit(float(coef[0]), float(coef[1]), float(coef[2]), na, nb)


def scaled_correlation_curve(correlations, reference_nrmse) -> np.ndarray:
    """Map ``1 - correlation`` affinely onto the range of a reference NRMSE curve.

    The largest correlation lands on the reference minimum and the smallest on
    the maximum. Plot overlay data only.
    """
    c = np.asarray(correlations, dtype=float)
    ref = np.asarray(reference_nrmse, dtype=float)
    if c.shape != ref.shape:
        raise ValueError("correlations and reference must align")
    f = 1.0 - c
    span = np.nanmax(f) - np.nanmin(f)
    if not span > 0:
        raise DegenerateRange("correlations are constant")
    lo, hi = np.nanmin(ref), np.nanmax(ref)
    return lo + (f - np.nanmin(f)) / span * (hi - lo)
