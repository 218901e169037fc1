"""Exhaustive grid search over (density, input scaling, spectral radius, ridge beta)."""

from __future__ import annotations

import csv
import itertools
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .data.split import DatasetSplit
from .errors import RCSpatialError
from .pipeline import drive, esn_from_states, score_prediction
from .reservoir import LeakMode, ReservoirParams, UniformLeak, init_reservoir

log = logging.getLogger(__name__)

# Bracket every published optimum; override in config.
DEFAULT_DENSITY = tuple(round(0.01 * k, 2) for k in range(1, 11))
DEFAULT_INPUT_SCALING = tuple(round(0.05 * k, 2) for k in range(1, 21))
DEFAULT_SPECTRAL_RADIUS = tuple(round(0.1 * k, 1) for k in range(1, 13))
DEFAULT_RIDGE_BETA = tuple(round(0.05 * k, 2) for k in range(1, 21))


@dataclass(frozen=True)
class GridSpec:
    density_values: Sequence[float] = DEFAULT_DENSITY
    input_scaling_values: Sequence[float] = DEFAULT_INPUT_SCALING
    spectral_radius_values: Sequence[float] = DEFAULT_SPECTRAL_RADIUS
    ridge_beta_values: Sequence[float] = DEFAULT_RIDGE_BETA
    calibration_sets: Sequence[DatasetSplit] = field(default_factory=tuple)
    seed: int = 0
    n_seeds: int = 1
    n_reservoir: int = 400
    leak: LeakMode = field(default_factory=UniformLeak)
    metric: str = "nrmse_target"

    def __post_init__(self):
        for name in ("density_values", "input_scaling_values", "spectral_radius_values", "ridge_beta_values"):
            vals = tuple(sorted(float(v) for v in getattr(self, name)))
            if not vals:
                raise ValueError(f"{name} must not be empty")
            object.__setattr__(self, name, vals)
        object.__setattr__(self, "calibration_sets", tuple(self.calibration_sets))
        if not self.calibration_sets:
            raise ValueError("at least one calibration dataset is required")
        if self.n_seeds < 1:
            raise ValueError("n_seeds must be positive")
        if self.metric not in ("nrmse", "nrmse_target"):
            raise ValueError(f"unknown metric {self.metric!r}")

    @property
    def n_combinations(self) -> int:
        return (
            len(self.density_values)
            * len(self.input_scaling_values)
            * len(self.spectral_radius_values)
            * len(self.ridge_beta_values)
        )


@dataclass(frozen=True)
class ComboScore:
    density: float
    input_scaling: float
    spectral_radius: float
    ridge_beta: float
    mean: Optional[float]
    variance: Optional[float]
    n_failed: int = 0

    @property
    def key(self) -> tuple[float, float, float, float]:
        return (self.density, self.input_scaling, self.spectral_radius, self.ridge_beta)

    def params(self) -> dict[str, float]:
        return dict(zip(("density", "input_scaling", "spectral_radius", "ridge_beta"), self.key))


@dataclass
class TuningResult:
    best: Optional[ComboScore]
    table: list[ComboScore]

    @property
    def all_diverged(self) -> bool:
        return self.best is None


def _reservoir_scores(spec: GridSpec, d: float, g: float, r: float) -> np.ndarray:
    """Score array of shape (n_beta, n_datasets, n_seeds); NaN marks a failure."""
    betas = spec.ridge_beta_values
    out = np.full((len(betas), len(spec.calibration_sets), spec.n_seeds), np.nan)
    pick = 1 if spec.metric == "nrmse_target" else 0
    for s in range(spec.n_seeds):
        try:
            res = init_reservoir(
                ReservoirParams(
                    n_reservoir=spec.n_reservoir,
                    density=d,
                    input_scaling=g,
                    spectral_radius=r,
                    leak=spec.leak,
                    seed=spec.seed + s,
                )
            )
        except RCSpatialError as exc:
            log.warning("reservoir (d=%g, gamma=%g, rho=%g, seed=%d) failed: %s", d, g, r, spec.seed + s, exc)
            continue
        for j, split in enumerate(spec.calibration_sets):
            train_states, test_states = drive(res, split)
            for i, beta in enumerate(betas):
                try:
                    pred = esn_from_states(train_states, test_states, split, beta)
                    out[i, j, s] = score_prediction(pred, split)[pick]
                except RCSpatialError as exc:
                    log.debug("combo failed: %s", exc)
    return out


def grid_search(spec: GridSpec) -> TuningResult:
    """Score every combination by its mean NRMSE over the calibration sets.

    Reservoirs depend only on (density, input scaling, spectral radius) and
    the seed, so states are computed once per reservoir and reused across the
    ridge values. Every combination uses the same reservoir seed(s). Ties go
    to the lexicographically smallest (d, gamma, rho, beta).
    """
    table: list[ComboScore] = []
    for d, g, r in itertools.product(spec.density_values, spec.input_scaling_values, spec.spectral_radius_values):
        scores = _reservoir_scores(spec, d, g, r)
        for i, beta in enumerate(spec.ridge_beta_values):
            per_set = scores[i]
            # Seed-average per dataset, over seeds that succeeded.
            ok = ~np.isnan(per_set)
            counts = ok.sum(axis=1)
            failed = int(np.sum(counts == 0))
            means = np.array([per_set[j][ok[j]].mean() for j in range(per_set.shape[0]) if counts[j]])
            if means.size:
                table.append(ComboScore(d, g, r, beta, float(means.mean()), float(means.var()), failed))
            else:
                table.append(ComboScore(d, g, r, beta, None, None, failed))

    table.sort(key=lambda c: c.key)
    best = None
    for row in table:
        if row.mean is not None and (best is None or row.mean < best.mean):
            best = row
    return TuningResult(best, table)


def write_score_table(path, result: TuningResult) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    cols = ["density", "input_scaling", "spectral_radius", "ridge_beta", "mean", "variance", "n_failed"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in result.table:
            d = asdict(row)
            w.writerow(["" if d[c] is None else repr(d[c]) if isinstance(d[c], float) else d[c] for c in cols])
    return path
