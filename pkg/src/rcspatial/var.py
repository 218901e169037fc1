"""Order-1 bivariate vector autoregression.

Fitting is plain OLS of ``y(n)`` on ``[y(n-1); 1]``. Prediction follows the
asymmetric test protocol: the observed channel ``y1`` is known throughout the
test period while the target channel ``y2`` is fed back from the model's own
previous prediction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, NamedTuple

import numpy as np

from .errors import CollinearRegressors, DimensionMismatch, NonFinite

OVERFLOW_GUARD = 1e12


@dataclass(frozen=True, eq=False)
class VarModel:
    phi: np.ndarray
    intercept: np.ndarray
    train_sse: float
    train_len: int
    order: int = 1
    dims: int = 2

    @property
    def companion_spectral_radius(self) -> float:
        # For p = 1 the companion matrix is phi itself.
        return float(np.max(np.abs(np.linalg.eigvals(self.phi))))

    @property
    def noise(self) -> np.ndarray:
        return np.zeros(self.dims)

    def to_dict(self) -> dict[str, Any]:
        return {
            "order": self.order,
            "dims": self.dims,
            "phi": self.phi.tolist(),
            "intercept": self.intercept.tolist(),
            "companion_spectral_radius": self.companion_spectral_radius,
            "train_sse": self.train_sse,
            "train_len": self.train_len,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "VarModel":
        return cls(
            phi=np.asarray(d["phi"], dtype=float),
            intercept=np.asarray(d["intercept"], dtype=float),
            train_sse=float(d["train_sse"]),
            train_len=int(d["train_len"]),
        )


def lagged_design(train: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Regressor matrix ``[y(n-1)^T, 1]`` and response ``y(n)^T`` for n = 2..T."""
    y = np.asarray(train, dtype=float)
    z = np.column_stack([y[:, :-1].T, np.ones(y.shape[1] - 1)])
    return z, y[:, 1:].T


def fit_var1(train: np.ndarray) -> VarModel:
    """Fit a VAR(1) with intercept to a ``(2, T)`` training window.

    Raises:
        CollinearRegressors: the lagged design matrix is rank deficient.
    """
    y = np.asarray(train, dtype=float)
    if y.ndim != 2 or y.shape[0] != 2:
        raise DimensionMismatch(f"training window must have shape (2, T), got {y.shape}")
    if y.shape[1] < 3:
        raise ValueError("need at least 3 training steps")
    if not np.all(np.isfinite(y)):
        raise NonFinite("training window contains non-finite values")

    z, resp = lagged_design(y)
    sv = np.linalg.svd(z, compute_uv=False)
    tol = sv[0] * max(z.shape) * np.finfo(float).eps
    if sv[-1] <= tol:
        raise CollinearRegressors(
            f"lagged regressors are rank deficient (singular values {sv.tolist()})"
        )
    coef, _, _, _ = np.linalg.lstsq(z, resp, rcond=None)
    # coef rows: [y1(n-1), y2(n-1), 1]; columns: equations for y1, y2.
    phi = np.ascontiguousarray(coef[:2].T)
    intercept = np.ascontiguousarray(coef[2])
    sse = float(np.sum((resp - z @ coef) ** 2))
    return VarModel(phi=phi, intercept=intercept, train_sse=sse, train_len=y.shape[1])


class ClosedLoopPrediction(NamedTuple):
    y2_pred: np.ndarray
    diverged: bool


def predict_var_closed_loop(
    model: VarModel,
    y1_observed: np.ndarray,
    y2_init: float,
    y1_init: float = 0.0,
    guard: float = OVERFLOW_GUARD,
) -> ClosedLoopPrediction:
    """Predict the unobserved channel over a test window.

    ``y2(n) = phi21 * y1_obs(n-1) + phi22 * y2(n-1) + c2`` with the noise term
    set to zero. ``y1_init`` and ``y2_init`` stand for step ``-1`` (the last
    training-period values). Once ``|y2|`` exceeds ``guard`` the run is
    marked diverged and the remaining entries are NaN.
    """
    y1 = np.asarray(y1_observed, dtype=float)
    if not np.all(np.isfinite(y1)):
        raise NonFinite("observed channel contains non-finite values")
    p21, p22 = float(model.phi[1, 0]), float(model.phi[1, 1])
    c2 = float(model.intercept[1])

    out = np.full(y1.shape[0], np.nan)
    y1_prev, y2_prev = float(y1_init), float(y2_init)
    for n in range(y1.shape[0]):
        y2 = p21 * y1_prev + p22 * y2_prev + c2
        if not abs(y2) <= guard:
            return ClosedLoopPrediction(out, True)
        out[n] = y2
        y1_prev, y2_prev = y1[n], y2
    return ClosedLoopPrediction(out, False)


def predict_var_observed_channel(
    model: VarModel,
    y1_observed: np.ndarray,
    y2_pred: np.ndarray,
    y1_init: float,
    y2_init: float,
) -> np.ndarray:
    """One-step predictions of the observed channel given the fed-back ``y2``."""
    y1 = np.asarray(y1_observed, dtype=float)
    y2 = np.asarray(y2_pred, dtype=float)
    y1_prev = np.concatenate([[y1_init], y1[:-1]])
    y2_prev = np.concatenate([[y2_init], y2[:-1]])
    return model.phi[0, 0] * y1_prev + model.phi[0, 1] * y2_prev + model.intercept[0]


def predict_var_test(
    model: VarModel,
    y1_observed: np.ndarray,
    y1_init: float,
    y2_init: float,
) -> tuple[np.ndarray, bool]:
    """Both output channels over the test window as a ``(2, T)`` array."""
    y2, diverged = predict_var_closed_loop(model, y1_observed, y2_init, y1_init)
    if diverged:
        return np.vstack([np.full_like(y2, np.nan), y2]), True
    y1 = predict_var_observed_channel(model, y1_observed, y2, y1_init, y2_init)
    return np.vstack([y1, y2]), False
