"""Ridge-regression training of the linear readout."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np
import scipy.linalg as sla

from .errors import DimensionMismatch, NonFinite, SingularSystem


@dataclass(frozen=True, eq=False)
class ReadoutWeights:
    w_out: np.ndarray
    ridge_beta: float
    train_len: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "w_out": self.w_out.tolist(),
            "ridge_beta": self.ridge_beta,
            "train_len": self.train_len,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ReadoutWeights":
        return cls(np.asarray(d["w_out"], dtype=float), float(d["ridge_beta"]), int(d["train_len"]))


def ridge_objective(w_out: np.ndarray, states: np.ndarray, targets: np.ndarray, ridge_beta: float) -> float:
    """Time-averaged squared error plus ``ridge_beta * ||w_out||_F^2``."""
    resid = w_out @ states - targets
    return float(np.sum(resid**2) / states.shape[1] + ridge_beta * np.sum(w_out**2))


def fit_readout(states: np.ndarray, targets: np.ndarray, ridge_beta: float) -> ReadoutWeights:
    """Minimize :func:`ridge_objective` over the readout matrix.

    The error term is averaged over the ``T`` training columns while the
    penalty is not, so the closed form is
    ``W = Y X^T (X X^T + beta T I)^-1``.

    With ``ridge_beta == 0`` the minimum-norm least-squares solution is
    returned. It is unique when ``X`` has full rank in either direction
    (covering exact interpolation for ``T <= N_x``); otherwise
    :class:`SingularSystem` is raised.

    Args:
        states: Post-transient reservoir states, shape ``(N_x, T)``.
        targets: Teacher outputs aligned column for column, shape ``(N_y, T)``.
        ridge_beta: Nonnegative regularization strength.
    """
    x = np.asarray(states, dtype=float)
    y = np.asarray(targets, dtype=float)
    if y.ndim == 1:
        y = y[None, :]
    if x.ndim != 2 or x.shape[1] != y.shape[1]:
        raise DimensionMismatch(f"states {x.shape} and targets {y.shape} are not column-aligned")
    if x.shape[1] < 1:
        raise ValueError("need at least one training column")
    if ridge_beta < 0:
        raise ValueError("ridge_beta must be nonnegative")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise NonFinite("states or targets contain non-finite values")

    n_x, t = x.shape
    if ridge_beta > 0:
        gram = x @ x.T
        gram[np.diag_indices(n_x)] += ridge_beta * t
        try:
            factor = sla.cho_factor(gram, lower=False, check_finite=False)
        except np.linalg.LinAlgError as exc:
            raise SingularSystem(str(exc)) from exc
        w_out = sla.cho_solve(factor, x @ y.T, check_finite=False).T
    else:
        sol, _, rank, _ = np.linalg.lstsq(x.T, y.T, rcond=None)
        if rank < min(n_x, t):
            raise SingularSystem(f"state matrix has rank {rank} < {min(n_x, t)} with beta=0")
        w_out = sol.T

    if not np.all(np.isfinite(w_out)):
        raise NonFinite("readout solve produced non-finite weights")
    return ReadoutWeights(np.ascontiguousarray(w_out), float(ridge_beta), t)
