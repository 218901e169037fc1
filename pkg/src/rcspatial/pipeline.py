"""Per-dataset prediction for each method, shared by sweeps and tuning."""

from __future__ import annotations

import numpy as np

from .data.split import DatasetSplit
from .evaluation import historical_average_prediction, nrmse
from .readout import fit_readout
from .reservoir import Reservoir, run
from .var import fit_var1, predict_var_test


def drive(reservoir: Reservoir, split: DatasetSplit) -> tuple[np.ndarray, np.ndarray]:
    """Run transient, training and test inputs as one continuous drive.

    Returns the training-period and test-period state matrices; transient
    states are discarded.
    """
    t_trans, t_train, _ = split.lengths
    states = run(reservoir, split.inputs)
    return states[:, t_trans:t_trans + t_train], states[:, t_trans + t_train:]


def esn_from_states(train_states: np.ndarray, test_states: np.ndarray, split: DatasetSplit, ridge_beta: float) -> np.ndarray:
    weights = fit_readout(train_states, split.y_train, ridge_beta)
    return weights.w_out @ test_states


def predict_esn(reservoir: Reservoir, ridge_beta: float, split: DatasetSplit) -> np.ndarray:
    """Difference-scale ``(2, T_test)`` prediction from the observation channel alone."""
    train_states, test_states = drive(reservoir, split)
    return esn_from_states(train_states, test_states, split, ridge_beta)


def predict_var(split: DatasetSplit) -> tuple[np.ndarray, bool]:
    """VAR(1) fit on the training pair, closed-loop on the test observations."""
    model = fit_var1(split.y_train)
    return predict_var_test(
        model,
        split.y_test[0],
        y1_init=float(split.y_train[0, -1]),
        y2_init=float(split.y_train[1, -1]),
    )


def predict_historical_average(split: DatasetSplit) -> np.ndarray:
    return np.zeros_like(split.y_test)


def score_prediction(pred_diff: np.ndarray, split: DatasetSplit) -> tuple[float, float]:
    """Joint and target-channel NRMSE on the original scale."""
    pred = pred_diff + split.ave_test
    truth = split.y_test_original
    return nrmse(pred, truth), nrmse(pred[1], truth[1])


def score_historical_average(split: DatasetSplit) -> tuple[float, float]:
    pred = historical_average_prediction(split)
    truth = split.y_test_original
    return nrmse(pred, truth), nrmse(pred[1], truth[1])
