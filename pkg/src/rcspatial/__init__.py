"""Predict climate series at unobserved locations from a remote observation point.

An echo state network with a ridge-trained readout, a VAR(1) baseline and the
historical-average predictor are compared across sweeps of the observation
point away from a fixed target.
"""

from .evaluation import nrmse, pearson_correlation
from .readout import ReadoutWeights, fit_readout
from .reservoir import (
    DistributedLeak,
    Reservoir,
    ReservoirParams,
    ReservoirState,
    UniformLeak,
    init_reservoir,
    readout,
    run,
    step,
)
from .var import VarModel, fit_var1, predict_var_closed_loop

__version__ = "0.1.0"

__all__ = [
    "DistributedLeak",
    "ReadoutWeights",
    "Reservoir",
    "ReservoirParams",
    "ReservoirState",
    "UniformLeak",
    "VarModel",
    "fit_readout",
    "fit_var1",
    "init_reservoir",
    "nrmse",
    "pearson_correlation",
    "predict_var_closed_loop",
    "readout",
    "run",
    "step",
]
