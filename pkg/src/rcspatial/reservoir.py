"""Fixed random reservoirs and their state dynamics.

A single update rule covers the three reservoir flavours used here::

    x(n) = (1 - a) * x(n-1) + a * tanh(W_in u(n) + W x(n-1))

with ``a`` a per-node leak-rate vector. All rates equal to one gives the
standard ESN, a common rate below one the leaky-integrator ESN, and
log-uniformly spread rates the distributed-time-scale ESN.
"""

from __future__ import annotations

import functools
import json
from dataclasses import asdict, dataclass, field
from typing import Any, Sequence, Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DegenerateReservoir, DimensionMismatch

MODEL_FORMAT = "rcspatial.model"
MODEL_VERSION = 1

# Dense eigensolvers are exact and fast enough up to this size.
_DENSE_EIG_LIMIT = 2000


@dataclass(frozen=True)
class UniformLeak:
    """Every node shares one leak rate ``alpha`` in (0, 1]."""

    alpha: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"leak rate must lie in (0, 1], got {self.alpha}")


@dataclass(frozen=True)
class DistributedLeak:
    """Per-node leak rates with log10(alpha_i) uniform on [log10_min, log10_max]."""

    log10_min: float = -3.0
    log10_max: float = 0.0

    def __post_init__(self):
        if not self.log10_min <= self.log10_max <= 0.0:
            raise ValueError(
                "distributed leak requires log10_min <= log10_max <= 0, "
                f"got [{self.log10_min}, {self.log10_max}]"
            )


LeakMode = Union[UniformLeak, DistributedLeak]


@dataclass(frozen=True)
class ReservoirParams:
    """Hyperparameters that fully determine a reservoir realization.

    Attributes:
        n_input: Input dimension (1 for scalar series).
        n_reservoir: Number of reservoir nodes.
        n_output: Output dimension (2: observed and target channel).
        density: Fraction of structurally nonzero recurrent weights.
        input_scaling: Half-width of the uniform input-weight distribution.
        spectral_radius: Target spectral radius of the recurrent matrix.
        leak: Leak-rate mode.
        seed: Master seed; split into independent streams per component.
    """

    n_input: int = 1
    n_reservoir: int = 400
    n_output: int = 2
    density: float = 0.02
    input_scaling: float = 0.2
    spectral_radius: float = 0.5
    leak: LeakMode = field(default_factory=UniformLeak)
    seed: int = 0

    def __post_init__(self):
        if self.n_input < 1 or self.n_output < 1:
            raise ValueError("n_input and n_output must be positive")
        if self.n_reservoir < self.n_input:
            raise ValueError("n_reservoir must be at least n_input")
        if not 0.0 < self.density <= 1.0:
            raise ValueError(f"density must lie in (0, 1], got {self.density}")
        if self.input_scaling < 0.0:
            raise ValueError("input_scaling must be nonnegative")
        if self.spectral_radius < 0.0:
            raise ValueError("spectral_radius must be nonnegative")
        if not isinstance(self.leak, (UniformLeak, DistributedLeak)):
            raise TypeError(f"unsupported leak mode {self.leak!r}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["leak"] = _leak_to_dict(self.leak)
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ReservoirParams":
        d = dict(d)
        if "leak" in d:
            d["leak"] = _leak_from_dict(d["leak"])
        return cls(**d)


def _leak_to_dict(leak: LeakMode) -> dict[str, Any]:
    if isinstance(leak, UniformLeak):
        return {"mode": "uniform", "alpha": leak.alpha}
    return {"mode": "distributed", "log10_min": leak.log10_min, "log10_max": leak.log10_max}


def _leak_from_dict(d: dict[str, Any]) -> LeakMode:
    mode = d.get("mode", "uniform")
    if mode == "uniform":
        return UniformLeak(float(d.get("alpha", 1.0)))
    if mode == "distributed":
        return DistributedLeak(float(d["log10_min"]), float(d["log10_max"]))
    raise ValueError(f"unknown leak mode {mode!r}")


def _readonly(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Reservoir:
    """Immutable reservoir weights.

    Build with :func:`init_reservoir`; construct directly only when restoring a
    stored model.
    """

    w_in: np.ndarray
    w: sp.csr_matrix
    leak_rates: np.ndarray
    measured_spectral_radius: float
    params: ReservoirParams

    @property
    def n_reservoir(self) -> int:
        return self.w.shape[0]

    @property
    def n_input(self) -> int:
        return self.w_in.shape[1]


@dataclass(frozen=True, eq=False)
class ReservoirState:
    x: np.ndarray
    step_index: int = 0

    @classmethod
    def zeros(cls, n_reservoir: int) -> "ReservoirState":
        return cls(_readonly(np.zeros(n_reservoir)), 0)


def _sub_seeds(seed: int) -> list[np.random.SeedSequence]:
    # Fixed order: recurrent weights, input weights, leak rates, eigensolver start.
    return np.random.SeedSequence(seed).spawn(4)


def _is_acyclic(w: sp.csr_matrix) -> bool:
    """True when the sparsity graph of ``w`` has no directed cycle (w nilpotent)."""
    n = w.shape[0]
    indptr, indices = w.indptr, w.indices
    indegree = np.bincount(indices, minlength=n)
    stack = list(np.flatnonzero(indegree == 0))
    seen = 0
    while stack:
        i = stack.pop()
        seen += 1
        for j in indices[indptr[i]:indptr[i + 1]]:
            indegree[j] -= 1
            if indegree[j] == 0:
                stack.append(j)
    return seen == n


def spectral_radius(w: sp.spmatrix, start: np.random.SeedSequence | None = None) -> float:
    """Largest eigenvalue modulus of a square matrix.

    Structurally nilpotent matrices return exactly 0. Small matrices go through
    a dense LAPACK eigensolve; large ones through ARPACK with a seeded start
    vector so the result is reproducible.
    """
    w = sp.csr_matrix(w)
    n = w.shape[0]
    if n == 0 or w.nnz == 0 or not np.any(w.data) or _is_acyclic(w):
        return 0.0
    if n <= _DENSE_EIG_LIMIT:
        return float(np.max(np.abs(np.linalg.eigvals(w.toarray()))))
    v0 = np.random.default_rng(start).standard_normal(n)
    vals = spla.eigs(w, k=1, which="LM", v0=v0, tol=1e-10, return_eigenvectors=False)
    return float(np.abs(vals[0]))


@functools.lru_cache(maxsize=32)
def _unscaled_recurrent(n: int, density: float, seed: int) -> tuple[sp.csr_matrix, float]:
    w_seq, _, _, eig_seq = _sub_seeds(seed)
    rng = np.random.default_rng(w_seq)
    nnz = int(round(density * n * n))
    flat = np.sort(rng.choice(n * n, size=nnz, replace=False))
    values = rng.uniform(-1.0, 1.0, size=nnz)
    w = sp.csr_matrix((values, (flat // n, flat % n)), shape=(n, n))
    w.sum_duplicates()
    return w, spectral_radius(w, eig_seq)


def init_reservoir(params: ReservoirParams) -> Reservoir:
    """Draw a reservoir realization for ``params``.

    Recurrent weights: ``round(density * N^2)`` positions chosen without
    replacement, values uniform on [-1, 1], then rescaled to the target
    spectral radius. Input weights: uniform on ``[-input_scaling,
    input_scaling]``.

    Raises:
        DegenerateReservoir: the unscaled matrix is nilpotent but a positive
            spectral radius was requested.
    """
    n = params.n_reservoir
    raw, raw_radius = _unscaled_recurrent(n, params.density, params.seed)
    _, win_seq, leak_seq, eig_seq = _sub_seeds(params.seed)

    if params.spectral_radius > 0.0:
        if raw_radius == 0.0:
            raise DegenerateReservoir(
                f"unscaled recurrent matrix is nilpotent (density={params.density}, "
                f"seed={params.seed}); choose another seed"
            )
        scale = params.spectral_radius / raw_radius
    else:
        scale = 0.0
    w = raw.copy()
    w.data = w.data * scale
    measured = spectral_radius(w, eig_seq)
    w.data.flags.writeable = False

    gamma = params.input_scaling
    w_in = np.random.default_rng(win_seq).uniform(-gamma, gamma, size=(n, params.n_input))

    leak = params.leak
    if isinstance(leak, UniformLeak):
        rates = np.full(n, leak.alpha)
    elif leak.log10_min == leak.log10_max:
        rates = np.full(n, 10.0 ** leak.log10_min)
    else:
        exps = np.random.default_rng(leak_seq).uniform(leak.log10_min, leak.log10_max, size=n)
        rates = np.power(10.0, exps)

    return Reservoir(
        w_in=_readonly(w_in),
        w=w,
        leak_rates=_readonly(rates),
        measured_spectral_radius=measured,
        params=params,
    )


def _advance(res: Reservoir, x: np.ndarray, u: np.ndarray) -> np.ndarray:
    a = res.leak_rates
    return (1.0 - a) * x + a * np.tanh(res.w_in @ u + res.w @ x)


def _as_input(res: Reservoir, u) -> np.ndarray:
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if u.shape != (res.n_input,):
        raise DimensionMismatch(f"input has shape {u.shape}, reservoir expects ({res.n_input},)")
    return u


def step(reservoir: Reservoir, state: ReservoirState, u) -> ReservoirState:
    """Advance the reservoir by one input sample."""
    x = np.asarray(state.x, dtype=float)
    if x.shape != (reservoir.n_reservoir,):
        raise DimensionMismatch(f"state has shape {x.shape}, expected ({reservoir.n_reservoir},)")
    new = _advance(reservoir, x, _as_input(reservoir, u))
    return ReservoirState(_readonly(new), state.step_index + 1)


def run(
    reservoir: Reservoir,
    inputs: Sequence | np.ndarray,
    initial: ReservoirState | None = None,
) -> np.ndarray:
    """Drive the reservoir with ``inputs`` and collect every state.

    Args:
        reservoir: The reservoir to drive.
        inputs: Array of shape ``(T,)`` for scalar input or ``(T, n_input)``.
        initial: Starting state; zero state when omitted.

    Returns:
        State matrix of shape ``(n_reservoir, T)``; column ``n`` is the state
        after consuming ``inputs[0..n]``.
    """
    n = reservoir.n_reservoir
    u = np.asarray(inputs, dtype=float)
    if u.ndim == 1 and reservoir.n_input == 1:
        u = u[:, None]
    if u.size == 0:
        return np.empty((n, 0))
    if u.ndim != 2 or u.shape[1] != reservoir.n_input:
        raise DimensionMismatch(f"inputs have shape {u.shape}, expected (T, {reservoir.n_input})")

    x = np.zeros(n) if initial is None else np.asarray(initial.x, dtype=float)
    if x.shape != (n,):
        raise DimensionMismatch(f"initial state has shape {x.shape}, expected ({n},)")
    states = np.empty((n, u.shape[0]))
    for t in range(u.shape[0]):
        x = _advance(reservoir, x, u[t])
        states[:, t] = x
    return states


def readout(weights, state: ReservoirState | np.ndarray) -> np.ndarray:
    """Linear readout ``W_out x`` (no bias)."""
    w_out = np.asarray(getattr(weights, "w_out", weights), dtype=float)
    x = np.asarray(getattr(state, "x", state), dtype=float)
    if w_out.ndim != 2 or x.shape[0] != w_out.shape[1]:
        raise DimensionMismatch(f"weights {w_out.shape} incompatible with state {x.shape}")
    return w_out @ x


def model_to_dict(reservoir: Reservoir, readout_weights=None) -> dict[str, Any]:
    """Versioned JSON-ready document holding a reservoir and optional readout."""
    w = reservoir.w.tocoo()
    doc: dict[str, Any] = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "params": reservoir.params.to_dict(),
        "shape": {"n_input": reservoir.n_input, "n_reservoir": reservoir.n_reservoir},
        "w_in": reservoir.w_in.tolist(),
        "w": {"row": w.row.tolist(), "col": w.col.tolist(), "data": w.data.tolist()},
        "leak_rates": reservoir.leak_rates.tolist(),
        "measured_spectral_radius": reservoir.measured_spectral_radius,
        "readout": None,
    }
    if readout_weights is not None:
        doc["readout"] = readout_weights.to_dict()
    return doc


def model_from_dict(doc: dict[str, Any]):
    """Inverse of :func:`model_to_dict`; returns ``(reservoir, readout_or_None)``."""
    from .readout import ReadoutWeights

    if doc.get("format") != MODEL_FORMAT:
        raise ValueError(f"not a {MODEL_FORMAT} document")
    if doc.get("version") != MODEL_VERSION:
        raise ValueError(f"unsupported model version {doc.get('version')}")
    n = int(doc["shape"]["n_reservoir"])
    n_in = int(doc["shape"]["n_input"])
    w_in = np.asarray(doc["w_in"], dtype=float).reshape(n, n_in)
    ws = doc["w"]
    w = sp.csr_matrix(
        (np.asarray(ws["data"], dtype=float), (np.asarray(ws["row"], dtype=np.int64), np.asarray(ws["col"], dtype=np.int64))),
        shape=(n, n),
    )
    w.data.flags.writeable = False
    res = Reservoir(
        w_in=_readonly(w_in),
        w=w,
        leak_rates=_readonly(np.asarray(doc["leak_rates"], dtype=float)),
        measured_spectral_radius=float(doc["measured_spectral_radius"]),
        params=ReservoirParams.from_dict(doc["params"]),
    )
    ro = doc.get("readout")
    return res, (ReadoutWeights.from_dict(ro) if ro is not None else None)


def save_model(path, reservoir: Reservoir, readout_weights=None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(reservoir, readout_weights), fh)


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
