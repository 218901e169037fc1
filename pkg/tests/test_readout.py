import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rcspatial.errors import DimensionMismatch, NonFinite, SingularSystem
from rcspatial.readout import ReadoutWeights, fit_readout, ridge_objective


def normal_equations(x, y, beta):
    """Dense oracle: set the gradient of mean-error + beta*||W||^2 to zero."""
    t = x.shape[1]
    a = x @ x.T / t + beta * np.eye(x.shape[0])
    return np.linalg.solve(a, x @ y.T / t).T


def test_scalar_exact_regression():
    w = fit_readout(np.array([[1.0, 2.0, 3.0]]), np.array([[2.0, 4.0, 6.0]]), 0.0)
    assert w.w_out.shape == (1, 1)
    assert w.w_out[0, 0] == pytest.approx(2.0, abs=1e-12)


def test_huge_penalty_shrinks_to_zero(rng):
    x = rng.uniform(-1, 1, (8, 40))
    y = rng.uniform(-1, 1, (2, 40))
    assert np.linalg.norm(fit_readout(x, y, 1e12).w_out) < 1e-6


def test_matches_dense_oracle(rng):
    x = rng.standard_normal((8, 40))
    y = rng.standard_normal((2, 40))
    got = fit_readout(x, y, 0.5).w_out
    ref = normal_equations(x, y, 0.5)
    assert np.linalg.norm(got - ref) / np.linalg.norm(ref) < 1e-8


def test_first_order_optimality(rng):
    x = rng.standard_normal((6, 30))
    y = rng.standard_normal((2, 30))
    w = fit_readout(x, y, 0.3).w_out
    base = ridge_objective(w, x, y, 0.3)
    for i in range(w.shape[0]):
        for j in range(w.shape[1]):
            for h in (1e-4, -1e-4):
                p = w.copy()
                p[i, j] += h
                assert ridge_objective(p, x, y, 0.3) >= base


@given(seed=st.integers(0, 10_000), b1=st.floats(1e-4, 10.0), b2=st.floats(1e-4, 10.0))
@settings(max_examples=50, deadline=None)
def test_monotone_shrinkage(seed, b1, b2):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((5, 20))
    y = rng.standard_normal((2, 20))
    lo, hi = sorted((b1, b2))
    assert np.linalg.norm(fit_readout(x, y, lo).w_out) >= np.linalg.norm(fit_readout(x, y, hi).w_out) - 1e-12


def test_exact_interpolation_when_underdetermined(rng):
    x = rng.standard_normal((12, 8))
    y = rng.standard_normal((2, 8))
    w = fit_readout(x, y, 0.0).w_out
    assert np.max(np.abs(w @ x - y)) < 1e-8


def test_singular_without_penalty():
    x = np.ones((3, 10))
    with pytest.raises(SingularSystem):
        fit_readout(x, np.zeros((2, 10)), 0.0)


def test_rejects_bad_inputs(rng):
    x = rng.standard_normal((4, 10))
    with pytest.raises(DimensionMismatch):
        fit_readout(x, np.zeros((2, 9)), 1.0)
    bad = x.copy()
    bad[0, 0] = np.nan
    with pytest.raises(NonFinite):
        fit_readout(bad, np.zeros((2, 10)), 1.0)
    with pytest.raises(ValueError):
        fit_readout(x, np.zeros((2, 10)), -1.0)


def test_weights_round_trip(rng):
    w = fit_readout(rng.standard_normal((4, 10)), rng.standard_normal((2, 10)), 0.2)
    back = ReadoutWeights.from_dict(w.to_dict())
    assert np.array_equal(back.w_out, w.w_out)
    assert (back.ridge_beta, back.train_len) == (0.2, 10)
