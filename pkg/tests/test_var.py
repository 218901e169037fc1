import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rcspatial.errors import CollinearRegressors
from rcspatial.var import (
    OVERFLOW_GUARD,
    VarModel,
    fit_var1,
    predict_var_closed_loop,
    predict_var_test,
)


def stable_phi(rng, radius):
    a = rng.standard_normal((2, 2))
    return a * radius / np.max(np.abs(np.linalg.eigvals(a)))


def simulate(phi, c, y0, t, noise=0.0, rng=None):
    y = np.empty((2, t))
    y[:, 0] = y0
    for n in range(1, t):
        y[:, n] = phi @ y[:, n - 1] + c
        if noise:
            y[:, n] += noise * rng.standard_normal(2)
    return y


def stacked_ols(y):
    """Textbook OLS: solve (Z^T Z) b = Z^T Y for each equation."""
    t = y.shape[1]
    z = np.ones((t - 1, 3))
    z[:, 0] = y[0, :-1]
    z[:, 1] = y[1, :-1]
    b = np.linalg.solve(z.T @ z, z.T @ y[:, 1:].T)
    return b[:2].T, b[2]


def reference_recursion(phi21, phi22, c2, y1, y1_init, y2_init):
    out = []
    prev1, prev2 = y1_init, y2_init
    for v in y1:
        cur = phi21 * prev1 + phi22 * prev2 + c2
        out.append(cur)
        prev1, prev2 = v, cur
    return np.array(out)


def model(phi, c):
    return VarModel(phi=np.asarray(phi, float), intercept=np.asarray(c, float), train_sse=0.0, train_len=0)


def test_generate_then_fit_round_trip(rng):
    phi = stable_phi(rng, 0.8)
    c = rng.standard_normal(2)
    y = simulate(phi, c, rng.standard_normal(2) * 5, 200)
    m = fit_var1(y)
    assert np.max(np.abs(m.phi - phi)) < 1e-8
    assert np.max(np.abs(m.intercept - c)) < 1e-8


def test_constant_series_is_collinear():
    with pytest.raises(CollinearRegressors):
        fit_var1(np.ones((2, 50)))


def test_identical_channels_are_collinear(rng):
    y1 = rng.standard_normal(100)
    with pytest.raises(CollinearRegressors):
        fit_var1(np.vstack([y1, y1]))


def test_white_noise_matches_textbook_ols(rng):
    y = rng.standard_normal((2, 2000))
    m = fit_var1(y)
    phi, c = stacked_ols(y)
    assert np.linalg.norm(m.phi) < 0.15
    assert np.max(np.abs(m.phi - phi)) < 1e-8
    assert np.max(np.abs(m.intercept - c)) < 1e-8


def test_residuals_orthogonal_and_sse_minimal(rng):
    y = simulate(stable_phi(rng, 0.7), rng.standard_normal(2), [0, 0], 300, noise=0.5, rng=rng)
    m = fit_var1(y)
    z = np.column_stack([y[:, :-1].T, np.ones(299)])
    coef = np.vstack([m.phi.T, m.intercept])
    resid = y[:, 1:].T - z @ coef
    assert np.max(np.abs(z.T @ resid)) < 1e-8 * np.abs(z).sum()
    assert m.train_sse == pytest.approx(np.sum(resid**2))
    for i in range(3):
        for j in range(2):
            for h in (1e-3, -1e-3):
                p = coef.copy()
                p[i, j] += h
                assert np.sum((y[:, 1:].T - z @ p) ** 2) > m.train_sse


def test_copy_with_lag():
    y1 = np.arange(1.0, 11.0)
    pred, diverged = predict_var_closed_loop(model([[0, 0], [1, 0]], [0, 0]), y1, y2_init=5.0, y1_init=0.5)
    assert not diverged
    assert pred[0] == 0.5
    assert np.array_equal(pred[1:], y1[:-1])


def test_geometric_blow_up_is_flagged():
    pred, diverged = predict_var_closed_loop(model([[0, 0], [0, 2]], [0, 0]), np.zeros(60), y2_init=1.0)
    assert diverged
    k = int(np.floor(np.log2(OVERFLOW_GUARD)))
    assert np.array_equal(pred[:k], 2.0 ** np.arange(1, k + 1))
    assert np.all(np.isnan(pred[k:]))


def test_matches_duplicate_recursion(rng):
    for _ in range(20):
        phi = stable_phi(rng, rng.uniform(0.1, 0.95))
        c = rng.standard_normal(2)
        y1 = rng.standard_normal(50)
        a, b = rng.standard_normal(2)
        pred, diverged = predict_var_closed_loop(model(phi, c), y1, y2_init=b, y1_init=a)
        assert not diverged
        ref = reference_recursion(float(phi[1, 0]), float(phi[1, 1]), float(c[1]), y1, a, b)
        assert np.array_equal(pred, ref)


def test_closed_loop_reproduces_one_step_fit_without_feedback(rng):
    t = 400
    y1 = rng.standard_normal(t)
    y2 = np.empty(t)
    y2[0] = 0.0
    y2[1:] = 0.6 * y1[:-1] + 0.2 + 1e-3 * rng.standard_normal(t - 1)
    m = fit_var1(np.vstack([y1, y2]))
    m0 = model([[m.phi[0, 0], m.phi[0, 1]], [m.phi[1, 0], 0.0]], m.intercept)
    pred, _ = predict_var_closed_loop(m0, y1[1:], y2_init=y2[0], y1_init=y1[0])
    fitted = m.phi[1, 0] * y1[:-1] + m.intercept[1]
    assert np.allclose(pred, fitted, atol=1e-12)


@given(
    p21=st.floats(-3, 3),
    p22=st.floats(-0.95, 0.95),
    c2=st.floats(-2, 2),
    seed=st.integers(0, 1000),
)
@settings(max_examples=100, deadline=None)
def test_stable_feedback_stays_bounded(p21, p22, c2, seed):
    rng = np.random.default_rng(seed)
    y1 = rng.uniform(-1, 1, 500)
    y2_init = rng.uniform(-1, 1)
    pred, diverged = predict_var_closed_loop(model([[0, 0], [p21, p22]], [0, c2]), y1, y2_init=y2_init)
    assert not diverged
    bound = (abs(p21) * 1.0 + abs(c2)) / (1 - abs(p22)) + abs(y2_init)
    assert np.max(np.abs(pred)) <= bound + 1e-9


@given(p22=st.floats(1.05, 5.0), seed=st.integers(0, 1000))
@settings(max_examples=50, deadline=None)
def test_unstable_feedback_diverges(p22, seed):
    rng = np.random.default_rng(seed)
    pred, diverged = predict_var_closed_loop(model([[0, 0], [0.5, p22]], [0, 0.1]), rng.uniform(-1, 1, 2000), y2_init=1.0)
    assert diverged


def test_stable_fits_have_stable_companion():
    failures = 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        phi = stable_phi(rng, 0.9)
        y = simulate(phi, rng.standard_normal(2), [0, 0], 1460, noise=1.0, rng=rng)
        if fit_var1(y).companion_spectral_radius >= 1.0:
            failures += 1
    assert failures <= 2


def test_test_prediction_shapes(rng):
    m = model([[0.5, 0.1], [0.3, 0.4]], [0.1, -0.1])
    y1 = rng.standard_normal(30)
    pred, diverged = predict_var_test(m, y1, y1_init=0.2, y2_init=-0.3)
    assert pred.shape == (2, 30) and not diverged
    prev1 = np.concatenate([[0.2], y1[:-1]])
    prev2 = np.concatenate([[-0.3], pred[1, :-1]])
    assert np.allclose(pred[0], 0.5 * prev1 + 0.1 * prev2 + 0.1)


def test_model_serialization(rng):
    m = fit_var1(rng.standard_normal((2, 50)))
    d = m.to_dict()
    back = VarModel.from_dict(d)
    assert np.array_equal(back.phi, m.phi) and np.array_equal(back.intercept, m.intercept)
    assert d["companion_spectral_radius"] == pytest.approx(np.max(np.abs(np.linalg.eigvals(m.phi))))
    assert not np.any(m.noise)
