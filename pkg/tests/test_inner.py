import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rds.errors import DegenerateDirection, InvalidArgument, NumericalFailure
from rds.inner import (
    CgConfig,
    CgState,
    GdConfig,
    cg_step_size,
    fletcher_reeves_beta,
    robust_cg_inner,
    robust_gd_inner,
)
from rds.operators import MatrixOperator, build_operator
from rds.robust_loss import RobustObjectiveParams, huber_objective


def _problem(seed, n=8, m=10, outliers=2):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(m, n)) / np.sqrt(n)
    x_true = rng.normal(size=n)
    y = A @ x_true + 0.01 * rng.normal(size=m)
    y[rng.choice(m, outliers, replace=False)] = -3.0
    x0hat = x_true + 0.3 * rng.normal(size=n)
    return MatrixOperator(A), x0hat, y


def test_fletcher_reeves_beta():
    assert fletcher_reeves_beta(np.array([1.0, 0.0]), np.array([2.0, 0.0])) == 0.25
    assert fletcher_reeves_beta(np.ones(2), np.zeros(2)) == 0.0


def test_cg_step_numerators_agree_on_first_iteration():
    op, x0hat, y = _problem(0)
    p = RobustObjectiveParams(1.0, 1.0, 0.1)
    g = np.random.default_rng(1).normal(size=8)
    state = CgState(x0hat, g, g.copy())
    W = np.ones(10)
    assert cg_step_size(state, op, W, p, CgConfig(numerator="gTg")) == pytest.approx(
        cg_step_size(state, op, W, p, CgConfig(numerator="gTd"))
    )


def test_cg_step_nonlinear_uses_finite_difference():
    op = build_operator({"kind": "nonlinear_blur", "size": 3, "std": 1.0}, (6, 6))
    rng = np.random.default_rng(2)
    x, d = rng.normal(size=(6, 6)), rng.normal(size=(6, 6))
    p = RobustObjectiveParams(1.0, 1.0, 0.1)
    W = np.ones((6, 6))
    omega = op.jvp(x, d)
    expected = np.vdot(d, d) / (np.vdot(d, d) + np.vdot(omega, omega))
    got = cg_step_size(CgState(x, d, d), op, W, p, CgConfig(eta=1e-6))
    assert got == pytest.approx(expected, rel=1e-4)


def test_degenerate_direction():
    op, x0hat, _ = _problem(0)
    z = np.zeros(8)
    with pytest.raises(DegenerateDirection):
        cg_step_size(CgState(x0hat, z, z), op, np.ones(10), RobustObjectiveParams(1.0, 1.0), CgConfig())


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), delta=st.sampled_from([0.01, 0.1, 1.0, np.inf]))
def test_cg_first_step_descends(seed, delta):
    op, x0hat, y = _problem(seed)
    p = RobustObjectiveParams(0.5, 0.5, delta)
    hist = []
    robust_cg_inner(x0hat, y, op, p, CgConfig(J=20), history=hist)
    assert hist[1] <= hist[0] + 1e-12
    assert hist[-1] <= hist[0] + 1e-12


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_gd_monotone_for_small_step(seed):
    op, x0hat, y = _problem(seed)
    p = RobustObjectiveParams(1.0, 1.0, 0.05)
    hist = []
    robust_gd_inner(x0hat, y, op, p, GdConfig(J=50, eta_x=0.05), history=hist)
    assert len(hist) == 51
    assert np.all(np.diff(hist) <= 1e-12)


def test_gd_zero_rate_is_identity():
    op, x0hat, y = _problem(3)
    out = robust_gd_inner(x0hat, y, op, RobustObjectiveParams(1.0, 1.0), GdConfig(J=5, eta_x=0.0))
    np.testing.assert_array_equal(out, x0hat)


def test_cg_converges_on_least_squares():
    op, x0hat, y = _problem(4, n=6, m=6, outliers=0)
    p = RobustObjectiveParams(1.0, 1.0, np.inf)
    x = robust_cg_inner(x0hat, y, op, p, CgConfig(J=6, numerator="gTd"))
    A = op.matrix
    direct = np.linalg.solve(np.eye(6) + A.T @ A, x0hat + A.T @ y)
    np.testing.assert_allclose(x, direct, rtol=1e-8)


def test_robust_beats_l2_under_outliers():
    op, x0hat, y = _problem(5, n=8, m=40, outliers=6)
    x_true = np.linalg.lstsq(op.matrix[y != -3.0], y[y != -3.0], rcond=None)[0]
    robust = robust_cg_inner(x0hat, y, op, RobustObjectiveParams(10.0, 1.0, 0.05), CgConfig(J=200))
    l2 = robust_cg_inner(x0hat, y, op, RobustObjectiveParams(10.0, 1.0, np.inf), CgConfig(J=200))
    assert np.linalg.norm(robust - x_true) < 0.5 * np.linalg.norm(l2 - x_true)


def test_history_is_the_huber_objective():
    op, x0hat, y = _problem(6)
    p = RobustObjectiveParams(1.0, 1.0, 0.1)
    hist = []
    robust_cg_inner(x0hat, y, op, p, CgConfig(J=1), history=hist)
    assert hist[0] == pytest.approx(huber_objective(x0hat, x0hat, y, op, p))


def test_early_stop_at_stationary_start():
    A = np.eye(3)
    x = np.array([1.0, 2.0, 3.0])
    hist = []
    out = robust_cg_inner(x, A @ x, MatrixOperator(A), RobustObjectiveParams(1.0, 1.0), CgConfig(), history=hist)
    np.testing.assert_array_equal(out, x)
    assert len(hist) == 1


@pytest.mark.filterwarnings("ignore:overflow:RuntimeWarning")
def test_divergence_reports_iteration():
    op, x0hat, y = _problem(7)
    with pytest.raises(NumericalFailure) as info:
        robust_gd_inner(x0hat, y, op, RobustObjectiveParams(1e-3, 1.0, np.inf), GdConfig(J=100, eta_x=1e200))
    assert info.value.iteration is not None and info.value.iteration < 100


def test_params_reject_underflowing_scale():
    with pytest.raises(InvalidArgument):
        RobustObjectiveParams(1e-300, 1.0)


@pytest.mark.parametrize(
    "cls,kwargs",
    [(GdConfig, {"J": 0}), (GdConfig, {"eta_x": -1.0}), (CgConfig, {"eta": 0.0}), (CgConfig, {"numerator": "dTd"})],
)
def test_config_validation(cls, kwargs):
    with pytest.raises(InvalidArgument):
        cls(**kwargs)
