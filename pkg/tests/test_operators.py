import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rds.errors import InvalidArgument
from rds.operators import (
    Conv2d,
    Downsample,
    Inpaint,
    MatrixOperator,
    NonlinearSatBlur,
    build_operator,
    gaussian_kernel,
    jvp_finite_difference,
    motion_kernel,
    op_apply,
    op_vjp,
)

SHAPE = (12, 10)


def _ops():
    rng = np.random.default_rng(0)
    k = rng.random((3, 5))
    return {
        "inpaint": Inpaint(rng.random(SHAPE) > 0.5),
        "downsample": Downsample((12, 8), 4),
        "downsample_1d": Downsample((12,), 3),
        "conv_replicate": Conv2d(k, SHAPE, "replicate"),
        "conv_zero": Conv2d(k, SHAPE, "zero"),
        "satblur": NonlinearSatBlur(gaussian_kernel(5, 1.0), SHAPE, 3.0),
        "matrix": MatrixOperator(rng.normal(size=(5, 7))),
    }


@pytest.mark.parametrize("name", list(_ops()))
@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_adjoint_identity(name, seed):
    # <J(x) d, w> == <d, J(x)^T w>
    op = _ops()[name]
    rng = np.random.default_rng(seed)
    x, d = rng.normal(size=op.input_shape), rng.normal(size=op.input_shape)
    w = rng.normal(size=op.output_shape)
    lhs = np.vdot(op.jvp(x, d), w)
    rhs = np.vdot(d, op_vjp(op, x, w))
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10)


def _dense(op):
    n = int(np.prod(op.input_shape))
    cols = [op.apply(np.eye(n)[i].reshape(op.input_shape)).ravel() for i in range(n)]
    return np.stack(cols, axis=1)


@pytest.mark.parametrize("boundary", ["replicate", "zero"])
def test_conv_matches_scipy(boundary):
    scipy_ndimage = pytest.importorskip("scipy.ndimage")
    rng = np.random.default_rng(1)
    k, x = rng.random((3, 5)), rng.normal(size=SHAPE)
    mode = "nearest" if boundary == "replicate" else "constant"
    expected = scipy_ndimage.convolve(x, k, mode=mode, cval=0.0)
    np.testing.assert_allclose(Conv2d(k, SHAPE, boundary).apply(x), expected, atol=1e-12)


@pytest.mark.parametrize("name", ["conv_replicate", "conv_zero", "downsample"])
def test_vjp_is_dense_transpose(name):
    op = _ops()[name]
    M = _dense(op)
    w = np.random.default_rng(2).normal(size=op.output_shape)
    np.testing.assert_allclose(op.vjp(np.zeros(op.input_shape), w).ravel(), M.T @ w.ravel(), atol=1e-12)


def test_conv_is_a_true_convolution():
    # an asymmetric kernel applied to a centred impulse reproduces the kernel unflipped
    k = np.arange(9.0).reshape(3, 3)
    x = np.zeros((7, 7))
    x[3, 3] = 1.0
    np.testing.assert_array_equal(Conv2d(k, (7, 7), "zero").apply(x)[2:5, 2:5], k)


def test_inpaint_and_downsample_values():
    mask = np.array([[1, 0], [0, 1]], dtype=bool)
    np.testing.assert_array_equal(Inpaint(mask).apply(np.full((2, 2), 3.0)), [[3.0, 0.0], [0.0, 3.0]])
    x = np.arange(16.0).reshape(4, 4)
    np.testing.assert_array_equal(Downsample((4, 4), 2).apply(x), [[2.5, 4.5], [10.5, 12.5]])


def test_kernels():
    k = gaussian_kernel(5, 1.0)
    assert k.sum() == pytest.approx(1.0) and k[2, 2] == pytest.approx(0.16210, abs=1e-5)
    np.testing.assert_allclose(k, k.T)
    m = motion_kernel(9, 5, 0.5)
    assert m.sum() == pytest.approx(1.0)
    assert np.count_nonzero(m[4]) == 5


def test_satblur_bounded_and_slope():
    op = _ops()["satblur"]
    x = 10 * np.random.default_rng(3).normal(size=SHAPE)
    assert np.all(np.abs(op.apply(x)) <= 1 / 3)
    d = np.random.default_rng(4).normal(size=SHAPE)
    fd = (op.apply(x + 1e-6 * d) - op.apply(x - 1e-6 * d)) / 2e-6
    np.testing.assert_allclose(op.jvp(x, d), fd, atol=1e-8)


def test_fd_jvp_exact_for_linear():
    op = _ops()["conv_replicate"]
    rng = np.random.default_rng(5)
    x, d = rng.normal(size=SHAPE), rng.normal(size=SHAPE)
    np.testing.assert_allclose(jvp_finite_difference(op, x, d, 1e-4), op.apply(d), rtol=1e-9, atol=1e-10)
    with pytest.raises(InvalidArgument):
        jvp_finite_difference(op, x, d, 0.0)


def test_shape_checks():
    op = _ops()["conv_zero"]
    with pytest.raises(InvalidArgument):
        op_apply(op, np.zeros((3, 3)))
    with pytest.raises(InvalidArgument):
        op.vjp(np.zeros(SHAPE), np.zeros((2, 2)))
    with pytest.raises(InvalidArgument):
        op.apply(np.full(SHAPE, np.nan))
    with pytest.raises(InvalidArgument):
        Downsample((10, 10), 4)


def test_build_operator_mask_ratio():
    op = build_operator({"kind": "inpaint", "mask_ratio": 0.7, "seed": 3}, (20, 50))
    kept = int(op.mask.sum())
    assert 230 <= kept <= 370
    assert np.array_equal(op.mask, build_operator({"kind": "inpaint", "mask_ratio": 0.7, "seed": 3}, (20, 50)).mask)


@pytest.mark.parametrize(
    "spec",
    [
        {"kind": "warp"},
        {"kind": "inpaint", "mask_ratio": 1.0},
        {"kind": "gaussian_blur", "size": 4},
        {"kind": "downsample", "colour": "red"},
    ],
)
def test_build_operator_rejects(spec):
    with pytest.raises(InvalidArgument):
        build_operator(spec, (16, 16))


@pytest.mark.parametrize("kind", ["downsample", "gaussian_blur", "motion_blur", "nonlinear_blur"])
def test_build_operator_kinds(kind):
    op = build_operator({"kind": kind}, (16, 16))
    assert op.apply(np.ones((16, 16))).shape == tuple(op.output_shape)
    assert op.linear == (kind != "nonlinear_blur")
