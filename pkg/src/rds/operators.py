"""Forward operators for the measurement model ``y = A(x) + noise``.

Every operator exposes ``apply`` (the map itself), ``vjp`` (transposed
Jacobian times a cotangent, i.e. the adjoint for linear kinds) and ``jvp``
(the exact Jacobian-vector product). The finite-difference JVP used by the
conjugate-gradient solver on nonlinear problems lives in
:func:`jvp_finite_difference`.
"""

from __future__ import annotations

from typing import Mapping

import numpy as np

from .core import RngStream, as_tensor
from .errors import InvalidArgument

__all__ = [
    "ForwardOperator",
    "Inpaint",
    "Downsample",
    "Conv2d",
    "NonlinearSatBlur",
    "MatrixOperator",
    "op_apply",
    "op_vjp",
    "jvp_finite_difference",
    "gaussian_kernel",
    "motion_kernel",
    "build_operator",
]

BOUNDARIES = ("replicate", "zero")


class ForwardOperator:
    """Base class. Subclasses set ``input_shape``, ``output_shape``, ``linear``."""

    linear = True
    input_shape: tuple
    output_shape: tuple

    def _check(self, x, shape, what):
        x = as_tensor(x, what)
        if x.shape != tuple(shape):
            raise InvalidArgument(f"{what} has shape {x.shape}, operator expects {tuple(shape)}")
        return x

    def apply(self, x):
        return self._apply(self._check(x, self.input_shape, "input"))

    def vjp(self, x, w):
        w = self._check(w, self.output_shape, "cotangent")
        if self.linear:
            return self._vjp(None, w)
        return self._vjp(self._check(x, self.input_shape, "input"), w)

    def jvp(self, x, d):
        d = self._check(d, self.input_shape, "direction")
        if self.linear:
            return self._apply(d)
        return self._jvp(self._check(x, self.input_shape, "input"), d)

    def __call__(self, x):
        return self.apply(x)


class Inpaint(ForwardOperator):
    """Diagonal 0/1 masking; masked-out entries are measured as zero."""

    def __init__(self, mask):
        mask = np.asarray(mask, dtype=bool)
        self.mask = mask
        self._m = mask.astype(np.float64)
        self.input_shape = self.output_shape = mask.shape

    def _apply(self, x):
        return x * self._m

    def _vjp(self, x, w):
        return w * self._m


class Downsample(ForwardOperator):
    """Block-average pooling by ``factor`` along every axis (1-D or 2-D)."""

    def __init__(self, input_shape, factor: int = 4):
        input_shape = tuple(int(s) for s in input_shape)
        if int(factor) != factor or factor < 1:
            raise InvalidArgument(f"downsampling factor must be a positive integer, got {factor}")
        if len(input_shape) not in (1, 2):
            raise InvalidArgument("downsampling supports 1-D and 2-D signals")
        if any(s % factor for s in input_shape):
            raise InvalidArgument(f"shape {input_shape} is not divisible by factor {factor}")
        self.factor = int(factor)
        self.input_shape = input_shape
        self.output_shape = tuple(s // self.factor for s in input_shape)

    def _apply(self, x):
        f = self.factor
        if x.ndim == 1:
            return x.reshape(-1, f).mean(axis=1)
        h, w = self.output_shape
        return x.reshape(h, f, w, f).mean(axis=(1, 3))

    def _vjp(self, x, w):
        f = self.factor
        scale = 1.0 / f**w.ndim
        up = w
        for axis in range(w.ndim):
            up = np.repeat(up, f, axis=axis)
        return up * scale


def _convolve(x, kernel, boundary):
    kh, kw = kernel.shape
    ph, pw = kh // 2, kw // 2
    mode = "edge" if boundary == "replicate" else "constant"
    xp = np.pad(x, ((ph, ph), (pw, pw)), mode=mode)
    h, w = x.shape
    flipped = kernel[::-1, ::-1]
    out = np.zeros_like(x)
    for a in range(kh):
        for b in range(kw):
            c = flipped[a, b]
            if c != 0.0:
                out += c * xp[a : a + h, b : b + w]
    return out


def _convolve_adjoint(w, kernel, boundary):
    kh, kw = kernel.shape
    ph, pw = kh // 2, kw // 2
    h, wd = w.shape
    flipped = kernel[::-1, ::-1]
    gp = np.zeros((h + 2 * ph, wd + 2 * pw))
    for a in range(kh):
        for b in range(kw):
            c = flipped[a, b]
            if c != 0.0:
                gp[a : a + h, b : b + wd] += c * w
    if boundary == "replicate":
        # padded cells are copies of the nearest edge cell; fold them back
        if ph:
            gp[ph] += gp[:ph].sum(axis=0)
            gp[ph + h - 1] += gp[ph + h :].sum(axis=0)
        if pw:
            gp[:, pw] += gp[:, :pw].sum(axis=1)
            gp[:, pw + wd - 1] += gp[:, pw + wd :].sum(axis=1)
    return gp[ph : ph + h, pw : pw + wd].copy()


def _check_kernel(kernel):
    kernel = as_tensor(kernel, "kernel")
    if kernel.ndim != 2 or kernel.shape[0] % 2 == 0 or kernel.shape[1] % 2 == 0:
        raise InvalidArgument(f"kernel must be 2-D with odd sizes, got shape {kernel.shape}")
    return kernel


class Conv2d(ForwardOperator):
    """Same-size 2-D convolution with replicate (default) or zero padding."""

    def __init__(self, kernel, input_shape, boundary: str = "replicate"):
        if boundary not in BOUNDARIES:
            raise InvalidArgument(f"boundary must be one of {BOUNDARIES}")
        self.kernel = _check_kernel(kernel)
        self.boundary = boundary
        self.input_shape = self.output_shape = tuple(int(s) for s in input_shape)
        if len(self.input_shape) != 2:
            raise InvalidArgument("convolution operates on 2-D signals")

    def _apply(self, x):
        return _convolve(x, self.kernel, self.boundary)

    def _vjp(self, x, w):
        return _convolve_adjoint(w, self.kernel, self.boundary)


class NonlinearSatBlur(ForwardOperator):
    """Blur followed by a smooth saturation ``s(u) = tanh(gain * u) / gain``."""

    linear = False

    def __init__(self, kernel, input_shape, gain: float = 3.0, boundary: str = "replicate"):
        if not gain > 0:
            raise InvalidArgument("gain must be positive")
        self.blur = Conv2d(kernel, input_shape, boundary)
        self.gain = float(gain)
        self.input_shape = self.output_shape = self.blur.input_shape

    @property
    def kernel(self):
        return self.blur.kernel

    def _apply(self, x):
        return np.tanh(self.gain * self.blur._apply(x)) / self.gain

    def _slope(self, x):
        th = np.tanh(self.gain * self.blur._apply(x))
        return 1.0 - th * th

    def _vjp(self, x, w):
        return self.blur._vjp(None, self._slope(x) * w)

    def _jvp(self, x, d):
        return self._slope(x) * self.blur._apply(d)


class MatrixOperator(ForwardOperator):
    """Dense linear map on 1-D vectors; handy for small test systems."""

    def __init__(self, matrix):
        self.matrix = as_tensor(matrix, "matrix")
        if self.matrix.ndim != 2:
            raise InvalidArgument("matrix must be 2-D")
        m, n = self.matrix.shape
        self.input_shape, self.output_shape = (n,), (m,)

    def _apply(self, x):
        return self.matrix @ x

    def _vjp(self, x, w):
        return self.matrix.T @ w


def op_apply(op: ForwardOperator, x) -> np.ndarray:
    return op.apply(x)


def op_vjp(op: ForwardOperator, x, w) -> np.ndarray:
    return op.vjp(x, w)


def jvp_finite_difference(op: ForwardOperator, x, d, eta: float) -> np.ndarray:
    """Forward-difference Jacobian-vector product ``(A(x + eta d) - A(x)) / eta``."""
    if not eta > 0:
        raise InvalidArgument(f"finite-difference step must be positive, got {eta}")
    x = op._check(x, op.input_shape, "input")
    d = op._check(d, op.input_shape, "direction")
    return (op._apply(x + eta * d) - op._apply(x)) / eta


def gaussian_kernel(size: int = 9, std: float = 1.5) -> np.ndarray:
    if int(size) != size or size < 1 or size % 2 == 0:
        raise InvalidArgument(f"kernel size must be a positive odd integer, got {size}")
    if not std > 0:
        raise InvalidArgument("kernel std must be positive")
    r = np.arange(size) - size // 2
    g = np.exp(-0.5 * (r / std) ** 2)
    k = np.outer(g, g)
    return k / k.sum()


def motion_kernel(size: int = 9, length: int | None = None, std: float = 0.5) -> np.ndarray:
    """Horizontal line of ``length`` pixels with a Gaussian vertical profile."""
    if int(size) != size or size < 1 or size % 2 == 0:
        raise InvalidArgument(f"kernel size must be a positive odd integer, got {size}")
    length = size if length is None else int(length)
    if not 1 <= length <= size:
        raise InvalidArgument("motion length must lie in [1, size]")
    if not std > 0:
        raise InvalidArgument("kernel std must be positive")
    c = size // 2
    r = np.arange(size) - c
    profile = np.exp(-0.5 * (r / std) ** 2)
    line = (np.abs(r) <= (length - 1) / 2).astype(np.float64)
    k = np.outer(profile, line)
    return k / k.sum()


OPERATOR_KINDS = ("inpaint", "downsample", "gaussian_blur", "motion_blur", "nonlinear_blur")


def build_operator(spec: Mapping, shape) -> ForwardOperator:
    """Construct an operator from a plain description such as ``{"kind": "inpaint", "mask_ratio": 0.7}``.

    Defaults: mask_ratio 0.7, factor 4, 9x9 kernels with std 1.5 (0.5 for the
    motion cross-profile), saturation gain 3, replicate boundary.
    """
    spec = dict(spec)
    kind = spec.pop("kind", None)
    shape = tuple(int(s) for s in shape)
    boundary = spec.pop("boundary", "replicate")
    if kind == "inpaint":
        ratio = float(spec.pop("mask_ratio", 0.7))
        seed = int(spec.pop("seed", 0))
        if not 0 <= ratio < 1:
            raise InvalidArgument(f"mask_ratio must lie in [0, 1), got {ratio}")
        op = Inpaint(RngStream(seed).uniform(shape) >= ratio)
    elif kind == "downsample":
        op = Downsample(shape, int(spec.pop("factor", 4)))
    elif kind in ("gaussian_blur", "nonlinear_blur"):
        kernel = gaussian_kernel(spec.pop("size", 9), float(spec.pop("std", 1.5)))
        if kind == "gaussian_blur":
            op = Conv2d(kernel, shape, boundary)
        else:
            op = NonlinearSatBlur(kernel, shape, float(spec.pop("gain", 3.0)), boundary)
    elif kind == "motion_blur":
        kernel = motion_kernel(spec.pop("size", 9), spec.pop("length", None), float(spec.pop("std", 0.5)))
        op = Conv2d(kernel, shape, boundary)
    else:
        raise InvalidArgument(f"unknown operator kind {kind!r}; expected one of {OPERATOR_KINDS}")
    if spec:
        raise InvalidArgument(f"unexpected operator fields for {kind}: {sorted(spec)}")
    return op
