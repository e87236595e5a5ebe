"""PSNR / SSIM distortion metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .core import as_tensor, check_same_shape
from .errors import InvalidArgument

__all__ = ["psnr", "ssim", "mse", "MetricReport", "evaluate", "to_unit_range"]

PSNR_CAP = 200.0
SSIM_WINDOW = 11
SSIM_STD = 1.5


def mse(x, ref) -> float:
    x, ref = as_tensor(x, "x"), as_tensor(ref, "ref")
    check_same_shape(x, ref, "x and ref")
    return float(np.mean((x - ref) ** 2))


def psnr(x, ref, peak: float = 1.0) -> float:
    """``10 log10(peak^2 / mse)``, capped at 200 dB for identical inputs."""
    if not peak > 0:
        raise InvalidArgument("peak must be positive")
    err = mse(x, ref)
    if err == 0:
        return PSNR_CAP
    return min(PSNR_CAP, 10.0 * math.log10(peak * peak / err))


def _window(size=SSIM_WINDOW, std=SSIM_STD):
    r = np.arange(size) - size // 2
    g = np.exp(-0.5 * (r / std) ** 2)
    return g / g.sum()


def _filter_valid(img, g):
    rows = sliding_window_view(img, g.size, axis=0) @ g
    return sliding_window_view(rows, g.size, axis=1) @ g


def ssim(x, ref, peak: float = 1.0) -> float:
    """Mean SSIM over every valid 11x11 Gaussian-weighted window (std 1.5)."""
    x, ref = as_tensor(x, "x"), as_tensor(ref, "ref")
    check_same_shape(x, ref, "x and ref")
    if x.ndim != 2 or min(x.shape) < SSIM_WINDOW:
        raise InvalidArgument(f"SSIM needs 2-D inputs of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {x.shape}")
    c1 = (0.01 * peak) ** 2
    c2 = (0.03 * peak) ** 2
    g = _window()
    mu_x = _filter_valid(x, g)
    mu_y = _filter_valid(ref, g)
    var_x = _filter_valid(x * x, g) - mu_x * mu_x
    var_y = _filter_valid(ref * ref, g) - mu_y * mu_y
    cov = _filter_valid(x * ref, g) - mu_x * mu_y
    num = (2 * mu_x * mu_y + c1) * (2 * cov + c2)
    den = (mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2)
    return float(np.mean(num / den))


def to_unit_range(x):
    """Map the signal convention ``[-1, 1]`` onto ``[0, 1]``."""
    return (np.asarray(x, dtype=np.float64) + 1.0) / 2.0


@dataclass(frozen=True)
class MetricReport:
    psnr: float
    ssim: float
    mse: float


def evaluate(x, ref) -> MetricReport:
    """Metrics of ``x`` against ``ref``, both in ``[-1, 1]``, computed on the ``[0, 1]`` scale.

    ``mse`` is reported in the original units; SSIM is omitted (NaN) for
    inputs too small for the window or not 2-D.
    """
    x01, ref01 = to_unit_range(x), to_unit_range(ref)
    s = ssim(x01, ref01) if np.ndim(x) == 2 and min(np.shape(x)) >= SSIM_WINDOW else float("nan")
    return MetricReport(psnr=psnr(x01, ref01, 1.0), ssim=s, mse=mse(x, ref))
