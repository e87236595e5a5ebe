"""Noise schedules (alpha_t, sigma_t) and reverse-time grids."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument

__all__ = ["NoiseSchedule", "TimeGrid", "build_time_grid", "schedule_eval"]

SCHEDULE_KINDS = ("vp-linear", "vp-cosine")


@dataclass(frozen=True)
class NoiseSchedule:
    """Variance-preserving schedule with ``alpha_t**2 + sigma_t**2 == 1``.

    ``vp-linear`` integrates a linear beta(t) from ``beta_min`` to ``beta_max``
    over ``[0, T]``; ``alpha_t = exp(-0.5 * int_0^t beta)``.
    ``vp-cosine`` uses the shifted cosine profile with offset ``s``.
    """

    kind: str = "vp-linear"
    T: float = 1.0
    beta_min: float = 0.1
    beta_max: float = 28.0
    s: float = 0.008

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise InvalidArgument(f"unknown schedule kind {self.kind!r}; expected one of {SCHEDULE_KINDS}")
        if not self.T > 0:
            raise InvalidArgument("T must be positive")
        if self.kind == "vp-linear" and not 0 <= self.beta_min < self.beta_max:
            raise InvalidArgument("need 0 <= beta_min < beta_max")
        if self.kind == "vp-cosine" and not self.s > 0:
            raise InvalidArgument("cosine offset s must be positive")

    def _log_alpha(self, u):
        # u = t / T in [0, 1]
        if self.kind == "vp-linear":
            integral = self.beta_min * u + 0.5 * (self.beta_max - self.beta_min) * u * u
            return -0.5 * integral
        half_pi = 0.5 * np.pi
        f = np.cos(half_pi * (u + self.s) / (1.0 + self.s))
        f0 = math.cos(half_pi * self.s / (1.0 + self.s))
        return np.log(np.maximum(f, 0.0) / f0)

    def alpha_sigma(self, t):
        """Vectorised ``(alpha_t, sigma_t)``; ``t`` must lie in ``[0, T]``."""
        t = np.asarray(t, dtype=np.float64)
        if np.any(t < 0) or np.any(t > self.T) or not np.all(np.isfinite(t)):
            raise InvalidArgument(f"t must lie in [0, {self.T}]")
        log_alpha = self._log_alpha(t / self.T)
        with np.errstate(divide="ignore"):
            alpha = np.exp(log_alpha)
            # sigma^2 = 1 - alpha^2 = -expm1(2 log alpha); exact zero at t = 0
            sigma = np.sqrt(np.abs(np.expm1(2.0 * log_alpha)))
        return alpha, sigma


def schedule_eval(s: NoiseSchedule, t: float) -> tuple[float, float]:
    alpha, sigma = s.alpha_sigma(t)
    return float(alpha), float(sigma)


@dataclass(frozen=True)
class TimeGrid:
    times: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=np.float64)
        if times.ndim != 1 or times.size < 2:
            raise InvalidArgument("a time grid needs at least two points")
        if times[0] != 0.0 or not np.all(np.diff(times) > 0):
            raise InvalidArgument("time grid must start at 0 and increase strictly")
        times.setflags(write=False)
        object.__setattr__(self, "times", times)

    @property
    def N(self) -> int:
        return self.times.size - 1

    @property
    def T(self) -> float:
        return float(self.times[-1])


def build_time_grid(N: int, T: float = 1.0, spacing: str = "polynomial", p: float = 2.0) -> TimeGrid:
    """Partition ``[0, T]`` into ``N`` steps.

    ``uniform`` gives ``t_i = i T / N``; ``polynomial`` gives
    ``t_i = T (i / N) ** p`` which concentrates steps near ``t = 0``.
    """
    if int(N) != N or N < 1:
        raise InvalidArgument(f"N must be a positive integer, got {N}")
    if not T > 0:
        raise InvalidArgument(f"T must be positive, got {T}")
    u = np.arange(N + 1, dtype=np.float64) / N
    if spacing == "uniform":
        times = T * u
    elif spacing == "polynomial":
        if not p > 0:
            raise InvalidArgument("polynomial exponent must be positive")
        times = T * u**p
    else:
        raise InvalidArgument(f"unknown spacing {spacing!r}")
    times[-1] = T
    return TimeGrid(times)
