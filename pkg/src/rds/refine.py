"""Explicit noise estimation and the refined measurement ``ybar``."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import check_same_shape
from .errors import DomainError, InvalidArgument
from .schedule import NoiseSchedule

__all__ = ["RefineParams", "gamma_schedule", "refine_measurement", "noise_subproblem"]


@dataclass(frozen=True)
class RefineParams:
    sigma: float
    gamma_t: float

    def __post_init__(self):
        if not self.sigma >= 0:
            raise InvalidArgument("measurement noise level must be non-negative")
        if not self.gamma_t > 0:
            raise InvalidArgument("gamma_t must be positive")


def gamma_schedule(t: float, s: NoiseSchedule) -> float:
    """Fidelity weight ``gamma_t = 1 / sigma_t``."""
    _, sigma_t = s.alpha_sigma(t)
    if sigma_t == 0:
        raise DomainError(f"gamma_t = 1/sigma_t is undefined at t = {t}")
    return 1.0 / float(sigma_t)


def refine_measurement(y, Ax0hat, p: RefineParams):
    """Return ``(nu_tilde, ybar)``.

    ``nu_tilde`` is the closed-form minimiser of the noise subproblem and
    ``ybar = (gamma^2 y + sigma^2 A(x0hat)) / (gamma^2 + sigma^2)``, a
    componentwise convex combination of ``y`` and ``A(x0hat)``.
    """
    y = np.asarray(y, dtype=np.float64)
    Ax0hat = np.asarray(Ax0hat, dtype=np.float64)
    check_same_shape(y, Ax0hat, "y and A(x0hat)")
    s2 = p.sigma**2
    nu = (s2 / (p.gamma_t**2 + s2)) * (y - Ax0hat)
    ybar = y - nu  # same value as the convex combination, exact when sigma = 0
    return nu, ybar


def noise_subproblem(nu, y, Ax0hat, p: RefineParams):
    """Objective ``|nu|^2 / (2 sigma^2) + |y - A(x0hat) - nu|^2 / (2 gamma^2)`` minimised by ``nu_tilde``."""
    nu = np.asarray(nu, dtype=np.float64)
    r = np.asarray(y) - Ax0hat - nu
    return np.sum(nu * nu) / (2 * p.sigma**2) + np.sum(r * r) / (2 * p.gamma_t**2)
