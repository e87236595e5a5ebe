"""Measurement corruption: Gaussian noise plus outlier replacement."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import RngStream, as_tensor
from .errors import InvalidArgument

__all__ = ["CorruptionSpec", "corrupt_measurement"]


@dataclass(frozen=True)
class CorruptionSpec:
    sigma: float = 0.05
    rho: float = 0.10
    xi: float = -1.0
    seed: int = 0

    def __post_init__(self):
        if not self.sigma >= 0:
            raise InvalidArgument(f"sigma must be non-negative, got {self.sigma}")
        if not 0 <= self.rho < 1:
            raise InvalidArgument(f"rho must lie in [0, 1), got {self.rho}")
        if not np.isfinite(self.xi):
            raise InvalidArgument("outlier value xi must be finite")


def corrupt_measurement(y_clean, spec: CorruptionSpec, rng: RngStream | None = None):
    """Return ``(y, corrupted_mask)``.

    Each entry is replaced by ``spec.xi`` independently with probability
    ``spec.rho``; the remaining entries get additive ``N(0, sigma^2)`` noise.
    The mask is for evaluation only and must not be handed to a solver.
    """
    y_clean = as_tensor(y_clean, "y_clean")
    rng = RngStream(spec.seed) if rng is None else rng
    mask = rng.uniform(y_clean.shape) < spec.rho
    noise = spec.sigma * rng.normal(y_clean.shape)
    y = np.where(mask, spec.xi, y_clean + noise)
    return y, mask
