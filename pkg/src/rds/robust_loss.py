"""Huber loss, IRLS weights, and the reweighted least-squares objective.

The objective minimised at each outer step is::

    L(x) = 0.5 * (|x - x0hat|^2 / r^2 + |W (ybar - A(x))|^2 / gamma^2)

with ``W`` computed from the current residual and then held fixed, so that
``grad L`` coincides with the gradient of the Huber objective
``0.5 * (|x - x0hat|^2 / r^2 + H_delta(ybar - A(x)) / gamma^2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import check_same_shape
from .errors import InvalidArgument
from .operators import ForwardOperator

__all__ = [
    "RobustObjectiveParams",
    "huber_loss",
    "irls_weights",
    "robust_objective_and_gradient",
    "huber_objective",
]


def _check_delta(delta):
    if not (delta > 0):
        raise InvalidArgument(f"Huber threshold must be positive, got {delta}")


def huber_loss(r, delta: float) -> float:
    """Sum of ``r^2`` for ``|r| <= delta`` and ``2 delta |r| - delta^2`` beyond."""
    _check_delta(delta)
    a = np.abs(np.asarray(r, dtype=np.float64))
    if math.isinf(delta):
        return float(np.sum(a * a))
    return float(np.sum(np.where(a <= delta, a * a, 2.0 * delta * a - delta * delta)))


def irls_weights(r, delta: float) -> np.ndarray:
    """Diagonal IRLS weights: 1 inside the knee, ``sqrt(delta / |r|)`` outside.

    ``delta = inf`` yields all ones, i.e. plain least squares.
    """
    _check_delta(delta)
    a = np.abs(np.asarray(r, dtype=np.float64))
    w = np.ones_like(a)
    if math.isinf(delta):
        return w
    out = a > delta
    w[out] = np.sqrt(delta / a[out])
    return w


@dataclass(frozen=True)
class RobustObjectiveParams:
    r_t: float
    gamma_t: float
    delta: float = 0.02

    def __post_init__(self):
        if not (self.r_t > 0 and self.gamma_t > 0):
            raise InvalidArgument("r_t and gamma_t must be positive")
        if self.r_t * self.r_t == 0 or self.gamma_t * self.gamma_t == 0:
            raise InvalidArgument("r_t and gamma_t are too small to square")
        _check_delta(self.delta)


def robust_objective_and_gradient(x0bar, x0hat, ybar, op: ForwardOperator, p: RobustObjectiveParams, W):
    """Value and gradient of the reweighted objective with ``W`` held constant."""
    x0bar = np.asarray(x0bar, dtype=np.float64)
    check_same_shape(x0bar, np.asarray(x0hat), "x0bar and x0hat")
    resid = ybar - op.apply(x0bar)
    check_same_shape(resid, np.asarray(W), "residual and weights")
    prior = x0bar - x0hat
    wr = W * resid
    inv_r2 = 1.0 / (p.r_t * p.r_t)
    inv_g2 = 1.0 / (p.gamma_t * p.gamma_t)
    loss = 0.5 * (inv_r2 * float(np.vdot(prior, prior)) + inv_g2 * float(np.vdot(wr, wr)))
    grad = inv_r2 * prior - inv_g2 * op.vjp(x0bar, W * wr)
    return loss, grad


def huber_objective(x0bar, x0hat, ybar, op: ForwardOperator, p: RobustObjectiveParams) -> float:
    """The un-reweighted objective ``0.5 (|x - x0hat|^2 / r^2 + H(ybar - A x) / gamma^2)``."""
    prior = np.asarray(x0bar) - x0hat
    data = huber_loss(ybar - op.apply(x0bar), p.delta)
    return 0.5 * (float(np.vdot(prior, prior)) / p.r_t**2 + data / p.gamma_t**2)
