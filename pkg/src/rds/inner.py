"""Inner solvers for the reweighted objective at a single outer timestep.

Both solvers start from ``x0hat`` and recompute the IRLS weights from the
current residual at every iterate. Gradient descent uses a fixed learning
rate; conjugate gradient uses a closed-form step along Fletcher-Reeves
directions, linearising nonlinear operators with a finite-difference JVP.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DegenerateDirection, InvalidArgument, NumericalFailure
from .operators import ForwardOperator
from .robust_loss import RobustObjectiveParams, huber_loss, irls_weights, robust_objective_and_gradient

__all__ = [
    "GdConfig",
    "CgConfig",
    "CgState",
    "robust_gd_inner",
    "cg_step_size",
    "fletcher_reeves_beta",
    "robust_cg_inner",
]

# squared gradient norm below which CG stops early
GRAD_TOL_SQ = 1e-24

NUMERATORS = ("gTg", "gTd")


@dataclass(frozen=True)
class GdConfig:
    J: int = 100
    eta_x: float = 1e-4

    def __post_init__(self):
        if int(self.J) != self.J or self.J < 1:
            raise InvalidArgument(f"J must be a positive integer, got {self.J}")
        # eta_x = 0 is accepted: it turns the inner loop into a no-op
        if not self.eta_x >= 0:
            raise InvalidArgument(f"eta_x must be non-negative, got {self.eta_x}")


@dataclass(frozen=True)
class CgConfig:
    J: int = 20
    eta: float = 1e-4
    numerator: str = "gTg"

    def __post_init__(self):
        if int(self.J) != self.J or self.J < 1:
            raise InvalidArgument(f"J must be a positive integer, got {self.J}")
        if not self.eta > 0:
            raise InvalidArgument(f"finite-difference step eta must be positive, got {self.eta}")
        if self.numerator not in NUMERATORS:
            raise InvalidArgument(f"numerator must be one of {NUMERATORS}, got {self.numerator!r}")


@dataclass
class CgState:
    """Current iterate ``x``, negative gradient ``g`` and direction ``d``.

    ``Ax`` caches ``A(x)`` when available.
    """

    x: np.ndarray
    g: np.ndarray
    d: np.ndarray
    Ax: Optional[np.ndarray] = None


def _huber_value(x, x0hat, ybar, Ax, p):
    prior = x - x0hat
    return 0.5 * (float(np.vdot(prior, prior)) / p.r_t**2 + huber_loss(ybar - Ax, p.delta) / p.gamma_t**2)


def _check_finite(x, j):
    if not np.all(np.isfinite(x)):
        raise NumericalFailure("non-finite iterate", iteration=j)


def robust_gd_inner(x0hat, ybar, op: ForwardOperator, p: RobustObjectiveParams, cfg: GdConfig, history=None):
    """``cfg.J`` gradient steps ``x <- x - eta_x * grad L`` with weights refreshed each step.

    If ``history`` is a list, the Huber objective is appended before the
    first step and after every step.
    """
    x = np.array(x0hat, dtype=np.float64, copy=True)
    for j in range(cfg.J):
        Ax = op.apply(x)
        if history is not None and j == 0:
            history.append(_huber_value(x, x0hat, ybar, Ax, p))
        W = irls_weights(ybar - Ax, p.delta)
        _, grad = robust_objective_and_gradient(x, x0hat, ybar, op, p, W)
        x = x - cfg.eta_x * grad
        _check_finite(x, j)
        if history is not None:
            history.append(_huber_value(x, x0hat, ybar, op.apply(x), p))
    return x


def cg_step_size(state: CgState, op: ForwardOperator, W, p: RobustObjectiveParams, cfg: CgConfig) -> float:
    """Closed-form step along ``state.d`` for the frozen-weight quadratic.

    Linear operators use ``W A d`` exactly; nonlinear ones use the
    finite-difference ``(W A(x + eta d) - W A(x)) / eta``.
    """
    g, d = state.g, state.d
    if op.linear:
        omega = W * op.apply(d)
    else:
        Ax = op.apply(state.x) if state.Ax is None else state.Ax
        omega = (W * op.apply(state.x + cfg.eta * d) - W * Ax) / cfg.eta
    num = float(np.vdot(g, g)) if cfg.numerator == "gTg" else float(np.vdot(g, d))
    den = float(np.vdot(d, d)) / p.r_t**2 + float(np.vdot(omega, omega)) / p.gamma_t**2
    if not den > 0:
        raise DegenerateDirection(f"line-search denominator is {den}")
    return num / den


def fletcher_reeves_beta(g_next, g) -> float:
    """``|g_next|^2 / |g|^2``; returns 0 when ``g`` vanishes (already converged)."""
    gg = float(np.vdot(g, g))
    if gg == 0.0:
        return 0.0
    return float(np.vdot(g_next, g_next)) / gg


def robust_cg_inner(x0hat, ybar, op: ForwardOperator, p: RobustObjectiveParams, cfg: CgConfig, history=None):
    """Up to ``cfg.J`` Fletcher-Reeves conjugate-gradient iterations from ``x0hat``.

    Stops early once the squared gradient norm drops to ``GRAD_TOL_SQ``.
    ``history`` receives Huber objective values as in :func:`robust_gd_inner`.
    """
    x = np.array(x0hat, dtype=np.float64, copy=True)
    Ax = op.apply(x)
    W = irls_weights(ybar - Ax, p.delta)
    _, grad = robust_objective_and_gradient(x, x0hat, ybar, op, p, W)
    g = -grad
    d = g.copy()
    if history is not None:
        history.append(_huber_value(x, x0hat, ybar, Ax, p))
    if float(np.vdot(g, g)) <= GRAD_TOL_SQ:
        return x
    for j in range(cfg.J):
        alpha = cg_step_size(CgState(x, g, d, Ax), op, W, p, cfg)
        x = x + alpha * d
        _check_finite(x, j)
        Ax = op.apply(x)
        W = irls_weights(ybar - Ax, p.delta)
        _, grad = robust_objective_and_gradient(x, x0hat, ybar, op, p, W)
        g_next = -grad
        if history is not None:
            history.append(_huber_value(x, x0hat, ybar, Ax, p))
        if float(np.vdot(g_next, g_next)) <= GRAD_TOL_SQ:
            break
        d = g_next + fletcher_reeves_beta(g_next, g) * d
        _check_finite(d, j)
        g = g_next
    return x
