"""Data-prediction models x0(x_t, t) and the multi-step clean-signal estimator.

The analytic priors below have exact posterior means under
``x_t | x_0 ~ N(alpha_t x_0, sigma_t^2 I)``, which makes them usable as
stand-ins for a trained denoiser when checking the solvers end to end.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import as_tensor
from .errors import DomainError, InvalidArgument, UnsupportedOperation
from .schedule import NoiseSchedule

__all__ = [
    "GaussianPrior",
    "GMMPrior",
    "EstimatorConfig",
    "posterior_mean_x0",
    "score_from_prediction",
    "ddim_step",
    "ddim_multistep_x0",
    "estimate_x0",
]


def _conjugate_mean(mean, var, x, alpha, sigma):
    gain = alpha * var / (alpha * alpha * var + sigma * sigma)
    return mean + gain * (x - alpha * mean)


class GaussianPrior:
    """Independent Gaussian prior ``N(mean, diag(var))`` on every entry."""

    def __init__(self, mean, var):
        self.mean = as_tensor(mean, "mean")
        self.var = as_tensor(var, "var")
        if np.any(self.var <= 0):
            raise InvalidArgument("prior variances must be positive")

    def predict_x0(self, x_t, alpha, sigma):
        if sigma == 0:
            return np.array(x_t, dtype=np.float64, copy=True)
        return _conjugate_mean(self.mean, self.var, x_t, alpha, sigma)

    def sample(self, rng, shape):
        return self.mean + np.sqrt(self.var) * rng.normal(shape)

    def marginal_score(self, x_t, alpha, sigma):
        """Closed-form ``grad log p_t(x_t)`` of the noised marginal."""
        return -(x_t - alpha * self.mean) / (alpha * alpha * self.var + sigma * sigma)


class GMMPrior:
    """Mixture of diagonal Gaussians; ``means``/``vars`` carry a leading component axis."""

    def __init__(self, weights, means, vars):
        self.weights = as_tensor(weights, "weights")
        self.means = as_tensor(means, "means")
        self.vars = np.broadcast_to(as_tensor(vars, "vars"), self.means.shape).astype(np.float64)
        if self.weights.ndim != 1 or self.means.shape[0] != self.weights.size:
            raise InvalidArgument("weights must be 1-D with one entry per mixture component")
        if np.any(self.weights <= 0) or abs(self.weights.sum() - 1.0) > 1e-10:
            raise InvalidArgument("mixture weights must be positive and sum to 1")
        if np.any(self.vars <= 0):
            raise InvalidArgument("component variances must be positive")

    def responsibilities(self, x_t, alpha, sigma):
        s = alpha * alpha * self.vars + sigma * sigma
        axes = tuple(range(1, self.means.ndim))
        quad = np.sum((x_t - alpha * self.means) ** 2 / s + np.log(2 * np.pi * s), axis=axes)
        logp = np.log(self.weights) - 0.5 * quad
        logp -= logp.max()
        p = np.exp(logp)
        return p / p.sum()

    def predict_x0(self, x_t, alpha, sigma):
        if sigma == 0:
            return np.array(x_t, dtype=np.float64, copy=True)
        resp = self.responsibilities(x_t, alpha, sigma)
        comp = _conjugate_mean(self.means, self.vars, x_t, alpha, sigma)
        resp = resp.reshape((-1,) + (1,) * (self.means.ndim - 1))
        return np.sum(resp * comp, axis=0)

    def sample(self, rng, shape):
        k = int(np.searchsorted(np.cumsum(self.weights), rng.uniform(1)[0], side="right"))
        k = min(k, self.weights.size - 1)
        return self.means[k] + np.sqrt(self.vars[k]) * rng.normal(shape)


def posterior_mean_x0(model, x_t, t: float, s: NoiseSchedule) -> np.ndarray:
    """One evaluation of the data-prediction model at ``(x_t, t)``.

    Analytic models (anything with ``predict_x0``) get the schedule's
    ``(alpha_t, sigma_t)``; external models (anything with ``predict``) are
    queried over their wire protocol with the raw time.
    """
    x_t = as_tensor(x_t, "x_t")
    if hasattr(model, "predict_x0"):
        alpha, sigma = s.alpha_sigma(t)
        return model.predict_x0(x_t, float(alpha), float(sigma))
    if hasattr(model, "predict"):
        return model.predict(x_t, float(t))
    raise UnsupportedOperation(f"{type(model).__name__} is not a data-prediction model")


def score_from_prediction(x0hat, x_t, alpha: float, sigma: float) -> np.ndarray:
    if sigma == 0:
        raise DomainError("score is undefined at sigma = 0")
    return (alpha * np.asarray(x0hat) - np.asarray(x_t)) / (sigma * sigma)


def ddim_step(x, x0_pred, alpha_cur, sigma_cur, alpha_prev, sigma_prev):
    """First-order deterministic reverse update from ``t_cur`` to ``t_prev``."""
    if sigma_prev == 0:
        return alpha_prev * x0_pred
    return (sigma_prev / sigma_cur) * x + sigma_prev * (alpha_prev / sigma_prev - alpha_cur / sigma_cur) * x0_pred


ESTIMATOR_METHODS = ("ddim_multistep", "tweedie_single")


@dataclass(frozen=True)
class EstimatorConfig:
    K: int = 5
    method: str = "ddim_multistep"

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 1:
            raise InvalidArgument(f"K must be a positive integer, got {self.K}")
        if self.method not in ESTIMATOR_METHODS:
            raise InvalidArgument(f"unknown estimator method {self.method!r}")


def ddim_multistep_x0(model, x_t, t: float, s: NoiseSchedule, cfg: EstimatorConfig = EstimatorConfig()):
    """Run ``cfg.K`` DDIM steps on a uniform sub-grid from ``t`` down to 0."""
    if not t > 0:
        raise InvalidArgument(f"multi-step estimation needs t > 0, got {t}")
    if cfg.method == "tweedie_single":
        return posterior_mean_x0(model, x_t, t, s)
    taus = t * np.arange(cfg.K + 1) / cfg.K
    alphas, sigmas = s.alpha_sigma(taus)
    x = as_tensor(x_t, "x_t")
    for k in range(cfg.K, 0, -1):
        x0 = posterior_mean_x0(model, x, taus[k], s)
        x = ddim_step(x, x0, alphas[k], sigmas[k], alphas[k - 1], sigmas[k - 1])
    return x


estimate_x0 = ddim_multistep_x0
