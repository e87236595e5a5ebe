"""Outer reverse-diffusion loop shared by Robust-GD and Robust-CG."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import List, Optional, Union

import numpy as np

from .core import RngStream, as_tensor
from .denoiser import EstimatorConfig, ddim_multistep_x0
from .errors import InvalidArgument, NumericalFailure
from .inner import CgConfig, GdConfig, robust_cg_inner, robust_gd_inner
from .operators import ForwardOperator
from .refine import RefineParams, gamma_schedule, refine_measurement
from .robust_loss import RobustObjectiveParams
from .schedule import NoiseSchedule, TimeGrid, build_time_grid

__all__ = ["SolverConfig", "StepRecord", "SampleTrace", "r_schedule", "run_sampler"]

R_RULES = ("sigma", "constant")


@dataclass(frozen=True)
class SolverConfig:
    """Hyperparameters of one reverse-diffusion solve.

    ``delta = inf`` turns the Huber fidelity into plain least squares.
    ``r_rule`` selects ``r_t = r_scale * sigma_t`` ("sigma") or
    ``r_t = r_scale`` ("constant").
    """

    N: int = 200
    inner: Union[GdConfig, CgConfig] = field(default_factory=CgConfig)
    delta: float = 0.02
    sigma: float = 0.05
    r_rule: str = "sigma"
    r_scale: float = 1.0
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    seed: int = 0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise InvalidArgument(f"N must be a positive integer, got {self.N}")
        if not isinstance(self.inner, (GdConfig, CgConfig)):
            raise InvalidArgument("inner must be a GdConfig or CgConfig")
        if not self.delta > 0:
            raise InvalidArgument("delta must be positive (use inf for least squares)")
        if not self.sigma >= 0:
            raise InvalidArgument("sigma must be non-negative")
        if self.r_rule not in R_RULES:
            raise InvalidArgument(f"r_rule must be one of {R_RULES}")
        if not self.r_scale > 0:
            raise InvalidArgument("r_scale must be positive")


def r_schedule(cfg: SolverConfig, sigma_t: float) -> float:
    if cfg.r_rule == "sigma":
        return cfg.r_scale * sigma_t
    return cfg.r_scale


@dataclass
class StepRecord:
    t: float
    objective_initial: float
    objective_first: float
    objective_final: float
    prior_gap: float
    wall_s: float


@dataclass
class SampleTrace:
    records: List[StepRecord] = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)


def run_sampler(
    model,
    y,
    op: ForwardOperator,
    cfg: SolverConfig,
    s: NoiseSchedule,
    grid: Optional[TimeGrid] = None,
    rng: Optional[RngStream] = None,
):
    """Reconstruct a signal from measurements ``y``; returns ``(x, trace)``.

    Each outer step estimates a clean signal from the current latent, refines
    the measurement, runs the configured inner solver and re-noises the
    result to the next (smaller) time.
    """
    y = as_tensor(y, "y")
    if y.shape != tuple(op.output_shape):
        raise InvalidArgument(f"measurement shape {y.shape} does not match operator output {op.output_shape}")
    if grid is None:
        grid = build_time_grid(cfg.N, s.T)
    if grid.N != cfg.N:
        raise InvalidArgument(f"time grid has {grid.N} steps, config asks for {cfg.N}")
    if abs(grid.T - s.T) > 1e-12:
        raise InvalidArgument("time grid must end at the schedule's terminal time")
    rng = RngStream(cfg.seed) if rng is None else rng
    alphas, sigmas = s.alpha_sigma(grid.times)
    shape = tuple(op.input_shape)
    inner = robust_cg_inner if isinstance(cfg.inner, CgConfig) else robust_gd_inner

    trace = SampleTrace()
    x = rng.normal(shape)
    for i in range(cfg.N, 0, -1):
        start = time.perf_counter()
        t = float(grid.times[i])
        x0hat = ddim_multistep_x0(model, x, t, s, cfg.estimator)
        if not np.all(np.isfinite(x0hat)):
            raise NumericalFailure("non-finite clean-signal estimate", step=i)
        gamma_t = gamma_schedule(t, s)
        _, ybar = refine_measurement(y, op.apply(x0hat), RefineParams(cfg.sigma, gamma_t))
        params = RobustObjectiveParams(r_schedule(cfg, float(sigmas[i])), gamma_t, cfg.delta)
        history: list = []
        try:
            x0bar = inner(x0hat, ybar, op, params, cfg.inner, history=history)
        except NumericalFailure as exc:
            raise NumericalFailure("inner solver diverged", iteration=exc.iteration, step=i) from exc
        trace.records.append(
            StepRecord(
                t=t,
                objective_initial=history[0],
                objective_first=history[1] if len(history) > 1 else history[0],
                objective_final=history[-1],
                prior_gap=float(np.linalg.norm(x0bar - x0hat)),
                wall_s=time.perf_counter() - start,
            )
        )
        x = alphas[i - 1] * x0bar + sigmas[i - 1] * rng.normal(shape)
    return x, trace
