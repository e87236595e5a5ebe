"""Robust diffusion-based solvers for inverse problems with outlier-corrupted measurements."""

from .core import RngStream, as_tensor
from .degrade import CorruptionSpec, corrupt_measurement
from .denoiser import EstimatorConfig, GaussianPrior, GMMPrior, ddim_multistep_x0, posterior_mean_x0, score_from_prediction
from .errors import (
    ConfigError,
    DegenerateDirection,
    DomainError,
    FormatError,
    InvalidArgument,
    NumericalFailure,
    UnsupportedOperation,
)
from .inner import CgConfig, CgState, GdConfig, cg_step_size, fletcher_reeves_beta, robust_cg_inner, robust_gd_inner
from .metrics import MetricReport, evaluate, psnr, ssim
from .operators import (
    Conv2d,
    Downsample,
    Inpaint,
    MatrixOperator,
    NonlinearSatBlur,
    build_operator,
    jvp_finite_difference,
    op_apply,
    op_vjp,
)
from .refine import RefineParams, gamma_schedule, refine_measurement
from .robust_loss import RobustObjectiveParams, huber_loss, huber_objective, irls_weights, robust_objective_and_gradient
from .sampler import SampleTrace, SolverConfig, run_sampler
from .schedule import NoiseSchedule, TimeGrid, build_time_grid, schedule_eval

__version__ = "0.1.0"

__all__ = [
    "RngStream",
    "as_tensor",
    "CorruptionSpec",
    "corrupt_measurement",
    "EstimatorConfig",
    "GaussianPrior",
    "GMMPrior",
    "ddim_multistep_x0",
    "posterior_mean_x0",
    "score_from_prediction",
    "ConfigError",
    "DegenerateDirection",
    "DomainError",
    "FormatError",
    "InvalidArgument",
    "NumericalFailure",
    "UnsupportedOperation",
    "CgConfig",
    "CgState",
    "GdConfig",
    "cg_step_size",
    "fletcher_reeves_beta",
    "robust_cg_inner",
    "robust_gd_inner",
    "MetricReport",
    "evaluate",
    "psnr",
    "ssim",
    "Conv2d",
    "Downsample",
    "Inpaint",
    "MatrixOperator",
    "NonlinearSatBlur",
    "build_operator",
    "jvp_finite_difference",
    "op_apply",
    "op_vjp",
    "RefineParams",
    "gamma_schedule",
    "refine_measurement",
    "RobustObjectiveParams",
    "huber_loss",
    "huber_objective",
    "irls_weights",
    "robust_objective_and_gradient",
    "SampleTrace",
    "SolverConfig",
    "run_sampler",
    "NoiseSchedule",
    "TimeGrid",
    "build_time_grid",
    "schedule_eval",
    "__version__",
]
