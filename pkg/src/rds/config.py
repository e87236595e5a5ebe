"""Experiment configuration: parsing, validation and object construction.

A config is a JSON or TOML document. Every table is closed: unknown keys
are rejected with a :class:`~rds.errors.ConfigError` naming the dotted
field path. ``RDS_SEED`` in the environment overrides the top-level seed.
"""

from __future__ import annotations

import copy
import json
import math
import os
from pathlib import Path
from typing import Mapping

import numpy as np

from .denoiser import EstimatorConfig, GaussianPrior, GMMPrior
from .errors import ConfigError, InvalidArgument
from .inner import CgConfig, GdConfig
from .operators import build_operator
from .schedule import NoiseSchedule, build_time_grid
from .sampler import SolverConfig

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib

__all__ = ["DEFAULTS", "TASK_OPERATORS", "METHODS", "load_config", "validate_config", "testbed_mean"]

TASK_OPERATORS = {
    "super_resolution": {"kind": "downsample", "factor": 4},
    "inpainting": {"kind": "inpaint", "mask_ratio": 0.7, "seed": 7},
    "gaussian_deblur": {"kind": "gaussian_blur", "size": 9, "std": 1.5},
    "motion_deblur": {"kind": "motion_blur", "size": 9, "std": 0.5},
    "nonlinear_deblur": {"kind": "nonlinear_blur", "size": 9, "std": 1.5, "gain": 3.0},
}

METHODS = ("robust_gd", "robust_cg", "l2_gd", "l2_cg")

# Desk-scale testbed: 32x32 signals drawn from a Gaussian prior around a
# smooth pattern. The r_t rule is chosen so that the data term dominates the
# prior term through most of the trajectory without swamping the Huber knee.
DEFAULTS: dict = {
    "task": "inpainting",
    "shape": [32, 32],
    "methods": ["robust_cg", "l2_cg"],
    "repeat": 1,
    "seed": 0,
    "output_dir": "rds-out",
    "workers": 1,
    "save_tensors": True,
    "save_previews": False,
    "record_timing": False,
    "ground_truth": None,
    "operator": None,
    "corruption": {"sigma": 0.05, "rho": 0.10, "xi": -1.0},
    "prior": {"kind": "gaussian", "mean": "pattern", "std": 0.1},
    "schedule": {"kind": "vp-linear", "T": 1.0, "beta_min": 0.1, "beta_max": 28.0, "s": 0.008},
    "solver": {
        "N": 50,
        "delta": 0.02,
        "sigma": None,
        "r_rule": "constant",
        "r_scale": 10.0,
        "spacing": "polynomial",
        "spacing_p": 2.0,
        "gd": {"J": 100, "eta_x": 1e-4},
        "cg": {"J": 100, "eta": 1e-4, "numerator": "gTg"},
        "estimator": {"K": 5, "method": "ddim_multistep"},
    },
}

_PRIOR_KEYS = {
    "gaussian": {"kind", "mean", "std", "var"},
    "gmm": {"kind", "components", "std", "seed", "amplitude", "smoothness", "weights"},
    "external": {"kind", "command", "std"},
}


def _merge(base: dict, override: Mapping, path: str) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        where = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(where, "unknown key")
        if isinstance(base[key], dict) and key not in ("operator", "prior"):
            if not isinstance(value, Mapping):
                raise ConfigError(where, "expected a table")
            out[key] = _merge(base[key], value, where)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _require(cond, field, message):
    if not cond:
        raise ConfigError(field, message)


def validate_config(raw: Mapping) -> dict:
    """Merge ``raw`` over :data:`DEFAULTS` and validate every field."""
    cfg = _merge(DEFAULTS, raw, "")
    _require(cfg["task"] in TASK_OPERATORS, "task", f"must be one of {sorted(TASK_OPERATORS)}")
    shape = cfg["shape"]
    _require(
        isinstance(shape, list) and len(shape) in (1, 2) and all(isinstance(s, int) and s > 0 for s in shape),
        "shape",
        "must be a list of one or two positive integers",
    )
    methods = cfg["methods"]
    _require(isinstance(methods, list) and methods, "methods", "must be a non-empty list")
    for m in methods:
        _require(m in METHODS, "methods", f"unknown method {m!r}; expected one of {METHODS}")
    _require(isinstance(cfg["repeat"], int) and cfg["repeat"] >= 1, "repeat", "must be a positive integer")
    _require(isinstance(cfg["seed"], int) and 0 <= cfg["seed"] < 2**63, "seed", "must be a non-negative integer")
    _require(isinstance(cfg["workers"], int) and cfg["workers"] >= 1, "workers", "must be a positive integer")

    op_spec = dict(TASK_OPERATORS[cfg["task"]])
    if cfg["operator"] is not None:
        _require(isinstance(cfg["operator"], Mapping), "operator", "expected a table")
        if "kind" in cfg["operator"] and cfg["operator"]["kind"] != op_spec["kind"]:
            op_spec = {}
        op_spec.update(cfg["operator"])
    cfg["operator"] = op_spec
    ratio = op_spec.get("mask_ratio")
    if ratio is not None:
        _require(isinstance(ratio, (int, float)) and 0 <= ratio < 1, "operator.mask_ratio", f"must lie in [0, 1), got {ratio}")
    size = op_spec.get("size")
    if size is not None:
        _require(isinstance(size, int) and size > 0 and size % 2 == 1, "operator.size", f"must be a positive odd integer, got {size}")
    factor = op_spec.get("factor")
    if factor is not None:
        _require(isinstance(factor, int) and factor >= 1, "operator.factor", f"must be a positive integer, got {factor}")

    corr = cfg["corruption"]
    _require(isinstance(corr["sigma"], (int, float)) and corr["sigma"] >= 0, "corruption.sigma", "must be non-negative")
    _require(isinstance(corr["rho"], (int, float)) and 0 <= corr["rho"] < 1, "corruption.rho", "must lie in [0, 1)")
    _require(isinstance(corr["xi"], (int, float)) and math.isfinite(corr["xi"]), "corruption.xi", "must be finite")

    prior = cfg["prior"]
    _require(isinstance(prior, Mapping) and prior.get("kind") in _PRIOR_KEYS, "prior.kind", f"must be one of {sorted(_PRIOR_KEYS)}")
    for key in prior:
        _require(key in _PRIOR_KEYS[prior["kind"]], f"prior.{key}", "unknown key")
    if prior["kind"] == "external":
        _require(isinstance(prior.get("command"), (str, list)), "prior.command", "external priors need a command")
        _require(cfg["ground_truth"] is not None, "ground_truth", "external priors need ground-truth files")
    if "std" in prior:
        _require(isinstance(prior["std"], (int, float)) and prior["std"] > 0, "prior.std", "must be positive")

    sol = cfg["solver"]
    _require(isinstance(sol["N"], int) and sol["N"] >= 1, "solver.N", "must be a positive integer")
    _require(isinstance(sol["delta"], (int, float)) and sol["delta"] > 0, "solver.delta", "must be positive")
    _require(sol["r_scale"] > 0, "solver.r_scale", "must be positive")
    _require(sol["r_rule"] in ("sigma", "constant"), "solver.r_rule", "must be 'sigma' or 'constant'")
    _require(sol["spacing"] in ("uniform", "polynomial"), "solver.spacing", "must be 'uniform' or 'polynomial'")
    if sol["sigma"] is not None:
        _require(sol["sigma"] >= 0, "solver.sigma", "must be non-negative")
    for section, cls in (("gd", GdConfig), ("cg", CgConfig), ("estimator", EstimatorConfig)):
        try:
            cls(**sol[section])
        except (InvalidArgument, TypeError) as exc:
            raise ConfigError(f"solver.{section}", str(exc)) from None
    try:
        NoiseSchedule(**cfg["schedule"])
    except (InvalidArgument, TypeError) as exc:
        raise ConfigError("schedule", str(exc)) from None
    return cfg


def load_config(path, env: Mapping[str, str] | None = None) -> dict:
    """Read, merge and validate a JSON/TOML config file."""
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".toml":
        raw = tomllib.loads(text)
    else:
        raw = json.loads(text)
    env = os.environ if env is None else env
    if env.get("RDS_SEED"):
        try:
            raw["seed"] = int(env["RDS_SEED"])
        except ValueError:
            raise ConfigError("RDS_SEED", f"not an integer: {env['RDS_SEED']!r}") from None
    cfg = validate_config(raw)
    out = Path(cfg["output_dir"])
    if not out.is_absolute():
        cfg["output_dir"] = str(path.parent / out)
    return cfg


def testbed_mean(shape) -> np.ndarray:
    """Smooth separable pattern with amplitude 0.5 used as the default prior mean."""
    if len(shape) == 1:
        u = np.arange(shape[0]) / shape[0]
        return 0.5 * np.sin(2 * np.pi * u)
    i, j = np.meshgrid(np.arange(shape[0]) / shape[0], np.arange(shape[1]) / shape[1], indexing="ij")
    return 0.5 * np.sin(2 * np.pi * i) * np.cos(2 * np.pi * j)


def build_prior(cfg: Mapping):
    """Instantiate the configured prior (the external kind returns an ``ExternalModel``)."""
    from .core import RngStream
    from .tensor_io import load_tensor

    prior, shape = cfg["prior"], tuple(cfg["shape"])
    kind = prior["kind"]
    if kind == "gaussian":
        mean = prior.get("mean", "pattern")
        if mean == "pattern":
            mean = testbed_mean(shape)
        elif isinstance(mean, str):
            mean = load_tensor(mean)
        mean = np.broadcast_to(np.asarray(mean, dtype=np.float64), shape).copy()
        var = prior["var"] if "var" in prior else prior.get("std", 0.1) ** 2
        return GaussianPrior(mean, np.broadcast_to(np.asarray(var, dtype=np.float64), shape).copy())
    if kind == "gmm":
        k = int(prior.get("components", 4))
        rng = RngStream(int(prior.get("seed", 0)))
        amp = float(prior.get("amplitude", 0.5))
        smooth = float(prior.get("smoothness", 4.0))
        means = np.stack([_smooth_field(rng.derive(c), shape, smooth, amp) for c in range(k)])
        weights = np.asarray(prior.get("weights", [1.0 / k] * k), dtype=np.float64)
        return GMMPrior(weights, means, prior.get("std", 0.1) ** 2)
    from .external import ExternalModel

    return ExternalModel(prior["command"])


def _smooth_field(rng, shape, width, amplitude):
    from .operators import gaussian_kernel, _convolve

    field = rng.normal(shape)
    if len(shape) == 2:
        size = 2 * int(math.ceil(2 * width)) + 1
        field = _convolve(field, gaussian_kernel(size, width), "replicate")
    peak = np.max(np.abs(field))
    return amplitude * field / peak if peak > 0 else field


def build_components(cfg: Mapping, method: str):
    """Operator, schedule, grid and solver config for one method of an experiment."""
    sol = cfg["solver"]
    op = build_operator(cfg["operator"], cfg["shape"])
    schedule = NoiseSchedule(**cfg["schedule"])
    grid = build_time_grid(sol["N"], schedule.T, sol["spacing"], sol["spacing_p"])
    inner = CgConfig(**sol["cg"]) if method.endswith("_cg") else GdConfig(**sol["gd"])
    delta = math.inf if method.startswith("l2_") else float(sol["delta"])
    sigma = cfg["corruption"]["sigma"] if sol["sigma"] is None else sol["sigma"]
    solver = SolverConfig(
        N=sol["N"],
        inner=inner,
        delta=delta,
        sigma=float(sigma),
        r_rule=sol["r_rule"],
        r_scale=float(sol["r_scale"]),
        estimator=EstimatorConfig(**sol["estimator"]),
    )
    return op, schedule, grid, solver
