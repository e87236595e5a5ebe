"""Batch experiment runner producing ``results.csv`` tables."""

from __future__ import annotations

import copy
import csv
import itertools
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import astuple, dataclass
from pathlib import Path
from typing import List, Optional

from .config import build_components, build_prior, validate_config
from .core import RngStream
from .degrade import CorruptionSpec, corrupt_measurement
from .errors import ConfigError, DegenerateDirection, NumericalFailure
from .metrics import evaluate
from .sampler import run_sampler
from .tensor_io import load_tensor, save_pgm, save_tensor

__all__ = ["ResultRow", "run_experiment", "run_ablation", "write_results", "CSV_HEADER"]

CSV_HEADER = ["task", "method", "rho", "sigma", "seed", "psnr", "ssim", "mse", "wall_s"]


@dataclass
class ResultRow:
    task: str
    method: str
    rho: float
    sigma: float
    seed: int
    psnr: float
    ssim: float
    mse: float
    wall_s: float
    error: Optional[str] = None
    measured_wall_s: float = 0.0


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_results(rows: List[ResultRow], path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in rows:
            writer.writerow([_fmt(v) for v in astuple(row)[: len(CSV_HEADER)]])
    return path


def _ground_truth(cfg, prior, repeat_index, rng):
    gt = cfg["ground_truth"]
    if gt is None:
        return prior.sample(rng, tuple(cfg["shape"]))
    paths = gt if isinstance(gt, list) else [gt]
    return load_tensor(paths[repeat_index % len(paths)])


def _run_repeat(cfg, r):
    """All methods for repeat ``r``; methods share ground truth, measurement and sampler seed."""
    seed = cfg["seed"] + r
    root = RngStream(seed)
    prior = build_prior(cfg)
    out_dir = Path(cfg["output_dir"])
    corr = cfg["corruption"]
    rows = []
    try:
        x_true = _ground_truth(cfg, prior, r, root.derive(0))
        op = build_components(cfg, cfg["methods"][0])[0]
        y, _ = corrupt_measurement(op.apply(x_true), CorruptionSpec(corr["sigma"], corr["rho"], corr["xi"], seed), root.derive(1))
        if cfg["save_tensors"]:
            runs = out_dir / "runs"
            save_tensor(runs / f"truth_s{seed}.rtn", x_true, {"seed": seed, "kind": "ground_truth"})
            save_tensor(runs / f"measurement_s{seed}.rtn", y, {"seed": seed, "kind": "measurement", **corr})
        for method in cfg["methods"]:
            op, schedule, grid, solver = build_components(cfg, method)
            start = time.perf_counter()
            try:
                x_rec, _ = run_sampler(prior, y, op, solver, schedule, grid, rng=root.derive(2))
            except (NumericalFailure, DegenerateDirection, FloatingPointError) as exc:
                nan = float("nan")
                rows.append(ResultRow(cfg["task"], method, corr["rho"], corr["sigma"], seed, nan, nan, nan, 0.0, str(exc)))
                continue
            wall = time.perf_counter() - start
            rep = evaluate(x_rec, x_true)
            rows.append(
                ResultRow(
                    cfg["task"],
                    method,
                    float(corr["rho"]),
                    float(corr["sigma"]),
                    seed,
                    rep.psnr,
                    rep.ssim,
                    rep.mse,
                    wall if cfg["record_timing"] else 0.0,
                    measured_wall_s=wall,
                )
            )
            if cfg["save_tensors"]:
                save_tensor(runs / f"{method}_s{seed}.rtn", x_rec, {"seed": seed, "method": method, "task": cfg["task"]})
            if cfg["save_previews"] and x_rec.ndim == 2:
                save_pgm(out_dir / "previews" / f"{method}_s{seed}.pgm", x_rec)
    finally:
        if hasattr(prior, "close"):
            prior.close()
    return rows


def run_experiment(cfg) -> List[ResultRow]:
    """Run every (repeat, method) pair and write ``results.csv`` into ``output_dir``.

    ``cfg`` is a validated config dict (see :func:`rds.config.load_config`)
    or a raw mapping that is validated here. Failed solves keep their row
    with NaN metrics; the messages go to ``errors.csv``.
    """
    cfg = validate_config(cfg)
    out_dir = Path(cfg["output_dir"])
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        if cfg["save_tensors"]:
            (out_dir / "runs").mkdir(exist_ok=True)
        if cfg["save_previews"]:
            (out_dir / "previews").mkdir(exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out_dir}: {exc}") from exc

    repeats = range(cfg["repeat"])
    if cfg["workers"] > 1:
        with ProcessPoolExecutor(max_workers=cfg["workers"]) as pool:
            batches = list(pool.map(_run_repeat, itertools.repeat(cfg), repeats))
    else:
        batches = [_run_repeat(cfg, r) for r in repeats]
    rows = [row for batch in batches for row in batch]

    write_results(rows, out_dir / "results.csv")
    with open(out_dir / "timings.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["method", "seed", "wall_s"])
        for row in rows:
            writer.writerow([row.method, row.seed, repr(row.measured_wall_s)])
    failures = [row for row in rows if row.error]
    if failures:
        with open(out_dir / "errors.csv", "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["method", "seed", "error"])
            for row in failures:
                writer.writerow([row.method, row.seed, row.error])
    return rows


def _set_path(cfg: dict, dotted: str, value):
    node = cfg
    keys = dotted.split(".")
    for key in keys[:-1]:
        if key not in node:
            raise ConfigError(dotted, "unknown key")
        if node[key] is None:
            node[key] = {}
        node = node[key]
    if keys[-1] not in node and not (keys[0] in ("operator", "prior")):
        raise ConfigError(dotted, "unknown key")
    node[keys[-1]] = value


def _parse_value(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    if text.lower() in ("inf", "+inf"):
        return float("inf")
    return text


def parse_grid(items) -> dict:
    """``["solver.delta=0.01,0.02"]`` -> ``{"solver.delta": [0.01, 0.02]}``."""
    grid = {}
    for item in items:
        if "=" not in item:
            raise ConfigError(item, "grid entries look like param=v1,v2,...")
        key, values = item.split("=", 1)
        grid[key.strip()] = [_parse_value(v.strip()) for v in values.split(",") if v.strip()]
    return grid


def run_ablation(cfg: dict, grid: dict):
    """Run the experiment once per point of the Cartesian product of ``grid``.

    Each point writes to ``output_dir/<param=value,...>/`` and a combined
    ``ablation.csv`` (grid columns followed by the result columns) is written
    to ``output_dir``.
    """
    keys = list(grid)
    out_dir = Path(cfg["output_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    combined = []
    for values in itertools.product(*(grid[k] for k in keys)):
        point = copy.deepcopy(cfg)
        for key, value in zip(keys, values):
            _set_path(point, key, value)
        tag = ",".join(f"{k}={v}" for k, v in zip(keys, values))
        point["output_dir"] = str(out_dir / tag)
        for row in run_experiment(point):
            combined.append(list(values) + [_fmt(v) for v in astuple(row)[: len(CSV_HEADER)]])
    with open(out_dir / "ablation.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(keys + CSV_HEADER)
        writer.writerows(combined)
    return combined
