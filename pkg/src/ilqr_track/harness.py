"""Single runs and LQR-vs-iLQR comparisons, with CSV/JSON outputs.

Report schema (JSON), ``run``::

    {"schema": "ilqr_track.run/1", "config": {...}, "x0": [7 floats],
     "controllers": {"<name>": ControllerResult.to_dict()}, "wall_clock_s": float}

``compare``::

    {"schema": "ilqr_track.compare/1", "config": {...}, "baseline": str, "candidate": str,
     "cases": [{"name", "offset", "baseline", "candidate", "delta"}, ...],
     "sweep": [{"n_points", "dt", "baseline", "candidate", "delta"}, ...],
     "wall_clock_s": float}

Deltas are candidate minus baseline.
"""

from __future__ import annotations

import csv
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np

from .config import ExperimentConfig
from .cost import CostWeights, total_cost
from .dynamics import OMEGA, PX, PY, THETA, V, DiffDriveModel, DoubleMatrix
from .ilqr import solve
from .lqr import linearize_along, track, tv_lqr_gains
from .path import ReferencePath, TrackingMetrics, tracking_metrics

logger = logging.getLogger(__name__)

TRAJECTORY_CSV_HEADER = ("t", "x", "y", "theta", "v", "omega", "x_ref", "y_ref", "theta_ref", "u_v", "u_omega")
DELTA_KEYS = ("total_cost", "pos_rmse", "heading_rmse", "max_pos_err", "terminal_pos_err")


@dataclass(eq=False)
class ControllerResult:
    name: str
    X: DoubleMatrix
    U: DoubleMatrix
    total_cost: float
    metrics: TrackingMetrics
    duration_s: float
    extra: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "total_cost": self.total_cost,
            "metrics": self.metrics.as_dict(),
            "duration_s": self.duration_s,
            **self.extra,
        }


def run_controller(
    name: str,
    ref: ReferencePath,
    x0,
    weights: CostWeights,
    cfg: ExperimentConfig,
) -> ControllerResult:
    model = DiffDriveModel(ref.dt)
    start = time.perf_counter()
    if name == "ilqr":
        sol = solve(x0, ref.controls, ref, model, weights, cfg.solver)
        X, U = sol.X, sol.U
        extra = {
            "converged": sol.converged,
            "iterations": sol.iterations,
            "cost_history": list(sol.cost_history),
            "trace": [vars(r).copy() for r in sol.trace],
        }
    elif name == "lqr":
        K = tv_lqr_gains(linearize_along(ref.states, ref.controls, model), weights)
        traj = track(x0, ref, ref.controls, K, model, substeps=cfg.controller.lqr_substeps)
        X, U = traj.X, traj.U
        extra = {"substeps": cfg.controller.lqr_substeps}
    else:
        raise ValueError(f"unknown controller {name!r}")
    duration = time.perf_counter() - start
    return ControllerResult(
        name=name,
        X=X,
        U=U,
        total_cost=total_cost(X, U, ref, weights),
        metrics=tracking_metrics(X, ref),
        duration_s=duration,
        extra=extra,
    )


def initial_state(ref: ReferencePath, offset) -> DoubleMatrix:
    return ref.states[0] + np.asarray(offset, dtype=np.float64)


@dataclass(eq=False)
class RunResult:
    config: ExperimentConfig
    ref: ReferencePath
    x0: DoubleMatrix
    results: Dict[str, ControllerResult]
    wall_clock_s: float

    def report(self) -> Dict[str, Any]:
        return {
            "schema": "ilqr_track.run/1",
            "config": self.config.to_dict(),
            "x0": self.x0.tolist(),
            "controllers": {name: r.to_dict() for name, r in self.results.items()},
            "wall_clock_s": self.wall_clock_s,
        }


def run_experiment(cfg: ExperimentConfig, ref: Optional[ReferencePath] = None) -> RunResult:
    start = time.perf_counter()
    ref = cfg.path.build(cfg.base_dir) if ref is None else ref
    weights = cfg.weights.build()
    x0 = initial_state(ref, cfg.perturbation.initial_offset())
    results = {name: run_controller(name, ref, x0, weights, cfg) for name in cfg.controller.selected()}
    return RunResult(cfg, ref, x0, results, time.perf_counter() - start)


def _delta(baseline: ControllerResult, candidate: ControllerResult) -> Dict[str, float]:
    b = {"total_cost": baseline.total_cost, **baseline.metrics.as_dict()}
    c = {"total_cost": candidate.total_cost, **candidate.metrics.as_dict()}
    return {k: c[k] - b[k] for k in DELTA_KEYS}


def _pair(cfg: ExperimentConfig, ref: ReferencePath, offset) -> Dict[str, Any]:
    weights = cfg.weights.build()
    x0 = initial_state(ref, offset)
    base = run_controller(cfg.controller.baseline, ref, x0, weights, cfg)
    cand = base if cfg.controller.candidate == cfg.controller.baseline else run_controller(
        cfg.controller.candidate, ref, x0, weights, cfg
    )
    return {
        "offset": np.asarray(offset, dtype=float).tolist(),
        "baseline": base.to_dict(),
        "candidate": cand.to_dict(),
        "delta": _delta(base, cand),
        "_results": (base, cand),
    }


def fixed_duration_dt(cfg: ExperimentConfig, n_points: int) -> float:
    """Timestep that keeps dt * n_points equal to the configured value."""
    params = cfg.path.params
    return params.dt * params.n_points / n_points


@dataclass(eq=False)
class CompareResult:
    config: ExperimentConfig
    ref: ReferencePath
    cases: List[Dict[str, Any]]
    sweep: List[Dict[str, Any]]
    wall_clock_s: float

    @property
    def nominal(self):
        return self.cases[0]["_results"]

    def report(self) -> Dict[str, Any]:
        strip = lambda rows: [{k: v for k, v in row.items() if not k.startswith("_")} for row in rows]
        return {
            "schema": "ilqr_track.compare/1",
            "config": self.config.to_dict(),
            "baseline": self.config.controller.baseline,
            "candidate": self.config.controller.candidate,
            "cases": strip(self.cases),
            "sweep": strip(self.sweep),
            "wall_clock_s": self.wall_clock_s,
        }


def run_compare(
    cfg: ExperimentConfig,
    sweep_n: Sequence[int] = (),
    ref: Optional[ReferencePath] = None,
) -> CompareResult:
    """Nominal case, the fixed perturbation set, and an optional n_points sweep at fixed duration."""
    start = time.perf_counter()
    ref = cfg.path.build(cfg.base_dir) if ref is None else ref
    cases = [{"name": "nominal", **_pair(cfg, ref, cfg.perturbation.initial_offset())}]
    for i, offset in enumerate(cfg.perturbation.compare_set):
        cases.append({"name": f"perturbed_{i}", **_pair(cfg, ref, offset)})

    sweep = []
    for n in sweep_n:
        sub = cfg.with_points(n, fixed_duration_dt(cfg, n))
        sub_ref = sub.path.build(sub.base_dir)
        row = _pair(sub, sub_ref, cfg.perturbation.initial_offset())
        sweep.append({"n_points": int(n), "dt": sub.path.params.dt, **row})
    return CompareResult(cfg, ref, cases, sweep, time.perf_counter() - start)


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def write_trajectory_csv(filename, X, U, ref: ReferencePath) -> None:
    """One row per state; the final row has no control and carries nan."""
    X = np.asarray(X)
    U = np.asarray(U)
    R = ref.states
    with open(filename, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRAJECTORY_CSV_HEADER)
        for i in range(len(X)):
            u = U[i] if i < len(U) else (float("nan"), float("nan"))
            row = (
                i * ref.dt,
                X[i, PX], X[i, PY], X[i, THETA], X[i, V], X[i, OMEGA],
                R[i, PX], R[i, PY], R[i, THETA],
                u[0], u[1],
            )
            writer.writerow([_fmt(float(v)) for v in row])


def read_trajectory_csv(filename) -> Dict[str, DoubleMatrix]:
    with open(filename, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != TRAJECTORY_CSV_HEADER:
            raise ValueError(f"{filename}: unexpected header {reader.fieldnames}")
        rows = list(reader)
    return {k: np.array([float(r[k]) for r in rows]) for k in TRAJECTORY_CSV_HEADER}


def rescore_trajectory_csv(filename) -> TrackingMetrics:
    cols = read_trajectory_csv(filename)
    X = np.column_stack([cols["x"], cols["y"], cols["theta"]])
    R = np.column_stack([cols["x_ref"], cols["y_ref"], cols["theta_ref"]])
    return tracking_metrics(X, R)


def gnuplot_script(csv_files: Iterable[str]) -> str:
    files = list(csv_files)
    lines = [
        "set datafile separator ','",
        "set key autotitle columnhead",
        "set size ratio -1",
        "set xlabel 'x [m]'",
        "set ylabel 'y [m]'",
    ]
    plots = [f"'{files[0]}' using 7:8 with lines dashtype 2 title 'reference'"] if files else []
    plots += [f"'{f}' using 2:3 with lines title '{Path(f).stem}'" for f in files]
    if plots:
        lines.append("plot " + ", \\\n     ".join(plots))
    return "\n".join(lines) + "\n"


def write_json(filename, data: Dict[str, Any]) -> None:
    with open(filename, "w") as fh:
        json.dump(data, fh, indent=2, allow_nan=True)
        fh.write("\n")
