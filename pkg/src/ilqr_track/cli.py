"""Command line entry point: ``ilqr-track {path generate, run, compare}``.

Exit codes: 0 success (also when iLQR did not converge; the report says so),
1 configuration error, 2 I/O error.
"""

from __future__ import annotations

import logging
import sys
from pathlib import Path
from typing import Optional

import click

from .config import ConfigError, ExperimentConfig, load_config
from .harness import (
    gnuplot_script,
    run_compare,
    run_experiment,
    write_json,
    write_trajectory_csv,
)
from .path import write_path_csv

EXIT_CONFIG = 1
EXIT_IO = 2

logger = logging.getLogger("ilqr_track")


def _fail(code: int, message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load(config: Optional[str], seed: Optional[int]) -> ExperimentConfig:
    try:
        cfg = load_config(config) if config else ExperimentConfig()
    except ConfigError as err:
        _fail(EXIT_CONFIG, f"invalid config: {err}")
    except OSError as err:
        _fail(EXIT_IO, f"cannot read config: {err}")
    return cfg if seed is None else cfg.with_seed(seed)


def _build_path(cfg: ExperimentConfig):
    try:
        return cfg.path.build(cfg.base_dir)
    except OSError as err:
        _fail(EXIT_IO, f"cannot read path file: {err}")
    except ValueError as err:
        _fail(EXIT_CONFIG, f"invalid path: {err}")


def _out_dir(out: str) -> Path:
    path = Path(out)
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        _fail(EXIT_IO, f"cannot create output directory: {err}")
    return path


def _common(f):
    f = click.option("--seed", type=int, default=None, help="Override the perturbation seed.")(f)
    f = click.option("--out", "out", required=True, type=click.Path(file_okay=False), help="Output directory.")(f)
    f = click.option("--config", "config", type=click.Path(dir_okay=False), default=None, help="JSON config file.")(f)
    return f


@click.group()
@click.option("-v", "--verbose", count=True, help="Increase log verbosity.")
def main(verbose: int) -> None:
    """iLQR / time-varying LQR path tracking for a differential-drive robot."""
    logging.basicConfig(level=logging.WARNING - 10 * min(verbose, 2), format="%(levelname)s %(name)s: %(message)s")


@main.group()
def path() -> None:
    """Reference path utilities."""


@path.command("generate")
@_common
def path_generate(config: Optional[str], out: str, seed: Optional[int]) -> None:
    """Write the configured bell path as CSV (s,x,y,theta)."""
    cfg = _load(config, seed)
    ref = _build_path(cfg)
    out_dir = _out_dir(out)
    try:
        write_path_csv(ref, out_dir / "path.csv")
    except OSError as err:
        _fail(EXIT_IO, str(err))
    click.echo(f"wrote {out_dir / 'path.csv'} ({len(ref)} points)")


@main.command()
@_common
@click.option("--plot-script", is_flag=True, help="Also write a gnuplot script.")
def run(config: Optional[str], out: str, seed: Optional[int], plot_script: bool) -> None:
    """Run the configured controller(s) once and write trajectories and report.json."""
    cfg = _load(config, seed)
    ref = _build_path(cfg)
    result = run_experiment(cfg, ref)
    out_dir = _out_dir(out)
    try:
        files = []
        for name, res in result.results.items():
            fname = f"trajectory_{name}.csv"
            write_trajectory_csv(out_dir / fname, res.X, res.U, ref)
            files.append(fname)
        report = result.report()
        for name, fname in zip(result.results, files):
            report["controllers"][name]["trajectory_csv"] = fname
        write_json(out_dir / "report.json", report)
        if plot_script:
            (out_dir / "plot.gp").write_text(gnuplot_script(files))
    except OSError as err:
        _fail(EXIT_IO, str(err))

    for name, res in result.results.items():
        status = ""
        if name == "ilqr":
            status = f"  converged={res.extra['converged']} iterations={res.extra['iterations']}"
        click.echo(f"{name:5s} cost={res.total_cost:.6g} pos_rmse={res.metrics.pos_rmse:.4g} m{status}")


@main.command()
@_common
@click.option("--sweep-n", default="", help="Comma-separated n_points values to sweep at fixed dt*N.")
@click.option("--plot-script", is_flag=True, help="Also write a gnuplot script.")
def compare(config: Optional[str], out: str, seed: Optional[int], sweep_n: str, plot_script: bool) -> None:
    """Run baseline and candidate on identical problems and report the deltas."""
    cfg = _load(config, seed)
    try:
        sweep = [int(v) for v in sweep_n.split(",") if v.strip()]
        if sweep and cfg.path.csv is not None:
            raise ValueError("a sweep needs the generated bell path, not a CSV path")
        for n in sweep:
            cfg.with_points(n, cfg.path.params.dt)
    except ValueError as err:
        _fail(EXIT_CONFIG, f"invalid --sweep-n: {err}")
    ref = _build_path(cfg)
    result = run_compare(cfg, sweep, ref)
    out_dir = _out_dir(out)
    base, cand = result.nominal
    try:
        files = []
        for role, res in (("baseline", base), ("candidate", cand)):
            fname = f"trajectory_{role}_{res.name}.csv"
            write_trajectory_csv(out_dir / fname, res.X, res.U, ref)
            files.append(fname)
        write_json(out_dir / "compare.json", result.report())
        if plot_script:
            (out_dir / "plot.gp").write_text(gnuplot_script(files))
    except OSError as err:
        _fail(EXIT_IO, str(err))

    click.echo(f"{'case':14s} {'cost ' + base.name:>14s} {'cost ' + cand.name:>14s} {'d_cost':>12s} {'d_pos_rmse':>12s}")
    for case in result.cases:
        b, c, d = case["baseline"], case["candidate"], case["delta"]
        click.echo(f"{case['name']:14s} {b['total_cost']:14.6g} {c['total_cost']:14.6g} {d['total_cost']:12.4g} {d['pos_rmse']:12.4g}")
    for row in result.sweep:
        b, c, d = row["baseline"], row["candidate"], row["delta"]
        click.echo(
            f"{'n=' + str(row['n_points']):14s} {b['total_cost']:14.6g} {c['total_cost']:14.6g} "
            f"{d['total_cost']:12.4g} {d['pos_rmse']:12.4g}"
        )


if __name__ == "__main__":
    main()
