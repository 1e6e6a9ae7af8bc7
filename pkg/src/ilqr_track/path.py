"""Reference paths, nominal state/control sequences and tracking metrics."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Dict, Union

import numpy as np

from .dynamics import CONTROL_DIM, DV, DOMEGA, OMEGA, PX, PY, STATE_DIM, THETA, V, DoubleMatrix

TAU = 2.0 * math.pi
PATH_CSV_HEADER = ("s", "x", "y", "theta")


def _wrap_scalar(a: float) -> float:
    r = math.remainder(a, TAU)
    return -math.pi if r >= math.pi else r


def wrap_angle(a):
    """Map an angle (scalar or array) into [-pi, pi)."""
    arr = np.asarray(a, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"cannot wrap non-finite angle {a}")
    if arr.ndim == 0:
        return _wrap_scalar(float(arr))
    return np.array([_wrap_scalar(v) for v in arr.ravel()]).reshape(arr.shape)


@dataclass(frozen=True)
class BellPathParams:
    """Inclined bell (Gaussian bump) path. ``center`` is a fraction of ``length``."""

    length: float = 10.0  # [m]
    height: float = 2.0  # [m]
    center: float = 0.5
    width_sigma: float = 1.5  # [m]
    incline: float = 0.3  # [rad]
    n_points: int = 200
    dt: float = 0.1  # [s]

    def __post_init__(self) -> None:
        for name in ("length", "height", "center", "width_sigma", "incline", "dt"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.length <= 0.0:
            raise ValueError(f"length must be positive, got {self.length}")
        if self.width_sigma <= 0.0:
            raise ValueError(f"width_sigma must be positive, got {self.width_sigma}")
        if int(self.n_points) != self.n_points or self.n_points < 2:
            raise ValueError(f"n_points must be an integer >= 2, got {self.n_points}")
        if self.dt <= 0.0:
            raise ValueError(f"dt must be positive, got {self.dt}")


@dataclass(frozen=True, eq=False)
class ReferencePath:
    """Timestamped reference poses plus the nominal states and controls derived from them.

    ``states`` is the nominal state sequence (N, 7); ``controls`` the nominal
    control sequence (N-1, 2), where ``controls[k]`` drives point k to k+1.
    """

    points: DoubleMatrix
    headings: DoubleMatrix
    dt: float
    s: DoubleMatrix = None
    v_max: float = 2.0  # [m/s] only used for the spacing warning

    def __post_init__(self) -> None:
        points = np.array(self.points, dtype=np.float64)
        headings = np.array(self.headings, dtype=np.float64)
        if points.ndim != 2 or points.shape[1] != 2:
            raise ValueError(f"points must have shape (N, 2), got {points.shape}")
        if headings.shape != (len(points),):
            raise ValueError("need exactly one heading per point")
        if not (np.all(np.isfinite(points)) and np.all(np.isfinite(headings))):
            raise ValueError("path has non-finite entries")
        if not (math.isfinite(self.dt) and self.dt > 0.0):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.s is None:
            seg = np.hypot(*np.diff(points, axis=0).T)
            s = np.concatenate([[0.0], np.cumsum(seg)])
        else:
            s = np.array(self.s, dtype=np.float64)
            if s.shape != (len(points),):
                raise ValueError("need exactly one s value per point")
        for arr in (points, headings, s):
            arr.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "headings", headings)
        object.__setattr__(self, "s", s)

        if len(points) >= 2:
            spacing = np.hypot(*np.diff(points, axis=0).T).max()
            if spacing > self.v_max * self.dt:
                warnings.warn(
                    f"consecutive path points up to {spacing:.3g} m apart exceed v_max*dt = "
                    f"{self.v_max * self.dt:.3g} m",
                    stacklevel=2,
                )

    def __len__(self) -> int:
        return len(self.points)

    @cached_property
    def controls(self) -> DoubleMatrix:
        return nominal_controls(self)

    @cached_property
    def states(self) -> DoubleMatrix:
        return path_to_states(self)

    @property
    def duration(self) -> float:
        return (len(self) - 1) * self.dt


def generate_bell(params: BellPathParams = BellPathParams(), v_max: float = 2.0) -> ReferencePath:
    s = np.linspace(0.0, params.length, int(params.n_points))
    mu = params.center * params.length
    bump = params.height * np.exp(-((s - mu) ** 2) / (2.0 * params.width_sigma**2))
    c, sn = math.cos(params.incline), math.sin(params.incline)
    points = np.column_stack([c * s - sn * bump, sn * s + c * bump])
    # central differences inside, one-sided at the two ends
    dx = np.gradient(points[:, 0])
    dy = np.gradient(points[:, 1])
    headings = wrap_angle(np.arctan2(dy, dx))
    return ReferencePath(points=points, headings=headings, dt=params.dt, s=s, v_max=v_max)


def nominal_controls(path: ReferencePath) -> DoubleMatrix:
    """Speed from chord length and turn rate from wrapped heading change, per segment."""
    if len(path.points) < 2:
        raise ValueError("need at least two points to derive nominal controls")
    seg = np.diff(path.points, axis=0)
    u = np.empty((len(seg), CONTROL_DIM))
    u[:, 0] = np.hypot(seg[:, 0], seg[:, 1]) / path.dt
    u[:, 1] = wrap_angle(np.diff(path.headings)) / path.dt
    return u


def path_to_states(path: ReferencePath) -> DoubleMatrix:
    """Nominal state per point: pose from the path, velocities from the control that reached it."""
    u = nominal_controls(path)
    n = len(path.points)
    X = np.zeros((n, STATE_DIM))
    X[:, PX] = path.points[:, 0]
    X[:, PY] = path.points[:, 1]
    X[:, THETA] = path.headings
    X[1:, V] = u[:, 0]
    X[1:, OMEGA] = u[:, 1]
    X[1:, DV] = np.diff(np.concatenate([[0.0], u[:, 0]]))
    X[1:, DOMEGA] = np.diff(np.concatenate([[0.0], u[:, 1]]))
    return X


@dataclass(frozen=True)
class TrackingMetrics:
    pos_rmse: float
    heading_rmse: float
    max_pos_err: float
    terminal_pos_err: float

    def as_dict(self) -> Dict[str, float]:
        return {
            "pos_rmse": self.pos_rmse,
            "heading_rmse": self.heading_rmse,
            "max_pos_err": self.max_pos_err,
            "terminal_pos_err": self.terminal_pos_err,
        }


def tracking_metrics(X, ref) -> TrackingMetrics:
    """Position and heading errors of executed states ``X`` against ``ref``.

    ``ref`` is a ReferencePath or an array whose first three columns are (x, y, theta).
    """
    X = np.asarray(X, dtype=np.float64)
    R = ref.states if isinstance(ref, ReferencePath) else np.asarray(ref, dtype=np.float64)
    if X.ndim != 2 or R.ndim != 2 or len(X) != len(R):
        raise ValueError(f"length mismatch: {len(X)} executed states vs {len(R)} reference states")
    pos_err = np.hypot(X[:, PX] - R[:, PX], X[:, PY] - R[:, PY])
    head_err = wrap_angle(X[:, THETA] - R[:, THETA])
    return TrackingMetrics(
        pos_rmse=float(np.sqrt(np.mean(pos_err**2))),
        heading_rmse=float(np.sqrt(np.mean(head_err**2))),
        max_pos_err=float(pos_err.max()),
        terminal_pos_err=float(pos_err[-1]),
    )


def write_path_csv(path: ReferencePath, filename: Union[str, Path]) -> None:
    with open(filename, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(PATH_CSV_HEADER)
        for s, (x, y), th in zip(path.s, path.points, path.headings):
            writer.writerow([f"{v:.17g}" for v in (s, x, y, th)])


def read_path_csv(filename: Union[str, Path], dt: float, v_max: float = 2.0) -> ReferencePath:
    with open(filename, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != PATH_CSV_HEADER:
            raise ValueError(f"{filename}: expected header {','.join(PATH_CSV_HEADER)}, got {reader.fieldnames}")
        rows = [[float(row[k]) for k in PATH_CSV_HEADER] for row in reader]
    if len(rows) < 2:
        raise ValueError(f"{filename}: a path needs at least two points")
    data = np.array(rows)
    return ReferencePath(points=data[:, 1:3], headings=data[:, 3], dt=dt, s=data[:, 0], v_max=v_max)
