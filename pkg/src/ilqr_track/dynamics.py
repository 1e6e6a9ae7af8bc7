"""Discrete-time kinematics of a differential-drive robot.

State (7):   [x, y, theta, v, omega, dv, domega]
Control (2): [v_cmd, omega_cmd]

    x'      = x + v * cos(theta) * dt
    y'      = y + v * sin(theta) * dt
    theta'  = theta + omega * dt
    v'      = v_cmd
    omega'  = omega_cmd
    dv'     = v_cmd - v
    domega' = omega_cmd - omega

The pose rows use the stored velocities, so a command takes effect on the
pose one step after it is issued. Heading is kept unwrapped.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence, Tuple

import numpy as np
import numpy.typing as npt

DoubleMatrix = npt.NDArray[np.float64]

STATE_DIM = 7
CONTROL_DIM = 2
PX, PY, THETA, V, OMEGA, DV, DOMEGA = range(STATE_DIM)
DEFAULT_DT = 0.1


class RobotState(NamedTuple):
    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0
    v: float = 0.0
    omega: float = 0.0
    dv: float = 0.0
    domega: float = 0.0

    def as_array(self) -> DoubleMatrix:
        return np.array(self, dtype=np.float64)


class ControlInput(NamedTuple):
    v_cmd: float = 0.0
    omega_cmd: float = 0.0

    def as_array(self) -> DoubleMatrix:
        return np.array(self, dtype=np.float64)


def _as_vector(value, size: int, name: str) -> DoubleMatrix:
    arr = np.asarray(value, dtype=np.float64)
    if arr.shape != (size,):
        raise ValueError(f"{name} must have shape ({size},), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries: {arr}")
    return arr


def _check_dt(dt: float) -> float:
    if not (math.isfinite(dt) and dt > 0.0):
        raise ValueError(f"dt must be finite and positive, got {dt}")
    return float(dt)


def step(state, control, dt: float = DEFAULT_DT) -> DoubleMatrix:
    """Propagate one timestep. Raises ValueError on non-finite input."""
    s = _as_vector(state, STATE_DIM, "state")
    u = _as_vector(control, CONTROL_DIM, "control")
    dt = _check_dt(dt)
    x, y, theta, v, omega = s[PX], s[PY], s[THETA], s[V], s[OMEGA]
    return np.array(
        [
            x + v * math.cos(theta) * dt,
            y + v * math.sin(theta) * dt,
            theta + omega * dt,
            u[0],
            u[1],
            u[0] - v,
            u[1] - omega,
        ]
    )


def jacobian_x(state, control, dt: float = DEFAULT_DT) -> DoubleMatrix:
    """Analytic d(step)/d(state), shape (7, 7)."""
    s = _as_vector(state, STATE_DIM, "state")
    _as_vector(control, CONTROL_DIM, "control")
    dt = _check_dt(dt)
    theta, v = s[THETA], s[V]
    c, sn = math.cos(theta), math.sin(theta)
    A = np.zeros((STATE_DIM, STATE_DIM))
    A[PX, PX] = 1.0
    A[PX, THETA] = -v * sn * dt
    A[PX, V] = c * dt
    A[PY, PY] = 1.0
    A[PY, THETA] = v * c * dt
    A[PY, V] = sn * dt
    A[THETA, THETA] = 1.0
    A[THETA, OMEGA] = dt
    A[DV, V] = -1.0
    A[DOMEGA, OMEGA] = -1.0
    return A


def jacobian_u(state, control, dt: float = DEFAULT_DT) -> DoubleMatrix:
    """Analytic d(step)/d(control), shape (7, 2). Pose rows are zero."""
    _as_vector(state, STATE_DIM, "state")
    _as_vector(control, CONTROL_DIM, "control")
    _check_dt(dt)
    B = np.zeros((STATE_DIM, CONTROL_DIM))
    B[V, 0] = 1.0
    B[DV, 0] = 1.0
    B[OMEGA, 1] = 1.0
    B[DOMEGA, 1] = 1.0
    return B


def finite_difference_jacobians(
    func: Callable[[DoubleMatrix, DoubleMatrix], DoubleMatrix],
    x,
    u,
    eps: float = 1e-6,
) -> Tuple[DoubleMatrix, DoubleMatrix]:
    """Central-difference Jacobians of ``func(x, u)`` with respect to x and u."""
    if not eps > 0.0:
        raise ValueError(f"eps must be positive, got {eps}")
    x = np.asarray(x, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    n_out = np.asarray(func(x, u)).shape[0]

    A = np.empty((n_out, x.size))
    for j in range(x.size):
        xp, xm = x.copy(), x.copy()
        xp[j] += eps
        xm[j] -= eps
        A[:, j] = (func(xp, u) - func(xm, u)) / (2.0 * eps)

    B = np.empty((n_out, u.size))
    for j in range(u.size):
        up, um = u.copy(), u.copy()
        up[j] += eps
        um[j] -= eps
        B[:, j] = (func(x, up) - func(x, um)) / (2.0 * eps)
    return A, B


def fd_jacobians(state, control, dt: float = DEFAULT_DT, eps: float = 1e-6) -> Tuple[DoubleMatrix, DoubleMatrix]:
    """Finite-difference counterpart of ``jacobian_x``/``jacobian_u``."""
    if not eps > 0.0:
        raise ValueError(f"eps must be positive, got {eps}")
    _check_dt(dt)
    return finite_difference_jacobians(lambda s, u: step(s, u, dt), state, control, eps)


class DynamicsModel:
    """Discrete dynamics ``x' = f(x, u)`` as seen by the solvers.

    Subclasses implement :meth:`step`. :meth:`linearize` falls back to
    central finite differences when no analytic derivatives are provided.
    ``angle_indices`` lists state components that are angles; errors on
    those components are wrapped.
    """

    state_dim: int
    control_dim: int
    angle_indices: Tuple[int, ...] = ()

    def __init__(self, dt: float):
        self.dt = _check_dt(dt)

    def step(self, x: DoubleMatrix, u: DoubleMatrix) -> DoubleMatrix:
        raise NotImplementedError

    def with_dt(self, dt: float) -> "DynamicsModel":
        """Same model with a different timestep."""
        other = copy.copy(self)
        other.dt = _check_dt(dt)
        return other

    def linearize(self, x: DoubleMatrix, u: DoubleMatrix) -> Tuple[DoubleMatrix, DoubleMatrix]:
        return finite_difference_jacobians(self.step, x, u)

    def linearize_trajectory(self, X: DoubleMatrix, U: DoubleMatrix) -> Tuple[DoubleMatrix, DoubleMatrix]:
        """Stacked Jacobians along a trajectory, shapes (T, n, n) and (T, n, m)."""
        pairs = [self.linearize(X[i], U[i]) for i in range(len(U))]
        A = np.array([p[0] for p in pairs]).reshape(len(U), self.state_dim, self.state_dim)
        B = np.array([p[1] for p in pairs]).reshape(len(U), self.state_dim, self.control_dim)
        return A, B


class DiffDriveModel(DynamicsModel):
    state_dim = STATE_DIM
    control_dim = CONTROL_DIM
    angle_indices = (THETA,)

    def __init__(self, dt: float = DEFAULT_DT):
        super().__init__(dt)

    def step(self, x, u) -> DoubleMatrix:
        return step(x, u, self.dt)

    def linearize(self, x, u) -> Tuple[DoubleMatrix, DoubleMatrix]:
        return jacobian_x(x, u, self.dt), jacobian_u(x, u, self.dt)

    def linearize_trajectory(self, X: DoubleMatrix, U: DoubleMatrix) -> Tuple[DoubleMatrix, DoubleMatrix]:
        # Vectorized form of jacobian_x / jacobian_u; the per-point versions are the reference.
        T = len(U)
        X = np.asarray(X, dtype=np.float64)[:T]
        dt = self.dt
        theta, v = X[:, THETA], X[:, V]
        c, sn = np.cos(theta), np.sin(theta)
        A = np.zeros((T, STATE_DIM, STATE_DIM))
        A[:, PX, PX] = 1.0
        A[:, PX, THETA] = -v * sn * dt
        A[:, PX, V] = c * dt
        A[:, PY, PY] = 1.0
        A[:, PY, THETA] = v * c * dt
        A[:, PY, V] = sn * dt
        A[:, THETA, THETA] = 1.0
        A[:, THETA, OMEGA] = dt
        A[:, DV, V] = -1.0
        A[:, DOMEGA, OMEGA] = -1.0
        B = np.zeros((T, STATE_DIM, CONTROL_DIM))
        B[:, V, 0] = B[:, DV, 0] = 1.0
        B[:, OMEGA, 1] = B[:, DOMEGA, 1] = 1.0
        return A, B


class LinearModel(DynamicsModel):
    """Time-invariant ``x' = A x + B u``."""

    def __init__(self, A, B, dt: float = DEFAULT_DT):
        super().__init__(dt)
        self.A = np.array(A, dtype=np.float64)
        self.B = np.array(B, dtype=np.float64)
        self.state_dim, self.control_dim = self.B.shape
        if self.A.shape != (self.state_dim, self.state_dim):
            raise ValueError(f"A has shape {self.A.shape}, expected {(self.state_dim, self.state_dim)}")

    def step(self, x, u) -> DoubleMatrix:
        return self.A @ np.asarray(x, dtype=np.float64) + self.B @ np.asarray(u, dtype=np.float64)

    def with_dt(self, dt: float) -> "LinearModel":
        raise ValueError("LinearModel is already discretized; its timestep cannot be changed")

    def linearize(self, x, u) -> Tuple[DoubleMatrix, DoubleMatrix]:
        return self.A.copy(), self.B.copy()

    def linearize_trajectory(self, X, U) -> Tuple[DoubleMatrix, DoubleMatrix]:
        T = len(U)
        return np.broadcast_to(self.A, (T, *self.A.shape)), np.broadcast_to(self.B, (T, *self.B.shape))


def rollout(x0, controls: Sequence, model: DynamicsModel) -> DoubleMatrix:
    """States visited by applying ``controls`` from ``x0``; shape (len(controls) + 1, n)."""
    U = np.asarray(controls, dtype=np.float64)
    if U.ndim != 2 or len(U) == 0:
        raise ValueError("controls must be a non-empty sequence of control vectors")
    X = np.empty((len(U) + 1, model.state_dim))
    X[0] = np.asarray(x0, dtype=np.float64)
    for i in range(len(U)):
        X[i + 1] = model.step(X[i], U[i])
    return X


@dataclass(frozen=True, eq=False)
class Trajectory:
    """States X (N, n) paired with the controls U (N-1, m) that produced them."""

    X: DoubleMatrix
    U: DoubleMatrix

    def __post_init__(self) -> None:
        if len(self.X) != len(self.U) + 1:
            raise ValueError(f"need len(X) == len(U) + 1, got {len(self.X)} and {len(self.U)}")

    def __len__(self) -> int:
        return len(self.X)
