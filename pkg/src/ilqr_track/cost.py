"""Quadratic tracking cost and its derivatives.

    J = sum_k 1/2 (e_x' Q e_x + e_u' R e_u) + 1/2 e_N' Qf e_N

with e_x = x - x_ref (angle components wrapped) and e_u = u - u_ref, or
e_u = u when ``control_deviation`` is off (regulator form).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence, Tuple

import numpy as np

from .dynamics import THETA, DoubleMatrix
from .path import wrap_angle

ROBOT_ANGLES: Tuple[int, ...] = (THETA,)


def _frozen(a) -> DoubleMatrix:
    arr = np.array(a, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class CostWeights:
    Q: DoubleMatrix
    R: DoubleMatrix
    Qf: DoubleMatrix
    control_deviation: bool = True

    def __post_init__(self) -> None:
        for name in ("Q", "R", "Qf"):
            m = _frozen(getattr(self, name))
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise ValueError(f"{name} must be square, got shape {m.shape}")
            if not np.all(np.isfinite(m)):
                raise ValueError(f"{name} has non-finite entries")
            if not np.allclose(m, m.T, rtol=0.0, atol=1e-12 * max(1.0, np.abs(m).max())):
                raise ValueError(f"{name} must be symmetric")
            object.__setattr__(self, name, m)
        if self.Q.shape != self.Qf.shape:
            raise ValueError("Q and Qf must have the same shape")
        tol = 1e-12 * max(1.0, np.abs(self.Q).max(), np.abs(self.Qf).max())
        if np.linalg.eigvalsh(self.Q).min() < -tol or np.linalg.eigvalsh(self.Qf).min() < -tol:
            raise ValueError("Q and Qf must be positive semi-definite")
        if np.linalg.eigvalsh(self.R).min() <= 0.0:
            raise ValueError("R must be positive definite")

    @classmethod
    def from_diagonals(cls, q: Sequence[float], r: Sequence[float], qf: Sequence[float] = None, **kwargs) -> "CostWeights":
        q = np.asarray(q, dtype=np.float64)
        qf = 10.0 * q if qf is None else np.asarray(qf, dtype=np.float64)
        return cls(np.diag(q), np.diag(np.asarray(r, dtype=np.float64)), np.diag(qf), **kwargs)

    @classmethod
    def default(cls) -> "CostWeights":
        return cls.from_diagonals([10.0, 10.0, 1.0, 0.1, 0.1, 0.0, 0.0], [1.0, 1.0])

    def scaled(self, factor: float) -> "CostWeights":
        return CostWeights(self.Q * factor, self.R * factor, self.Qf * factor, self.control_deviation)


class Reference(NamedTuple):
    """Per-step reference: ``states`` (N, n) and ``controls`` (N-1, m)."""

    states: DoubleMatrix
    controls: DoubleMatrix


class CostDerivatives(NamedTuple):
    l_x: DoubleMatrix
    l_u: DoubleMatrix
    l_xx: DoubleMatrix
    l_uu: DoubleMatrix
    l_ux: DoubleMatrix


def state_error(x, x_ref, angle_indices: Sequence[int] = ROBOT_ANGLES) -> DoubleMatrix:
    """``x - x_ref`` along the last axis, with angle components wrapped into [-pi, pi)."""
    e = np.asarray(x, dtype=np.float64) - np.asarray(x_ref, dtype=np.float64)
    if len(angle_indices):
        e[..., list(angle_indices)] = wrap_angle(e[..., list(angle_indices)])
    return e


def control_error(u, u_ref, w: CostWeights) -> DoubleMatrix:
    u = np.asarray(u, dtype=np.float64)
    if not w.control_deviation:
        return u.copy()
    return u - np.asarray(u_ref, dtype=np.float64)


def running_cost(x, u, x_ref, u_ref, w: CostWeights, angle_indices: Sequence[int] = ROBOT_ANGLES) -> float:
    ex = state_error(x, x_ref, angle_indices)
    eu = control_error(u, u_ref, w)
    return float(0.5 * ex @ w.Q @ ex + 0.5 * eu @ w.R @ eu)


def final_cost(x_N, x_star, w: CostWeights, angle_indices: Sequence[int] = ROBOT_ANGLES) -> float:
    e = state_error(x_N, x_star, angle_indices)
    return float(0.5 * e @ w.Qf @ e)


def _check_lengths(X, U, ref) -> Tuple[DoubleMatrix, DoubleMatrix]:
    X = np.asarray(X, dtype=np.float64)
    U = np.asarray(U, dtype=np.float64)
    n_ref = len(ref.states)
    if len(X) != len(U) + 1 or len(X) != n_ref or len(ref.controls) != len(U):
        raise ValueError(
            f"inconsistent lengths: {len(X)} states, {len(U)} controls, "
            f"{n_ref} reference states, {len(ref.controls)} reference controls"
        )
    return X, U


def step_costs(X, U, ref, w: CostWeights, angle_indices: Sequence[int] = ROBOT_ANGLES) -> DoubleMatrix:
    """Per-step costs: N-1 running costs followed by the final cost."""
    X, U = _check_lengths(X, U, ref)
    ex = state_error(X, ref.states, angle_indices)
    eu = control_error(U, ref.controls, w)
    out = np.empty(len(X))
    out[:-1] = 0.5 * np.einsum("ki,ij,kj->k", ex[:-1], w.Q, ex[:-1]) + 0.5 * np.einsum("ki,ij,kj->k", eu, w.R, eu)
    out[-1] = 0.5 * ex[-1] @ w.Qf @ ex[-1]
    return out


def total_cost(X, U, ref, w: CostWeights, angle_indices: Sequence[int] = ROBOT_ANGLES) -> float:
    return float(step_costs(X, U, ref, w, angle_indices).sum())


def cost_to_go(X, U, ref, w: CostWeights, t: int, angle_indices: Sequence[int] = ROBOT_ANGLES) -> float:
    """Cost accumulated from step ``t`` (0 <= t <= N-1) to the end."""
    costs = step_costs(X, U, ref, w, angle_indices)
    if not 0 <= t < len(costs):
        raise ValueError(f"t must lie in [0, {len(costs) - 1}], got {t}")
    return float(costs[t:].sum())


def cost_derivatives(x, u, x_ref, u_ref, w: CostWeights, angle_indices: Sequence[int] = ROBOT_ANGLES) -> CostDerivatives:
    ex = state_error(x, x_ref, angle_indices)
    eu = control_error(u, u_ref, w)
    return CostDerivatives(
        l_x=w.Q @ ex,
        l_u=w.R @ eu,
        l_xx=np.array(w.Q),
        l_uu=np.array(w.R),
        l_ux=np.zeros((len(eu), len(ex))),
    )


def final_cost_derivatives(x_N, x_star, w: CostWeights, angle_indices: Sequence[int] = ROBOT_ANGLES) -> Tuple[DoubleMatrix, DoubleMatrix]:
    """Gradient and Hessian of the final cost."""
    e = state_error(x_N, x_star, angle_indices)
    return w.Qf @ e, np.array(w.Qf)
