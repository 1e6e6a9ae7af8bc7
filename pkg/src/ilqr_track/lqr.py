"""Time-varying LQR tracking baseline.

The model is linearized at every operating point of the nominal trajectory,
a finite-horizon discrete Riccati recursion produces one gain per point, and
the robot is driven with ``u = u_ff - K (x - x_ref)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .cost import CostWeights, state_error
from .dynamics import DoubleMatrix, DynamicsModel, Trajectory


@dataclass(frozen=True, eq=False)
class OperatingPoint:
    index: int
    x_op: DoubleMatrix
    u_op: DoubleMatrix
    A: DoubleMatrix
    B: DoubleMatrix


def linearize_along(ref_states, ref_controls, model: DynamicsModel) -> List[OperatingPoint]:
    X = np.asarray(ref_states, dtype=np.float64)
    U = np.asarray(ref_controls, dtype=np.float64)
    if len(X) != len(U) + 1:
        raise ValueError(f"need one more state than controls, got {len(X)} and {len(U)}")
    ops = []
    for i in range(len(U)):
        A, B = model.linearize(X[i], U[i])
        ops.append(OperatingPoint(i, X[i].copy(), U[i].copy(), A, B))
    return ops


def riccati_recursion(As, Bs, weights: CostWeights) -> Tuple[DoubleMatrix, DoubleMatrix]:
    """Backward Riccati sweep. Returns gains (T, m, n) and cost-to-go matrices P (T+1, n, n)."""
    As = np.asarray(As, dtype=np.float64)
    Bs = np.asarray(Bs, dtype=np.float64)
    T = len(As)
    n, m = Bs.shape[1], Bs.shape[2]
    Q, R = weights.Q, weights.R
    K = np.empty((T, m, n))
    P = np.empty((T + 1, n, n))
    P[T] = weights.Qf
    for i in range(T - 1, -1, -1):
        A, B, P_next = As[i], Bs[i], P[i + 1]
        PB = P_next @ B
        S = R + B.T @ PB
        try:
            L = np.linalg.cholesky(S)
        except np.linalg.LinAlgError:
            raise np.linalg.LinAlgError(f"R + B'PB not positive definite at step {i}") from None
        K[i] = np.linalg.solve(L.T, np.linalg.solve(L, PB.T @ A))
        P_i = Q + A.T @ P_next @ (A - B @ K[i])
        P_i = 0.5 * (P_i + P_i.T)
        # PSD up to roundoff for any valid weights
        assert np.linalg.eigvalsh(P_i).min() >= -1e-10 * max(1.0, np.abs(P_i).max()), f"P[{i}] lost PSD"
        P[i] = P_i
    return K, P


def tv_lqr_gains(ops: Sequence[OperatingPoint], weights: CostWeights) -> DoubleMatrix:
    """Feedback gains K_0 .. K_{N-2}, one per operating point."""
    if not ops:
        raise ValueError("need at least one operating point")
    K, _ = riccati_recursion([op.A for op in ops], [op.B for op in ops], weights)
    return K


def _interpolate_state(a: DoubleMatrix, b: DoubleMatrix, frac: float, angle_indices) -> DoubleMatrix:
    return a + frac * state_error(b, a, angle_indices)


def track(x0, ref, u_ff, gains, model: DynamicsModel, substeps: int = 1) -> Trajectory:
    """Closed-loop rollout of ``u = u_ff - K (x - x_ref)``.

    With ``substeps`` m > 1 the feedback is re-applied every dt/m against a
    linearly interpolated reference; states are reported on the original
    grid and each reported control is the mean of its m applied commands.
    """
    ref_X = np.asarray(ref.states, dtype=np.float64)
    U_ff = np.asarray(u_ff, dtype=np.float64)
    K = np.asarray(gains, dtype=np.float64)
    if len(ref_X) != len(U_ff) + 1 or len(K) != len(U_ff):
        raise ValueError(
            f"inconsistent lengths: {len(ref_X)} reference states, {len(U_ff)} controls, {len(K)} gains"
        )
    if int(substeps) != substeps or substeps < 1:
        raise ValueError(f"substeps must be a positive integer, got {substeps}")
    inner = model if substeps == 1 else model.with_dt(model.dt / substeps)
    angles = model.angle_indices

    X = np.empty((len(ref_X), model.state_dim))
    U = np.empty_like(U_ff)
    X[0] = np.asarray(x0, dtype=np.float64)
    for i in range(len(U_ff)):
        x = X[i]
        applied = np.zeros(model.control_dim)
        for j in range(substeps):
            x_ref = ref_X[i] if j == 0 else _interpolate_state(ref_X[i], ref_X[i + 1], j / substeps, angles)
            u = U_ff[i] - K[i] @ state_error(x, x_ref, angles)
            applied += u
            x = inner.step(x, u)
        U[i] = applied / substeps
        X[i + 1] = x
    return Trajectory(X, U)
