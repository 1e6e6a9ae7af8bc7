"""Iterative LQR with a regularized backward pass and a line-searched forward pass.

Only first-order dynamics derivatives (A_k, B_k) enter the backward pass;
the second-order tensor terms that distinguish DDP are left out.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, NamedTuple, Tuple

import numpy as np
from scipy.linalg import cho_solve

from .cost import CostDerivatives, CostWeights, final_cost_derivatives, state_error, total_cost
from .dynamics import DoubleMatrix, DynamicsModel, rollout

logger = logging.getLogger(__name__)


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    """Regularized Q_uu failed its Cholesky factorization at ``step``."""

    def __init__(self, step: int, mu: float):
        super().__init__(f"Q_uu not positive definite at step {step} (mu={mu:g})")
        self.step = step
        self.mu = mu


@dataclass(frozen=True)
class SolverOptions:
    max_iterations: int = 100
    convergence_threshold: float = 1e-6  # on |cost(U) - cost(U')|
    mu_init: float = 1e-6
    mu_min: float = 1e-8
    mu_max: float = 1e10
    mu_factor: float = 10.0
    alpha_schedule: Tuple[float, ...] = (1.0, 0.5, 0.25, 0.1, 0.05, 0.01)

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha_schedule", tuple(float(a) for a in self.alpha_schedule))
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            raise ValueError("max_iterations must be a positive integer")
        if not self.convergence_threshold > 0.0:
            raise ValueError("convergence_threshold must be positive")
        for name in ("mu_init", "mu_min", "mu_max"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive")
        if not self.mu_min <= self.mu_init <= self.mu_max:
            raise ValueError("need mu_min <= mu_init <= mu_max")
        if not self.mu_factor > 1.0:
            raise ValueError("mu_factor must exceed 1")
        alphas = self.alpha_schedule
        if not alphas or alphas[0] != 1.0:
            raise ValueError("alpha_schedule must start at 1.0")
        if any(b >= a for a, b in zip(alphas, alphas[1:])) or alphas[-1] <= 0.0:
            raise ValueError("alpha_schedule must be strictly descending within (0, 1]")


class QExpansion(NamedTuple):
    Q_x: DoubleMatrix
    Q_u: DoubleMatrix
    Q_xx: DoubleMatrix
    Q_uu: DoubleMatrix
    Q_ux: DoubleMatrix


class ValueExpansion(NamedTuple):
    V_x: DoubleMatrix
    V_xx: DoubleMatrix
    dV: float


@dataclass(frozen=True, eq=False)
class GainSchedule:
    k: DoubleMatrix  # (T, m) feedforward
    K: DoubleMatrix  # (T, m, n) feedback

    def __len__(self) -> int:
        return len(self.k)

    @classmethod
    def zeros(cls, horizon: int, state_dim: int, control_dim: int) -> "GainSchedule":
        return cls(np.zeros((horizon, control_dim)), np.zeros((horizon, control_dim, state_dim)))


@dataclass(frozen=True)
class IterationRecord:
    """One outer iteration: cost before, candidate cost, and what was done with it.

    ``expected_change`` is the backward-pass prediction for a full (alpha=1) step.
    """

    iteration: int
    mu: float
    cost: float
    candidate_cost: float
    alpha: float
    expected_change: float
    accepted: bool


@dataclass(frozen=True, eq=False)
class Solution:
    X: DoubleMatrix
    U: DoubleMatrix
    gains: GainSchedule
    cost_history: List[float]
    iterations: int
    converged: bool
    trace: List[IterationRecord] = field(default_factory=list)

    @property
    def cost(self) -> float:
        return self.cost_history[-1]


def q_expansion(l: CostDerivatives, A: DoubleMatrix, B: DoubleMatrix, V_x: DoubleMatrix, V_xx: DoubleMatrix) -> QExpansion:
    """Local quadratic model of cost-plus-value around one (x, u) pair (unregularized)."""
    VxxA = V_xx @ A
    VxxB = V_xx @ B
    return QExpansion(
        Q_x=l.l_x + A.T @ V_x,
        Q_u=l.l_u + B.T @ V_x,
        Q_xx=l.l_xx + A.T @ VxxA,
        Q_uu=l.l_uu + B.T @ VxxB,
        Q_ux=l.l_ux + B.T @ VxxA,
    )


def backward_pass(
    X,
    U,
    ref,
    model: DynamicsModel,
    weights: CostWeights,
    mu: float = 0.0,
) -> Tuple[GainSchedule, List[ValueExpansion]]:
    """Gains k(i), K(i) and value expansions for every step.

    Returns the gain schedule (length N-1) and N value expansions, the last
    being the final-cost boundary. Raises NotPositiveDefiniteError when
    Q_uu + mu*I cannot be Cholesky-factored.
    """
    X = np.asarray(X, dtype=np.float64)
    U = np.asarray(U, dtype=np.float64)
    if len(X) != len(U) + 1:
        raise ValueError(f"need len(X) == len(U) + 1, got {len(X)} and {len(U)}")
    if mu < 0.0:
        raise ValueError("mu must be non-negative")
    T, n, m = len(U), X.shape[1], U.shape[1]
    angles = model.angle_indices
    ref_X = np.asarray(ref.states, dtype=np.float64)
    ref_U = np.asarray(ref.controls, dtype=np.float64)

    As, Bs = model.linearize_trajectory(X, U)
    l_x = state_error(X[:-1], ref_X[:-1], angles) @ weights.Q
    l_u = (U - ref_U if weights.control_deviation else U) @ weights.R
    l_ux = np.zeros((m, n))

    V_x, V_xx = final_cost_derivatives(X[-1], ref_X[-1], weights, angles)
    values = [ValueExpansion(V_x, V_xx, 0.0)]
    k = np.empty((T, m))
    K = np.empty((T, m, n))
    reg = mu * np.eye(m)

    for i in range(T - 1, -1, -1):
        A, B = As[i], Bs[i]
        q = q_expansion(CostDerivatives(l_x[i], l_u[i], weights.Q, weights.R, l_ux), A, B, V_x, V_xx)
        try:
            L = np.linalg.cholesky(q.Q_uu + reg)
        except np.linalg.LinAlgError:
            raise NotPositiveDefiniteError(i, mu) from None
        sol = cho_solve((L, True), np.column_stack([q.Q_u, q.Q_ux]), check_finite=False)
        k_i = -sol[:, 0]
        K_i = -sol[:, 1:]
        k[i], K[i] = k_i, K_i

        # Written in terms of the applied policy so the model stays exact when mu > 0.
        Quu_k = q.Q_uu @ k_i
        dV = float(k_i @ q.Q_u + 0.5 * k_i @ Quu_k)
        V_x = q.Q_x + K_i.T @ Quu_k + K_i.T @ q.Q_u + q.Q_ux.T @ k_i
        V_xx = q.Q_xx + K_i.T @ q.Q_uu @ K_i + K_i.T @ q.Q_ux + q.Q_ux.T @ K_i
        V_xx = 0.5 * (V_xx + V_xx.T)
        values.append(ValueExpansion(V_x, V_xx, dV))

    values.reverse()
    return GainSchedule(k, K), values


def forward_pass(X, U, gains: GainSchedule, alpha: float, model: DynamicsModel) -> Tuple[DoubleMatrix, DoubleMatrix]:
    """Roll out ``u + alpha*k + K (x_new - x)`` from the original initial state."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    X = np.asarray(X, dtype=np.float64)
    U = np.asarray(U, dtype=np.float64)
    if len(gains) != len(U) or len(X) != len(U) + 1:
        raise ValueError("gain schedule, controls and states have inconsistent lengths")
    angles = model.angle_indices
    X_new = np.empty_like(X)
    U_new = np.empty_like(U)
    X_new[0] = X[0]
    for i in range(len(U)):
        dx = state_error(X_new[i], X[i], angles)
        U_new[i] = U[i] + alpha * gains.k[i] + gains.K[i] @ dx
        X_new[i + 1] = model.step(X_new[i], U_new[i])
    return X_new, U_new


def solve(
    x0,
    U_init,
    ref,
    model: DynamicsModel,
    weights: CostWeights,
    opts: SolverOptions = SolverOptions(),
) -> Solution:
    """Run iLQR from ``x0`` and the initial control guess ``U_init``.

    Each iteration runs a backward pass and tries the line-search steps in
    order, accepting the first that strictly lowers the cost (then mu is
    decreased). If none does, mu is increased and the backward pass is
    repeated. Stops when the cost change falls below the threshold
    (converged), or on max_iterations / mu > mu_max (not converged, best
    trajectory so far is returned).
    """
    U = np.array(U_init, dtype=np.float64)
    if U.ndim != 2 or U.shape[1] != model.control_dim:
        raise ValueError(f"U_init must have shape (T, {model.control_dim})")
    if len(ref.states) != len(U) + 1 or len(ref.controls) != len(U):
        raise ValueError(f"U_init has {len(U)} steps but the reference has {len(ref.states)} states")
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.shape != (model.state_dim,) or not np.all(np.isfinite(x0)):
        raise ValueError("x0 must be a finite state vector")
    angles = model.angle_indices

    def cost_of(X_, U_):
        return total_cost(X_, U_, ref, weights, angles)

    X = rollout(x0, U, model)
    J = cost_of(X, U)
    cost_history = [J]
    trace: List[IterationRecord] = []
    gains = GainSchedule.zeros(len(U), model.state_dim, model.control_dim)
    mu = opts.mu_init
    converged = False
    iteration = 0

    while iteration < opts.max_iterations:
        iteration += 1
        try:
            gains_try, values = backward_pass(X, U, ref, model, weights, mu)
        except NotPositiveDefiniteError as err:
            logger.debug("iteration %d: %s", iteration, err)
            mu *= opts.mu_factor
            if mu > opts.mu_max:
                break
            continue
        expected = sum(v.dV for v in values)

        accepted = False
        first_cost = math.inf
        for alpha in opts.alpha_schedule:
            X_new, U_new = forward_pass(X, U, gains_try, alpha, model)
            J_new = cost_of(X_new, U_new)
            if alpha == opts.alpha_schedule[0]:
                first_cost = J_new
            if J_new < J:
                accepted = True
                break

        if accepted:
            trace.append(IterationRecord(iteration, mu, J, J_new, alpha, expected, True))
            decrease = J - J_new
            X, U, J, gains = X_new, U_new, J_new, gains_try
            cost_history.append(J)
            mu = max(mu / opts.mu_factor, opts.mu_min)
            logger.debug("iteration %d: cost %.12g (alpha=%g, mu=%g)", iteration, J, alpha, mu)
            if decrease < opts.convergence_threshold:
                converged = True
                break
        else:
            trace.append(IterationRecord(iteration, mu, J, first_cost, 0.0, expected, False))
            if abs(J - first_cost) < opts.convergence_threshold:
                gains = gains_try
                converged = True
                break
            mu *= opts.mu_factor
            if mu > opts.mu_max:
                break

    return Solution(
        X=X,
        U=U,
        gains=gains,
        cost_history=cost_history,
        iterations=iteration,
        converged=converged,
        trace=trace,
    )
