"""Reference computations the library is checked against.

Deliberately written without importing anything from ilqr_track.
"""

import numpy as np


def double_integrator(dt=0.1):
    """Planar double integrator: state (px, py, vx, vy), control (ax, ay)."""
    I2 = np.eye(2)
    A = np.block([[I2, dt * I2], [np.zeros((2, 2)), I2]])
    B = np.vstack([0.5 * dt**2 * I2, dt * I2])
    return A, B


def riccati_oracle(As, Bs, Q, R, Qf):
    """Finite-horizon Riccati sweep for x' = A_i x + B_i u, cost 1/2 sum(x'Qx + u'Ru) + 1/2 x_N' Qf x_N.

    Returns gains G_i with optimal u_i = -G_i x_i, and P_0 (optimal cost = 1/2 x0' P_0 x0).
    """
    P = np.array(Qf, dtype=float)
    gains = []
    for A, B in zip(reversed(list(As)), reversed(list(Bs))):
        G = np.linalg.inv(R + B.T @ P @ B) @ (B.T @ P @ A)
        P = Q + G.T @ R @ G + (A - B @ G).T @ P @ (A - B @ G)
        gains.append(G)
    return gains[::-1], P


def batch_lq_oracle(A, B, Q, R, Qf, x0, N):
    """Solve the same LQ problem as one dense least-squares system in the stacked controls.

    N is the number of states (N-1 controls). Returns (U*, J*).
    """
    n, m = B.shape
    T = N - 1
    # x_k = A^k x0 + sum_j A^(k-1-j) B u_j
    Phi = np.zeros((N * n, n))
    Gam = np.zeros((N * n, T * m))
    Ak = np.eye(n)
    for k in range(N):
        Phi[k * n:(k + 1) * n] = Ak
        Ak = A @ Ak
    for k in range(1, N):
        for j in range(k):
            Gam[k * n:(k + 1) * n, j * m:(j + 1) * m] = np.linalg.matrix_power(A, k - 1 - j) @ B
    Qbar = np.kron(np.eye(N), Q)
    Qbar[-n:, -n:] = Qf
    Rbar = np.kron(np.eye(T), R)
    H = Gam.T @ Qbar @ Gam + Rbar
    g = Gam.T @ Qbar @ Phi @ x0
    U = -np.linalg.solve(H, g)
    X = Phi @ x0 + Gam @ U
    J = 0.5 * X @ Qbar @ X + 0.5 * U @ Rbar @ U
    return U.reshape(T, m), float(J)


def central_gradient(f, x, eps=1e-6):
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = eps
        g[i] = (f(x + e) - f(x - e)) / (2 * eps)
    return g


def relative_errors(analytic, approx, floor=1e-9):
    """Element-wise |a - b| / |a| over elements with |a| > floor."""
    a = np.asarray(analytic, dtype=float)
    b = np.asarray(approx, dtype=float)
    mask = np.abs(a) > floor
    return np.abs(a - b)[mask] / np.abs(a[mask]), np.abs(b[~mask])
