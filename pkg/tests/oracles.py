"""Independent oracles shared by the unit and acceptance tests."""

import numpy as np


def d_oracle(z, S):
    z = np.asarray(z, dtype=float)
    q = z.size
    return q * np.log(z @ np.linalg.solve(S, z) / (z @ z)) + np.log(np.linalg.det(S))


def grid_shapes_q2(log_ratio_max, n_ratio=201, n_angle=180):
    """Unit-determinant 2x2 shapes on a grid of (log eigenvalue ratio, rotation angle)."""
    r = np.linspace(0.0, log_ratio_max, n_ratio)
    theta = np.linspace(0.0, np.pi, n_angle, endpoint=False)
    R, T = np.meshgrid(r, theta, indexing="ij")
    return R.ravel(), T.ravel()


def grid_D_q2(Z, r, theta):
    """Lower-median objective at every grid shape, vectorized over the grid.

    The shape with log ratio ``r`` and angle ``theta`` has eigenvalues
    ``exp(+-r/2)`` with leading eigenvector ``(cos theta, sin theta)``.
    """
    Z = np.asarray(Z, dtype=float)
    Z = Z[np.linalg.norm(Z, axis=1) > 0]
    U = Z / np.linalg.norm(Z, axis=1, keepdims=True)
    a = np.cos(theta)[:, None] * U[:, 0] + np.sin(theta)[:, None] * U[:, 1]
    b = -np.sin(theta)[:, None] * U[:, 0] + np.cos(theta)[:, None] * U[:, 1]
    quad = np.exp(-r / 2)[:, None] * a**2 + np.exp(r / 2)[:, None] * b**2
    d = 2 * np.log(quad)
    h = (d.shape[1] + 1) // 2
    return np.partition(d, h - 1, axis=1)[:, h - 1]


def grid_shape(r, theta):
    c, s = np.cos(theta), np.sin(theta)
    P = np.array([[c, -s], [s, c]])
    S = (P * np.exp([r / 2, -r / 2])) @ P.T
    return 2 * S / np.trace(S)


def grid_minimizers_q2(Z, log_ratio_max, n_ratio=201, n_angle=180, tol=1e-9):
    """Objective minimum over the grid and every grid shape attaining it."""
    r, t = grid_shapes_q2(log_ratio_max, n_ratio, n_angle)
    D = grid_D_q2(Z, r, t)
    best = D.min()
    idx = np.flatnonzero(D <= best + tol)
    return best, [grid_shape(r[i], t[i]) for i in idx]


def ratio_se(lam, se, i, j):
    """Delta-method standard error of ``lam[i] / lam[j]``."""
    r = lam[i] / lam[j]
    return r * np.hypot(se[i] / lam[i], se[j] / lam[j])


# (eigenvalues, radial law, weight kind, kappa, gamma) for the eigen-structure checks
POPULATION_CONFIGS = (
    ((10.0, 1.0, 1.0, 1.0, 1.0), "normal", "shifted", 3.0, 0.5),
    ((10.0, 7.75, 5.5, 3.25, 1.0), "normal", "shifted", 5.0, 0.2),
    ((4.0, 2.0, 2.0, 1.0), "normal", "shifted", 1.0, 0.5),
    ((9.0, 3.0, 1.0), ("t", 5.0), "shifted", 8.0, 0.8),
    ((6.0, 6.0, 2.0, 1.0, 0.5), "normal", "tyler", 3.0, 0.5),
    ((5.0, 2.0, 1.0), ("point", 1.0), "tyler", 2.5, 0.05),
)
