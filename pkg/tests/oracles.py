"""Independent reference computations used by the tests."""

import itertools

import numpy as np


def check_loss(u, p):
    u = np.asarray(u, dtype=float)
    return np.sum(np.where(u >= 0, p * u, (p - 1) * u))


def brute_force_qr(X, y, p):
    """Minimum pinball loss over all basic solutions (fits through k observations)."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, k = X.shape
    best = np.inf
    for rows in itertools.combinations(range(n), k):
        B = X[list(rows)]
        if abs(np.linalg.det(B)) < 1e-12:
            continue
        beta = np.linalg.solve(B, y[list(rows)])
        best = min(best, check_loss(y - X @ beta, p))
    return best


def normal_equations(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    beta = np.linalg.solve(X.T @ X, X.T @ y)
    e = y - X @ beta
    return beta, float(e @ e)


def random_qr_instance(rng):
    k = int(rng.integers(1, 5))
    n = int(rng.integers(k + 1, 13))
    X = rng.standard_normal((n, k))
    if k > 1 and rng.random() < 0.5:
        X[:, 0] = 1.0
    y = rng.standard_normal(n) * rng.uniform(0.1, 10)
    p = float(rng.choice([0.15, 0.3, 0.5, 0.7, 0.85]))
    return X, y, p
