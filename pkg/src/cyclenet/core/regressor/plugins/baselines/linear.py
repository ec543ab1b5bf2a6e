"""
Least squares by orthogonal factorization

Every output column is an independent model. The columns share the QR
factorization of the design matrix, which is the same for all of them.
"""

import numpy as np
import scipy.linalg as scplinalg

from cyclenet.core.errors import RankDeficient

RANK_TOLERANCE = 1.0e-10


def _solve_qr(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Minimise |a x - b| column by column

    Raises:
        RankDeficient: `a` has dependent columns.
    """
    q, r = scplinalg.qr(a, mode="economic")
    diag = np.abs(np.diag(r))
    rank = int(np.sum(diag > RANK_TOLERANCE * max(diag.max(initial=0.0), 1.0)))
    if rank < a.shape[1]:
        raise RankDeficient(rank, a.shape[1])
    return scplinalg.solve_triangular(r, q.T @ b)


def fit_ols(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Ordinary least squares with intercept

    Args:
        x:  (n, d) inputs.
        y:  (n, k) outputs.

    Returns:
        (d + 1, k) coefficients, the first row holds the intercepts.
    """
    a = np.column_stack([np.ones(x.shape[0]), x])
    return _solve_qr(a, y)


def fit_ridge_coefficients(x: np.ndarray, y: np.ndarray, alpha: float = 1.0) -> np.ndarray:
    """Penalised least squares with an unpenalised intercept

    The centred problem is solved as the augmented system
    [xc; sqrt(alpha) I] beta = [yc; 0], the intercept recovered from the means.
    """
    if alpha < 0.0:
        raise ValueError("alpha must be >= 0")
    x_mean, y_mean = x.mean(axis=0), y.mean(axis=0)
    xc, yc = x - x_mean, y - y_mean
    d = x.shape[1]
    a = np.vstack([xc, np.sqrt(alpha) * np.eye(d)])
    b = np.vstack([yc, np.zeros((d, y.shape[1]))])
    slope = _solve_qr(a, b)
    intercept = y_mean - x_mean @ slope
    return np.vstack([intercept, slope])


def predict_linear(coefficients: np.ndarray, x: np.ndarray) -> np.ndarray:
    return coefficients[0] + x @ coefficients[1:]
