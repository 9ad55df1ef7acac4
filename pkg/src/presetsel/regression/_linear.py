"""Linear-family fits on internally standardized features.

All fits here receive an already standardized design matrix Z (zero mean,
unit scale per column; constant columns keep scale 1) and produce a
coefficient vector on that scale plus an intercept.  Coordinate descent for
the L1 penalties follows the usual 1/(2n) squared-loss convention; the Huber
fit uses iteratively reweighted least squares.
"""

from __future__ import annotations

import numpy as np


def standardize_fit(X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale = np.where(scale > 0, scale, 1.0)
    return mean, scale


def standardize_apply(X: np.ndarray, mean: np.ndarray, scale: np.ndarray) -> np.ndarray:
    return (X - mean) / scale


def fit_linear(Z: np.ndarray, y: np.ndarray, hp: dict, rng) -> dict:
    intercept = float(y.mean())
    coef, *_ = np.linalg.lstsq(Z, y - intercept, rcond=None)
    return {"coef": coef, "intercept": intercept}


def fit_ridge(Z: np.ndarray, y: np.ndarray, hp: dict, rng) -> dict:
    intercept = float(y.mean())
    yc = y - intercept
    p = Z.shape[1]
    gram = Z.T @ Z + hp["alpha"] * np.eye(p)
    coef = np.linalg.solve(gram, Z.T @ yc)
    return {"coef": coef, "intercept": intercept}


def _soft_threshold(x: float, lam: float) -> float:
    if x > lam:
        return x - lam
    if x < -lam:
        return x + lam
    return 0.0


def _coordinate_descent(
    Z: np.ndarray, y: np.ndarray, l1: float, l2: float, max_iter: int, tol: float
) -> tuple[np.ndarray, float]:
    n, p = Z.shape
    intercept = float(y.mean())
    r = y - intercept
    w = np.zeros(p)
    col_sq = (Z * Z).sum(axis=0) / n
    for _ in range(max_iter):
        max_delta = 0.0
        for j in range(p):
            if col_sq[j] == 0.0:
                continue
            zj = Z[:, j]
            rho = (zj @ r) / n + col_sq[j] * w[j]
            w_new = _soft_threshold(rho, l1) / (col_sq[j] + l2)
            delta = w_new - w[j]
            if delta != 0.0:
                r -= zj * delta
                w[j] = w_new
                max_delta = max(max_delta, abs(delta))
        if max_delta < tol:
            break
    return w, intercept


def fit_lasso(Z: np.ndarray, y: np.ndarray, hp: dict, rng) -> dict:
    coef, intercept = _coordinate_descent(
        Z, y, l1=hp["alpha"], l2=0.0, max_iter=hp["max_iter"], tol=hp["tol"]
    )
    return {"coef": coef, "intercept": intercept}


def fit_elastic_net(Z: np.ndarray, y: np.ndarray, hp: dict, rng) -> dict:
    alpha, ratio = hp["alpha"], hp["l1_ratio"]
    coef, intercept = _coordinate_descent(
        Z,
        y,
        l1=alpha * ratio,
        l2=alpha * (1.0 - ratio),
        max_iter=hp["max_iter"],
        tol=hp["tol"],
    )
    return {"coef": coef, "intercept": intercept}


def fit_huber(Z: np.ndarray, y: np.ndarray, hp: dict, rng) -> dict:
    delta = hp["delta"]
    n, p = Z.shape
    A = np.hstack([Z, np.ones((n, 1))])
    theta, *_ = np.linalg.lstsq(A, y, rcond=None)  # LS start
    for _ in range(hp["max_iter"]):
        r = y - A @ theta
        absr = np.abs(r)
        weights = np.where(absr <= delta, 1.0, delta / np.maximum(absr, 1e-300))
        sw = np.sqrt(weights)
        theta_new, *_ = np.linalg.lstsq(A * sw[:, None], y * sw, rcond=None)
        if np.max(np.abs(theta_new - theta)) < hp["tol"]:
            theta = theta_new
            break
        theta = theta_new
    return {"coef": theta[:-1], "intercept": float(theta[-1])}


def predict_linear(params: dict, Z: np.ndarray) -> np.ndarray:
    return Z @ params["coef"] + params["intercept"]
