"""Ridge readout, noise-aware ridge, per-step prediction aggregation and NRMSE."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .features import FeatureTensor
from .shotorg import within_step_var

STD_FLOOR = 1e-8


@dataclass
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray
    eps: float = STD_FLOOR

    def transform(self, X):
        return (np.asarray(X, dtype=float) - self.mean) / self.scale


@dataclass
class RidgeModel:
    weights: np.ndarray
    offset: float
    lam: float
    gamma: float = 0.0
    noise_var: np.ndarray | None = None


def fit_standardizer(X, eps=STD_FLOOR):
    """Column-wise z-score with population std floored at ``eps``."""
    X = np.asarray(X, dtype=float)
    if X.shape[0] == 0:
        raise ValueError("cannot standardize an empty block")
    return Standardizer(mean=X.mean(axis=0), scale=np.maximum(X.std(axis=0), eps), eps=eps)


def apply_standardizer(s, X):
    return s.transform(X)


def _solve(X, y, penalty, lam, fit_intercept):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.shape[0] < 1:
        raise ValueError("need at least one row")
    offset = float(y.mean()) if fit_intercept else 0.0
    A = X.T @ X
    if np.all(np.asarray(penalty) == 0) and np.linalg.matrix_rank(A) < A.shape[0]:
        raise np.linalg.LinAlgError("Gram matrix is singular with zero penalty; use lambda > 0")
    A[np.diag_indices_from(A)] += penalty
    b = X.T @ (y - offset)
    try:
        c = linalg.cho_factor(A, check_finite=False)
    except linalg.LinAlgError:
        raise np.linalg.LinAlgError(
            f"penalized Gram matrix is singular (lambda={lam}); use a positive ridge penalty"
        ) from None
    w = linalg.cho_solve(c, b, check_finite=False)
    if not np.all(np.isfinite(w)):
        raise np.linalg.LinAlgError("ridge solution is not finite; use a positive ridge penalty")
    return w, offset


def ridge_fit(X, y, lam, fit_intercept=True):
    """Minimize ``||y - offset - X w||^2 + lam ||w||^2``.

    With ``fit_intercept`` the targets are centered on their mean, which is
    stored as the offset and left unpenalized.
    """
    if lam < 0:
        raise ValueError(f"lambda must be >= 0, got {lam}")
    w, offset = _solve(X, y, lam, lam, fit_intercept)
    return RidgeModel(weights=w, offset=offset, lam=lam)


def noise_aware_fit(X, y, lam, gamma, noise_var, fit_intercept=True):
    """Ridge with an extra diagonal penalty ``gamma * sum_j noise_var[j] * w_j**2``."""
    noise_var = np.asarray(noise_var, dtype=float)
    if gamma < 0 or lam < 0:
        raise ValueError("penalties must be >= 0")
    if noise_var.shape != (np.shape(X)[1],) or np.any(noise_var < 0):
        raise ValueError("noise_var must be a nonnegative vector of length d")
    w, offset = _solve(X, y, lam + gamma * noise_var, lam, fit_intercept)
    return RidgeModel(weights=w, offset=offset, lam=lam, gamma=gamma, noise_var=noise_var)


def estimate_feature_noise_var(features, block, k):
    """Per-feature shot-noise variance of a ``k``-shot group mean.

    Within-step variance across shots (unbiased), averaged over the block,
    divided by ``k``.
    """
    values = features.values if isinstance(features, FeatureTensor) else np.asarray(features)
    values = values[np.asarray(block, dtype=int)]
    if values.shape[1] < 2:
        raise ValueError("need at least 2 shots per step")
    var = within_step_var(values).mean(axis=0)
    if not np.all(np.isfinite(var)):
        return np.zeros(values.shape[2])
    return var / k


def predict(model, X):
    return np.asarray(X, dtype=float) @ model.weights + model.offset


def aggregate_predictions(y_hat, timestep_index):
    """Mean prediction per time step; returns ``(steps, per_step_prediction)`` sorted by step."""
    y_hat = np.asarray(y_hat, dtype=float)
    steps, first, inverse = np.unique(np.asarray(timestep_index), return_index=True, return_inverse=True)
    # Average deviations from each step's first row so identical rows aggregate exactly.
    ref = y_hat[first]
    dev = np.bincount(inverse, weights=y_hat - ref[inverse], minlength=len(steps))
    counts = np.bincount(inverse, minlength=len(steps))
    return steps, ref + dev / counts


def nrmse(y, y_hat, test_index=None):
    """RMSE over the test block divided by the population std of its targets."""
    y = np.asarray(y, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    if test_index is not None:
        y, y_hat = y[test_index], y_hat[test_index]
    if y.shape != y_hat.shape:
        raise ValueError("targets and predictions differ in shape")
    if y.size < 2:
        raise ValueError("test block needs at least 2 points")
    sd = np.sqrt(np.mean((y - y.mean()) ** 2))
    if sd == 0:
        raise ValueError("test targets have zero standard deviation")
    return float(np.sqrt(np.mean((y_hat - y) ** 2)) / sd)
