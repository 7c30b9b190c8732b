"""Small input-validation helpers used by the estimators and pipeline ops."""

from __future__ import annotations

import numpy as np

from .exceptions import DimensionMismatch, EmptyInput, LengthMismatch


def as_matrix(X, name: str = "X") -> np.ndarray:
    """Coerce to a 2-D float64 array without copying when possible."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-dimensional, got ndim={X.ndim}")
    return X


def as_vector(y, name: str = "y") -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1:
        y = y.ravel()
    return y


def check_X_y(X, y):
    """Validate a feature matrix / target vector pair for fitting."""
    X = as_matrix(X)
    y = as_vector(y)
    if X.shape[0] != y.shape[0]:
        raise DimensionMismatch(
            f"X has {X.shape[0]} rows but y has {y.shape[0]} entries"
        )
    return X, y


def check_n_features(X, n_features: int) -> np.ndarray:
    X = as_matrix(X)
    if X.shape[1] != n_features:
        raise DimensionMismatch(
            f"expected {n_features} features, got {X.shape[1]}"
        )
    return X


def check_paired_vectors(y_true, y_pred):
    """Validate a prediction/target pair for metric computation."""
    y_true = as_vector(y_true, "y_true")
    y_pred = as_vector(y_pred, "y_pred")
    if y_true.shape[0] != y_pred.shape[0]:
        raise LengthMismatch(
            f"length mismatch: {y_true.shape[0]} vs {y_pred.shape[0]}"
        )
    if y_true.shape[0] == 0:
        raise EmptyInput("empty vectors")
    return y_true, y_pred


def frozen(a: np.ndarray) -> np.ndarray:
    """Return a read-only view backed by a private copy of ``a``."""
    out = np.array(a, dtype=np.float64, copy=True)
    out.flags.writeable = False
    return out
