"""Small input-validation helpers used by the estimators."""

import numpy as np

from .errors import DataError, DimensionError


def as_float_matrix(X, name="X"):
    """Coerce to a finite 2-D float64 array."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got ndim={X.ndim}")
    if not np.all(np.isfinite(X)):
        raise DataError(f"{name} contains non-finite values")
    return X


def as_label_vector(y, name="y"):
    """Coerce to a 1-D int64 array of non-negative labels."""
    y = np.asarray(y)
    if y.ndim != 1:
        raise DimensionError(f"{name} must be 1-D, got ndim={y.ndim}")
    if y.size and not np.issubdtype(y.dtype, np.integer):
        rounded = np.rint(np.asarray(y, dtype=np.float64))
        if not np.array_equal(rounded, np.asarray(y, dtype=np.float64)):
            raise DataError(f"{name} must hold integer class ids")
        y = rounded
    y = y.astype(np.int64)
    if y.size and y.min() < 0:
        raise DataError(f"{name} contains negative class ids")
    return y


def check_matching_rows(X, y):
    if X.shape[0] != y.shape[0]:
        raise DimensionError(
            f"row mismatch: features have {X.shape[0]} rows, labels {y.shape[0]}"
        )


def check_feature_dim(X, expected, name="X"):
    if X.shape[1] != expected:
        raise DimensionError(
            f"{name} has {X.shape[1]} features, expected {expected}"
        )
