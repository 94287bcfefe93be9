"""Input validation helpers shared by the functional API and the estimators."""

from __future__ import annotations

import numpy as np
from sklearn.utils import check_array

from .errors import InsufficientDataError


def as_matrix(value, name: str) -> np.ndarray:
    """Coerce to a finite float64 2-d array; 1-d input becomes one column."""
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    return check_array(arr, dtype=np.float64, ensure_min_samples=1, input_name=name)


def as_vector(value, name: str) -> np.ndarray:
    arr = check_array(
        np.asarray(value, dtype=np.float64), ensure_2d=False, dtype=np.float64, input_name=name
    )
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    return arr


def check_design(y, regressors, instruments):
    """Validate a 2SLS design and return ``(y, X, Z)`` as float arrays."""
    y = as_vector(y, "y")
    X = as_matrix(regressors, "regressors")
    Z = as_matrix(instruments, "instruments")
    n = y.shape[0]
    if X.shape[0] != n or Z.shape[0] != n:
        raise ValueError(
            f"row counts differ: y has {n}, regressors {X.shape[0]}, instruments {Z.shape[0]}"
        )
    k, m = X.shape[1], Z.shape[1]
    if m < k:
        raise ValueError(f"under-identified: {m} instruments for {k} regressors")
    if n <= m:
        raise InsufficientDataError(f"need more than {m} observations, got {n}")
    return y, X, Z


def check_min_obs(n: int, minimum: int, what: str) -> None:
    if n < minimum:
        raise InsufficientDataError(f"{what} needs at least {minimum} observations, got {n}")
