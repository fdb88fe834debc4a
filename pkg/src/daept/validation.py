"""Input validation helpers used by the estimators and the training code."""

from __future__ import annotations

import numpy as np

from .errors import ConfigError, DataError


def check_matrix(x, name: str = "X") -> np.ndarray:
    """Coerce to a finite 2-D float64 array with at least one row."""
    a = np.asarray(x, dtype=np.float64)
    if a.ndim != 2:
        raise ConfigError(f"{name} must be 2-D (samples x features), got shape {a.shape}")
    if a.shape[0] == 0:
        raise ConfigError(f"{name} has no rows")
    if not np.isfinite(a).all():
        raise DataError(f"{name} contains NaN or Inf")
    return a


def check_binary_labels(y, n_samples: int | None = None, name: str = "y") -> np.ndarray:
    a = np.asarray(y)
    if a.ndim != 1:
        raise ConfigError(f"{name} must be 1-D, got shape {a.shape}")
    values = np.unique(a)
    if not np.isin(values, [0, 1]).all():
        raise DataError(f"{name} must contain only 0/1 labels, got values {values[:10]}")
    if n_samples is not None and a.shape[0] != n_samples:
        raise ConfigError(f"{name} length {a.shape[0]} does not match {n_samples} samples")
    return a.astype(np.int64)


def check_fraction(value: float, name: str, *, include_one: bool = False) -> float:
    v = float(value)
    high_ok = v <= 1.0 if include_one else v < 1.0
    if not (0.0 <= v and high_ok):
        bound = "[0, 1]" if include_one else "[0, 1)"
        raise ConfigError(f"{name} must be in {bound}, got {value}")
    return v


def check_positive_int(value: int, name: str) -> int:
    v = int(value)
    if v < 1:
        raise ConfigError(f"{name} must be >= 1, got {value}")
    return v
