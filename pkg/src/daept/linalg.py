"""Dense matrix substrate.

Matrices are plain 2-D float64 numpy arrays in row-major order; this module
adds the contract layer on top: shape validation on every binary operation
and a hard failure whenever an operation produces NaN or Inf.  A non-finite
value anywhere in the pipeline is a bug upstream, never a state to carry
forward, so it aborts with the name of the producing operation.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError, NumericalError


def matrix(values) -> np.ndarray:
    """Build a validated 2-D float64 matrix from nested sequences or an array."""
    a = np.array(values, dtype=np.float64, order="C")
    if a.ndim != 2:
        raise ConfigError(f"matrix must be 2-D, got shape {a.shape}")
    ensure_finite(a, "matrix")
    return a


def ensure_finite(a: np.ndarray, op: str) -> np.ndarray:
    if not np.isfinite(a).all():
        raise NumericalError(f"non-finite values produced by {op}")
    return a


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.shape[1] != b.shape[0]:
        raise ConfigError(f"matmul dimension mismatch: {a.shape} x {b.shape}")
    return ensure_finite(a @ b, "matmul")


def transpose(a: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(a.T)


def add(a, b):
    _check_same_shape(a, b, "add")
    return ensure_finite(a + b, "add")


def subtract(a, b):
    _check_same_shape(a, b, "subtract")
    return ensure_finite(a - b, "subtract")


def multiply(a, b):
    _check_same_shape(a, b, "multiply")
    return ensure_finite(a * b, "multiply")


def scale(a, s: float):
    return ensure_finite(a * float(s), "scale")


def add_rowvec(a: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Add a length-cols vector to every row of `a`."""
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    if v.shape[0] != a.shape[1]:
        raise ConfigError(f"add_rowvec length mismatch: {a.shape} + ({v.shape[0]},)")
    return ensure_finite(a + v, "add_rowvec")


def col_means(a: np.ndarray) -> np.ndarray:
    return ensure_finite(a.mean(axis=0), "col_means")


def col_vars(a: np.ndarray, ddof: int = 0) -> np.ndarray:
    return ensure_finite(a.var(axis=0, ddof=ddof), "col_vars")


def masked_col_means(values: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Per-column mean of the entries where `mask` is False.

    `mask` marks missing slots; a column with every entry masked has no mean
    and raises.
    """
    _check_same_shape(values, mask, "masked_col_means")
    observed = ~mask
    counts = observed.sum(axis=0)
    if (counts == 0).any():
        j = int(np.argmax(counts == 0))
        raise NumericalError(f"masked_col_means: column {j} has no observed values")
    sums = np.where(observed, values, 0.0).sum(axis=0)
    return ensure_finite(sums / counts, "masked_col_means")


def sum_all(a) -> float:
    total = float(np.sum(a))
    if not np.isfinite(total):
        raise NumericalError("non-finite values produced by sum_all")
    return total


def mean_all(a) -> float:
    return sum_all(a) / a.size


def _check_same_shape(a, b, op: str):
    if a.shape != b.shape:
        raise ConfigError(f"{op} shape mismatch: {a.shape} vs {b.shape}")
