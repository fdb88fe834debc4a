"""Loss functions.

Each returns (value, gradient) where the value is the mean over all matrix
entries and the gradient is d(value)/d(predicted), same shape as the input.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConfigError

LOSS_KINDS = ("mse", "bce")

# Probabilities are clamped away from 0/1 before the log so a saturated
# sigmoid cannot produce infinities.
BCE_CLAMP = 1e-12


def mse(predicted: np.ndarray, target: np.ndarray):
    _check_shapes(predicted, target)
    diff = predicted - target
    value = float(np.mean(diff * diff))
    grad = (2.0 / diff.size) * diff
    return value, grad


def binary_cross_entropy(predicted: np.ndarray, target: np.ndarray):
    _check_shapes(predicted, target)
    if predicted.min() < 0.0 or predicted.max() > 1.0:
        raise ConfigError(
            "binary cross-entropy input outside [0, 1]; the prediction layer "
            "must end in a sigmoid")
    if not np.isin(np.unique(target), [0.0, 1.0]).all():
        raise ConfigError("binary cross-entropy targets must be 0 or 1")
    p = np.clip(predicted, BCE_CLAMP, 1.0 - BCE_CLAMP)
    value = float(np.mean(-(target * np.log(p) + (1.0 - target) * np.log1p(-p))))
    grad = (-(target / p) + (1.0 - target) / (1.0 - p)) / p.size
    return value, grad


def loss(kind: str, predicted: np.ndarray, target: np.ndarray):
    if kind == "mse":
        return mse(predicted, target)
    if kind == "bce":
        return binary_cross_entropy(predicted, target)
    raise ConfigError(f"unknown loss kind {kind!r}")


def _check_shapes(predicted, target):
    if predicted.shape != target.shape:
        raise ConfigError(f"loss shape mismatch: {predicted.shape} vs {target.shape}")
