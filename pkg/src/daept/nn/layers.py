"""Layers and the sequential network container.

Three layer kinds cover everything this package trains: fully connected
(`Dense`, with linear / ReLU / sigmoid activation), input corruption
(`Dropout`, inverted scaling so evaluation needs no rescaling), and
`BatchNorm` over features.  Each layer implements ``forward`` returning an
output plus a cache, and ``backward`` consuming that cache; `Network`
strings them together and records the caches on a tape.

Samples are rows: a batch is (n_samples, n_features).
"""

from __future__ import annotations

import copy
import math

import numpy as np

from ..errors import ConfigError
from ..linalg import ensure_finite
from ..rng import RngStream

ACTIVATIONS = ("linear", "relu", "sigmoid")


def glorot_uniform(rng: RngStream, in_dim: int, out_dim: int) -> np.ndarray:
    """Weight matrix drawn uniformly on +/- sqrt(6 / (in_dim + out_dim))."""
    if in_dim < 1 or out_dim < 1:
        raise ConfigError(f"glorot_uniform dims must be >= 1, got {in_dim}, {out_dim}")
    limit = math.sqrt(6.0 / (in_dim + out_dim))
    return rng.uniform(-limit, limit, in_dim, out_dim)


def sigmoid(z: np.ndarray) -> np.ndarray:
    # Split by sign so exp never overflows.
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _activate(z: np.ndarray, activation: str) -> np.ndarray:
    if activation == "linear":
        return z
    if activation == "relu":
        return np.maximum(z, 0.0)
    if activation == "sigmoid":
        return sigmoid(z)
    raise ConfigError(f"unknown activation {activation!r}")


def _activation_grad(z: np.ndarray, out: np.ndarray, activation: str) -> np.ndarray:
    if activation == "linear":
        return np.ones_like(z)
    if activation == "relu":
        return (z > 0).astype(np.float64)
    if activation == "sigmoid":
        return out * (1.0 - out)
    raise ConfigError(f"unknown activation {activation!r}")


class Dense:
    """Fully connected layer: out = activation(x @ W + b)."""

    kind = "dense"

    def __init__(self, W: np.ndarray, b: np.ndarray, activation: str = "linear",
                 trainable: bool = True):
        W = np.asarray(W, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64).reshape(-1)
        if W.ndim != 2:
            raise ConfigError(f"Dense weights must be 2-D, got shape {W.shape}")
        if b.shape[0] != W.shape[1]:
            raise ConfigError(f"Dense bias length {b.shape[0]} != out dim {W.shape[1]}")
        if activation not in ACTIVATIONS:
            raise ConfigError(f"unknown activation {activation!r}")
        self.W = W
        self.b = b
        self.activation = activation
        self.trainable = bool(trainable)

    @classmethod
    def glorot(cls, rng: RngStream, in_dim: int, out_dim: int, activation: str = "linear",
               trainable: bool = True) -> "Dense":
        """Glorot-initialized weights, zero bias."""
        return cls(glorot_uniform(rng, in_dim, out_dim), np.zeros(out_dim),
                   activation=activation, trainable=trainable)

    @property
    def in_dim(self) -> int:
        return self.W.shape[0]

    @property
    def out_dim(self) -> int:
        return self.W.shape[1]

    def parameters(self) -> dict[str, np.ndarray]:
        return {"W": self.W, "b": self.b}

    def freeze(self):
        """Mark non-trainable and make the arrays read-only as a mutation guard."""
        self.trainable = False
        self.W.setflags(write=False)
        self.b.setflags(write=False)

    def forward(self, x, train, rng):
        if x.shape[1] != self.in_dim:
            raise ConfigError(f"Dense expects {self.in_dim} features, got {x.shape[1]}")
        z = x @ self.W + self.b
        out = _activate(z, self.activation)
        ensure_finite(out, "dense_forward")
        return out, (x, z, out)

    def backward(self, dout, cache):
        x, z, out = cache
        dz = dout * _activation_grad(z, out, self.activation)
        dx = dz @ self.W.T
        if not self.trainable:
            return dx, None
        grads = {"W": x.T @ dz, "b": dz.sum(axis=0)}
        ensure_finite(grads["W"], "dense_backward")
        return dx, grads


class Dropout:
    """Bernoulli corruption of activations, active only in training mode.

    Kept entries are scaled by 1/keep_prob so the expected output equals the
    input; evaluation mode is the exact identity.
    """

    kind = "dropout"

    def __init__(self, rate: float):
        rate = float(rate)
        if not 0.0 <= rate < 1.0:
            raise ConfigError(f"dropout rate must be in [0, 1), got {rate}")
        self.rate = rate
        self.trainable = False

    def parameters(self) -> dict[str, np.ndarray]:
        return {}

    def forward(self, x, train, rng, fixed_mask=None):
        if not train or self.rate == 0.0:
            return x, None
        keep = 1.0 - self.rate
        if fixed_mask is not None:
            mask = fixed_mask
        else:
            if rng is None:
                raise ConfigError("training forward through Dropout requires an RngStream")
            mask = rng.bernoulli_mask(x.shape[0], x.shape[1], keep)
        return x * (mask / keep), mask

    def backward(self, dout, cache):
        if cache is None:
            return dout, None
        mask = cache
        return dout * (mask / (1.0 - self.rate)), None


class BatchNorm:
    """Per-feature batch normalization with running statistics.

    Training mode normalizes by batch mean/variance and updates the running
    statistics; evaluation mode normalizes by the running statistics only.
    """

    kind = "batchnorm"

    def __init__(self, dim: int, epsilon: float = 1e-5, momentum: float = 0.99,
                 trainable: bool = True):
        if dim < 1:
            raise ConfigError(f"BatchNorm dim must be >= 1, got {dim}")
        if epsilon <= 0:
            raise ConfigError(f"BatchNorm epsilon must be > 0, got {epsilon}")
        self.dim = int(dim)
        self.epsilon = float(epsilon)
        self.momentum = float(momentum)
        self.gamma = np.ones(dim)
        self.beta = np.zeros(dim)
        self.running_mean = np.zeros(dim)
        self.running_var = np.ones(dim)
        self.trainable = bool(trainable)

    def parameters(self) -> dict[str, np.ndarray]:
        return {"gamma": self.gamma, "beta": self.beta}

    def forward(self, x, train, rng):
        if x.shape[1] != self.dim:
            raise ConfigError(f"BatchNorm expects {self.dim} features, got {x.shape[1]}")
        if train:
            mu = x.mean(axis=0)
            var = x.var(axis=0)
            inv = 1.0 / np.sqrt(var + self.epsilon)
            xhat = (x - mu) * inv
            m = self.momentum
            self.running_mean = m * self.running_mean + (1.0 - m) * mu
            self.running_var = m * self.running_var + (1.0 - m) * var
            cache = (inv, xhat)
        else:
            xhat = (x - self.running_mean) / np.sqrt(self.running_var + self.epsilon)
            cache = None
        out = self.gamma * xhat + self.beta
        ensure_finite(out, "batchnorm_forward")
        return out, cache

    def backward(self, dout, cache):
        inv, xhat = cache
        n = dout.shape[0]
        dxhat = dout * self.gamma
        dx = (inv / n) * (n * dxhat - dxhat.sum(axis=0) - xhat * (dxhat * xhat).sum(axis=0))
        if not self.trainable:
            return dx, None
        return dx, {"gamma": (dout * xhat).sum(axis=0), "beta": dout.sum(axis=0)}


class Tape:
    """Per-layer caches recorded by one training-mode forward pass."""

    def __init__(self, network, mode: str, caches: list):
        self.network = network
        self.mode = mode
        self.caches = caches


class Network:
    """An ordered layer stack applied to batches of row vectors."""

    def __init__(self, layers, input_dim: int):
        self.layers = list(layers)
        self.input_dim = int(input_dim)
        self._check_chain()

    def _check_chain(self):
        width = self.input_dim
        for i, layer in enumerate(self.layers):
            if layer.kind == "dense":
                if layer.in_dim != width:
                    raise ConfigError(
                        f"layer {i} (dense) expects {layer.in_dim} features "
                        f"but receives {width}")
                width = layer.out_dim
            elif layer.kind == "batchnorm":
                if layer.dim != width:
                    raise ConfigError(
                        f"layer {i} (batchnorm) expects {layer.dim} features "
                        f"but receives {width}")
        self.output_dim = width

    def forward(self, x, train: bool = False, rng: RngStream | None = None,
                dropout_masks: list | None = None):
        """Run the stack, returning (output, tape).

        `dropout_masks`, one entry per Dropout layer in order, pins the
        corruption pattern; used by gradient checks.
        """
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2:
            raise ConfigError(f"batch must be 2-D, got shape {x.shape}")
        if x.shape[0] == 0:
            raise ConfigError("batch has no rows")
        if x.shape[1] != self.input_dim:
            raise ConfigError(f"network expects {self.input_dim} features, got {x.shape[1]}")
        caches = []
        drop_i = 0
        for layer in self.layers:
            if layer.kind == "dropout":
                fixed = None
                if dropout_masks is not None:
                    fixed = dropout_masks[drop_i]
                drop_i += 1
                x, cache = layer.forward(x, train, rng, fixed_mask=fixed)
            else:
                x, cache = layer.forward(x, train, rng)
            caches.append(cache)
        return x, Tape(self, "train" if train else "eval", caches)

    def backward(self, tape: Tape, dloss: np.ndarray) -> dict:
        """Backpropagate a loss gradient, returning grads for trainable params.

        Keys are (layer_index, param_name); frozen layers propagate the
        signal but contribute no entries.
        """
        if tape.network is not self:
            raise ConfigError("tape was produced by a different network")
        if tape.mode != "train":
            raise ConfigError("backward requires a tape from a training-mode forward")
        if len(tape.caches) != len(self.layers):
            raise ConfigError("tape does not match the layer stack")
        grads: dict = {}
        d = dloss
        for i in range(len(self.layers) - 1, -1, -1):
            d, layer_grads = self.layers[i].backward(d, tape.caches[i])
            if layer_grads:
                for name, g in layer_grads.items():
                    grads[(i, name)] = g
        return grads

    def apply(self, x) -> np.ndarray:
        """Evaluation-mode output (no corruption, running statistics)."""
        out, _ = self.forward(x, train=False)
        return out

    def trainable_parameters(self) -> dict:
        """Mapping (layer_index, param_name) -> parameter array, trainable only."""
        params = {}
        for i, layer in enumerate(self.layers):
            if layer.trainable:
                for name, arr in layer.parameters().items():
                    params[(i, name)] = arr
        return params

    def parameter_count(self) -> int:
        return sum(arr.size for layer in self.layers for arr in layer.parameters().values())

    def copy(self) -> "Network":
        """Deep copy with freshly writable parameter arrays."""
        new = copy.deepcopy(self)
        for layer in new.layers:
            if layer.kind == "dense":
                layer.W = np.array(layer.W)
                layer.b = np.array(layer.b)
        return new
