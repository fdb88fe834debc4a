"""Versioned textual persistence of networks.

Format `DAEPT v1`: a header line, optional `meta key value` lines, the input
dimension, then one block per layer carrying its kind, dimensions,
hyperparameters and parameters.  Floats are written with 17 significant
digits, which round-trips 64-bit values exactly.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..errors import DataError
from .layers import BatchNorm, Dense, Dropout, Network

FORMAT_HEADER = "DAEPT v1"


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _fmt_row(row) -> str:
    return " ".join(_fmt(v) for v in row)


def dumps_network(net: Network, meta: dict | None = None) -> str:
    lines = [FORMAT_HEADER]
    for key in (meta or {}):
        value = str(meta[key])
        if any(c.isspace() for c in key) or "\n" in value:
            raise DataError(f"meta entry {key!r} is not representable")
        lines.append(f"meta {key} {value}")
    lines.append(f"input_dim {net.input_dim}")
    lines.append(f"layers {len(net.layers)}")
    for layer in net.layers:
        if layer.kind == "dense":
            lines.append("layer dense")
            lines.append(f"dims {layer.in_dim} {layer.out_dim}")
            lines.append(f"activation {layer.activation}")
            lines.append(f"trainable {int(layer.trainable)}")
            lines.append("W")
            lines.extend(_fmt_row(row) for row in layer.W)
            lines.append("b")
            lines.append(_fmt_row(layer.b))
        elif layer.kind == "dropout":
            lines.append("layer dropout")
            lines.append(f"rate {_fmt(layer.rate)}")
        elif layer.kind == "batchnorm":
            lines.append("layer batchnorm")
            lines.append(f"dims {layer.dim}")
            lines.append(f"epsilon {_fmt(layer.epsilon)}")
            lines.append(f"momentum {_fmt(layer.momentum)}")
            lines.append(f"trainable {int(layer.trainable)}")
            for name in ("gamma", "beta", "running_mean", "running_var"):
                lines.append(name)
                lines.append(_fmt_row(getattr(layer, name)))
        else:
            raise DataError(f"cannot serialize layer kind {layer.kind!r}")
    lines.append("end")
    return "\n".join(lines) + "\n"


class _Reader:
    def __init__(self, text: str):
        self.lines = text.splitlines()
        self.pos = 0

    def next(self) -> str:
        while self.pos < len(self.lines):
            line = self.lines[self.pos]
            self.pos += 1
            if line.strip():
                return line.strip()
        raise DataError("unexpected end of network file")

    def expect(self, token: str) -> list[str]:
        line = self.next()
        parts = line.split()
        if parts[0] != token:
            raise DataError(f"line {self.pos}: expected {token!r}, found {parts[0]!r}")
        return parts[1:]

    def floats(self, n: int) -> np.ndarray:
        parts = self.next().split()
        if len(parts) != n:
            raise DataError(f"line {self.pos}: expected {n} values, found {len(parts)}")
        return np.array([float(p) for p in parts], dtype=np.float64)


def loads_network(text: str) -> tuple[Network, dict]:
    r = _Reader(text)
    header = r.next()
    if header != FORMAT_HEADER:
        raise DataError(f"unsupported network format header {header!r}")
    meta: dict[str, str] = {}
    line = r.next()
    while line.startswith("meta "):
        _, key, value = line.split(" ", 2)
        meta[key] = value
        line = r.next()
    parts = line.split()
    if parts[0] != "input_dim":
        raise DataError(f"line {r.pos}: expected input_dim, found {parts[0]!r}")
    input_dim = int(parts[1])
    n_layers = int(r.expect("layers")[0])
    layers = []
    for _ in range(n_layers):
        kind = r.expect("layer")[0]
        if kind == "dense":
            in_dim, out_dim = (int(v) for v in r.expect("dims"))
            activation = r.expect("activation")[0]
            trainable = bool(int(r.expect("trainable")[0]))
            r.expect("W")
            W = np.vstack([r.floats(out_dim) for _ in range(in_dim)]) if in_dim else \
                np.zeros((0, out_dim))
            r.expect("b")
            b = r.floats(out_dim)
            layers.append(Dense(W, b, activation=activation, trainable=trainable))
        elif kind == "dropout":
            rate = float(r.expect("rate")[0])
            layers.append(Dropout(rate))
        elif kind == "batchnorm":
            dim = int(r.expect("dims")[0])
            epsilon = float(r.expect("epsilon")[0])
            momentum = float(r.expect("momentum")[0])
            trainable = bool(int(r.expect("trainable")[0]))
            bn = BatchNorm(dim, epsilon=epsilon, momentum=momentum, trainable=trainable)
            for name in ("gamma", "beta", "running_mean", "running_var"):
                r.expect(name)
                setattr(bn, name, r.floats(dim))
            layers.append(bn)
        else:
            raise DataError(f"line {r.pos}: unknown layer kind {kind!r}")
    r.expect("end")
    return Network(layers, input_dim), meta


def save_network(net: Network, path, meta: dict | None = None):
    Path(path).write_text(dumps_network(net, meta=meta))


def load_network(path) -> tuple[Network, dict]:
    return loads_network(Path(path).read_text())
