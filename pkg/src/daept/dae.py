"""Denoising autoencoder: build, train, export layers for transfer.

The network is Dropout(corruption) -> Dense(input -> code, ReLU) ->
Dense(code -> input, linear).  Training minimizes reconstruction of the
clean batch from its corrupted copy; validation always runs without
corruption.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError, TrainingDivergedError
from .nn.layers import Dense, Dropout, Network
from .nn.losses import loss as loss_fn
from .nn.optim import Adam, AdamParams
from .nn.serialize import load_network, save_network
from .rng import RngStream
from .validation import check_fraction, check_matrix, check_positive_int

STRATEGY_ENCODER = "encoder"
STRATEGY_COMPLETE = "complete"
STRATEGIES = (STRATEGY_ENCODER, STRATEGY_COMPLETE)


@dataclass(frozen=True)
class DAEConfig:
    input_dim: int
    code_dim: int = 128
    corruption: float = 0.10
    epochs: int = 100
    batch_size: int = 500
    loss: str = "mse"

    def __post_init__(self):
        check_positive_int(self.input_dim, "input_dim")
        check_positive_int(self.code_dim, "code_dim")
        check_positive_int(self.epochs, "epochs")
        check_positive_int(self.batch_size, "batch_size")
        check_fraction(self.corruption, "corruption")


@dataclass
class LossHistory:
    train: list = field(default_factory=list)
    val: list = field(default_factory=list)


@dataclass
class TrainedDAE:
    """Trained encoder/decoder plus the per-epoch loss record."""

    encoder: Dense
    decoder: Dense
    config: DAEConfig
    corruption_layer: Dropout
    history: LossHistory

    @property
    def input_dim(self) -> int:
        return self.encoder.in_dim

    @property
    def code_dim(self) -> int:
        return self.encoder.out_dim

    def network(self) -> Network:
        return Network([self.corruption_layer, self.encoder, self.decoder],
                       input_dim=self.input_dim)

    def encode(self, x) -> np.ndarray:
        x = check_matrix(x)
        out, _ = Network([self.encoder], self.input_dim).forward(x)
        return out

    def reconstruct(self, x) -> np.ndarray:
        return self.network().apply(check_matrix(x))


def build_dae(config: DAEConfig, rng: RngStream) -> Network:
    """Fresh Glorot-initialized autoencoder network for the given config."""
    d, code = config.input_dim, config.code_dim
    layers = [
        Dropout(config.corruption),
        Dense.glorot(rng, d, code, activation="relu"),
        Dense.glorot(rng, code, d, activation="linear"),
    ]
    return Network(layers, input_dim=d)


def train_dae(net: Network, x_train, x_val, config: DAEConfig, rng: RngStream,
              adam: AdamParams = AdamParams(), callback=None) -> TrainedDAE:
    """Train `net` in place and return it packaged as a TrainedDAE.

    Mini-batch order comes from the derived stream "shuffle" and corruption
    masks from "dropout", so a run is replayable from (seed, stream) alone.
    `callback(epoch, net, train_loss, val_loss)` fires after each epoch.
    """
    x_train = check_matrix(x_train, "x_train")
    x_val = check_matrix(x_val, "x_val")
    if x_train.shape[1] != config.input_dim or x_val.shape[1] != config.input_dim:
        raise ConfigError(
            f"data has {x_train.shape[1]} features but the config says {config.input_dim}")

    shuffle_rng = rng.derive("shuffle")
    mask_rng = rng.derive("dropout")
    optimizer = Adam(net.trainable_parameters(), adam)
    history = LossHistory()
    n = x_train.shape[0]

    for epoch in range(config.epochs):
        order = shuffle_rng.permutation(n)
        total = 0.0
        seen = 0
        for start in range(0, n, config.batch_size):
            batch = x_train[order[start:start + config.batch_size]]
            out, tape = net.forward(batch, train=True, rng=mask_rng)
            value, grad = loss_fn(config.loss, out, batch)
            if not np.isfinite(value):
                raise TrainingDivergedError(
                    f"non-finite reconstruction loss at epoch {epoch + 1}, "
                    f"batch starting at sample {start}")
            grads = net.backward(tape, grad)
            optimizer.step(net.trainable_parameters(), grads)
            total += value * batch.shape[0]
            seen += batch.shape[0]
        train_loss = total / seen
        val_out, _ = net.forward(x_val, train=False)
        val_loss, _ = loss_fn(config.loss, val_out, x_val)
        history.train.append(train_loss)
        history.val.append(val_loss)
        if callback is not None:
            callback(epoch, net, train_loss, val_loss)

    dropout, encoder, decoder = net.layers
    return TrainedDAE(encoder=encoder, decoder=decoder, config=config,
                      corruption_layer=dropout, history=history)


def export_layers(dae: TrainedDAE, strategy: str) -> list[Dense]:
    """Copies of the pretrained layers to seed a downstream network.

    "encoder" exports the encoding layer only; "complete" exports encoder
    and decoder.  The corruption layer is never exported.
    """
    if strategy not in STRATEGIES:
        raise ConfigError(f"unknown transfer strategy {strategy!r}; choose from {STRATEGIES}")
    picked = [dae.encoder] if strategy == STRATEGY_ENCODER else [dae.encoder, dae.decoder]
    return [Dense(np.array(l.W), np.array(l.b), activation=l.activation) for l in picked]


def save_dae(dae: TrainedDAE, path):
    """Persist the network plus a `<stem>.history.csv` loss sidecar."""
    path = Path(path)
    meta = {
        "artifact": "dae",
        "epochs": dae.config.epochs,
        "batch_size": dae.config.batch_size,
        "loss": dae.config.loss,
    }
    save_network(dae.network(), path, meta=meta)
    write_history_csv(dae.history, _history_path(path))


def load_dae(path) -> TrainedDAE:
    path = Path(path)
    net, meta = load_network(path)
    kinds = [l.kind for l in net.layers]
    if kinds != ["dropout", "dense", "dense"]:
        raise DataError(f"{path} does not hold an autoencoder (layers: {kinds})")
    dropout, encoder, decoder = net.layers
    config = DAEConfig(
        input_dim=encoder.in_dim,
        code_dim=encoder.out_dim,
        corruption=dropout.rate,
        epochs=int(meta.get("epochs", 1)),
        batch_size=int(meta.get("batch_size", 500)),
        loss=meta.get("loss", "mse"),
    )
    history = LossHistory()
    sidecar = _history_path(path)
    if sidecar.exists():
        history = read_history_csv(sidecar)
    return TrainedDAE(encoder=encoder, decoder=decoder, config=config,
                      corruption_layer=dropout, history=history)


def write_history_csv(history: LossHistory, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_loss", "val_loss"])
        for i, (tr, va) in enumerate(zip(history.train, history.val), start=1):
            writer.writerow([i, format(tr, ".17g"), format(va, ".17g")])


def read_history_csv(path) -> LossHistory:
    history = LossHistory()
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            history.train.append(float(row["train_loss"]))
            history.val.append(float(row["val_loss"]))
    return history


def _history_path(path: Path) -> Path:
    return path.with_name(path.stem + ".history.csv")
