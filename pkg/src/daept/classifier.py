"""Binary classifier seeded with pretrained autoencoder layers.

The network is the imported layers (encoder, or encoder plus decoder)
followed by a classification head: BatchNorm, two ReLU fully connected
layers, and a single sigmoid neuron.  Imported layers are frozen under the
fixed-weights approach and trained normally under fine-tuning.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .dae import STRATEGIES, TrainedDAE, export_layers
from .errors import ConfigError, DataError, TrainingDivergedError
from .evaluation import (METRIC_FIELDS, MetricsRecord, confusion, is_better,
                         metrics_from_confusion, select_best)
from .nn.layers import BatchNorm, Dense, Network
from .nn.losses import binary_cross_entropy
from .nn.optim import Adam, AdamParams
from .rng import RngStream
from .validation import check_binary_labels, check_matrix, check_positive_int

APPROACH_FIXED = "fixed"
APPROACH_FINETUNE = "finetune"
APPROACHES = (APPROACH_FIXED, APPROACH_FINETUNE)


@dataclass(frozen=True)
class ClassifierConfig:
    fc1_dim: int = 64
    fc2_dim: int = 16
    epochs: int = 300
    batch_size: int = 500
    threshold: float = 0.5

    def __post_init__(self):
        check_positive_int(self.fc1_dim, "fc1_dim")
        check_positive_int(self.fc2_dim, "fc2_dim")
        check_positive_int(self.epochs, "epochs")
        check_positive_int(self.batch_size, "batch_size")
        if not 0.0 < self.threshold < 1.0:
            raise ConfigError(f"threshold must be in (0, 1), got {self.threshold}")


@dataclass
class EpochCheckpoint:
    """Metrics for one epoch; `snapshot` is kept only for the running best."""

    epoch: int
    train: MetricsRecord
    val: MetricsRecord
    snapshot: Network | None = None


def assemble(dae: TrainedDAE, strategy: str, approach: str,
             config: ClassifierConfig, rng: RngStream) -> Network:
    """Build the transfer classifier for one (strategy, approach) cell."""
    if strategy not in STRATEGIES:
        raise ConfigError(f"unknown transfer strategy {strategy!r}; choose from {STRATEGIES}")
    if approach not in APPROACHES:
        raise ConfigError(f"unknown training approach {approach!r}; choose from {APPROACHES}")
    imported = export_layers(dae, strategy)
    if approach == APPROACH_FIXED:
        for layer in imported:
            layer.freeze()
    width = imported[-1].out_dim
    head = [
        BatchNorm(width),
        Dense.glorot(rng, width, config.fc1_dim, activation="relu"),
        Dense.glorot(rng, config.fc1_dim, config.fc2_dim, activation="relu"),
        Dense.glorot(rng, config.fc2_dim, 1, activation="sigmoid"),
    ]
    return Network(imported + head, input_dim=dae.input_dim)


def predict_proba(net: Network, x) -> np.ndarray:
    """Positive-class probability per sample, shape (n,)."""
    out = net.apply(check_matrix(x))
    if out.shape[1] != 1:
        raise ConfigError(f"classifier network must end in one neuron, got {out.shape[1]}")
    return out.reshape(-1)


def classify(probabilities, threshold: float = 0.5) -> np.ndarray:
    """Map probabilities to 0/1 labels; the boundary goes to the positive class."""
    p = np.asarray(probabilities, dtype=np.float64)
    return (p >= threshold).astype(np.float64)


def evaluate(net: Network, x, y, threshold: float = 0.5) -> MetricsRecord:
    """Eval-mode loss and confusion metrics on one labeled set."""
    x = check_matrix(x)
    y = check_binary_labels(y, x.shape[0])
    probs = predict_proba(net, x)
    value, _ = binary_cross_entropy(probs.reshape(-1, 1),
                                    y.reshape(-1, 1).astype(np.float64))
    tp, fp, tn, fn = confusion(classify(probs, threshold), y)
    return metrics_from_confusion(tp, fp, tn, fn, loss=value)


def train_classifier(net: Network, x_train, y_train, x_val, y_val,
                     config: ClassifierConfig, rng: RngStream,
                     adam: AdamParams = AdamParams(),
                     callback=None) -> list[EpochCheckpoint]:
    """Mini-batch BCE training with a per-epoch metrics checkpoint.

    Returns one checkpoint per epoch; the parameter snapshot is retained
    only on the checkpoint that is currently best by validation F-score
    (ties: lower loss, then earlier epoch), so storage stays bounded.
    """
    x_train = check_matrix(x_train, "x_train")
    x_val = check_matrix(x_val, "x_val")
    y_train = check_binary_labels(y_train, x_train.shape[0], name="y_train")
    y_val = check_binary_labels(y_val, x_val.shape[0], name="y_val")
    if np.unique(y_train).shape[0] < 2:
        raise DataError("training fold contains a single class; "
                        "the stratified split upstream is broken")

    shuffle_rng = rng.derive("shuffle")
    mask_rng = rng.derive("dropout")
    optimizer = Adam(net.trainable_parameters(), adam)
    targets = y_train.reshape(-1, 1).astype(np.float64)
    n = x_train.shape[0]
    checkpoints: list[EpochCheckpoint] = []
    best: EpochCheckpoint | None = None

    for epoch in range(1, config.epochs + 1):
        order = shuffle_rng.permutation(n)
        for start in range(0, n, config.batch_size):
            take = order[start:start + config.batch_size]
            out, tape = net.forward(x_train[take], train=True, rng=mask_rng)
            value, grad = binary_cross_entropy(out, targets[take])
            if not np.isfinite(value):
                raise TrainingDivergedError(
                    f"non-finite classification loss at epoch {epoch}, "
                    f"batch starting at sample {start}")
            grads = net.backward(tape, grad)
            optimizer.step(net.trainable_parameters(), grads)
        ckpt = EpochCheckpoint(
            epoch=epoch,
            train=evaluate(net, x_train, y_train, config.threshold),
            val=evaluate(net, x_val, y_val, config.threshold),
        )
        if best is None or is_better(ckpt, best):
            if best is not None:
                best.snapshot = None
            ckpt.snapshot = net.copy()
            best = ckpt
        checkpoints.append(ckpt)
        if callback is not None:
            callback(ckpt, net)
    return checkpoints


def best_checkpoint(checkpoints) -> EpochCheckpoint:
    best = select_best(checkpoints)
    if best.snapshot is None:
        raise ConfigError("selected checkpoint carries no parameter snapshot")
    return best


def write_metrics_csv(checkpoints, path):
    """Per-epoch metrics as `epoch,split,loss,accuracy,precision,recall,f1`."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "split"] + list(METRIC_FIELDS))
        for ckpt in checkpoints:
            for split, rec in (("train", ckpt.train), ("val", ckpt.val)):
                writer.writerow([ckpt.epoch, split] +
                                [format(getattr(rec, m), ".17g") for m in METRIC_FIELDS])


def read_metrics_csv(path) -> list[EpochCheckpoint]:
    """Rebuild metric-only checkpoints (no snapshots) from the CSV."""
    rows: dict[int, dict[str, MetricsRecord]] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            epoch = int(row["epoch"])
            rec = MetricsRecord(**{m: float(row[m]) for m in METRIC_FIELDS})
            rows.setdefault(epoch, {})[row["split"]] = rec
    checkpoints = []
    for epoch in sorted(rows):
        by_split = rows[epoch]
        if "train" not in by_split or "val" not in by_split:
            raise DataError(f"metrics file {path} is missing a split at epoch {epoch}")
        checkpoints.append(EpochCheckpoint(epoch=epoch, train=by_split["train"],
                                           val=by_split["val"]))
    return checkpoints
