"""Stratified k-fold splitting, binary metrics, model selection, aggregation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError
from .rng import RngStream
from .validation import check_binary_labels, check_positive_int

METRIC_FIELDS = ("loss", "accuracy", "precision", "recall", "f1")


@dataclass(frozen=True)
class MetricsRecord:
    loss: float
    accuracy: float
    precision: float
    recall: float
    f1: float

    def as_dict(self) -> dict:
        return {name: getattr(self, name) for name in METRIC_FIELDS}


@dataclass(frozen=True)
class FoldSplit:
    k: int
    folds: tuple  # of (train_indices, val_indices) int arrays

    def __iter__(self):
        return iter(self.folds)

    def __len__(self):
        return self.k


def stratified_kfold(labels, k: int, rng: RngStream) -> FoldSplit:
    """Split indices into k folds preserving class proportions.

    Within each class the indices are shuffled, then dealt round-robin, so
    every fold's class count is within 1 of exact proportionality.
    """
    labels = np.asarray(labels).reshape(-1)
    check_positive_int(k, "k")
    if k < 2:
        raise ConfigError(f"k must be at least 2, got {k}")
    n = labels.shape[0]
    val_members = [[] for _ in range(k)]
    for value in np.unique(labels):
        idx = np.flatnonzero(labels == value)
        if idx.shape[0] < k:
            raise DataError(
                f"class {value!r} has {idx.shape[0]} samples, fewer than k={k}")
        shuffled = idx[rng.permutation(idx.shape[0])]
        for j in range(k):
            val_members[j].append(shuffled[j::k])
    folds = []
    for j in range(k):
        val = np.sort(np.concatenate(val_members[j]))
        mask = np.ones(n, dtype=bool)
        mask[val] = False
        folds.append((np.flatnonzero(mask), val))
    return FoldSplit(k=k, folds=tuple(folds))


def confusion(pred, true) -> tuple:
    """(TP, FP, TN, FN) counts for binary label vectors."""
    pred = np.asarray(pred, dtype=np.float64).reshape(-1)
    true = np.asarray(true, dtype=np.float64).reshape(-1)
    if pred.shape[0] != true.shape[0]:
        raise ConfigError(
            f"prediction/truth length mismatch: {pred.shape[0]} vs {true.shape[0]}")
    check_binary_labels(pred, name="predictions")
    check_binary_labels(true, name="truth")
    tp = int(np.sum((pred == 1) & (true == 1)))
    fp = int(np.sum((pred == 1) & (true == 0)))
    tn = int(np.sum((pred == 0) & (true == 0)))
    fn = int(np.sum((pred == 0) & (true == 1)))
    return tp, fp, tn, fn


def _ratio(num: float, den: float) -> float:
    # zero denominator is defined as 0 so aggregation stays total
    return num / den if den > 0 else 0.0


def metrics_from_confusion(tp: int, fp: int, tn: int, fn: int,
                           loss: float = 0.0) -> MetricsRecord:
    accuracy = _ratio(tp + tn, tp + fp + tn + fn)
    precision = _ratio(tp, tp + fp)
    recall = _ratio(tp, tp + fn)
    f1 = _ratio(2.0 * precision * recall, precision + recall)
    return MetricsRecord(loss=float(loss), accuracy=accuracy,
                         precision=precision, recall=recall, f1=f1)


def is_better(a, b) -> bool:
    """True when checkpoint `a` beats `b`: higher val f1, then lower val
    loss, then earlier epoch."""
    if a.val.f1 != b.val.f1:
        return a.val.f1 > b.val.f1
    if a.val.loss != b.val.loss:
        return a.val.loss < b.val.loss
    return a.epoch < b.epoch


def select_best(checkpoints):
    """Best checkpoint by validation F-score with deterministic tie-breaks."""
    if not checkpoints:
        raise ConfigError("select_best needs at least one checkpoint")
    ordered = sorted(checkpoints, key=lambda c: c.epoch)
    best = ordered[0]
    for cand in ordered[1:]:
        if is_better(cand, best):
            best = cand
    return best


@dataclass
class CVReport:
    """Per-fold best-epoch metrics for one grid cell plus their aggregates."""

    config_id: str
    records: list
    mean: dict = field(default_factory=dict)
    sd: dict = field(default_factory=dict)
    variance: dict = field(default_factory=dict)


def aggregate(config_id: str, records) -> CVReport:
    records = list(records)
    if not records:
        raise ConfigError("aggregate needs at least one fold record")
    report = CVReport(config_id=config_id, records=records)
    for name in METRIC_FIELDS:
        values = np.array([getattr(r, name) for r in records], dtype=np.float64)
        report.mean[name] = float(values.mean())
        if values.shape[0] > 1:
            report.variance[name] = float(values.var(ddof=1))
        else:
            report.variance[name] = 0.0
        report.sd[name] = float(np.sqrt(report.variance[name]))
    return report


def format_cell(metric: str, mean: float, sd: float) -> str:
    """Render one report cell: raw for loss, percent for the rest."""
    if metric == "loss":
        return f"{mean:.3f} ± {sd:.2f}"
    return f"{mean * 100:.2f}% ± {sd * 100:.2f}"
