"""Full experiment grid: classes x strategies x approaches over k folds.

A run directory is self-describing: `config.snapshot` records the settings,
`folds/` holds every per-fold artifact (pretrained autoencoder, per-epoch
metrics, best-epoch snapshot, error notes), and the report, aggregate and
curve files are pure functions of those artifacts.  Re-rendering a
directory never retrains and reproduces the report byte for byte.
"""

from __future__ import annotations

import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .classifier import (APPROACHES, ClassifierConfig, assemble, best_checkpoint,
                         read_metrics_csv, train_classifier, write_metrics_csv)
from .dae import (STRATEGIES, DAEConfig, build_dae, load_dae, read_history_csv,
                  save_dae, train_dae)
from .data import LabeledDataset, relabel
from .errors import ConfigError, DataError
from .evaluation import METRIC_FIELDS, aggregate, format_cell, select_best, stratified_kfold
from .nn.optim import AdamParams
from .nn.serialize import load_network, save_network
from .rng import RngStream

STRATEGY_LABELS = {"encoder": "Encoding Layers", "complete": "Complete AE"}
APPROACH_LABELS = {"fixed": "Fixed Weights (Approach A)",
                   "finetune": "Fine-Tuning (Approach B)"}
METRIC_HEADERS = ("Loss", "Accuracy (%)", "Precision (%)", "Recall (%)", "F-score (%)")


@dataclass(frozen=True)
class RunConfig:
    classes: tuple = ()  # empty means every cohort in the dataset
    strategies: tuple = STRATEGIES
    approaches: tuple = APPROACHES
    k: int = 5
    seed: int = 0
    code_dim: int = 128
    corruption: float = 0.10
    epochs_dae: int = 100
    epochs_clf: int = 300
    batch_size: int = 500
    fc1_dim: int = 64
    fc2_dim: int = 16
    learning_rate: float = 1e-3
    threshold: float = 0.5

    def __post_init__(self):
        for s in self.strategies:
            if s not in STRATEGIES:
                raise ConfigError(f"unknown strategy {s!r}; choose from {STRATEGIES}")
        for a in self.approaches:
            if a not in APPROACHES:
                raise ConfigError(f"unknown approach {a!r}; choose from {APPROACHES}")
        if not self.strategies or not self.approaches:
            raise ConfigError("at least one strategy and one approach are required")


_INT_KEYS = ("k", "seed", "code_dim", "epochs_dae", "epochs_clf", "batch_size",
             "fc1_dim", "fc2_dim")
_FLOAT_KEYS = ("corruption", "learning_rate", "threshold")
_TUPLE_KEYS = ("classes", "strategies", "approaches")


def write_snapshot(config: RunConfig, path):
    lines = []
    for key in sorted(_INT_KEYS + _FLOAT_KEYS + _TUPLE_KEYS):
        value = getattr(config, key)
        if key in _TUPLE_KEYS:
            value = ",".join(value)
        elif key in _FLOAT_KEYS:
            value = format(float(value), ".17g")
        lines.append(f"{key}={value}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_snapshot(path) -> RunConfig:
    fields = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise DataError(f"{path}: line {lineno}: expected key=value")
        key, value = line.split("=", 1)
        if key in _INT_KEYS:
            fields[key] = int(value)
        elif key in _FLOAT_KEYS:
            fields[key] = float(value)
        elif key in _TUPLE_KEYS:
            fields[key] = tuple(v for v in value.split(",") if v)
        else:
            raise DataError(f"{path}: line {lineno}: unknown key {key!r}")
    return RunConfig(**fields)


def fold_dir(outdir, class_name: str, fold: int) -> Path:
    return Path(outdir) / "folds" / class_name / f"fold{fold}"


def cell_name(strategy: str, approach: str) -> str:
    return f"{strategy}_{approach}"


def _train_unit(seed: int, class_name: str, fold: int, features, labels,
                train_idx, val_idx, config: RunConfig, directory: Path) -> list[str]:
    """Train one (class, fold): the shared autoencoder, then every
    (strategy, approach) cell.  Returns error descriptions, one per failed
    cell; artifacts for surviving cells are always written."""
    directory.mkdir(parents=True, exist_ok=True)
    x_train, x_val = features[train_idx], features[val_idx]
    y_train, y_val = labels[train_idx], labels[val_idx]
    adam = AdamParams(learning_rate=config.learning_rate)
    errors = []

    dae_config = DAEConfig(input_dim=features.shape[1], code_dim=config.code_dim,
                           corruption=config.corruption, epochs=config.epochs_dae,
                           batch_size=config.batch_size)
    dae_rng = RngStream(seed).derive("dae", class_name, fold)
    try:
        net = build_dae(dae_config, dae_rng.derive("init"))
        dae = train_dae(net, x_train, x_val, dae_config, dae_rng.derive("train"),
                        adam=adam)
        save_dae(dae, directory / "dae.daept")
    except Exception as exc:
        note = f"{class_name}/fold{fold}/dae: {exc}"
        (directory / "dae.error.txt").write_text(traceback.format_exc())
        return [f"{note} (all cells of this fold skipped)"]

    clf_config = ClassifierConfig(fc1_dim=config.fc1_dim, fc2_dim=config.fc2_dim,
                                  epochs=config.epochs_clf,
                                  batch_size=config.batch_size,
                                  threshold=config.threshold)
    for strategy in config.strategies:
        for approach in config.approaches:
            cell = cell_name(strategy, approach)
            cell_rng = RngStream(seed).derive("clf", class_name, fold, strategy, approach)
            try:
                net = assemble(dae, strategy, approach, clf_config,
                               cell_rng.derive("init"))
                checkpoints = train_classifier(net, x_train, y_train, x_val, y_val,
                                               clf_config, cell_rng.derive("train"),
                                               adam=adam)
                write_metrics_csv(checkpoints, directory / f"{cell}.metrics.csv")
                best = best_checkpoint(checkpoints)
                save_network(best.snapshot, directory / f"{cell}.best.daept",
                             meta={"artifact": "classifier", "epoch": best.epoch,
                                   "class": class_name, "fold": fold,
                                   "strategy": strategy, "approach": approach})
            except Exception as exc:
                errors.append(f"{class_name}/fold{fold}/{cell}: {exc}")
                (directory / f"{cell}.error.txt").write_text(traceback.format_exc())
    return errors


def _train_unit_args(args):
    return _train_unit(*args)


def run_experiment(dataset: LabeledDataset, config: RunConfig, outdir,
                   jobs: int = 1) -> list[str]:
    """Train the whole grid into `outdir` and render the report.

    Returns the list of cell failures (empty on a fully green run).  Fold
    splits and all randomness derive from the master seed, so two runs with
    the same seed and dataset produce identical artifacts.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    classes = config.classes or dataset.cohort_names
    for c in classes:
        if c not in dataset.cohort_names:
            raise ConfigError(f"target class {c!r} is not a cohort "
                              f"(cohorts: {list(dataset.cohort_names)})")
    config = replace(config, classes=tuple(classes))
    write_snapshot(config, outdir / "config.snapshot")

    units = []
    for class_name in classes:
        labels = relabel(dataset, class_name).labels
        split = stratified_kfold(labels, config.k,
                                 RngStream(config.seed).derive("folds", class_name))
        for fold, (train_idx, val_idx) in enumerate(split.folds):
            units.append((config.seed, class_name, fold, dataset.features, labels,
                          train_idx, val_idx, config,
                          fold_dir(outdir, class_name, fold)))

    errors: list[str] = []
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for unit_errors in pool.map(_train_unit_args, units):
                errors.extend(unit_errors)
    else:
        for unit in units:
            errors.extend(_train_unit(*unit))

    render_report(outdir)
    return errors


@dataclass
class ReportStatus:
    """What a render found on disk: reports rendered, cells without all
    folds, and the error notes left by failed training runs."""

    report_path: Path
    missing: list
    errors: list


def render_report(outdir) -> ReportStatus:
    """Regenerate report.tsv, per_fold_records.csv, aggregates.csv and the
    curve CSVs from the per-fold artifacts, without any retraining."""
    outdir = Path(outdir)
    config = read_snapshot(outdir / "config.snapshot")
    classes = config.classes
    records = {}  # (class, strategy, approach) -> list of (fold, best checkpoint)
    missing = []
    error_notes = []

    for class_name in classes:
        for fold in range(config.k):
            directory = fold_dir(outdir, class_name, fold)
            for note in sorted(directory.glob("*.error.txt")):
                error_notes.append(str(note.relative_to(outdir)))
            for strategy in config.strategies:
                for approach in config.approaches:
                    cell = (class_name, strategy, approach)
                    path = directory / f"{cell_name(strategy, approach)}.metrics.csv"
                    if not path.exists():
                        missing.append(str(path.relative_to(outdir)))
                        continue
                    best = select_best(read_metrics_csv(path))
                    records.setdefault(cell, []).append((fold, best))

    _write_per_fold_records(outdir / "per_fold_records.csv", config, records)
    _write_aggregates(outdir / "aggregates.csv", config, records)
    _write_report(outdir / "report.tsv", config, records)
    _write_curves(outdir, config)
    return ReportStatus(report_path=outdir / "report.tsv", missing=missing,
                        errors=error_notes)


def _cells(config: RunConfig):
    for class_name in config.classes:
        for strategy in config.strategies:
            for approach in config.approaches:
                yield class_name, strategy, approach


def _write_per_fold_records(path, config: RunConfig, records: dict):
    lines = ["class,strategy,approach,fold,best_epoch," + ",".join(METRIC_FIELDS)]
    for cell in _cells(config):
        class_name, strategy, approach = cell
        for fold, best in records.get(cell, []):
            values = ",".join(format(getattr(best.val, m), ".17g")
                              for m in METRIC_FIELDS)
            lines.append(f"{class_name},{strategy},{approach},{fold},"
                         f"{best.epoch},{values}")
    Path(path).write_text("\n".join(lines) + "\n")


def _write_aggregates(path, config: RunConfig, records: dict):
    lines = ["class,strategy,approach,metric,mean,sd,variance"]
    for cell in _cells(config):
        class_name, strategy, approach = cell
        folds = records.get(cell, [])
        if len(folds) != config.k:
            continue
        report = aggregate(f"{class_name}/{strategy}/{approach}",
                           [best.val for _, best in folds])
        for metric in METRIC_FIELDS:
            lines.append(
                f"{class_name},{strategy},{approach},{metric},"
                f"{format(report.mean[metric], '.17g')},"
                f"{format(report.sd[metric], '.17g')},"
                f"{format(report.variance[metric], '.17g')}")
    Path(path).write_text("\n".join(lines) + "\n")


def _write_report(path, config: RunConfig, records: dict):
    """Two header rows, one body row per class x strategy, one column group
    of five metrics per approach; incomplete cells render as MISSING."""
    group_header = [""]
    column_header = ["Top Layers (DAE)"]
    for approach in config.approaches:
        group_header += [APPROACH_LABELS[approach]] + [""] * (len(METRIC_HEADERS) - 1)
        column_header += list(METRIC_HEADERS)
    lines = ["\t".join(group_header), "\t".join(column_header)]
    for class_name in config.classes:
        for strategy in config.strategies:
            row = [f"{class_name}: {STRATEGY_LABELS[strategy]}"]
            for approach in config.approaches:
                folds = records.get((class_name, strategy, approach), [])
                if len(folds) != config.k:
                    row += ["MISSING"] * len(METRIC_HEADERS)
                    continue
                report = aggregate(f"{class_name}/{strategy}/{approach}",
                                   [best.val for _, best in folds])
                row += [format_cell(m, report.mean[m], report.sd[m])
                        for m in METRIC_FIELDS]
            lines.append("\t".join(row))
    Path(path).write_text("\n".join(lines) + "\n")


def _curve_lines(series_by_fold: dict) -> list[str]:
    """Aggregate {fold: {column: [per-epoch values]}} into per-epoch
    mean/sd rows, one per epoch index present in any fold."""
    columns = None
    for series in series_by_fold.values():
        columns = list(series)
        break
    if columns is None:
        return []
    n_epochs = max(len(s[columns[0]]) for s in series_by_fold.values())
    header = "epoch," + ",".join(f"{c}_{stat}" for c in columns for stat in ("mean", "sd"))
    lines = [header]
    for e in range(n_epochs):
        cells = [str(e + 1)]
        for c in columns:
            values = np.array([s[c][e] for s in series_by_fold.values()
                               if len(s[c]) > e])
            mean = values.mean()
            sd = values.std(ddof=1) if values.size > 1 else 0.0
            cells.append(format(mean, ".17g"))
            cells.append(format(sd, ".17g"))
        lines.append(",".join(cells))
    return lines


def _write_curves(outdir: Path, config: RunConfig):
    curves = outdir / "curves"
    curves.mkdir(exist_ok=True)
    for class_name in config.classes:
        dae_series = {}
        for fold in range(config.k):
            history_path = fold_dir(outdir, class_name, fold) / "dae.history.csv"
            if history_path.exists():
                history = read_history_csv(history_path)
                dae_series[fold] = {"train_loss": history.train,
                                    "val_loss": history.val}
        lines = _curve_lines(dae_series)
        if lines:
            (curves / f"dae_{class_name}.csv").write_text("\n".join(lines) + "\n")
        for strategy in config.strategies:
            for approach in config.approaches:
                series = {}
                for fold in range(config.k):
                    path = (fold_dir(outdir, class_name, fold) /
                            f"{cell_name(strategy, approach)}.metrics.csv")
                    if not path.exists():
                        continue
                    checkpoints = read_metrics_csv(path)
                    series[fold] = {
                        "train_loss": [c.train.loss for c in checkpoints],
                        "val_loss": [c.val.loss for c in checkpoints],
                        "val_f1": [c.val.f1 for c in checkpoints],
                    }
                lines = _curve_lines(series)
                if lines:
                    name = f"clf_{class_name}_{cell_name(strategy, approach)}.csv"
                    (curves / name).write_text("\n".join(lines) + "\n")


def load_best_network(outdir, class_name: str, fold: int, strategy: str,
                      approach: str):
    """Reload one cell's best-epoch snapshot: (network, meta)."""
    path = (fold_dir(outdir, class_name, fold) /
            f"{cell_name(strategy, approach)}.best.daept")
    if not path.exists():
        raise DataError(f"no best-epoch snapshot at {path}")
    return load_network(path)


def load_fold_dae(outdir, class_name: str, fold: int):
    path = fold_dir(outdir, class_name, fold) / "dae.daept"
    if not path.exists():
        raise DataError(f"no pretrained autoencoder at {path}")
    return load_dae(path)
