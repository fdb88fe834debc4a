"""Command-line surface.

Subcommands: `synth` (generate cohort files), `preprocess` (clean, impute,
intersect, merge), `pretrain` (train one autoencoder), `train` (one
classifier cell), `run` (the full grid), `report` (re-render a run
directory).  Settings resolve as built-in defaults, overridden by a
`key=value` config file, overridden by flags.  Exit codes: 0 success,
1 usage error, 2 data error, 3 training failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .classifier import (APPROACHES, ClassifierConfig, assemble, best_checkpoint,
                         train_classifier, write_metrics_csv)
from .dae import (STRATEGIES, DAEConfig, build_dae, load_dae, save_dae, train_dae)
from .data import (drop_constant_features, impute_column_mean, intersect_and_merge,
                   load_dataset, parse_table, relabel, save_dataset)
from .errors import ConfigError, DataError, NumericalError
from .evaluation import METRIC_FIELDS, stratified_kfold
from .experiment import RunConfig, cell_name, render_report, run_experiment
from .nn.optim import AdamParams
from .nn.serialize import save_network
from .rng import RngStream
from .synth import make_spec, generate_files

FEATURES_NAME = "merged.tsv"
LABELS_NAME = "labels.csv"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_TRAINING = 3


class _Parser(argparse.ArgumentParser):
    # raise instead of exiting so main() owns the exit-code mapping
    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


def _split_csv(value: str) -> tuple:
    return tuple(v.strip() for v in value.split(",") if v.strip())


def _read_config_file(path) -> dict:
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}: line {lineno}: expected key=value")
        key, value = line.split("=", 1)
        values[key.strip()] = value.strip()
    return values


def _resolve(args, defaults: dict) -> dict:
    """defaults < config file < flags, with file values coerced by the
    default's type."""
    from_file = _read_config_file(args.config) if getattr(args, "config", None) else {}
    for key in from_file:
        if key not in defaults:
            raise ConfigError(f"config file key {key!r} is not a setting of this command")
    resolved = {}
    for key, default in defaults.items():
        value = getattr(args, key, None)
        if value is None and key in from_file:
            raw = from_file[key]
            if isinstance(default, bool):
                value = raw.lower() in ("1", "true", "yes")
            elif isinstance(default, int):
                value = int(raw)
            elif isinstance(default, float):
                value = float(raw)
            elif isinstance(default, tuple):
                value = _split_csv(raw)
            else:
                value = raw
        if value is None:
            value = default
        if isinstance(default, tuple) and isinstance(value, str):
            value = _split_csv(value)
        resolved[key] = value
    return resolved


def _dataset_paths(data_dir) -> tuple:
    data_dir = Path(data_dir)
    features = data_dir / FEATURES_NAME
    labels = data_dir / LABELS_NAME
    for p in (features, labels):
        if not p.exists():
            raise DataError(f"{p} not found; run `preprocess` first")
    return features, labels


SYNTH_DEFAULTS = dict(seed=0, cohorts=("thyroid", "skin", "stomach"), samples=200,
                      features=50, separation=3.0, noise=1.0, missing_rate=0.02,
                      constant_columns=2, omit_per_cohort=2)


def cmd_synth(args) -> int:
    opts = _resolve(args, SYNTH_DEFAULTS)
    spec = make_spec(seed=opts["seed"], cohort_names=opts["cohorts"],
                     samples_per_cohort=opts["samples"], n_features=opts["features"],
                     separation=opts["separation"], noise=opts["noise"],
                     missing_rate=opts["missing_rate"],
                     constant_columns=opts["constant_columns"],
                     omit_per_cohort=opts["omit_per_cohort"])
    for path in generate_files(spec, args.outdir):
        table_genes = opts["features"] + opts["constant_columns"] - opts["omit_per_cohort"]
        print(f"wrote {path} ({opts['samples']} samples x {table_genes} genes)")
    return EXIT_OK


def cmd_preprocess(args) -> int:
    if len(args.inputs) < 2:
        raise ConfigError("preprocess needs at least two cohort files")
    cleaned = []
    for path in args.inputs:
        table = parse_table(path, delimiter=args.delimiter)
        kept = drop_constant_features(table)
        imputed = impute_column_mean(kept)
        print(f"cohort {table.cohort_name}: {table.n_samples} samples, "
              f"{table.n_genes} genes, dropped {table.n_genes - kept.n_genes} "
              f"constant, imputed {int(kept.mask.sum())} values")
        cleaned.append(imputed)
    positive = args.positive_class or cleaned[0].cohort_name
    ds = intersect_and_merge(cleaned, positive)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    save_dataset(ds, outdir / FEATURES_NAME, outdir / LABELS_NAME)
    print(f"merged: {ds.n_samples} samples x {len(ds.gene_names)} genes "
          f"-> {outdir / FEATURES_NAME}")
    fractions = ", ".join(
        f"{name} {100.0 * sum(c == name for c in ds.cohorts) / ds.n_samples:.1f}%"
        for name in ds.cohort_names)
    print(f"class fractions: {fractions} (positive: {positive})")
    return EXIT_OK


PRETRAIN_DEFAULTS = dict(epochs_dae=100, batch_size=500, code_dim=128,
                         corruption=0.10, learning_rate=1e-3, seed=0)


def cmd_pretrain(args) -> int:
    opts = _resolve(args, PRETRAIN_DEFAULTS)
    features_path, labels_path = _dataset_paths(args.data)
    ds = load_dataset(features_path, labels_path)
    n = ds.n_samples
    perm = RngStream(opts["seed"]).derive("holdout").permutation(n)
    n_val = max(1, n // 5)
    val_idx, train_idx = perm[:n_val], perm[n_val:]
    config = DAEConfig(input_dim=ds.features.shape[1], code_dim=opts["code_dim"],
                       corruption=opts["corruption"], epochs=opts["epochs_dae"],
                       batch_size=opts["batch_size"])
    rng = RngStream(opts["seed"]).derive("pretrain")
    net = build_dae(config, rng.derive("init"))
    dae = train_dae(net, ds.features[train_idx], ds.features[val_idx], config,
                    rng.derive("train"),
                    adam=AdamParams(learning_rate=opts["learning_rate"]))
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    save_dae(dae, outdir / "dae.daept")
    print(f"pretrained {config.epochs} epochs: train loss "
          f"{dae.history.train[-1]:.6f}, val loss {dae.history.val[-1]:.6f}")
    print(f"saved {outdir / 'dae.daept'}")
    return EXIT_OK


TRAIN_DEFAULTS = dict(strategy="encoder", approach="finetune", epochs_clf=300,
                      batch_size=500, fc1_dim=64, fc2_dim=16, threshold=0.5,
                      learning_rate=1e-3, seed=0)


def cmd_train(args) -> int:
    opts = _resolve(args, TRAIN_DEFAULTS)
    features_path, labels_path = _dataset_paths(args.data)
    ds = relabel(load_dataset(features_path, labels_path), args.target_class)
    dae = load_dae(args.dae)
    split = stratified_kfold(ds.labels, 5,
                             RngStream(opts["seed"]).derive("holdout"))
    train_idx, val_idx = split.folds[0]
    config = ClassifierConfig(fc1_dim=opts["fc1_dim"], fc2_dim=opts["fc2_dim"],
                              epochs=opts["epochs_clf"],
                              batch_size=opts["batch_size"],
                              threshold=opts["threshold"])
    cell_rng = RngStream(opts["seed"]).derive(
        "cell", args.target_class, opts["strategy"], opts["approach"])
    net = assemble(dae, opts["strategy"], opts["approach"], config,
                   cell_rng.derive("init"))
    checkpoints = train_classifier(
        net, ds.features[train_idx], ds.labels[train_idx],
        ds.features[val_idx], ds.labels[val_idx], config, cell_rng.derive("train"),
        adam=AdamParams(learning_rate=opts["learning_rate"]))
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    cell = cell_name(opts["strategy"], opts["approach"])
    write_metrics_csv(checkpoints, outdir / f"{cell}.metrics.csv")
    best = best_checkpoint(checkpoints)
    save_network(best.snapshot, outdir / f"{cell}.best.daept",
                 meta={"artifact": "classifier", "epoch": best.epoch,
                       "class": args.target_class, "strategy": opts["strategy"],
                       "approach": opts["approach"]})
    summary = ", ".join(f"{m} {getattr(best.val, m):.4f}" for m in METRIC_FIELDS)
    print(f"best epoch {best.epoch}: {summary}")
    print(f"saved {outdir / f'{cell}.best.daept'}")
    return EXIT_OK


RUN_DEFAULTS = dict(classes=(), strategies=STRATEGIES, approaches=APPROACHES,
                    k=5, seed=0, code_dim=128, corruption=0.10, epochs_dae=100,
                    epochs_clf=300, batch_size=500, fc1_dim=64, fc2_dim=16,
                    learning_rate=1e-3, threshold=0.5, jobs=1)


def cmd_run(args) -> int:
    opts = _resolve(args, RUN_DEFAULTS)
    features_path, labels_path = _dataset_paths(args.data)
    ds = load_dataset(features_path, labels_path)
    jobs = opts.pop("jobs")
    config = RunConfig(**opts)
    n_classes = len(config.classes or ds.cohort_names)
    cells = n_classes * len(config.strategies) * len(config.approaches)
    print(f"grid: {cells} cells x {config.k} folds = {cells * config.k} runs")
    errors = run_experiment(ds, config, args.outdir, jobs=jobs)
    status = render_report(args.outdir)
    print(f"report: {status.report_path}")
    if errors:
        for e in errors:
            print(f"FAILED {e}", file=sys.stderr)
        return EXIT_TRAINING
    return EXIT_OK


def cmd_report(args) -> int:
    rundir = Path(args.rundir)
    if not (rundir / "config.snapshot").exists():
        raise DataError(f"{rundir} is not a run directory (no config.snapshot)")
    status = render_report(rundir)
    print(f"report: {status.report_path}")
    if status.errors:
        for note in status.errors:
            print(f"error note: {note}", file=sys.stderr)
    if status.missing:
        for path in status.missing:
            print(f"missing: {path}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="daept",
                     description="Autoencoder-pretrained classifiers for "
                                 "expression cohorts")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate synthetic cohort files")
    p.add_argument("--outdir", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--cohorts", help="comma-separated cohort names")
    p.add_argument("--samples", type=int, help="samples per cohort")
    p.add_argument("--features", type=int, help="informative gene count")
    p.add_argument("--separation", type=float, help="class-mean spread")
    p.add_argument("--noise", type=float, help="within-class noise stdev")
    p.add_argument("--missing-rate", type=float)
    p.add_argument("--constant-columns", type=int)
    p.add_argument("--omit-per-cohort", type=int)
    p.add_argument("--config")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("preprocess", help="clean, impute, intersect and merge cohorts")
    p.add_argument("inputs", nargs="+", help="cohort files (two or more)")
    p.add_argument("--outdir", required=True)
    p.add_argument("--positive-class", help="cohort labeled 1 (default: first input)")
    p.add_argument("--delimiter", help="override the autodetected delimiter")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("pretrain", help="train one denoising autoencoder")
    p.add_argument("--data", required=True, help="preprocess output directory")
    p.add_argument("--outdir", required=True)
    p.add_argument("--epochs-dae", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--code-dim", type=int)
    p.add_argument("--corruption", type=float)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--config")
    p.set_defaults(func=cmd_pretrain)

    p = sub.add_parser("train", help="train one classifier cell")
    p.add_argument("--data", required=True, help="preprocess output directory")
    p.add_argument("--dae", required=True, help="pretrained autoencoder file")
    p.add_argument("--class", dest="target_class", required=True,
                   help="positive cohort")
    p.add_argument("--strategy", choices=STRATEGIES)
    p.add_argument("--approach", choices=APPROACHES)
    p.add_argument("--epochs-clf", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--fc1-dim", type=int)
    p.add_argument("--fc2-dim", type=int)
    p.add_argument("--threshold", type=float)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--outdir", required=True)
    p.add_argument("--config")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("run", help="train the full grid and render the report")
    p.add_argument("--data", required=True, help="preprocess output directory")
    p.add_argument("--outdir", required=True)
    p.add_argument("--class", dest="classes",
                   help="comma-separated target cohorts (default: all)")
    p.add_argument("--strategy", dest="strategies",
                   help="comma-separated strategies (default: both)")
    p.add_argument("--approach", dest="approaches",
                   help="comma-separated approaches (default: both)")
    p.add_argument("--k", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--code-dim", type=int)
    p.add_argument("--corruption", type=float)
    p.add_argument("--epochs-dae", type=int)
    p.add_argument("--epochs-clf", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--fc1-dim", type=int)
    p.add_argument("--fc2-dim", type=int)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--threshold", type=float)
    p.add_argument("--jobs", type=int, help="parallel fold workers (default 1)")
    p.add_argument("--config")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", help="re-render a run directory's report")
    p.add_argument("rundir")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_TRAINING


if __name__ == "__main__":
    sys.exit(main())
