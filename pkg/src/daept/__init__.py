"""Denoising-autoencoder pretraining for deep binary expression classifiers.

The package covers the full workflow: synthetic cohort generation, the
preprocessing pipeline (parse, drop constants, impute, intersect, merge),
autoencoder pretraining, transfer-classifier training under the two
strategies and two approaches, stratified cross-validated evaluation, and
the command-line grid runner.
"""

from .classifier import (APPROACHES, ClassifierConfig, EpochCheckpoint, assemble,
                         best_checkpoint, classify, evaluate, predict_proba,
                         train_classifier)
from .dae import (STRATEGIES, DAEConfig, LossHistory, TrainedDAE, build_dae,
                  export_layers, load_dae, save_dae, train_dae)
from .data import (ExpressionTable, LabeledDataset, drop_constant_features,
                   impute_column_mean, intersect_and_merge, load_dataset,
                   parse_table, relabel, save_dataset, write_table)
from .errors import (ConfigError, DaeptError, DataError, NumericalError,
                     TrainingDivergedError)
from .estimators import DenoisingAutoencoder, TransferClassifier
from .evaluation import (CVReport, FoldSplit, MetricsRecord, aggregate, confusion,
                         metrics_from_confusion, select_best, stratified_kfold)
from .experiment import RunConfig, render_report, run_experiment
from .nn import (Adam, AdamParams, BatchNorm, Dense, Dropout, Network,
                 binary_cross_entropy, load_network, mse, save_network)
from .rng import RngStream
from .synth import CohortSpec, SynthSpec, generate, generate_files, make_spec

__version__ = "0.1.0"

__all__ = [
    "APPROACHES", "ClassifierConfig", "EpochCheckpoint", "assemble",
    "best_checkpoint", "classify", "evaluate", "predict_proba",
    "train_classifier", "STRATEGIES", "DAEConfig", "LossHistory", "TrainedDAE",
    "build_dae", "export_layers", "load_dae", "save_dae", "train_dae",
    "ExpressionTable", "LabeledDataset", "drop_constant_features",
    "impute_column_mean", "intersect_and_merge", "load_dataset", "parse_table",
    "relabel", "save_dataset", "write_table", "ConfigError", "DaeptError",
    "DataError", "NumericalError", "TrainingDivergedError",
    "DenoisingAutoencoder", "TransferClassifier", "CVReport", "FoldSplit",
    "MetricsRecord", "aggregate", "confusion", "metrics_from_confusion",
    "select_best", "stratified_kfold", "RunConfig", "render_report",
    "run_experiment", "Adam", "AdamParams", "BatchNorm", "Dense", "Dropout",
    "Network", "binary_cross_entropy", "load_network", "mse", "save_network",
    "RngStream", "CohortSpec", "SynthSpec", "generate", "generate_files",
    "make_spec",
]
