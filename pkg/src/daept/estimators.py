"""Estimator-style wrappers over the functional training core.

These follow the fit/transform/predict conventions so the pieces compose
with standard model-selection tooling: `DenoisingAutoencoder` is a
transformer (fit learns the code, transform encodes), `TransferClassifier`
is a classifier that pretrains its own autoencoder and then trains the
transfer head.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin

from .classifier import (APPROACHES, ClassifierConfig, assemble, best_checkpoint,
                         classify, predict_proba, train_classifier)
from .dae import STRATEGIES, DAEConfig, build_dae, train_dae
from .errors import ConfigError
from .evaluation import stratified_kfold
from .nn.optim import AdamParams
from .rng import RngStream
from .validation import check_binary_labels, check_matrix


class DenoisingAutoencoder(BaseEstimator, TransformerMixin):
    """Learns a corruption-robust low-dimensional code of the inputs.

    `transform` maps samples to the code space; `inverse_transform` decodes
    back to feature space.
    """

    def __init__(self, code_dim: int = 128, corruption: float = 0.10,
                 epochs: int = 100, batch_size: int = 500,
                 learning_rate: float = 1e-3, random_state: int = 0):
        self.code_dim = code_dim
        self.corruption = corruption
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.random_state = random_state

    def fit(self, X, y=None, X_val=None):
        """Train on X; X_val (default: X itself) drives the validation curve."""
        X = check_matrix(X)
        X_val = X if X_val is None else check_matrix(X_val, "X_val")
        config = DAEConfig(input_dim=X.shape[1], code_dim=self.code_dim,
                           corruption=self.corruption, epochs=self.epochs,
                           batch_size=self.batch_size)
        rng = RngStream(self.random_state)
        net = build_dae(config, rng.derive("init"))
        self.model_ = train_dae(net, X, X_val, config, rng.derive("train"),
                                adam=AdamParams(learning_rate=self.learning_rate))
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X) -> np.ndarray:
        self._check_fitted()
        return self.model_.encode(X)

    def inverse_transform(self, Z) -> np.ndarray:
        self._check_fitted()
        Z = check_matrix(Z, "Z")
        out, _ = self.model_.decoder.forward(Z, train=False, rng=None)
        return out

    def reconstruction_error(self, X) -> float:
        """Mean squared reconstruction error in evaluation mode."""
        self._check_fitted()
        X = check_matrix(X)
        diff = self.model_.reconstruct(X) - X
        return float(np.mean(diff * diff))

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise ConfigError("this DenoisingAutoencoder instance is not fitted yet")


class TransferClassifier(BaseEstimator, ClassifierMixin):
    """Binary classifier whose first layers are pretrained as an autoencoder.

    `strategy` picks which pretrained layers are imported ("encoder" or
    "complete"); `approach` fixes them ("fixed") or fine-tunes them
    ("finetune").  A stratified slice of the training data is held out to
    select the best epoch by validation F-score.
    """

    def __init__(self, strategy: str = "encoder", approach: str = "finetune",
                 code_dim: int = 128, corruption: float = 0.10,
                 dae_epochs: int = 100, epochs: int = 300, batch_size: int = 500,
                 fc1_dim: int = 64, fc2_dim: int = 16, threshold: float = 0.5,
                 learning_rate: float = 1e-3, validation_folds: int = 5,
                 random_state: int = 0):
        self.strategy = strategy
        self.approach = approach
        self.code_dim = code_dim
        self.corruption = corruption
        self.dae_epochs = dae_epochs
        self.epochs = epochs
        self.batch_size = batch_size
        self.fc1_dim = fc1_dim
        self.fc2_dim = fc2_dim
        self.threshold = threshold
        self.learning_rate = learning_rate
        self.validation_folds = validation_folds
        self.random_state = random_state

    def fit(self, X, y, X_val=None, y_val=None):
        """Pretrain the autoencoder on the training portion, then train the
        assembled classifier and keep the best-epoch parameters."""
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if self.approach not in APPROACHES:
            raise ConfigError(f"approach must be one of {APPROACHES}, got {self.approach!r}")
        X = check_matrix(X)
        y = check_binary_labels(y, X.shape[0])
        if (X_val is None) != (y_val is None):
            raise ConfigError("X_val and y_val must be given together")
        rng = RngStream(self.random_state)
        if X_val is None:
            train_idx, val_idx = stratified_kfold(
                y, self.validation_folds, rng.derive("holdout")).folds[0]
            X, X_val = X[train_idx], X[val_idx]
            y, y_val = y[train_idx], y[val_idx]
        else:
            X_val = check_matrix(X_val, "X_val")
            y_val = check_binary_labels(y_val, X_val.shape[0], name="y_val")

        adam = AdamParams(learning_rate=self.learning_rate)
        dae_config = DAEConfig(input_dim=X.shape[1], code_dim=self.code_dim,
                               corruption=self.corruption, epochs=self.dae_epochs,
                               batch_size=self.batch_size)
        dae_net = build_dae(dae_config, rng.derive("dae-init"))
        dae = train_dae(dae_net, X, X_val, dae_config, rng.derive("dae"), adam=adam)

        clf_config = ClassifierConfig(fc1_dim=self.fc1_dim, fc2_dim=self.fc2_dim,
                                      epochs=self.epochs, batch_size=self.batch_size,
                                      threshold=self.threshold)
        net = assemble(dae, self.strategy, self.approach, clf_config,
                       rng.derive("clf-init"))
        self.checkpoints_ = train_classifier(net, X, y, X_val, y_val, clf_config,
                                             rng.derive("clf"), adam=adam)
        best = best_checkpoint(self.checkpoints_)
        self.network_ = best.snapshot
        self.best_epoch_ = best.epoch
        self.validation_metrics_ = best.val
        self.dae_ = dae
        self.classes_ = np.array([0, 1])
        self.n_features_in_ = X.shape[1]
        return self

    def predict_proba(self, X) -> np.ndarray:
        """Column-stacked class probabilities, shape (n, 2)."""
        self._check_fitted()
        p = predict_proba(self.network_, X)
        return np.column_stack([1.0 - p, p])

    def predict(self, X) -> np.ndarray:
        self._check_fitted()
        return classify(predict_proba(self.network_, X), self.threshold).astype(np.int64)

    def _check_fitted(self):
        if not hasattr(self, "network_"):
            raise ConfigError("this TransferClassifier instance is not fitted yet")
