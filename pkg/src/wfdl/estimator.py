"""scikit-learn compatible wrapper around the autoencoder detector."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, OutlierMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_images, check_labels
from .checkpoint import load_checkpoint, save_checkpoint
from .model import ArchConfig, init_params, reconstruct_batch
from .scoring import anomaly_score, auroc_from_arrays, residual_map
from .training import RunConfig, train_autoencoder


class WFDLAnomalyDetector(OutlierMixin, TransformerMixin, BaseEstimator):
    """Autoencoder anomaly detector trained with a frequency-weighted loss.

    ``fit`` trains on normal images only. ``transform`` returns the
    reconstructions, ``anomaly_score`` the total squared reconstruction error
    per image (higher is more anomalous) and ``score`` the AUROC against
    labels. Following scikit-learn's outlier convention, ``score_samples``
    is the negated anomaly score.

    Parameters
    ----------
    image_size : int
        Side length of the square input images. 64 selects the reduced-depth
        network, any other multiple of 128 the full eight-block encoder.
    loss : {'wfdl', 'mse'}
    weight_mode : {'centered', 'raw', 'none'}
        Frequency weighting used by the ``wfdl`` loss.
    epochs, batch_size, learning_rate, beta1, beta2, weight_decay, epsilon
        Training and RAdam settings.
    encoder : sequence of (channels, stride), optional
        Custom encoder block ladder; overrides the size-based default.
    random_state : int
        Seed for initialisation and batch shuffling.
    """

    def __init__(self, image_size=64, loss="wfdl", weight_mode="centered", epochs=2000,
                 batch_size=64, learning_rate=1e-3, beta1=0.9, beta2=0.999,
                 weight_decay=1e-4, epsilon=1e-8, encoder=None, random_state=0,
                 metrics_path=None):
        self.image_size = image_size
        self.loss = loss
        self.weight_mode = weight_mode
        self.epochs = epochs
        self.batch_size = batch_size
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.weight_decay = weight_decay
        self.epsilon = epsilon
        self.encoder = encoder
        self.random_state = random_state
        self.metrics_path = metrics_path

    def _run_config(self) -> RunConfig:
        return RunConfig(
            image_size=self.image_size, epochs=self.epochs, batch_size=self.batch_size,
            loss=self.loss, weight_mode=self.weight_mode, learning_rate=self.learning_rate,
            beta1=self.beta1, beta2=self.beta2, weight_decay=self.weight_decay,
            epsilon=self.epsilon, seed=self.random_state,
        )

    def fit(self, X, y=None):
        """Train on normal images ``X`` of shape ``(n, H, W, C)``; ``y`` is ignored."""
        X = check_images(X, self.image_size)
        config = self._run_config()
        if self.encoder is not None:
            arch = ArchConfig(self.image_size, X.shape[-1], tuple(map(tuple, self.encoder)))
        else:
            arch = ArchConfig.for_size(self.image_size, X.shape[-1])
        params = init_params(self.random_state, config=arch)
        self.params_, self.optimizer_state_, self.history_ = train_autoencoder(
            X, config, params=params, metrics_path=self.metrics_path)
        self.n_features_in_ = int(np.prod(X.shape[1:]))
        return self

    def _check(self, X):
        check_is_fitted(self, "params_")
        cfg = self.params_.config
        return check_images(X, cfg.input_size, cfg.in_channels)

    def transform(self, X):
        """Reconstructions of ``X``, same shape, intensities in [0, 1]."""
        X = self._check(X)
        return reconstruct_batch(self.params_, X).astype(float)

    def anomaly_score(self, X):
        X = self._check(X)
        R = reconstruct_batch(self.params_, X)
        return np.array([anomaly_score(a, b) for a, b in zip(X, R)])

    def score_samples(self, X):
        return -self.anomaly_score(X)

    def decision_function(self, X):
        return self.score_samples(X)

    def residual_maps(self, X):
        X = self._check(X)
        R = reconstruct_batch(self.params_, X)
        return np.stack([residual_map(a, b) for a, b in zip(X, R)])

    def score(self, X, y):
        """AUROC of the anomaly scores against ``y`` (1 / 'anomalous' = positive)."""
        scores = self.anomaly_score(X)
        return auroc_from_arrays(scores, check_labels(y, len(scores)))

    def save(self, path):
        check_is_fitted(self, "params_")
        cfg = self._run_config()
        save_checkpoint(path, self.params_, self.optimizer_state_, cfg.loss_config,
                        cfg.hyper, self.random_state)

    @classmethod
    def load(cls, path) -> "WFDLAnomalyDetector":
        ckpt = load_checkpoint(path)
        hyper = ckpt["hyper"]
        extra = {} if hyper is None else dict(
            learning_rate=hyper.learning_rate, beta1=hyper.beta1, beta2=hyper.beta2,
            weight_decay=hyper.weight_decay, epsilon=hyper.epsilon)
        arch = ckpt["params"].config
        est = cls(image_size=arch.input_size, loss=ckpt["loss"].kind,
                  weight_mode=ckpt["loss"].weight_mode, encoder=arch.encoder,
                  random_state=ckpt["seed"], **extra)
        est.params_ = ckpt["params"]
        est.optimizer_state_ = ckpt["state"]
        est.history_ = []
        est.n_features_in_ = arch.input_size**2 * arch.in_channels
        return est
