"""scikit-learn style outlier detector wrapping the autoencoders."""

import numpy as np
from sklearn.base import BaseEstimator, OutlierMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .anomaly import score
from .data import MinMaxNormalizer
from .models import ModelKind, build_model
from .numerics import rng_stream
from .training import TrainConfig, train


class HeterogeneousAutoencoderDetector(OutlierMixin, BaseEstimator):
    """Reconstruction-error outlier detector.

    ``fit`` expects (mostly) normal rows, scales them to [0, 1] and trains the
    chosen autoencoder.  ``predict`` returns -1 for outliers and 1 for inliers,
    where outliers are rows whose error exceeds the ``1 - contamination``
    quantile of the training errors.
    """

    def __init__(
        self,
        kind="hae-x",
        learning_rate=1e-3,
        batch_size=64,
        epochs=1000,
        dropout_prob=0.5,
        relinear_factor=0.1,
        contamination=0.1,
        random_state=0,
    ):
        self.kind = kind
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.epochs = epochs
        self.dropout_prob = dropout_prob
        self.relinear_factor = relinear_factor
        self.contamination = contamination
        self.random_state = random_state

    def _config(self):
        return TrainConfig(
            learning_rate=self.learning_rate,
            batch_size=self.batch_size,
            epochs=self.epochs,
            dropout_prob=self.dropout_prob,
            relinear_factor=self.relinear_factor,
            seed=int(self.random_state),
        )

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        if not 0.0 < self.contamination <= 0.5:
            raise ValueError(f"contamination must lie in (0, 0.5], got {self.contamination}")
        cfg = self._config()
        seed = int(self.random_state)
        self.normalizer_ = MinMaxNormalizer().fit(X)
        xs = self.normalizer_.transform(X)
        model = build_model(ModelKind.parse(self.kind), X.shape[1], rng=rng_stream(seed, 0), seed=seed)
        model.norm_stats = self.normalizer_.stats_.to_dict()
        self.model_, self.loss_history_ = train(model, xs, cfg, rng=rng_stream(seed, 1))
        train_err = score(self.model_, xs, check_stats=False)
        self.threshold_ = float(np.quantile(train_err, 1.0 - self.contamination))
        self.n_features_in_ = X.shape[1]
        return self

    def reconstruction_error(self, X):
        check_is_fitted(self, "model_")
        X = check_array(X, dtype=np.float64)
        return score(self.model_, self.normalizer_.transform(X), check_stats=False)

    def score_samples(self, X):
        """Negated reconstruction error: higher means more normal."""
        return -self.reconstruction_error(X)

    def decision_function(self, X):
        """Positive for inliers, negative for outliers."""
        check_is_fitted(self, "threshold_")
        return self.threshold_ - self.reconstruction_error(X)

    def predict(self, X):
        return np.where(self.decision_function(X) < 0, -1, 1)
