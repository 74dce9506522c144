import numpy as np
import pytest
from sklearn.base import clone
from sklearn.utils.validation import NotFittedError

from qnn_hae import HeterogeneousAutoencoderDetector
from qnn_hae.anomaly import auc


def test_params_round_trip():
    det = HeterogeneousAutoencoderDetector(kind="qae", epochs=7, contamination=0.2)
    params = det.get_params()
    assert params["kind"] == "qae" and params["epochs"] == 7
    assert clone(det).get_params() == params
    det.set_params(epochs=3)
    assert det.epochs == 3


def test_fit_predict(toy_dataset):
    X, y = toy_dataset.X, toy_dataset.y
    det = HeterogeneousAutoencoderDetector(epochs=40, batch_size=32, learning_rate=5e-3, contamination=0.1)
    det.fit(X[y == 0])
    pred = det.predict(X)
    assert set(np.unique(pred)) <= {-1, 1}
    assert np.array_equal(pred == -1, det.decision_function(X) < 0)
    assert np.allclose(det.score_samples(X), -det.reconstruction_error(X))
    assert len(det.loss_history_) == 40
    # training rows above the threshold are at most the contamination share, up to quantile interpolation
    assert np.mean(det.predict(X[y == 0]) == -1) <= 0.1 + 1 / (y == 0).sum()
    assert auc(det.reconstruction_error(X), y) > 0.5


def test_deterministic(toy_dataset):
    X = toy_dataset.X
    a = HeterogeneousAutoencoderDetector(epochs=5, random_state=3).fit(X).score_samples(X)
    b = HeterogeneousAutoencoderDetector(epochs=5, random_state=3).fit(X).score_samples(X)
    assert np.array_equal(a, b)


def test_unfitted_and_bad_contamination(toy_dataset):
    with pytest.raises(NotFittedError):
        HeterogeneousAutoencoderDetector().predict(toy_dataset.X)
    with pytest.raises(ValueError):
        HeterogeneousAutoencoderDetector(contamination=0.9, epochs=1).fit(toy_dataset.X)
