import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qnn_hae.anomaly import (
    apply_threshold,
    auc,
    auc_bruteforce,
    average_ranks,
    benchmark,
    rank_kinds,
    run_once,
    score,
    write_report,
)
from qnn_hae.data import load_csv
from qnn_hae.errors import DataError, RangeError, UndefinedMetricError
from qnn_hae.models import build_model, model_forward
from qnn_hae.training import TrainConfig


class _Fixed:
    """Stand-in model whose reconstruction is a fixed array."""

    norm_stats = None


def test_score_zero_when_reconstruction_exact(monkeypatch):
    x = np.array([[1.0, 0.0], [0.3, 0.4]])
    monkeypatch.setattr("qnn_hae.anomaly.model_forward", lambda m, x, train: (np.array([[0.0, 0.0], [0.3, 0.4]]), None))
    assert score(_Fixed(), x).tolist() == [1.0, 0.0]


def test_score_deterministic_eval():
    m = build_model("hae-x", 6, seed=0)
    x = np.random.default_rng(0).random((5, 6))
    assert np.array_equal(score(m, x), score(m, x))
    recon = model_forward(m, x)[0]
    assert np.allclose(score(m, x), ((recon - x) ** 2).sum(axis=1), rtol=0, atol=1e-15)


def test_score_rejects_raw_data():
    m = build_model("ae", 4, seed=0)
    m.norm_stats = {"min": [100.0] * 4, "max": [500.0] * 4}
    with pytest.raises(DataError):
        score(m, np.full((5, 4), 300.0))


def test_auc_examples():
    assert auc([0.9, 0.8, 0.1, 0.2], [1, 1, 0, 0]) == 1.0
    assert auc([0.9, 0.3, 0.5, 0.1], [1, 0, 0, 1]) == 0.5
    assert auc([1.0, 1.0], [1, 0]) == 0.5


def test_auc_single_class():
    with pytest.raises(UndefinedMetricError):
        auc([0.1, 0.2], [1, 1])


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 50), st.integers(0, 2**31), st.booleans())
def test_auc_equals_bruteforce(n, seed, ties):
    r = np.random.default_rng(seed)
    labels = r.integers(0, 2, n)
    labels[0], labels[1] = 0, 1
    s = r.integers(0, 5, n).astype(float) if ties else r.random(n)
    assert auc(s, labels) == auc_bruteforce(s, labels)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 50), st.integers(0, 2**31))
def test_auc_monotone_invariance_and_complement(n, seed):
    r = np.random.default_rng(seed)
    labels = r.integers(0, 2, n)
    labels[0], labels[1] = 0, 1
    s = r.random(n) + 0.01
    assert auc(s, labels) == auc(s**3, labels)
    assert abs(auc(s, labels) + auc(-s, labels) - 1.0) < 1e-12


def test_auc_matches_sklearn(rng):
    from sklearn.metrics import roc_auc_score

    labels = rng.integers(0, 2, 300)
    s = rng.integers(0, 20, 300).astype(float)
    assert auc(s, labels) == pytest.approx(roc_auc_score(labels, s), abs=1e-12)


def test_average_ranks_ties():
    assert average_ranks([3.0, 1.0, 3.0, 2.0]).tolist() == [3.5, 1.0, 3.5, 2.0]


def test_threshold_examples():
    t, flags = apply_threshold([1, 2, 3, 4], 0.5, [1, 2.5, 3, 4])
    assert t == 2.5 and flags.tolist() == [False, False, True, True]
    t, flags = apply_threshold([2.0] * 5, 0.1, [2.0, 2.0, 2.1])
    assert t == 2.0 and flags.tolist() == [False, False, True]


@pytest.mark.parametrize("c", [0.0, 0.6, -0.1])
def test_threshold_range(c):
    with pytest.raises(RangeError):
        apply_threshold([1, 2], c, [1])


def test_glass_flag_count_near_truth(data_dir):
    ds = load_csv(data_dir / "glass.csv")
    r = run_once(ds, "hae-x", TrainConfig(epochs=100), seed=0)
    assert abs(r["flagged"] - int(ds.y.sum())) <= 2


def test_rank_arithmetic():
    cells = {
        "a": {"X": {"mean": 0.9}, "Y": {"mean": 0.7}},
        "b": {"X": {"mean": 0.8}, "Y": {"mean": 0.6}},
    }
    assert rank_kinds(cells) == {"X": 1.0, "Y": 2.0}
    tied = {"a": {"X": {"mean": 0.5}, "Y": {"mean": 0.5}}}
    assert rank_kinds(tied) == {"X": 1.5, "Y": 1.5}


def test_benchmark_single_cell(toy_dataset):
    rep = benchmark([toy_dataset], ["ae"], TrainConfig(epochs=2), seeds=(0,))
    assert len(rep.rows) == 1
    cell = rep.cells["toy"]["AE"]
    assert 0.0 <= cell["mean"] <= 1.0 and cell["std"] == 0.0
    assert cell["params"] > 0 and cell["flops"] > 0


def test_benchmark_cardinality_and_report(tmp_path, toy_dataset, data_dir):
    rep = benchmark(
        [toy_dataset, data_dir / "glass.csv", tmp_path / "missing.csv"], ["ae", "hae-x"], TrainConfig(epochs=2), seeds=(0, 1)
    )
    assert len(rep.rows) == 8
    assert "missing" in rep.errors
    assert set(rep.avg_rank) == {"AE", "HAE-X"}
    assert sorted(rep.avg_rank.values()) in ([1.0, 2.0], [1.5, 1.5])
    paths = write_report(rep, tmp_path / "out")
    assert len(paths["csv"].read_text().splitlines()) == 9
    summary = json.loads(paths["json"].read_text())
    assert set(summary["glass"]["HAE-X"]) >= {"mean", "std"}
    assert paths["svg"].read_text().startswith("<svg")


def test_benchmark_std_is_population(toy_dataset):
    rep = benchmark([toy_dataset], ["ae"], TrainConfig(epochs=2), seeds=(0, 1, 2))
    aucs = [r["auc"] for r in rep.rows]
    assert rep.cells["toy"]["AE"]["std"] == pytest.approx(np.std(aucs, ddof=0))
