import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from qnn_hae.data import Dataset, MinMaxNormalizer, load_csv, normalize_apply, normalize_fit, save_csv, split
from qnn_hae.errors import DataError, MissingFileError, MissingLabelColumnError, NonNumericCellError

from .conftest import write_csv

EXPECTED = {"glass": (214, 9, 9), "pima": (768, 8, 268), "optdigits": (5216, 64, 150), "musk": (3062, 166, 97)}


def test_three_row_csv(tmp_path):
    p = write_csv(tmp_path / "a.csv", ["f1", "f2", "label"], [[1, 2, 0], [3, 4, 1], [5, 6, 0]])
    ds = load_csv(p)
    assert (ds.n_samples, ds.n_features) == (3, 2)
    assert ds.X[:, 0].tolist() == [1, 3, 5]
    assert ds.y.tolist() == [0, 1, 0]
    assert ds.feature_names == ["f1", "f2"]


def test_all_zero_labels_warns(tmp_path):
    p = write_csv(tmp_path / "a.csv", ["f1", "label"], [[1, 0], [2, 0]])
    ds = load_csv(p)
    assert ds.contamination == 0.0
    assert "no anomalies" in ds.warnings


def test_label_column_position_and_text_labels(tmp_path):
    p = write_csv(tmp_path / "a.csv", ["y", "a", "b"], [["normal", 1, 2], ["outlier", 3, 4]])
    ds = load_csv(p, label_column="y")
    assert ds.y.tolist() == [0, 1] and ds.X.tolist() == [[1, 2], [3, 4]]


def test_missing_file(tmp_path):
    with pytest.raises(MissingFileError):
        load_csv(tmp_path / "nope.csv")


def test_non_numeric_cell_names_location(tmp_path):
    p = write_csv(tmp_path / "a.csv", ["f1", "f2", "label"], [[1, 2, 0], [3, "x", 1]])
    with pytest.raises(NonNumericCellError) as info:
        load_csv(p)
    assert info.value.row == 2 and info.value.column == "f2"


def test_missing_label_column(tmp_path):
    p = write_csv(tmp_path / "a.csv", ["f1", "f2"], [[1, 2]])
    with pytest.raises(MissingLabelColumnError):
        load_csv(p)


def test_load_errors_are_distinct():
    assert len({MissingFileError, NonNumericCellError, MissingLabelColumnError}) == 3
    assert not issubclass(MissingFileError, NonNumericCellError)
    assert not issubclass(NonNumericCellError, MissingLabelColumnError)


@pytest.mark.parametrize("name", sorted(EXPECTED))
def test_converted_datasets(data_dir, name):
    ds = load_csv(data_dir / f"{name}.csv")
    assert (ds.n_samples, ds.n_features, int(ds.y.sum())) == EXPECTED[name]
    assert ds.contamination == pytest.approx(ds.y.mean())


def test_normalize_examples():
    stats = normalize_fit(np.array([[0.0, 3.0], [5.0, 3.0], [10.0, 3.0]]))
    out = normalize_apply(np.array([[0.0, 3.0], [5.0, 3.0], [10.0, 3.0]]), stats)
    assert out[:, 0].tolist() == [0.0, 0.5, 1.0]
    assert out[:, 1].tolist() == [0.0, 0.0, 0.0]
    assert normalize_apply([[20.0, 3.0]], stats)[0, 0] == 2.0


def test_normalize_empty():
    with pytest.raises(DataError):
        normalize_fit(np.empty((0, 3)))


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(2, 20), st.integers(1, 5)), elements=st.floats(-1e6, 1e6)))
def test_normalized_training_rows_in_unit_interval(x):
    out = normalize_apply(x, normalize_fit(x))
    assert out.min() >= 0.0 and out.max() <= 1.0


def test_minmax_normalizer_matches_functions(rng):
    x = rng.normal(size=(20, 4))
    t = MinMaxNormalizer().fit(x)
    assert np.array_equal(t.transform(x), normalize_apply(x, normalize_fit(x)))


def test_split_counts():
    X = np.arange(20.0).reshape(10, 2)
    y = np.array([0, 0, 1, 0, 0, 0, 1, 0, 0, 0])
    train, test, labels = split(Dataset("d", X, y))
    assert train.shape == (8, 2) and test.shape == (10, 2)
    assert np.array_equal(test, X) and np.array_equal(labels, y)


def test_split_no_contamination_and_determinism():
    X = np.random.default_rng(0).random((6, 3))
    ds = Dataset("d", X, np.zeros(6, dtype=int))
    a, b = split(ds), split(ds)
    assert np.array_equal(a[0], a[1])
    assert all(np.array_equal(u, v) for u, v in zip(a, b))


def test_split_needs_normals():
    with pytest.raises(DataError):
        split(Dataset("d", np.ones((3, 2)), np.array([1, 1, 0])))


def test_round_trip_bit_exact(tmp_path, rng):
    X = rng.normal(size=(15, 4)) * 10.0 ** rng.integers(-8, 8, (15, 4))
    ds = Dataset("rt", X, rng.integers(0, 2, 15), ["a", "b", "c", "d"])
    first = load_csv(save_csv(ds, tmp_path / "rt.csv"))
    second = load_csv(save_csv(first, tmp_path / "rt2.csv"))
    assert np.array_equal(first.X, X) and np.array_equal(second.X, X)
    assert np.array_equal(second.y, ds.y)


def test_dataset_rejects_bad_labels():
    with pytest.raises(DataError):
        Dataset("d", np.ones((2, 2)), np.array([0, 2]))
