"""CSV ingestion, min-max normalization and normal-only training splits.

Input CSVs carry a header row, numeric feature columns and a label column
(``label`` by default) where 1 marks an anomaly.
"""

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .errors import DataError, MissingFileError, MissingLabelColumnError, NonNumericCellError

logger = logging.getLogger(__name__)

TRUE_LABELS = {"1", "true", "yes", "anomaly", "outlier", "abnormal"}
FALSE_LABELS = {"0", "false", "no", "normal", "inlier"}


@dataclass
class Dataset:
    name: str
    X: np.ndarray
    y: np.ndarray
    feature_names: list = None
    warnings: list = field(default_factory=list)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.int64)
        if self.X.ndim != 2 or self.y.shape != (self.X.shape[0],):
            raise DataError(f"dataset {self.name}: X{self.X.shape} and y{self.y.shape} disagree")
        if np.isnan(self.X).any():
            raise DataError(f"dataset {self.name}: NaN features")
        if not np.isin(self.y, (0, 1)).all():
            raise DataError(f"dataset {self.name}: labels must be 0/1")
        if self.y.sum() == 0 and "no anomalies" not in self.warnings:
            self.warnings.append("no anomalies")
            logger.warning("dataset %s has no anomalies", self.name)

    @property
    def n_samples(self):
        return self.X.shape[0]

    @property
    def n_features(self):
        return self.X.shape[1]

    @property
    def contamination(self):
        return float(self.y.mean()) if self.y.size else 0.0


def _coerce_label(cell, row, col):
    text = cell.strip().lower()
    try:
        return int(float(text) != 0.0)
    except ValueError:
        pass
    if text in TRUE_LABELS:
        return 1
    if text in FALSE_LABELS:
        return 0
    raise NonNumericCellError(f"row {row}, column {col!r}: cannot read label {cell!r}", row=row, column=col)


def load_csv(path, label_column="label", name=None):
    path = Path(path)
    if not path.is_file():
        raise MissingFileError(f"dataset file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if label_column not in header:
            raise MissingLabelColumnError(f"{path}: no label column {label_column!r} in header {header}")
        li = header.index(label_column)
        features = [h for i, h in enumerate(header) if i != li]
        rows, labels = [], []
        for r, record in enumerate(reader, start=1):
            if not record or all(not c.strip() for c in record):
                continue
            if len(record) != len(header):
                raise DataError(f"{path}: row {r} has {len(record)} cells, header has {len(header)}")
            values = []
            for i, cell in enumerate(record):
                if i == li:
                    continue
                try:
                    v = float(cell)
                except ValueError:
                    raise NonNumericCellError(
                        f"{path}: row {r}, column {header[i]!r}: non-numeric value {cell!r}", row=r, column=header[i]
                    ) from None
                if np.isnan(v):
                    raise NonNumericCellError(f"{path}: row {r}, column {header[i]!r}: NaN", row=r, column=header[i])
                values.append(v)
            rows.append(values)
            labels.append(_coerce_label(record[li], r, label_column))
    X = np.array(rows, dtype=np.float64).reshape(len(rows), len(features))
    return Dataset(name or path.stem, X, np.array(labels, dtype=np.int64), features)


def save_csv(dataset, path, label_column="label"):
    path = Path(path)
    names = dataset.feature_names or [f"f{i}" for i in range(dataset.n_features)]
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(list(names) + [label_column])
        for row, label in zip(dataset.X, dataset.y):
            w.writerow([repr(float(v)) for v in row] + [int(label)])
    return path


@dataclass
class NormStats:
    min: np.ndarray
    max: np.ndarray

    def to_dict(self):
        return {"min": self.min.tolist(), "max": self.max.tolist()}

    @classmethod
    def from_dict(cls, doc):
        return cls(np.asarray(doc["min"], dtype=np.float64), np.asarray(doc["max"], dtype=np.float64))


def normalize_fit(train_x):
    x = np.asarray(train_x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise DataError("cannot fit normalization on an empty training set")
    return NormStats(x.min(axis=0), x.max(axis=0))


def normalize_apply(x, stats):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != stats.min.shape[0]:
        raise DataError(f"expected {stats.min.shape[0]} features, got array of shape {x.shape}")
    span = stats.max - stats.min
    # constant training features: unit scale, so training rows land on 0 and test drift stays visible
    span = np.where(span > 0, span, 1.0)
    return (x - stats.min) / span


def looks_unnormalized(x, stats, band=(-1.0, 2.0)):
    """True when most features sit outside ``band``, i.e. raw rather than min-max scaled data."""
    lo, hi = band
    raw_range_inside = (stats.min >= lo) & (stats.max <= hi)
    x = np.asarray(x, dtype=np.float64)
    outside = ((x < lo) | (x > hi)).mean(axis=0) > 0.5
    candidates = ~raw_range_inside
    return bool(candidates.any() and outside[candidates].mean() > 0.5)


class MinMaxNormalizer(TransformerMixin, BaseEstimator):
    """Per-feature min-max scaling to [0, 1] using training statistics; unclipped."""

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        stats = normalize_fit(X)
        self.data_min_ = stats.min
        self.data_max_ = stats.max
        self.n_features_in_ = X.shape[1]
        return self

    @property
    def stats_(self):
        check_is_fitted(self, ["data_min_", "data_max_"])
        return NormStats(self.data_min_, self.data_max_)

    def transform(self, X):
        check_is_fitted(self, ["data_min_", "data_max_"])
        return normalize_apply(check_array(X, dtype=np.float64), self.stats_)


def split(dataset, rng=None):
    """Normal rows for training; every row (with labels) for testing.

    ``rng`` is accepted for interface symmetry; the split draws nothing.
    """
    normal = dataset.y == 0
    if normal.sum() < 2:
        raise DataError(f"dataset {dataset.name}: need at least 2 normal rows, found {int(normal.sum())}")
    return dataset.X[normal].copy(), dataset.X.copy(), dataset.y.copy()
