from pathlib import Path

import numpy as np
import pytest

from qnn_hae.data import Dataset

DATA = Path(__file__).resolve().parents[1] / "data"


@pytest.fixture
def data_dir():
    return DATA


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def toy_dataset():
    """Normals on a low-dimensional band, anomalies off it."""
    r = np.random.default_rng(7)
    t = r.uniform(0, 1, (120, 1))
    normals = np.hstack([t, 1 - t, t * t, 0.5 * t, np.sin(3 * t), 1 - t * t]) + 0.01 * r.standard_normal((120, 6))
    anomalies = r.uniform(0, 1, (12, 6))
    X = np.vstack([normals, anomalies])
    y = np.r_[np.zeros(120, dtype=int), np.ones(12, dtype=int)]
    return Dataset("toy", X, y, [f"f{i}" for i in range(6)])


def write_csv(path, header, rows):
    path.write_text("\n".join([",".join(header)] + [",".join(str(v) for v in row) for row in rows]) + "\n")
    return path


@pytest.fixture(scope="session")
def separation_default():
    """The default width sweep, run once and shared by the theory and acceptance tests."""
    import time

    from qnn_hae.theory import SeparationConfig, separation_experiment

    start = time.perf_counter()
    result = separation_experiment(SeparationConfig())
    result.elapsed = time.perf_counter() - start
    return result


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
