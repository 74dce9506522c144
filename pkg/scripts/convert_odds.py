"""Rebuild the ODDS-style benchmark CSVs in ``data/`` from PyPI-hosted copies.

The ODDS site ships MATLAB ``.mat`` files; this repository consumes CSV with
the feature columns first and a final ``label`` column (1 = anomaly).  The
raw UCI tables are pulled from packages that bundle them:

* glass      -- ``pydataset`` (R ``MASS::fgl``); tableware (``Tabl``) is the
                anomaly class, 9 of 214 rows.
* pima       -- ``keel-ds`` (``pima.dat``); ``tested_positive`` is the anomaly
                class, 268 of 768 rows.
* optdigits  -- ``keel-ds`` (``optdigits.dat``, UCI train+test, 5620 rows);
                digits 1-9 are inliers and digit 0 is down-sampled to 150
                anomalies with a fixed seed, giving 5216 rows.
* musk       -- ``mil`` (``musk2.csv``, UCI Musk v2 with bag ids); non-musk
                bags 55, 90, 91 (the j146/j147/252 molecules, 2965 rows) are
                inliers and musk bags 1 and 3 (211/213, 97 rows) are anomalies,
                giving 3062 rows.

Usage::

    python scripts/convert_odds.py [--out data]
"""

import argparse
import io
import subprocess
import sys
import tarfile
import tempfile
import zipfile
from pathlib import Path

import numpy as np
import pandas as pd

OPTDIGITS_ZERO_SAMPLES = 150
OPTDIGITS_SEED = 0
MUSK_INLIER_BAGS = (55, 90, 91)
MUSK_OUTLIER_BAGS = (1, 3)


def _download(package, dest):
    subprocess.run(
        [sys.executable, "-m", "pip", "download", "--no-deps", "-q", package, "-d", str(dest)],
        check=True,
    )
    (path,) = [p for p in Path(dest).iterdir() if p.name.lower().startswith(package.replace("-", "_")[:4])]
    return path


def _keel_table(wheel, name):
    text = zipfile.ZipFile(wheel).read(f"keel_ds/data/balanced/raw/{name}.dat").decode()
    rows = [line for line in text.splitlines() if line.strip() and not line.startswith("@")]
    return pd.read_csv(io.StringIO("\n".join(rows)), header=None)


def _frame(X, y, columns=None):
    X = np.asarray(X)
    columns = columns or [f"f{i}" for i in range(X.shape[1])]
    df = pd.DataFrame(X, columns=columns)
    df["label"] = np.asarray(y, dtype=int)
    return df


def glass(tmp):
    sdist = _download("pydataset", tmp / "pydataset")
    with tarfile.open(sdist) as outer:
        inner = outer.extractfile("pydataset-0.2.0/pydataset/resources.tar.gz")
        with tarfile.open(fileobj=io.BytesIO(inner.read())) as res:
            df = pd.read_csv(res.extractfile("resources/rdata/csv/MASS/fgl.csv"))
    feats = ["RI", "Na", "Mg", "Al", "Si", "K", "Ca", "Ba", "Fe"]
    return _frame(df[feats].to_numpy(), df["type"].eq("Tabl"), feats)


def pima(tmp):
    wheel = _download("keel-ds", tmp / "keel")
    df = _keel_table(wheel, "pima")
    return _frame(df.iloc[:, :-1].to_numpy(), df.iloc[:, -1].str.strip().eq("tested_positive"))


def optdigits(tmp):
    wheel = _download("keel-ds", tmp / "keel")
    df = _keel_table(wheel, "optdigits")
    X = df.iloc[:, :-1].to_numpy()
    digit = df.iloc[:, -1].astype(int).to_numpy()
    zeros = np.flatnonzero(digit == 0)
    rng = np.random.default_rng(OPTDIGITS_SEED)
    keep_zeros = np.sort(rng.choice(zeros, OPTDIGITS_ZERO_SAMPLES, replace=False))
    rows = np.sort(np.concatenate([np.flatnonzero(digit != 0), keep_zeros]))
    return _frame(X[rows], digit[rows] == 0)


def musk(tmp):
    wheel = _download("mil", tmp / "mil")
    raw = zipfile.ZipFile(wheel).read("mil/data/datasets/csv/musk2.csv")
    df = pd.read_csv(io.BytesIO(raw), header=None)
    bag = df[1].to_numpy()
    mask = np.isin(bag, MUSK_INLIER_BAGS + MUSK_OUTLIER_BAGS)
    return _frame(df.loc[mask, 2:].to_numpy(), np.isin(bag[mask], MUSK_OUTLIER_BAGS))


BUILDERS = {"glass": glass, "pima": pima, "optdigits": optdigits, "musk": musk}


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default=str(Path(__file__).resolve().parents[1] / "data"))
    parser.add_argument("names", nargs="*", default=sorted(BUILDERS))
    args = parser.parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmpdir:
        tmp = Path(tmpdir)
        for name in args.names:
            df = BUILDERS[name](tmp)
            df.to_csv(out / f"{name}.csv", index=False)
            print(f"{name}: N={len(df)} d={df.shape[1] - 1} anomalies={int(df['label'].sum())}")


if __name__ == "__main__":
    main()
