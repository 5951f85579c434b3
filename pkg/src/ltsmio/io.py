"""CSV datasets and ground-truth sidecars."""

import csv
import json
from pathlib import Path

import numpy as np

from .core import Dataset, GroundTruth
from .errors import DegenerateDataError

__all__ = ["read_csv", "write_csv", "read_truth", "write_truth", "RELIABLE_COLUMN"]

RELIABLE_COLUMN = "reliable"


def read_csv(path, response, features=None):
    """Load a dataset; every column except ``response`` (and ``reliable``) is a feature.

    Raises
    ------
    KeyError
        When the response or a requested feature column is missing.
    DegenerateDataError
        On empty files, missing or non-numeric values.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DegenerateDataError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    body = [r for r in rows[1:] if any(c.strip() for c in r)]
    if response not in header:
        raise KeyError(f"{path}: no column named {response!r}")
    if features is None:
        features = [h for h in header if h not in (response, RELIABLE_COLUMN)]
    for f in features:
        if f not in header:
            raise KeyError(f"{path}: no column named {f!r}")
    values = np.empty((len(body), len(header)))
    for i, r in enumerate(body):
        if len(r) != len(header):
            raise DegenerateDataError(f"{path}: row {i + 2} has {len(r)} fields, expected {len(header)}")
        for j, c in enumerate(r):
            c = c.strip()
            if c == "" or c.lower() in ("na", "nan"):
                raise DegenerateDataError(f"{path}: missing value in row {i + 2}, column {header[j]!r}")
            try:
                values[i, j] = float(c)
            except ValueError:
                raise DegenerateDataError(
                    f"{path}: non-numeric value {c!r} in row {i + 2}, column {header[j]!r}") from None
    col = {h: j for j, h in enumerate(header)}
    A = values[:, [col[f] for f in features]]
    y = values[:, col[response]]
    reliable = values[:, col[RELIABLE_COLUMN]] != 0 if RELIABLE_COLUMN in col else None
    return Dataset(A, y, reliable, tuple(features))


def write_csv(path, dataset, response="y"):
    path = Path(path)
    header = list(dataset.column_names) + [response]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for a, y in zip(dataset.features, dataset.response):
            w.writerow([repr(float(v)) for v in a] + [repr(float(y))])


def write_truth(path, truth):
    payload = {"x_star": [float(v) for v in truth.x_star], "outliers": list(truth.outlier_set)}
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def read_truth(path):
    payload = json.loads(Path(path).read_text())
    return GroundTruth(np.asarray(payload["x_star"], float), tuple(int(i) for i in payload["outliers"]))
