"""CSV formats for point streams and weighted sets.

Streams are rows ``id,timestamp,c1,...,cd``; weighted sets add a trailing
``weight`` column. Readers accept files with or without the header row.
"""
from __future__ import annotations

import csv
from typing import Iterator, TextIO

import numpy as np

from .metric import WeightedSet

CORESET_COLUMNS = ["point_id", "timestamp", "weight", "center_id", "j", "b", "p_x"]


def _header(dim: int, weighted: bool) -> list[str]:
    cols = ["id", "timestamp"] + [f"c{i + 1}" for i in range(dim)]
    return cols + ["weight"] if weighted else cols


def _rows(fh: TextIO) -> Iterator[list[str]]:
    for lineno, row in enumerate(csv.reader(fh), start=1):
        if not row or not "".join(row).strip():
            continue
        if lineno == 1 and row[0].strip() == "id":
            continue
        yield row


def iter_stream(fh: TextIO) -> Iterator[tuple[int, int, np.ndarray]]:
    """Yield (id, timestamp, coords) one line at a time."""
    dim = None
    for row in _rows(fh):
        try:
            pid, ts = int(row[0]), int(row[1])
            x = np.array([float(v) for v in row[2:]])
        except (ValueError, IndexError) as exc:
            raise ValueError(f"malformed stream row {row!r}") from exc
        if dim is None:
            dim = x.size
            if dim == 0:
                raise ValueError("stream rows carry no coordinates")
        elif x.size != dim:
            raise ValueError(f"row {pid} has {x.size} coordinates, expected {dim}")
        yield pid, ts, x


def read_stream(path) -> WeightedSet:
    with open(path, newline="") as fh:
        rows = list(iter_stream(fh))
    if not rows:
        raise ValueError(f"{path}: empty stream")
    ids, ts, X = zip(*rows)
    return WeightedSet(np.stack(X), None, np.array(ts), np.array(ids))


def write_stream(path, X, timestamps=None, ids=None) -> None:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    ts = np.arange(1, len(X) + 1) if timestamps is None else np.asarray(timestamps)
    ids = ts if ids is None else np.asarray(ids)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(_header(X.shape[1], False))
        for i in range(len(X)):
            w.writerow([int(ids[i]), int(ts[i])] + [repr(float(v)) for v in X[i]])


def write_weighted(path_or_fh, ws: WeightedSet) -> None:
    own = isinstance(path_or_fh, (str, bytes)) or hasattr(path_or_fh, "__fspath__")
    fh = open(path_or_fh, "w", newline="") if own else path_or_fh
    try:
        w = csv.writer(fh)
        w.writerow(_header(ws.dim, True))
        for i in range(len(ws)):
            w.writerow([int(ws.ids[i]), int(ws.timestamps[i])] + [repr(float(v)) for v in ws.points[i]]
                       + [repr(float(ws.weights[i]))])
    finally:
        if own:
            fh.close()


def read_weighted(path) -> WeightedSet:
    with open(path, newline="") as fh:
        rows = list(_rows(fh))
    if not rows:
        raise ValueError(f"{path}: empty weighted set")
    try:
        data = np.array([[float(v) for v in r] for r in rows])
    except ValueError as exc:
        raise ValueError(f"{path}: malformed weighted row") from exc
    if data.shape[1] < 4:
        raise ValueError(f"{path}: expected id,timestamp,c1..cd,weight")
    if np.any(data[:, -1] <= 0):
        raise ValueError(f"{path}: weights must be positive")
    return WeightedSet(data[:, 2:-1], data[:, -1], data[:, 1].astype(np.int64), data[:, 0].astype(np.int64))


def export_coreset_csv(path, ws: WeightedSet) -> None:
    """Weighted set in the coreset-export layout; sketch-specific columns are left blank."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CORESET_COLUMNS)
        for i in range(len(ws)):
            w.writerow([int(ws.ids[i]), int(ws.timestamps[i]), repr(float(ws.weights[i])), "", "", "", ""])
