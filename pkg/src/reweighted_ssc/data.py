"""Dataset container and its CSV representation.

CSV layout: a header ``x1,...,xn`` optionally followed by ``label``, then one
point per row. Floats are written with 17 significant digits so a round trip
is lossless.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataFormatError, EmptyDatasetError, InvalidInputError

__all__ = ["Dataset", "dataset_to_csv", "write_dataset_csv", "load_dataset_csv"]


@dataclass
class Dataset:
    """``points`` is ``(N, n)``: one sample per row.

    ``labels`` (optional) are ground-truth cluster ids ``0..L-1``;
    ``signals`` (optional) are the noiseless points a generator drew before
    adding noise.
    """

    points: np.ndarray
    labels: np.ndarray | None = None
    signals: np.ndarray | None = None

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float)
        if self.points.ndim != 2:
            raise InvalidInputError(f"points must be a 2-D array, got shape {self.points.shape}")
        if self.points.shape[0] < 2:
            raise InvalidInputError("a dataset needs at least two points")
        if not np.all(np.isfinite(self.points)):
            raise InvalidInputError("points must be finite")
        if self.labels is not None:
            labels = np.asarray(self.labels)
            if labels.shape != (self.N,):
                raise InvalidInputError(f"labels must have shape ({self.N},), got {labels.shape}")
            if not np.issubdtype(labels.dtype, np.integer):
                if not np.all(labels == np.round(labels)):
                    raise InvalidInputError("labels must be integers")
            labels = labels.astype(int)
            present = np.unique(labels)
            if present[0] != 0 or not np.array_equal(present, np.arange(present.size)):
                raise InvalidInputError("labels must be 0..L-1 with no empty cluster")
            self.labels = labels

    @property
    def N(self) -> int:
        return self.points.shape[0]

    @property
    def n(self) -> int:
        return self.points.shape[1]

    @property
    def num_clusters(self) -> int | None:
        return None if self.labels is None else int(self.labels.max()) + 1

    def without(self, i: int) -> np.ndarray:
        """The ``(n, N-1)`` dictionary of every point except ``i``."""
        return np.delete(self.points, i, axis=0).T


def dataset_to_csv(data: Dataset) -> str:
    buf = io.StringIO()
    header = [f"x{k + 1}" for k in range(data.n)]
    if data.labels is not None:
        header.append("label")
    buf.write(",".join(header) + "\n")
    for i in range(data.N):
        cells = [format(v, ".17g") for v in data.points[i]]
        if data.labels is not None:
            cells.append(str(int(data.labels[i])))
        buf.write(",".join(cells) + "\n")
    return buf.getvalue()


def write_dataset_csv(data: Dataset, path) -> None:
    Path(path).write_text(dataset_to_csv(data))


def load_dataset_csv(path) -> Dataset:
    """Parse a dataset CSV.

    Raises
    ------
    DataFormatError
        Bad header, ragged rows or non-numeric cells, with the 1-based
        row/column position.
    EmptyDatasetError
        Header present, no data rows.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataFormatError("file is empty", row=1)
    header = [h.strip() for h in rows[0]]
    has_label = bool(header) and header[-1] == "label"
    coords = header[:-1] if has_label else header
    if not coords:
        raise DataFormatError("header names no coordinate columns", row=1)
    for k, name in enumerate(coords):
        if name != f"x{k + 1}":
            raise DataFormatError(f"expected header 'x{k + 1}', found {name!r}", row=1, column=k + 1)
    n = len(coords)
    width = n + (1 if has_label else 0)

    body = [(r, row) for r, row in enumerate(rows[1:], start=2) if any(cell.strip() for cell in row)]
    if not body:
        raise EmptyDatasetError("dataset has a header but no rows", row=2)
    points = np.empty((len(body), n))
    labels = np.empty(len(body), dtype=int) if has_label else None
    for i, (r, row) in enumerate(body):
        if len(row) != width:
            raise DataFormatError(f"expected {width} cells, found {len(row)}", row=r)
        for k in range(n):
            try:
                v = float(row[k])
            except ValueError:
                raise DataFormatError(f"non-numeric cell {row[k]!r}", row=r, column=k + 1) from None
            if not np.isfinite(v):
                raise DataFormatError(f"non-finite cell {row[k]!r}", row=r, column=k + 1)
            points[i, k] = v
        if has_label:
            try:
                labels[i] = int(row[n])
            except ValueError:
                raise DataFormatError(f"label {row[n]!r} is not an integer", row=r, column=n + 1) from None
    try:
        return Dataset(points=points, labels=labels)
    except InvalidInputError as exc:
        raise DataFormatError(str(exc)) from exc
