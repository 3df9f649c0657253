"""CSV ingest/egress and column standardization for observation matrices."""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .radial import MAD_FACTOR

__all__ = [
    "DataError",
    "DataMatrix",
    "load_csv",
    "save_csv",
    "standardize",
    "format_float",
]


class DataError(ValueError):
    """Raised for unreadable, malformed or degenerate input data."""


def format_float(x: float) -> str:
    # 17 significant digits round-trips any IEEE double
    return format(float(x), ".17g")


@dataclass(frozen=True)
class DataMatrix:
    """An n x p matrix of finite reals, rows are observations.

    Numeric routines accept either a DataMatrix or a plain 2-D array;
    ``np.asarray(dm)`` yields ``dm.values``.
    """

    values: np.ndarray
    row_labels: Optional[tuple] = None
    column_names: Optional[tuple] = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2:
            raise DataError(f"expected a 2-D matrix, got shape {values.shape}")
        n, p = values.shape
        if n < 2 or p < 1:
            raise DataError(f"need n >= 2 rows and p >= 1 columns, got {n}x{p}")
        if not np.isfinite(values).all():
            i, j = np.argwhere(~np.isfinite(values))[0]
            raise DataError(f"non-finite value at row {i}, column {j}")
        if self.row_labels is not None and len(self.row_labels) != n:
            raise DataError("row_labels length does not match the number of rows")
        if self.column_names is not None and len(self.column_names) != p:
            raise DataError("column_names length does not match the number of columns")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self):
        return self.values.shape

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.values
        return self.values.astype(dtype)

    def with_values(self, values) -> "DataMatrix":
        return DataMatrix(values, self.row_labels, self.column_names)


def load_csv(
    path,
    has_header: bool = False,
    label_column: Optional[int] = None,
    columns: Optional[Sequence[int]] = None,
) -> DataMatrix:
    """Read a comma-separated file of real numbers.

    Parameters
    ----------
    path : str or path-like
        File to read.
    has_header : bool
        Treat the first line as column names.
    label_column : int, optional
        Index of a text column holding row labels; excluded from the values.
    columns : sequence of int, optional
        Restrict the numeric values to these column indices (after the label
        column has been removed from consideration).

    Raises
    ------
    DataError
        Missing file, ragged rows, or a cell that does not parse as a finite
        real; the message names the offending 1-based line and 0-based column.
    """
    if not os.path.isfile(path):
        raise DataError(f"no such file: {path}")
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh, delimiter=","))

    header = None
    start = 0
    if has_header:
        if not rows:
            raise DataError(f"{path}: empty file")
        header = rows[0]
        start = 1
    body = [(lineno, r) for lineno, r in enumerate(rows[start:], start=start + 1) if r]
    if not body:
        raise DataError(f"{path}: no data rows")

    width = len(body[0][1]) if header is None else len(header)
    numeric_cols = [j for j in range(width) if j != label_column]
    if columns is not None:
        numeric_cols = [numeric_cols[j] for j in columns]

    values = np.empty((len(body), len(numeric_cols)))
    labels = [] if label_column is not None else None
    for i, (lineno, row) in enumerate(body):
        if len(row) != width:
            raise DataError(f"{path}: line {lineno} has {len(row)} fields, expected {width}")
        for out_j, j in enumerate(numeric_cols):
            cell = row[j].strip()
            try:
                x = float(cell)
            except ValueError:
                raise DataError(
                    f"{path}: line {lineno}, column {j}: cannot parse {cell!r} as a number"
                ) from None
            if not math.isfinite(x):
                raise DataError(f"{path}: line {lineno}, column {j}: non-finite value {cell!r}")
            values[i, out_j] = x
        if labels is not None:
            labels.append(row[label_column])

    names = tuple(header[j] for j in numeric_cols) if header is not None else None
    return DataMatrix(values, tuple(labels) if labels is not None else None, names)


def save_csv(X, path, header: Optional[Sequence[str]] = None) -> None:
    """Write a matrix to CSV with 17 significant digits per cell."""
    values = np.asarray(X, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    if header is None and isinstance(X, DataMatrix):
        header = X.column_names
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header is not None:
            w.writerow(header)
        for row in values:
            w.writerow([format_float(x) for x in row])


def standardize(X, mode: str = "classical"):
    """Center and scale each column.

    ``classical`` uses the column mean and sample standard deviation
    (denominator n - 1); ``robust`` uses the column median and the MAD with
    consistency factor 1.4826. Returns the same type as the input.
    """
    values = np.asarray(X, dtype=float)
    if mode == "classical":
        loc = values.mean(axis=0)
        scale = values.std(axis=0, ddof=1)
    elif mode == "robust":
        loc = np.median(values, axis=0)
        scale = MAD_FACTOR * np.median(np.abs(values - loc), axis=0)
    else:
        raise ValueError(f"unknown standardization mode {mode!r}")
    zero = np.flatnonzero(~(scale > 0))
    if zero.size:
        raise DataError(f"column {zero[0]} has zero scale; cannot standardize")
    out = (values - loc) / scale
    if isinstance(X, DataMatrix):
        return X.with_values(out)
    return out
