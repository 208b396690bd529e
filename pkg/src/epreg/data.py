"""Regression data container, standardization and CSV ingestion."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

__all__ = ["RegressionData", "standardize", "load_csv"]


@dataclass(frozen=True)
class RegressionData:
    """A response vector and design matrix, with standardization metadata.

    ``column_means``/``column_scales`` record the affine map applied to each
    column of ``X`` and ``response_mean``/``response_scale`` the one applied
    to ``y``; all are identity values for raw data.
    """

    y: np.ndarray
    X: np.ndarray
    standardized: bool = False
    column_means: np.ndarray = field(default=None, repr=False)
    column_scales: np.ndarray = field(default=None, repr=False)
    response_mean: float = 0.0
    response_scale: float = 1.0

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        X = np.asarray(self.X, dtype=float)
        if X.ndim != 2:
            raise DataError(f"X must be 2-D, got shape {X.shape}")
        if y.ndim != 1:
            raise DataError(f"y must be 1-D, got shape {y.shape}")
        if y.shape[0] != X.shape[0]:
            raise DataError(
                f"y has {y.shape[0]} rows but X has {X.shape[0]}"
            )
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "X", X)
        if self.column_means is None:
            object.__setattr__(self, "column_means", np.zeros(X.shape[1]))
        if self.column_scales is None:
            object.__setattr__(self, "column_scales", np.ones(X.shape[1]))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def validate(self) -> "RegressionData":
        """Enforce the full data contract (size and finiteness)."""
        if self.n < 2:
            raise DataError(f"need at least 2 observations, got {self.n}")
        if self.p < 2:
            raise DataError(f"need at least 2 predictors, got {self.p}")
        if not np.all(np.isfinite(self.X)):
            i, j = map(int, np.argwhere(~np.isfinite(self.X))[0])
            raise DataError(f"non-finite entry in X at row {i}, column {j}")
        if not np.all(np.isfinite(self.y)):
            i = int(np.argwhere(~np.isfinite(self.y))[0][0])
            raise DataError(f"non-finite entry in y at row {i}")
        return self


def standardize(data: RegressionData) -> RegressionData:
    """Center y and the columns of X; rescale to the package convention.

    Columns of X get mean 0 and squared norm n (division by the population
    standard deviation), y gets mean 0 and unit population standard
    deviation.  Columns with zero variance are left centered with scale 1.
    """
    X = data.X
    y = data.y
    n = X.shape[0]
    col_means = X.mean(axis=0)
    Xc = X - col_means
    col_scales = np.sqrt(np.sum(Xc**2, axis=0) / n)
    safe = np.where(col_scales > 0, col_scales, 1.0)
    Xs = Xc / safe
    y_mean = float(y.mean())
    y_scale = float(np.sqrt(np.mean((y - y_mean) ** 2)))
    if y_scale == 0.0:
        raise DataError("response is constant; cannot standardize")
    ys = (y - y_mean) / y_scale
    return RegressionData(
        y=ys,
        X=Xs,
        standardized=True,
        column_means=col_means,
        column_scales=safe,
        response_mean=y_mean,
        response_scale=y_scale,
    )


def _parse_cell(text: str, row: int, col: int, path: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise DataError(
            f"{path}: non-numeric cell {text!r} at row {row}, column {col}"
        ) from None
    if not np.isfinite(value):
        raise DataError(
            f"{path}: non-finite cell {text!r} at row {row}, column {col}"
        )
    return value


def _read_matrix(path: str, expect_header: bool):
    """Read a rectangular numeric CSV; returns (header or None, array)."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if row and any(c.strip() for c in row)]
    if not rows:
        raise DataError(f"{path}: file is empty")
    header = None
    start = 0
    first = rows[0]

    def _is_numeric_row(row):
        try:
            for cell in row:
                float(cell)
        except ValueError:
            return False
        return True

    if expect_header:
        if _is_numeric_row(first):
            raise DataError(f"{path}: combined CSV requires a header row")
        header = [c.strip() for c in first]
        start = 1
    elif not _is_numeric_row(first):
        # tolerate an optional header on plain numeric files
        header = [c.strip() for c in first]
        start = 1

    width = len(rows[start]) if start < len(rows) else 0
    values = np.empty((len(rows) - start, width))
    for i, row in enumerate(rows[start:]):
        if len(row) != width:
            raise DataError(
                f"{path}: ragged row {i + start} has {len(row)} cells, expected {width}"
            )
        for j, cell in enumerate(row):
            values[i, j] = _parse_cell(cell.strip(), i + start, j, path)
    return header, values


def _remove_group_means(y, X, groups):
    """Subtract per-group means from y and every column of X."""
    out_y = y.copy()
    out_X = X.copy()
    for g in np.unique(groups):
        idx = groups == g
        out_y[idx] -= out_y[idx].mean()
        out_X[idx] -= out_X[idx].mean(axis=0)
    return out_y, out_X


def load_csv(
    path: str | None = None,
    *,
    response: str = "y",
    path_y: str | None = None,
    path_x: str | None = None,
    standardize_data: bool = False,
    group_column: str | None = None,
) -> RegressionData:
    """Load regression data from CSV.

    Either a combined file (``path``, header required, response column named
    by ``response``) or separate response/design files (``path_y``/``path_x``).
    ``group_column`` names a label column in the combined form whose group
    means are removed from y and X before use.
    """
    if path is not None:
        header, values = _read_matrix(path, expect_header=True)
        if response not in header:
            raise DataError(f"{path}: no column named {response!r} in header")
        y_idx = header.index(response)
        keep = [j for j in range(len(header)) if j != y_idx]
        groups = None
        if group_column is not None:
            if group_column not in header:
                raise DataError(f"{path}: no column named {group_column!r} in header")
            g_idx = header.index(group_column)
            keep = [j for j in keep if j != g_idx]
            groups = values[:, g_idx]
        y = values[:, y_idx]
        X = values[:, keep]
        if groups is not None:
            y, X = _remove_group_means(y, X, groups)
    else:
        if path_y is None or path_x is None:
            raise DataError("provide either a combined path or both path_y and path_x")
        _, yv = _read_matrix(path_y, expect_header=False)
        _, X = _read_matrix(path_x, expect_header=False)
        if yv.shape[1] != 1:
            raise DataError(f"{path_y}: response file must have exactly one column")
        y = yv[:, 0]
        if y.shape[0] != X.shape[0]:
            raise DataError(
                f"response has {y.shape[0]} rows but design has {X.shape[0]}"
            )

    data = RegressionData(y=y, X=X).validate()
    if standardize_data:
        data = standardize(data)
    return data
