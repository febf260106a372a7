"""Datasets on the nonnegative orthant, CSV ingestion and moment summaries."""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DomainError, FormatError, InsufficientData


class SupportKind(str, enum.Enum):
    CONTINUOUS = "continuous"
    COUNT = "count"


class Divisor(str, enum.Enum):
    """Denominator used for sample covariances."""

    N = "n"
    N_MINUS_1 = "n-1"


# Reproduces the published index tables to every printed decimal; the
# population divisor N misses them in the third decimal.
DEFAULT_DIVISOR = Divisor.N_MINUS_1


@dataclass(frozen=True)
class Dataset:
    """An ``n x d`` table of nonnegative observations.

    The array is copied and frozen on construction, so instances can be
    shared freely between threads.
    """

    values: np.ndarray
    labels: tuple[str, ...] = ()
    support_kind: SupportKind = SupportKind.CONTINUOUS

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2:
            raise FormatError("dataset values must be a 2-d table")
        n, d = values.shape
        if n < 1 or d < 1:
            raise FormatError("dataset needs at least one row and one column")
        if not np.all(np.isfinite(values)):
            raise DomainError("dataset entries must be finite")
        if np.any(values < 0):
            r, c = np.argwhere(values < 0)[0]
            raise DomainError(f"negative entry {values[r, c]} at row {r}, column {c}")
        kind = SupportKind(self.support_kind)
        if kind is SupportKind.COUNT and np.any(values != np.round(values)):
            r, c = np.argwhere(values != np.round(values))[0]
            raise DomainError(
                f"non-integer entry {values[r, c]} at row {r}, column {c} in count data"
            )
        labels = tuple(self.labels) if self.labels else tuple(f"X{j + 1}" for j in range(d))
        if len(labels) != d:
            raise FormatError(f"expected {d} labels, got {len(labels)}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "support_kind", kind)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def select(self, columns: Sequence[int | str]) -> "Dataset":
        """Return the sub-dataset made of the given columns (indices or labels)."""
        idx = [self.labels.index(c) if isinstance(c, str) else int(c) for c in columns]
        return Dataset(self.values[:, idx], tuple(self.labels[j] for j in idx), self.support_kind)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.labels)
        for row in self.values:
            writer.writerow([_fmt_value(v) for v in row])
        return buf.getvalue()

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.labels == other.labels
            and self.support_kind == other.support_kind
            and np.array_equal(self.values, other.values)
        )

    def __hash__(self):
        return hash((self.labels, self.support_kind, self.values.tobytes()))


def _fmt_value(v: float) -> str:
    if float(v).is_integer():
        return str(int(v))
    return repr(float(v))


def load_csv(
    path: str | Path,
    has_header: bool = True,
    support_kind: SupportKind | str = SupportKind.CONTINUOUS,
) -> Dataset:
    """Read a comma-separated numeric table.

    Rows keep their file order. Empty cells are rejected: there is no
    imputation of missing values.
    """
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(cell.strip() for cell in r)]
    if has_header:
        if not rows:
            raise FormatError(f"{path}: empty file")
        labels, rows = tuple(c.strip() for c in rows[0]), rows[1:]
    else:
        labels = ()
    if not rows:
        raise FormatError(f"{path}: no data rows")
    width = len(labels) if labels else len(rows[0])
    table = []
    for lineno, row in enumerate(rows, start=2 if has_header else 1):
        if len(row) != width:
            raise FormatError(f"{path}:{lineno}: expected {width} fields, got {len(row)}")
        try:
            table.append([float(cell) for cell in row])
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: {exc}") from None
    return Dataset(np.array(table), labels, SupportKind(support_kind))


_WATERPUMPS = (
    (23, 261, 87, 10, 120, 14, 62, 15, 47, 225, 71, 20, 246, 21,
     19, 42, 20, 5, 12, 120, 17, 11, 3, 14, 71, 11, 5, 14,
     11, 16, 90, 1, 16, 52, 95, 10, 1, 14, 4, 7, 14, 20),
    (97, 93, 94, 100, 98, 84, 96, 110, 121, 73, 90, 93, 103, 116,
     114, 82, 96, 94, 77, 91, 117, 103, 99, 113, 79, 109, 84, 118,
     98, 93, 94, 103, 109, 110, 89, 108, 101, 93, 102, 138, 103, 96),
    (26, 52, 22, 39, 23, 26, 32, 17, 10, 39, 31, 42, 52, 26,
     26, 36, 43, 36, 6, 27, 15, 36, 9, 52, 11, 20, 25, 37,
     25, 18, 43, 43, 24, 38, 6, 40, 21, 34, 15, 23, 68, 37),
)


def waterpumps() -> Dataset:
    """Drinking-water pump records from the Sahel (n=42).

    Columns: ``X1`` failure time in months, ``X2`` distance to the repair
    centre in km, ``X3`` average daily volume in cubic metres.
    """
    return Dataset(np.array(_WATERPUMPS, dtype=float).T, ("X1", "X2", "X3"))


@dataclass(frozen=True)
class MomentSummary:
    mean: np.ndarray
    cov: np.ndarray
    corr: np.ndarray
    divisor: Divisor
    degenerate: tuple[int, ...] = field(default=())

    @property
    def var(self) -> np.ndarray:
        return np.diag(self.cov).copy()


def empirical_moments(data: Dataset, divisor: Divisor | str = DEFAULT_DIVISOR) -> MomentSummary:
    """Sample mean, covariance and correlation of ``data``.

    Columns with zero variance get zero off-diagonal correlations and are
    listed in ``degenerate``; their diagonal correlation stays 1.
    """
    divisor = Divisor(divisor)
    x = data.values
    n = x.shape[0]
    if n < 2:
        raise InsufficientData("moments need at least two observations")
    d = x.shape[1]
    # fsum is correctly rounded, hence independent of row order.
    mean = np.array([math.fsum(x[:, j]) / n for j in range(d)])
    centred = x - mean
    centred[:, np.all(x == x[0], axis=0)] = 0.0
    denom = n - 1 if divisor is Divisor.N_MINUS_1 else n
    cov = np.empty((d, d))
    for j in range(d):
        for k in range(j, d):
            cov[j, k] = cov[k, j] = math.fsum(centred[:, j] * centred[:, k]) / denom
    sd = np.sqrt(np.diag(cov))
    degenerate = tuple(int(j) for j in np.flatnonzero(sd == 0))
    safe = np.where(sd > 0, sd, 1.0)
    corr = cov / np.outer(safe, safe)
    corr[degenerate, :] = 0.0
    corr[:, degenerate] = 0.0
    corr = np.clip(corr, -1.0, 1.0)
    np.fill_diagonal(corr, 1.0)
    for arr in (mean, cov, corr):
        arr.setflags(write=False)
    return MomentSummary(mean, cov, corr, divisor, degenerate)
