"""Relative variability indexes (dispersion and variation) for orthant data.

Dispersion indexes compare a covariance with the uncorrelated Poisson
reference of the same mean; variation indexes compare it with the
uncorrelated exponential reference.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field

import numpy as np

from .data import DEFAULT_DIVISOR, Dataset, Divisor, empirical_moments
from .errors import DomainError
from .io import dumps, format_float

ANALYTIC_EPS = 1e-6
EMPIRICAL_EPS = 0.05
PINV_RCOND = 1e-12


class Variability(str, enum.Enum):
    OVER = "over"
    EQUI = "equi"
    UNDER = "under"


def classify(index: float, eps: float = ANALYTIC_EPS) -> Variability:
    """Over/equi/under classification of an index relative to 1."""
    if abs(index - 1.0) <= eps:
        return Variability.EQUI
    return Variability.OVER if index > 1.0 else Variability.UNDER


def _check(mean, cov):
    m = np.atleast_1d(np.asarray(mean, dtype=float))
    s = np.atleast_2d(np.asarray(cov, dtype=float))
    if s.shape != (m.size, m.size):
        raise DomainError(f"covariance shape {s.shape} does not match mean of length {m.size}")
    if np.any(m <= 0):
        raise DomainError("mean components must be strictly positive")
    return m, s


def gdi(mean, cov) -> float:
    """Generalized dispersion index ``sqrt(m)' S sqrt(m) / m'm``."""
    m, s = _check(mean, cov)
    if m.size == 1:  # Fisher dispersion index, computed without rounding detours
        return float(s[0, 0] / m[0])
    r = np.sqrt(m)
    return float(r @ s @ r / (m @ m))


def gvi(mean, cov) -> float:
    """Generalized variation index ``m' S m / (m'm)^2``."""
    m, s = _check(mean, cov)
    if m.size == 1:  # squared coefficient of variation
        return float(s[0, 0] / m[0] ** 2)
    return float(m @ s @ m / (m @ m) ** 2)


def mdi(mean, cov) -> float:
    """Marginal dispersion index: :func:`gdi` with correlations dropped."""
    m, s = _check(mean, cov)
    return gdi(m, np.diag(np.diag(s)))


def mvi(mean, cov) -> float:
    """Marginal variation index: :func:`gvi` with correlations dropped."""
    m, s = _check(mean, cov)
    return gvi(m, np.diag(np.diag(s)))


def _ratio(num: float, den: float) -> float:
    if den <= 0:
        raise DomainError("reference index must be positive")
    return num / den


def rdi(gdi_x: float, gdi_y: float) -> float:
    """Relative dispersion index of X with respect to a reference Y."""
    return _ratio(gdi_x, gdi_y)


def rvi(gvi_x: float, gvi_y: float) -> float:
    """Relative variation index of X with respect to a reference Y."""
    return _ratio(gvi_x, gvi_y)


def pinv_psd(w: np.ndarray, rcond: float = PINV_RCOND) -> np.ndarray:
    """Moore-Penrose inverse of a symmetric PSD matrix by eigendecomposition.

    Eigenvalues at or below ``rcond * max|eigenvalue|`` are treated as zero.
    """
    vals, vecs = np.linalg.eigh(w)
    cutoff = rcond * np.max(np.abs(vals)) if vals.size else 0.0
    inv = np.zeros_like(vals)
    keep = vals > cutoff
    inv[keep] = 1.0 / vals[keep]
    return (vecs * inv) @ vecs.T


def rwi(cov_x, w, rank_one_vector=None) -> float:
    """Relative variability index ``tr(cov_x @ pinv(w))``.

    When ``w = v v'`` and ``v`` is supplied as ``rank_one_vector``, the
    pseudoinverse ``v v' / |v|^4`` is used directly.
    """
    s = np.atleast_2d(np.asarray(cov_x, dtype=float))
    if rank_one_vector is not None:
        v = np.asarray(rank_one_vector, dtype=float)
        nv = v @ v
        if nv == 0:
            return 0.0
        return float(v @ s @ v / nv**2)
    w = np.atleast_2d(np.asarray(w, dtype=float))
    if w.shape != s.shape:
        raise DomainError("cov_x and w must have the same shape")
    if not np.allclose(w, w.T, rtol=1e-12, atol=0.0):
        raise DomainError("w must be symmetric")
    if np.array_equal(w, np.eye(w.shape[0])):
        return float(np.trace(s))
    v = _rank_one_factor(w)
    if v is not None:
        return rwi(s, None, rank_one_vector=v)
    return float(np.trace(s @ pinv_psd(w)))


def _rank_one_factor(w: np.ndarray):
    k = int(np.argmax(np.diag(w)))
    if w[k, k] <= 0:
        return None
    v = w[:, k] / np.sqrt(w[k, k])
    if np.allclose(np.outer(v, v), w, rtol=1e-13, atol=1e-15 * w[k, k]):
        return v
    return None


@dataclass(frozen=True)
class IndexReport:
    """Dispersion and variation indexes for every margin, pair and the joint."""

    labels: tuple[str, ...]
    divisor: Divisor
    eps: float
    gvi: dict[tuple[int, ...], float]
    gdi: dict[tuple[int, ...], float]
    mvi: dict[tuple[int, ...], float]
    mdi: dict[tuple[int, ...], float]
    classes: dict[str, dict[tuple[int, ...], Variability]] = field(default_factory=dict)

    @property
    def joint(self) -> tuple[int, ...]:
        return tuple(range(len(self.labels)))

    def matrix(self, kind: str = "gvi") -> np.ndarray:
        """Margins on the diagonal, pairs off the diagonal."""
        table = getattr(self, kind)
        d = len(self.labels)
        out = np.empty((d, d))
        for j in range(d):
            out[j, j] = table[(j,)]
        for j, k in itertools.combinations(range(d), 2):
            out[j, k] = out[k, j] = table[(j, k)]
        return out

    def to_dict(self) -> dict:
        def name(key):
            return ",".join(self.labels[j] for j in key)

        return {
            "labels": list(self.labels),
            "divisor": self.divisor.value,
            "eps": self.eps,
            **{
                kind: {name(k): v for k, v in getattr(self, kind).items()}
                for kind in ("gvi", "gdi", "mvi", "mdi")
            },
            "classes": {
                kind: {name(k): c.value for k, c in table.items()}
                for kind, table in self.classes.items()
            },
        }

    def to_json(self) -> str:
        return dumps(self.to_dict())

    def table_csv(self, kind: str = "gvi", decimals: int | None = None) -> str:
        """Table-shaped CSV: joint value in the corner, then the matrix."""

        def fmt(v):
            return f"{v:.{decimals}f}" if decimals is not None else format_float(v)

        table = getattr(self, kind)
        mat = self.matrix(kind)
        lines = [",".join([fmt(table[self.joint])] + list(self.labels))]
        for j, lab in enumerate(self.labels):
            lines.append(",".join([lab] + [fmt(v) for v in mat[j]]))
        return "\n".join(lines) + "\n"


def index_table(
    data: Dataset,
    divisor: Divisor | str = DEFAULT_DIVISOR,
    eps: float = EMPIRICAL_EPS,
) -> IndexReport:
    """Empirical indexes for each margin, each pair and all columns jointly."""
    mom = empirical_moments(data, divisor)
    if np.any(mom.mean <= 0):
        raise DomainError("every column mean must be positive")
    d = data.d
    subsets = [(j,) for j in range(d)] + list(itertools.combinations(range(d), 2))
    if d > 2:
        subsets.append(tuple(range(d)))
    out = {k: {} for k in ("gvi", "gdi", "mvi", "mdi")}
    fns = {"gvi": gvi, "gdi": gdi, "mvi": mvi, "mdi": mdi}
    for sub in subsets:
        m = mom.mean[list(sub)]
        s = mom.cov[np.ix_(sub, sub)]
        for kind, fn in fns.items():
            out[kind][sub] = fn(m, s)
    classes = {kind: {k: classify(v, eps) for k, v in table.items()} for kind, table in out.items()}
    return IndexReport(tuple(data.labels), Divisor(divisor), eps, classes=classes, **out)
