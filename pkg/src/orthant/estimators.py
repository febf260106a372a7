"""Associated-kernel density estimators: nonparametric, semiparametric and weight.

With observations ``X_1..X_n``, diagonal bandwidths ``H_i`` and a start
density ``p``, the semiparametric estimate at ``x`` is::

    f(x) = (1/n) sum_i p(x) / p(X_i) * prod_j K_{x_j, h_ij}(X_ij)

and the weight estimate is ``f(x) / p(x)``.  With the :class:`ConstantOne`
start both reduce to the plain associated-kernel estimate.  Every sum is
accumulated from log-space terms shifted by their maximum, so products of
many tiny kernel values neither underflow nor lose relative accuracy.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .data import Dataset
from .errors import DomainError, EvaluationUnderflow, InsufficientData, NumericalError, StartSupportError
from .kernels import KernelFamily, log_density
from .parametric import ConstantOne, StartModel
from .quadrature import QuadratureSpec, gauss_legendre, integrate_halfline_vec

TINY = 1e-300
# Bound on the number of (target, observation) pairs handled per block.
_BLOCK = 1 << 20


class Bandwidths:
    """Diagonal bandwidths attached to the observations of an estimate."""

    def rows(self, n: int) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class GlobalBandwidth(Bandwidths):
    """One diagonal bandwidth ``h`` shared by every observation."""

    h: tuple[float, ...]

    def __post_init__(self):
        h = np.atleast_1d(np.asarray(self.h, dtype=float))
        if h.ndim != 1 or np.any(~np.isfinite(h)) or np.any(h < 0):
            raise DomainError("bandwidths must be finite and nonnegative")
        object.__setattr__(self, "h", tuple(float(v) for v in h))

    def rows(self, n):
        return np.broadcast_to(np.asarray(self.h), (n, len(self.h)))


@dataclass(frozen=True, eq=False)
class PerObservation(Bandwidths):
    """A diagonal bandwidth ``H_i`` for every observation (``n x d``)."""

    h: np.ndarray

    def __post_init__(self):
        h = np.array(self.h, dtype=float)
        if h.ndim == 1:
            h = h[:, None]
        if h.ndim != 2 or np.any(~np.isfinite(h)) or np.any(h < 0):
            raise DomainError("bandwidths must be a finite nonnegative n x d matrix")
        h.setflags(write=False)
        object.__setattr__(self, "h", h)

    def rows(self, n):
        if self.h.shape[0] != n:
            raise DomainError(f"{self.h.shape[0]} bandwidth rows for {n} observations")
        return self.h

    def __eq__(self, other):
        return isinstance(other, PerObservation) and np.array_equal(self.h, other.h)

    __hash__ = None


def _families(families, d):
    if isinstance(families, (str, KernelFamily)):
        families = [families]
    fams = tuple(KernelFamily.parse(f) for f in families)
    if len(fams) == 1 and d > 1:
        fams = fams * d
    if len(fams) != d:
        raise DomainError(f"expected {d} kernel families, got {len(fams)}")
    return fams


@dataclass(frozen=True, eq=False)
class DensityEstimate:
    """Data, kernels, bandwidths and start model of a kernel estimate.

    ``log_start`` caches ``log p(X_i)``; ``log_scale`` is added to every log
    estimate and is nonzero only after :meth:`normalized`.
    """

    data: Dataset
    families: tuple[KernelFamily, ...]
    bandwidths: Bandwidths
    start: StartModel = field(default_factory=ConstantOne)
    log_scale: float = 0.0
    log_start: np.ndarray = field(init=False, repr=False)
    h: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        fams = _families(self.families, self.data.d)
        object.__setattr__(self, "families", fams)
        h = np.ascontiguousarray(self.bandwidths.rows(self.data.n), dtype=float)
        if h.shape[1] != self.data.d:
            raise DomainError(f"bandwidth dimension {h.shape[1]} does not match data dimension {self.data.d}")
        object.__setattr__(self, "h", h)
        start = self.start
        if start.dim is not None and start.dim != self.data.d:
            raise DomainError(f"start model dimension {start.dim} does not match data dimension {self.data.d}")
        lp = np.atleast_1d(np.asarray(start.log_pdf(self.data.values), dtype=float))
        bad = np.flatnonzero(~np.isfinite(lp) | (lp < math.log(TINY)))
        if bad.size:
            raise StartSupportError(
                f"start density vanishes (or is infinite) at row {int(bad[0])}", row=int(bad[0])
            )
        lp.setflags(write=False)
        object.__setattr__(self, "log_start", lp)

    @property
    def n(self) -> int:
        return self.data.n

    @property
    def d(self) -> int:
        return self.data.d

    def normalized(self, quad: QuadratureSpec = QuadratureSpec()) -> "DensityEstimate":
        """Copy whose values are divided by the normalizing constant."""
        c = normalizing_constant(self, quad)
        return replace(self, log_scale=-math.log(c))


def _targets(est: DensityEstimate, x) -> tuple[np.ndarray, tuple]:
    x = np.asarray(x, dtype=float)
    if est.d == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x = x[..., None]
    if x.shape[-1] != est.d:
        raise DomainError(f"target dimension {x.shape[-1]} does not match data dimension {est.d}")
    if np.any(x < 0):
        raise DomainError("targets must lie in the nonnegative orthant")
    return x.reshape(-1, est.d), x.shape[:-1]


def _log_kernel_terms(est: DensityEstimate, x: np.ndarray, h: np.ndarray, points: np.ndarray):
    """``sum_j log K_{x_j, h_ij}(points_ij)`` for each target (rows) and observation (columns)."""
    total = np.zeros((x.shape[0], points.shape[0]))
    for j, fam in enumerate(est.families):
        total += log_density(fam, x[:, j : j + 1], h[None, :, j], points[None, :, j])
    return total


def _log_mean_exp(terms: np.ndarray, count: int) -> np.ndarray:
    top = np.max(terms, axis=1)
    safe = np.where(np.isfinite(top), top, 0.0)
    # numpy reduces along the contiguous axis pairwise, independent of any
    # threading of the outer loop.
    s = np.sum(np.exp(terms - safe[:, None]), axis=1)
    with np.errstate(divide="ignore"):
        return np.where(np.isfinite(top), safe + np.log(s), -np.inf) - math.log(count)


def log_weight_values(est: DensityEstimate, x, threads: int = 1) -> np.ndarray:
    """``log`` of the weight estimate at each target (``-inf`` where it is zero)."""
    pts, shape = _targets(est, x)
    block = max(1, _BLOCK // max(est.n, 1))
    starts = range(0, pts.shape[0], block)

    def one(s):
        chunk = pts[s : s + block]
        terms = _log_kernel_terms(est, chunk, est.h, est.data.values) - est.log_start[None, :]
        return _log_mean_exp(terms, est.n)

    if threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(one, starts))
    else:
        parts = [one(s) for s in starts]
    out = (np.concatenate(parts) if parts else np.empty(0)) + est.log_scale
    return out.reshape(shape)


def _finish(values):
    values = np.asarray(values)
    return values if values.ndim else float(values)


def nonparametric_at(est: DensityEstimate, x, threads: int = 1):
    """Plain associated-kernel estimate ``(1/n) sum_i prod_j K_{x_j, h_ij}(X_ij)``.

    The start model of ``est`` is ignored.
    """
    plain = est if isinstance(est.start, ConstantOne) else replace(est, start=ConstantOne(est.d))
    return _finish(np.exp(log_weight_values(plain, x, threads)))


def log_semiparametric_values(est: DensityEstimate, x, threads: int = 1) -> np.ndarray:
    pts, shape = _targets(est, x)
    lw = log_weight_values(est, pts, threads)
    with np.errstate(invalid="ignore"):
        return (lw + np.asarray(est.start.log_pdf(pts), dtype=float)).reshape(shape)


def semiparametric_at(est: DensityEstimate, x, threads: int = 1):
    """Start-weighted estimate ``(1/n) sum_i [p(x)/p(X_i)] prod_j K_{x_j, h_ij}(X_ij)``."""
    return _finish(np.exp(log_semiparametric_values(est, x, threads)))


def weight_at(est: DensityEstimate, x, threads: int = 1):
    """Nonparametric weight estimate, the semiparametric estimate divided by ``p(x)``."""
    pts, shape = _targets(est, x)
    lp = np.asarray(est.start.log_pdf(pts), dtype=float)
    if np.any(lp < math.log(TINY)):
        k = int(np.flatnonzero(lp < math.log(TINY))[0])
        raise EvaluationUnderflow(f"start density below {TINY:g} at target {pts[k].tolist()}")
    return _finish(np.exp(log_weight_values(est, pts, threads)).reshape(shape))


def log_loo_values(est: DensityEstimate, rows=None) -> np.ndarray:
    """Log leave-one-out estimates at ``X_i``, using the bandwidth ``H_i`` of that row."""
    n = est.n
    if n < 2:
        raise InsufficientData("leave-one-out needs at least two observations")
    rows = np.arange(n) if rows is None else np.atleast_1d(np.asarray(rows, dtype=int))
    X = est.data.values
    out = np.empty(rows.size)
    for k, i in enumerate(rows):
        others = np.concatenate([np.arange(i), np.arange(i + 1, n)])
        terms = np.zeros((1, n - 1))
        for j, fam in enumerate(est.families):
            terms += log_density(fam, X[i, j], est.h[i, j], X[others, j])[None, :]
        terms += est.log_start[i] - est.log_start[others][None, :]
        out[k] = _log_mean_exp(terms, n - 1)[0]
    return out + est.log_scale


def loo_at(est: DensityEstimate, i: int) -> float:
    """Leave-one-out estimate at observation ``i``."""
    if not -est.n <= i < est.n:
        raise DomainError(f"row {i} out of range")
    return float(np.exp(log_loo_values(est, [i % est.n])[0]))


def evaluate_grid(est: DensityEstimate, points, semiparametric: bool = True, threads: int = 1):
    """Estimate at every point of a grid; results do not depend on ``threads``."""
    if semiparametric:
        return semiparametric_at(est, points, threads)
    return nonparametric_at(est, points, threads)


# ----------------------------------------------------- normalizing constant


@dataclass(frozen=True)
class NormalizingConstant:
    value: float
    method: str
    error: float


def _count_marginal_sum(fam, start, j, u, h, spec):
    """``sum_t p_j(t) K_{t, h}(u)`` over target counts ``t``."""
    if fam.c is not None:
        t = np.arange(fam.c, dtype=float)
        return float(np.sum(np.exp(log_density(fam, t, h, u, strict=False) + start.marginal_log_pdf(j, t))))
    t = np.arange(0.0, max(u, 1.0) * 4 + 64)
    while True:
        vals = np.exp(log_density(fam, t, h, u, strict=False) + start.marginal_log_pdf(j, t))
        if vals[-1] <= spec.tail * 1e-3 * max(np.sum(vals), TINY) and t[-1] > u + 2:
            return float(np.sum(vals))
        t = np.arange(0.0, 2 * t[-1] + 2)


def _separable_constant(est: DensityEstimate, spec: QuadratureSpec) -> NormalizingConstant:
    X = est.data.values
    log_terms = -est.log_start.copy()
    err = 0.0
    for j, fam in enumerate(est.families):
        keys, inverse = np.unique(np.column_stack([X[:, j], est.h[:, j]]), axis=0, return_inverse=True)
        u, h = keys[:, 0], keys[:, 1]
        if fam.is_count:
            vals = np.array([_count_marginal_sum(fam, est.start, j, ui, hi, spec) for ui, hi in keys])
        else:
            # Each integral is taken relative to p_j(u) so that all are O(1).
            base = np.asarray(est.start.marginal_log_pdf(j, u), dtype=float)

            def log_f(t, fam=fam, j=j, u=u, h=h, base=base):
                return log_density(fam, t, h, u, strict=False) + est.start.marginal_log_pdf(j, t) - base

            rel, e = integrate_halfline_vec(log_f, np.maximum(u, h), spec)
            err += e
            with np.errstate(divide="ignore"):
                vals = np.exp(np.log(rel) + base)
        with np.errstate(divide="ignore"):
            log_terms += np.log(vals)[inverse.ravel()]
    value = float(np.exp(_log_mean_exp(log_terms[None, :], est.n)[0] + est.log_scale))
    return NormalizingConstant(value, "separable", err * value)


def _tensor_mass(est: DensityEstimate, widen: float, nodes: int) -> float:
    X = est.data.values
    axes = []
    for j in range(est.d):
        upper = widen * (1.5 * X[:, j].max() + 10.0 * est.h[:, j].max())
        axes.append(gauss_legendre(0.0, upper, 16, panels=max(nodes // 16, 1)))
    pts = np.array(list(itertools.product(*[a[0] for a in axes])))
    wts = np.prod(np.array(list(itertools.product(*[a[1] for a in axes]))), axis=1)
    return float(np.sum(np.exp(log_semiparametric_values(est, pts)) * wts))


def normalizing_constant(
    est: DensityEstimate, quad: QuadratureSpec = QuadratureSpec(), coverage: float = 1e-6
) -> float:
    """Total mass of the semiparametric estimate over the orthant.

    Separable starts factorize the integral into univariate integrals per
    observation and coordinate, computed adaptively (or summed over the
    naturals for count kernels).  A non-separable start falls back to a
    tensor Gauss-Legendre rule on ``[0, 1.5 max X + 10 max h]`` per axis,
    whose coverage is checked against a rule on a box twice as wide.
    """
    return normalizing_constant_report(est, quad, coverage).value


def normalizing_constant_report(
    est: DensityEstimate, quad: QuadratureSpec = QuadratureSpec(), coverage: float = 1e-6
) -> NormalizingConstant:
    if est.start.separable:
        return _separable_constant(est, quad)
    if any(f.is_count for f in est.families):
        raise DomainError("count kernels need a separable start for the normalizing constant")
    nodes = 256 if est.d <= 2 else 48
    value = _tensor_mass(est, 1.0, nodes)
    wide = _tensor_mass(est, 2.0, 2 * nodes if est.d <= 2 else nodes)
    gap = abs(wide - value) / max(wide, TINY)
    if gap > coverage:
        raise NumericalError(f"quadrature box covers the estimate only to {gap:.3g}", achieved=gap)
    return NormalizingConstant(value, "tensor-gauss-legendre", abs(wide - value))
