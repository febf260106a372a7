"""Bandwidth selection: Bayesian posterior means and least-squares cross-validation.

Bayesian selectors put independent inverse-gamma priors ``Ig(alpha, beta_m)``
on the diagonal bandwidths and report posterior means.  The likelihood is
a mixture over observations, so every posterior factorizes into
one-dimensional integrals per observation and coordinate; these are
evaluated on the log-bandwidth scale over the whole half-line.

For gamma kernels the adaptive (per-observation) posterior is available in
closed form once ``Gamma(1 + x/h)`` is replaced by its Stirling
approximation; :func:`stirling_gamma_log_kernel` is that kernel, and the
quadrature selectors accept it so the closed form can be checked exactly.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import gammaln

from .data import Dataset
from .errors import (
    AmbiguousMinimum,
    DegenerateRow,
    DegenerateSample,
    DomainError,
    InsufficientData,
    NumericalError,
    StartSupportError,
)
from .estimators import GlobalBandwidth, PerObservation
from .kernels import Family, KernelFamily, log_density
from .parametric import ConstantOne, StartModel
from .quadrature import QuadratureSpec, gauss_legendre

STIRLING_GAMMA = "gamma-stirling"
LOG_2PI = math.log(2.0 * math.pi)
# Initial log-bandwidth scan, h from e^-40 to e^25, widened on demand up
# to |log h| = _S_LIMIT.
_S_RANGE = (-40.0, 25.0)
_S_LIMIT = 700.0
_STEP = 0.05
_DEPTH = 60.0


@dataclass(frozen=True)
class PriorSpec:
    """Inverse-gamma prior ``Ig(alpha, beta_m)`` on each bandwidth coordinate."""

    alpha: float
    beta: tuple[float, ...]

    def __post_init__(self):
        if not (self.alpha > 0.5 and np.isfinite(self.alpha)):
            raise DomainError("prior alpha must exceed 1/2")
        beta = tuple(float(b) for b in np.atleast_1d(self.beta))
        if not beta or any(not (b > 0 and np.isfinite(b)) for b in beta):
            raise DomainError("prior beta must be positive")
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "beta", beta)

    def beta_for(self, d: int) -> np.ndarray:
        if len(self.beta) == 1:
            return np.full(d, self.beta[0])
        if len(self.beta) != d:
            raise DomainError(f"prior has {len(self.beta)} beta values for dimension {d}")
        return np.asarray(self.beta)

    def log_pdf(self, m: int, h):
        """Log prior density of coordinate ``m`` at ``h``.

        Written as ``log(a/(2 pi))/2 - gap(a) + a (log(1+e) - e) - log h`` with
        ``e = b/(a h) - 1`` and ``gap`` the Stirling remainder of ``log Gamma``,
        which stays accurate for very concentrated priors (large ``a``) where
        the textbook form cancels terms of size ``a log h``.
        """
        b = self.beta[m if len(self.beta) > 1 else 0]
        a = self.alpha
        const = 0.5 * math.log(a / (2.0 * math.pi)) - _stirling_gap(a)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            h = np.asarray(h, dtype=float)
            ah = a * h
            eps = (b - ah) / ah
            q = b / ah
            core = np.where(eps > -0.5, np.log1p(eps) - eps, np.log(q) - q + 1.0)
            return np.where(h > 0, const + a * core - np.log(h), -np.inf)


def _stirling_gap(a: float) -> float:
    """``log Gamma(a) - ((a - 1/2) log a - a + log(2 pi)/2)``."""
    if a < 1e3:
        return float(gammaln(a)) - ((a - 0.5) * math.log(a) - a + 0.5 * math.log(2.0 * math.pi))
    inv = 1.0 / a
    inv2 = inv * inv
    return inv * (1.0 / 12 - inv2 * (1.0 / 360 - inv2 * (1.0 / 1260 - inv2 / 1680)))


def default_prior(n: int, d: int) -> PriorSpec:
    """Schedule ``alpha = n^(2/5)``, ``beta = 1``; requires ``alpha > 2``, i.e. ``n >= 6``."""
    if int(n) != n or n < 1 or d < 1:
        raise DomainError("n and d must be positive integers")
    alpha = float(n) ** 0.4
    if not alpha > 2.0:
        raise DomainError(f"n={n} gives alpha={alpha:.4f} <= 2; pass an explicit prior")
    return PriorSpec(alpha, (1.0,) * d)


def stirling_gamma_log_kernel(x, h, u):
    """Gamma kernel with ``Gamma(1 + x/h)`` replaced by Stirling's formula.

    ``log K = -(x log(x/u) + u - x)/h - log(2 pi x h)/2`` for ``x > 0``; at
    ``x = 0`` the exact exponential kernel ``exp(-u/h)/h`` is kept.
    """
    x, h, u = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (x, h, u)))
    with np.errstate(divide="ignore", invalid="ignore"):
        xs = np.where(x > 0, x, 1.0)
        us = np.where(u > 0, u, 1.0)
        dev = xs * np.log(xs / us) + us - xs
        pos = np.where(u > 0, -dev / h - 0.5 * (LOG_2PI + np.log(xs * h)), -np.inf)
        zero = np.where(u >= 0, -u / h - np.log(h), -np.inf)
        out = np.where(x > 0, pos, zero)
        out = np.where(h > 0, out, -np.inf)
    return out if out.ndim else float(out)


def _kernel_logpdf(kernel):
    """Vectorized ``log K_{x,h}(u)`` that is ``-inf`` for inadmissible ``(x, h)``."""
    if isinstance(kernel, str) and kernel == STIRLING_GAMMA:
        return stirling_gamma_log_kernel
    fam = KernelFamily.parse(kernel)
    return lambda x, h, u: log_density(fam, x, h, u, strict=False)


def _kernel_list(kernel, d):
    if isinstance(kernel, (str, KernelFamily)):
        kernel = [kernel]
    ks = list(kernel)
    if len(ks) == 1:
        ks = ks * d
    if len(ks) != d:
        raise DomainError(f"expected {d} kernels, got {len(ks)}")
    return ks


# ------------------------------------------------------ closed form (gamma)


@dataclass(frozen=True)
class AdaptiveBayesResult:
    """Per-observation bandwidths with the posterior mixture weights.

    ``weights[i, j]`` is the weight of component ``j`` in the posterior of
    row ``i`` (zero on the diagonal); ``excluded`` counts components removed
    because a coordinate of ``X_j`` is zero where ``X_i`` is positive.
    """

    bandwidths: PerObservation
    weights: np.ndarray
    excluded: int

    @property
    def h(self) -> np.ndarray:
        return self.bandwidths.h


def _start_log(data: Dataset, start: StartModel) -> np.ndarray:
    lp = np.atleast_1d(np.asarray(start.log_pdf(data.values), dtype=float))
    bad = np.flatnonzero(~np.isfinite(lp))
    if bad.size:
        raise StartSupportError(f"start density vanishes at row {int(bad[0])}", row=int(bad[0]))
    return lp


def posterior_mixture(data: Dataset, start: StartModel, prior: PriorSpec, i: int):
    """Log mixture weights and component posterior means for row ``i`` (gamma kernel).

    Returns ``(log_w, means)`` with ``log_w`` of length ``n`` (``-inf`` for
    ``j = i`` and excluded components) and ``means`` of shape ``n x d``.
    """
    X = data.values
    n, d = X.shape
    a = prior.alpha
    beta = prior.beta_for(d)
    lp = _start_log(data, start)
    xi = X[i]
    zero = xi == 0
    log_w = lp[i] - lp
    means = np.empty((n, d))
    with np.errstate(divide="ignore", invalid="ignore"):
        for m in range(d):
            xj = X[:, m]
            if zero[m]:
                log_w = log_w + gammaln(a + 1) + a * math.log(beta[m]) - (a + 1) * np.log(xj + beta[m])
                means[:, m] = (xj + beta[m]) / a
            else:
                ratio = np.where(xj > 0, xi[m] * np.log(xi[m] / np.where(xj > 0, xj, 1.0)), np.inf)
                b = ratio + xj - xi[m] + beta[m]
                finite = np.isfinite(b)
                if np.any(b[finite] <= 0):
                    raise NumericalError("posterior scale B must be positive")
                log_w = log_w + np.where(
                    finite,
                    gammaln(a + 0.5) + a * math.log(beta[m]) - 0.5 * (LOG_2PI + math.log(xi[m]))
                    - (a + 0.5) * np.log(b),
                    -np.inf,
                )
                means[:, m] = np.where(finite, b / (a - 0.5), 0.0)
    log_w[i] = -np.inf
    return log_w, means


def adaptive_bayes_gamma_closed(data: Dataset, start: StartModel | None = None, prior: PriorSpec | None = None) -> AdaptiveBayesResult:
    """Closed-form adaptive Bayesian bandwidths for products of gamma kernels.

    Row ``i`` gets the posterior mean of its bandwidth given the
    leave-one-out likelihood at ``X_i``: a weighted mix of inverse-gamma
    posterior means ``B_ijm / (alpha - 1/2)`` (``X_im > 0``) or
    ``(X_jm + beta_m) / alpha`` (``X_im = 0``).  Sums are correctly rounded,
    so permuting the rows permutes the result exactly.
    """
    n, d = data.n, data.d
    if n < 2:
        raise InsufficientData("adaptive bandwidths need at least two observations")
    start = start or ConstantOne(d)
    prior = prior or default_prior(n, d)
    H = np.empty((n, d))
    W = np.zeros((n, n))
    excluded = 0
    for i in range(n):
        log_w, means = posterior_mixture(data, start, prior, i)
        excluded += int(np.sum(np.isneginf(log_w))) - 1
        top = np.max(log_w)
        if not np.isfinite(top):
            raise DegenerateRow(f"row {i}: every posterior component has zero weight", row=i)
        w = np.exp(log_w - top)
        total = math.fsum(w)
        W[i] = w / total
        for m in range(d):
            H[i, m] = math.fsum(w * means[:, m]) / total
    if not np.all(np.isfinite(H) & (H > 0)):
        raise NumericalError("non-positive or non-finite bandwidth")
    W.setflags(write=False)
    return AdaptiveBayesResult(PerObservation(H), W, excluded)


# ------------------------------------------------------------- quadrature


def _scan(log_g, lo: float, hi: float):
    """Evaluate ``log g`` (times the ``dh = h ds`` Jacobian) on an ``s = log h`` grid."""
    s = np.arange(lo, hi + _STEP / 2, _STEP)
    with np.errstate(all="ignore"):
        base = np.asarray(log_g(np.exp(s)), dtype=float) + s
    return s, np.where(np.isnan(base), -np.inf, base)


def _log_integrals(log_g, spec: QuadratureSpec):
    """``log int g_j(h) dh`` and ``log int h g_j(h) dh`` for every component ``j``.

    ``log_g(h)`` maps an array of bandwidths (shape ``S``) to an array of
    shape ``J x S``.  Integration runs over ``s = log h``.  The scan widens
    until every component has fallen far below its peak on both sides
    (power-law posterior tails decay slowly when ``alpha`` is small), and
    peaks are refined on a fine local grid so that narrow posteriors are
    neither missed nor overflow; each component is then scaled by its own
    peak so accuracy is relative per component.
    """
    lo_r, hi_r = _S_RANGE
    while True:
        s, base = _scan(log_g, lo_r, hi_r)
        J = base.shape[0]
        out0 = np.full(J, -np.inf)
        out1 = np.full(J, -np.inf)
        live = np.flatnonzero(np.any(np.isfinite(base), axis=1))
        if live.size == 0:
            return out0, out1
        b = base[live]
        peaks0 = np.max(b, axis=1)
        peaks1 = np.max(b + s, axis=1)
        near = (b > peaks0[:, None] - _DEPTH) | (b + s > peaks1[:, None] - _DEPTH)
        cols = np.flatnonzero(near.any(axis=0))
        lo, hi = s[cols[0]] - _STEP, s[cols[-1]] + _STEP
        grow_lo, grow_hi = lo <= lo_r, hi >= hi_r
        if not (grow_lo or grow_hi):
            break
        if lo_r - 40 < -_S_LIMIT or hi_r + 40 > _S_LIMIT:
            raise NumericalError("posterior mass reaches the edge of the bandwidth scan")
        lo_r -= 40.0 * grow_lo
        hi_r += 40.0 * grow_hi

    # Refine the peaks around every distinct coarse maximum.
    centres = np.unique(s[np.argmax(b, axis=1)])
    fine = np.unique((centres[:, None] + np.linspace(-_STEP, _STEP, 41)[None, :]).ravel())
    with np.errstate(all="ignore"):
        fb = np.asarray(log_g(np.exp(fine)), dtype=float)[live] + fine
    fb = np.where(np.isnan(fb), -np.inf, fb)
    peaks0 = np.maximum(peaks0, np.max(fb, axis=1))
    peaks1 = np.maximum(peaks1, np.max(fb + fine, axis=1))
    peak_at = fine[np.argmax(fb, axis=1)]
    # Tighten the window using both grids, so narrow posteriors get a
    # correspondingly narrow integration range.
    order = np.argsort(np.concatenate([s, fine]), kind="stable")
    grid = np.concatenate([s, fine])[order]
    vals = np.concatenate([b, fb], axis=1)[:, order]
    near = (vals > peaks0[:, None] - _DEPTH) | (vals + grid > peaks1[:, None] - _DEPTH)
    cols = np.flatnonzero(near.any(axis=0))
    lo, hi = grid[max(cols[0] - 1, 0)], grid[min(cols[-1] + 1, grid.size - 1)]
    shift = np.concatenate([peaks0, peaks1])

    def f(t):
        t = float(t)
        with np.errstate(all="ignore"):
            lg = np.asarray(log_g(np.array([math.exp(t)])), dtype=float)[live, 0] + t
        lg = np.where(np.isnan(lg), -np.inf, lg)
        return np.exp(np.concatenate([lg, lg + t]) - shift)

    # Cut the window at the individual peaks so no narrow component is missed.
    marks = np.unique(peak_at)
    if marks.size > 5:
        marks = np.quantile(marks, [0.0, 0.25, 0.5, 0.75, 1.0])
    knots = np.unique(np.concatenate([np.clip(marks, lo, hi), [lo, hi]]))
    total = np.zeros(2 * live.size)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for a, c in zip(knots[:-1], knots[1:]):
            val, _ = integrate.quad_vec(f, a, c, epsabs=0.0, epsrel=spec.epsrel, norm="max", limit=spec.limit)
            total += val
    with np.errstate(divide="ignore"):
        logs = np.log(total) + shift
    out0[live] = logs[: live.size]
    out1[live] = logs[live.size :]
    return out0, out1


def _mixture_means(log_w, x, points, kernels, prior, spec):
    """Posterior-mean bandwidths for the mixture ``sum_j w_j prod_m pi_m(h_m) K_{x_m,h_m}(points_jm)``."""
    d = x.size
    L0 = np.empty((points.shape[0], d))
    L1 = np.empty((points.shape[0], d))
    for m in range(d):
        logk = _kernel_logpdf(kernels[m])

        def log_g(h, m=m, logk=logk):
            return prior.log_pdf(m, h)[None, :] + logk(x[m], h[None, :], points[:, m : m + 1])

        L0[:, m], L1[:, m] = _log_integrals(log_g, spec)
    total0 = log_w + L0.sum(axis=1)
    top = np.max(total0)
    if not np.isfinite(top):
        return None
    den = np.exp(total0 - top)
    out = np.empty(d)
    for m in range(d):
        with np.errstate(invalid="ignore"):
            num = np.exp(total0 - L0[:, m] + L1[:, m] - top)
        out[m] = math.fsum(np.where(np.isfinite(num), num, 0.0)) / math.fsum(den)
    return out


def adaptive_bayes_quadrature(
    data: Dataset,
    start: StartModel | None = None,
    prior: PriorSpec | None = None,
    kernel="gamma",
    quad_spec: QuadratureSpec = QuadratureSpec(),
) -> PerObservation:
    """Adaptive Bayesian bandwidths by numerical integration for any continuous kernel.

    ``kernel`` is a family name (one per column or shared) or
    :data:`STIRLING_GAMMA`.
    """
    n, d = data.n, data.d
    if n < 2:
        raise InsufficientData("adaptive bandwidths need at least two observations")
    start = start or ConstantOne(d)
    prior = prior or default_prior(n, d)
    kernels = _kernel_list(kernel, d)
    lp = _start_log(data, start)
    X = data.values
    H = np.empty((n, d))
    for i in range(n):
        others = np.concatenate([np.arange(i), np.arange(i + 1, n)])
        h = _mixture_means(lp[i] - lp[others], X[i], X[others], kernels, prior, quad_spec)
        if h is None:
            raise DegenerateRow(f"row {i}: leave-one-out likelihood vanishes for every bandwidth", row=i)
        H[i] = h
    return PerObservation(H)


def local_bayes(
    data: Dataset,
    kernel,
    prior: PriorSpec | None = None,
    x=None,
    start: StartModel | None = None,
    quad_spec: QuadratureSpec = QuadratureSpec(),
) -> np.ndarray:
    """Local Bayesian bandwidth at target ``x``: posterior mean given the estimate at ``x``."""
    n, d = data.n, data.d
    prior = prior or default_prior(n, d)
    start = start or ConstantOne(d)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.size != d:
        raise DomainError(f"target dimension {x.size} does not match data dimension {d}")
    if np.any(x < 0):
        raise DomainError("target must lie in the nonnegative orthant")
    lp = _start_log(data, start)
    h = _mixture_means(-lp, x, data.values, _kernel_list(kernel, d), prior, quad_spec)
    if h is None:
        raise NumericalError("estimate vanishes at the target for every bandwidth")
    return h


def _loo_loglik(X, logk, h):
    """Sum over rows of the log leave-one-out estimate for each bandwidth in ``h``."""
    n = X.size
    out = np.empty(h.size)
    for k, hk in enumerate(h):
        lk = logk(X[:, None], hk, X[None, :])
        np.fill_diagonal(lk, -np.inf)
        top = np.max(lk, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            rows = top + np.log(np.sum(np.exp(lk - np.where(np.isfinite(top), top, 0.0)[:, None]), axis=1))
        out[k] = np.sum(np.where(np.isfinite(top), rows, -np.inf)) - n * math.log(n - 1)
    return out


def global_bayes_1d(
    data, kernel, prior: PriorSpec | None = None, quad_spec: QuadratureSpec = QuadratureSpec()
) -> float:
    """Global Bayesian bandwidth of a univariate sample.

    Posterior mean of ``h`` under the prior times the product of the
    leave-one-out estimates, accumulated as a sum of logs.
    """
    if isinstance(data, Dataset):
        if data.d != 1:
            raise DomainError("global Bayes is univariate")
        X = data.values[:, 0]
    else:
        X = np.asarray(data, dtype=float).ravel()
    n = X.size
    if n < 2:
        raise InsufficientData("global Bayes needs at least two observations")
    prior = prior or default_prior(n, 1)
    logk = _kernel_logpdf(kernel)

    def log_g(h):
        return (prior.log_pdf(0, h) + _loo_loglik(X, logk, h))[None, :]

    l0, l1 = _log_integrals(log_g, quad_spec)
    h = math.exp(l1[0] - l0[0]) if np.isfinite(l0[0]) else math.nan
    if not (np.isfinite(h) and h > 0):
        raise NumericalError("global Bayes posterior mean is not finite")
    return h


# ------------------------------------------------------- cross-validation


@dataclass(frozen=True)
class CVSearch:
    """Log-spaced search grid per axis followed by cyclic golden-section refinement."""

    lower: float = 1e-3
    upper: float = 10.0
    points: int = 25
    sweeps: int = 2
    nodes: int = 2048
    tol: float = 1e-6


@dataclass(frozen=True)
class CVResult:
    h: tuple[float, ...]
    objective: float
    grid_min: float
    ambiguous: bool

    @property
    def bandwidth(self) -> GlobalBandwidth:
        return GlobalBandwidth(self.h)


class _CVObjective:
    """Least-squares criterion ``int f^2 - (2/n) sum_i f_{-i}(X_i)`` of a global bandwidth."""

    def __init__(self, data: Dataset, kernels, nodes: int):
        self.X = data.values
        self.n, self.d = data.n, data.d
        self.kernels = [KernelFamily.parse(k) for k in kernels]
        self.nodes = nodes
        self._cache = {}

    def _axis(self, m, h):
        """Gram matrix and log kernel matrix of axis ``m``, cached by bandwidth."""
        key = (m, float(h))
        if key not in self._cache:
            u = self.X[:, m]
            logk = log_density(self.kernels[m], u[:, None], h, u[None, :], strict=False)
            self._cache[key] = (self._gram(m, h), logk)
        return self._cache[key]

    def _gram(self, m, h):
        """``G[i, k] = int K_{t,h}(X_im) K_{t,h}(X_km) dt`` over targets ``t``."""
        fam = self.kernels[m]
        u = self.X[:, m]
        if fam.is_count:
            upper = fam.c - 1 if fam.c is not None else u.max() + 1 + (fam.m or 0) + 40 * math.sqrt(u.max() + 1 + h)
            t = np.arange(0.0, math.ceil(upper) + 1)
            w = np.ones_like(t)
        else:
            upper = 1.5 * u.max() + 10.0 * h + 10.0 * math.sqrt(h * (u.max() + h))
            t, w = gauss_legendre(0.0, upper, 16, panels=max(self.nodes // 16, 1))
        K = np.exp(log_density(fam, t[None, :], h, u[:, None], strict=False))
        return (K * w) @ K.T

    def __call__(self, h) -> float:
        h = np.asarray(h, dtype=float)
        n = self.n
        G = np.ones((n, n))
        L = np.zeros((n, n))
        for m in range(self.d):
            gram, logk = self._axis(m, h[m])
            G *= gram
            L += logk
        sq = float(np.sum(G)) / n**2
        np.fill_diagonal(L, -np.inf)
        loo = np.sum(np.exp(L), axis=1) / (n - 1)
        return sq - 2.0 * float(np.mean(loo))


def _golden(f, a, b, tol):
    g = (math.sqrt(5.0) - 1.0) / 2.0
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol * (abs(a) + abs(b)):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def cv_bandwidth(data: Dataset, kernel, search: CVSearch = CVSearch()) -> CVResult:
    """Least-squares cross-validation bandwidth (global, diagonal).

    Each axis is searched over ``[lower s_j, upper s_j]`` with ``s_j`` the
    column standard deviation: a full tensor grid when ``d <= 2``, a
    coordinate-wise grid otherwise, then golden-section refinement between
    the neighbouring grid nodes of each axis in turn.
    """
    n, d = data.n, data.d
    if n < 2:
        raise InsufficientData("cross-validation needs at least two observations")
    kernels = _kernel_list(kernel, d)
    fams = [KernelFamily.parse(k) for k in kernels]
    sd = data.values.std(axis=0, ddof=1)
    if np.any(sd == 0):
        raise DegenerateSample("cross-validation needs non-constant columns")
    grids = []
    for j, fam in enumerate(fams):
        hi = min(search.upper * sd[j], fam.max_bandwidth)
        lo = min(search.lower * sd[j], hi / 10)
        grids.append(np.geomspace(lo, hi, search.points))
    obj = _CVObjective(data, kernels, search.nodes)
    cache = {}

    def f(h):
        key = tuple(float(v) for v in h)
        if key not in cache:
            cache[key] = obj(np.array(key))
        return cache[key]

    if d <= 2:
        nodes = list(itertools.product(*grids))
        values = np.array([f(h) for h in nodes])
        best = np.array(nodes[int(np.argmin(values))])
    else:
        best = np.array([g[len(g) // 2] for g in grids])
        values = []
        for j in range(d):
            vals = []
            for v in grids[j]:
                trial = best.copy()
                trial[j] = v
                vals.append(f(trial))
            values.extend(vals)
            best[j] = grids[j][int(np.argmin(vals))]
        values = np.array(values)
    grid_min = float(np.min(values))
    if np.ptp(values) < 1e-12:
        warnings.warn("cross-validation objective is flat; returning the smallest bandwidth", AmbiguousMinimum, stacklevel=2)
        small = tuple(float(g[0]) for g in grids)
        return CVResult(small, f(small), grid_min, True)
    best_val = f(best)
    if best_val > grid_min:
        best = np.array(list(cache)[int(np.argmin(list(cache.values())))])
        best_val = f(best)
    for _ in range(search.sweeps):
        for j in range(d):
            g = grids[j]
            k = int(np.argmin(np.abs(np.log(g) - math.log(best[j]))))
            a, b = math.log(g[max(k - 1, 0)]), math.log(g[min(k + 1, g.size - 1)])

            def along(s, j=j):
                trial = best.copy()
                trial[j] = math.exp(s)
                return f(trial)

            s_opt, val = _golden(along, a, b, search.tol)
            if val < best_val:
                best[j] = math.exp(s_opt)
                best_val = val
    return CVResult(tuple(float(v) for v in best), float(best_val), grid_min, False)


def bandwidth_for_kernel(family: str) -> bool:
    """Whether the closed-form adaptive selector applies to ``family``."""
    return KernelFamily.parse(family).name is Family.GAMMA
