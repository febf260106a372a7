"""Shared numeric integration helpers for functions on the half-line."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate


@dataclass(frozen=True)
class QuadratureSpec:
    """Accuracy settings for numeric integration and summation."""

    epsrel: float = 1e-12
    epsabs: float = 0.0
    limit: int = 500
    tail: float = 1e-12
    tol: float = 1e-9


def quad(f, a, b, spec: QuadratureSpec = QuadratureSpec()):
    """``scipy.integrate.quad`` with its advisory warnings silenced.

    Callers check the returned error estimate themselves.
    """
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        return integrate.quad(f, a, b, epsabs=spec.epsabs, epsrel=spec.epsrel, limit=spec.limit)


def bulk_window(log_f, scale: float, depth: float = 80.0):
    """Locate ``(lo, mode, hi)`` bracketing where ``log_f`` is within ``depth`` of its peak.

    ``log_f`` must be vectorized.  The scan is log-spaced over twenty-two
    decades around ``scale``; returns ``None`` if ``log_f`` is ``-inf``
    throughout.
    """
    grid = max(scale, 1e-300) * np.logspace(-14, 8, 4000)
    with np.errstate(all="ignore"):
        lf = np.asarray(log_f(grid), dtype=float)
    lf = np.where(np.isnan(lf), -np.inf, lf)
    if not np.any(np.isfinite(lf)):
        return None
    top = int(np.argmax(lf))
    keep = np.flatnonzero(lf > lf[top] - depth)
    lo = grid[max(keep[0] - 1, 0)]
    hi = grid[min(keep[-1] + 1, grid.size - 1)]
    return lo, grid[top], hi


def integrate_halfline(f, log_f, scale: float, spec: QuadratureSpec = QuadratureSpec()):
    """Integral of ``f`` over ``[0, inf)`` and its absolute error estimate.

    The bulk located by :func:`bulk_window` is cut at geometric breakpoints
    no more than a factor 4 apart, so integrands whose mass spans many
    decades (heavy tails, sharp peaks) are resolved.
    """
    window = bulk_window(log_f, scale)
    if window is None:
        return 0.0, 0.0
    lo, mode, hi = window
    knots = [lo]
    for end in (mode, hi):
        if end > knots[-1]:
            steps = max(int(np.ceil(np.log(end / knots[-1]) / np.log(4.0))), 1)
            knots.extend(np.geomspace(knots[-1], end, steps + 1)[1:])
    pieces = [(0.0, lo)] + list(zip(knots[:-1], knots[1:])) + [(hi, np.inf)]
    total, err = 0.0, 0.0
    for a, b in pieces:
        if b > a:
            val, e = quad(f, a, b, spec)
            total += val
            err += e
    return total, err


def integrate_halfline_vec(log_f, scales, spec: QuadratureSpec = QuadratureSpec(), max_knots: int = 128):
    """Integrals over ``[0, inf)`` of a family of integrands evaluated together.

    ``log_f(t)`` maps a scalar ``t`` (or a column of them) to the log of all
    integrands at once.  The integrands should be of comparable size, since
    the adaptive rule controls the largest absolute error.  Returns
    ``(totals, err)`` with ``err`` the componentwise maximum error estimate.
    """
    scales = np.maximum(np.asarray(scales, dtype=float), 1e-300)
    grid = np.geomspace(scales.min() * 1e-14, scales.max() * 1e8, 4000)
    with np.errstate(all="ignore"):
        lf = np.asarray(log_f(grid[:, None]), dtype=float)
    lf = np.where(np.isnan(lf), -np.inf, lf)
    alive = np.any(np.isfinite(lf), axis=0)
    totals = np.zeros(lf.shape[1])
    if not np.any(alive):
        return totals, 0.0
    lf = lf[:, alive]
    top = np.argmax(lf, axis=0)
    near = lf > lf[top, np.arange(lf.shape[1])] - 80.0
    lo = grid[max(int(np.argmax(near.any(axis=1))) - 1, 0)]
    hi = grid[min(grid.size - int(np.argmax(near.any(axis=1)[::-1])), grid.size - 1)]
    modes = np.unique(grid[top])
    if modes.size > max_knots:
        modes = np.unique(np.quantile(modes, np.linspace(0, 1, max_knots)))
    steps = max(int(np.ceil(np.log(hi / lo) / np.log(4.0))), 1)
    knots = np.unique(np.concatenate([np.geomspace(lo, hi, steps + 1), modes]))
    knots = knots[(knots > lo) & (knots < hi)]

    def f(t):
        with np.errstate(all="ignore"):
            v = np.exp(np.asarray(log_f(t), dtype=float)[alive])
        return np.where(np.isnan(v), 0.0, v)

    opts = dict(epsabs=spec.epsabs, epsrel=spec.epsrel, norm="max", limit=max(spec.limit, 4 * knots.size))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        head, e0 = integrate.quad_vec(f, 0.0, lo, **opts)
        body, e1 = integrate.quad_vec(f, lo, hi, points=list(knots), **opts)
        tail, e2 = integrate.quad_vec(f, hi, np.inf, **opts)
    totals[alive] = head + body + tail
    return totals, float(e0 + e1 + e2)


def gauss_legendre(a: float, b: float, nodes: int, panels: int = 1):
    """Composite Gauss-Legendre nodes and weights on ``[a, b]``."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(a, b, panels + 1)
    half = np.diff(edges) / 2.0
    mid = (edges[:-1] + edges[1:]) / 2.0
    pts = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    wts = (half[:, None] * w[None, :]).ravel()
    return pts, wts
