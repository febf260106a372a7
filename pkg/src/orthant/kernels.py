"""Univariate associated kernels and their diagonal-bandwidth products.

Every kernel ``K_{x,h}`` is a probability density (continuous families) or
mass function (count families) in ``u`` whose support contains the target
``x``.  Its mean is ``x + A(x, h)`` and its variance ``B(x, h)``.

Continuous families use the standard parameterizations below, each of
which reproduces the tabulated ``A`` and ``B``:

=========  ==========================================================
gamma      Gamma(shape 1 + x/h, scale h)
ln2        LogNormal(log-mean log x + h^2, log-sd h)
weibull    Weibull(shape 1/h, scale x / Gamma(1 + h))
bs         Birnbaum-Saunders(shape sqrt(h), scale x)
ig         InverseGamma(shape 1/(x h) - 1, scale 1/h)
rig        1/Y with Y ~ InverseGaussian(mean 1/(x - h), shape 1/h)
igauss     InverseGaussian(mean x, shape 1/h)
ln1        LogNormal(log-mean log x, log-sd 2 sqrt(log(1 + h)))
=========  ==========================================================
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, xlogy

from .errors import DomainError, NumericalError
from .quadrature import QuadratureSpec, integrate_halfline

LOG_2PI = float(np.log(2.0 * np.pi))


class Family(str, enum.Enum):
    DIRDU = "dirdu"
    SYM_COUNT_TRIANGULAR = "sct"
    BINOMIAL = "binomial"
    POISSON = "poisson"
    GAMMA = "gamma"
    LOGNORMAL2 = "ln2"
    WEIBULL = "weibull"
    BIRNBAUM_SAUNDERS = "bs"
    INVERSE_GAMMA = "ig"
    RECIPROCAL_INVERSE_GAUSSIAN = "rig"
    INVERSE_GAUSSIAN = "igauss"
    LOGNORMAL1 = "ln1"


COUNT_FAMILIES = frozenset(
    {Family.DIRDU, Family.SYM_COUNT_TRIANGULAR, Family.BINOMIAL, Family.POISSON}
)
FIRST_ORDER = frozenset({Family.BINOMIAL, Family.POISSON})
# Families whose bandwidth is a probability-like parameter in (0, 1].
UNIT_BANDWIDTH = frozenset({Family.DIRDU, Family.BINOMIAL})


class ConsistencyOrder(str, enum.Enum):
    FIRST = "first"
    SECOND = "second"


@dataclass(frozen=True)
class KernelMoments:
    a: float
    b: float
    note: str = ""


@dataclass(frozen=True)
class KernelFamily:
    """A kernel family plus its structural parameter, if any.

    ``c`` is the number of categories of the DirDU kernel and ``m`` the
    arm length of the symmetric count triangular kernel.
    """

    name: Family
    c: int | None = None
    m: int | None = None

    def __post_init__(self):
        name = Family(self.name)
        object.__setattr__(self, "name", name)
        if name is Family.DIRDU:
            if self.c is None or int(self.c) != self.c or self.c < 2:
                raise DomainError("DirDU kernel needs an integer category count c >= 2")
        if name is Family.SYM_COUNT_TRIANGULAR:
            if self.m is None or int(self.m) != self.m or self.m < 0:
                raise DomainError("symmetric count triangular kernel needs an integer arm m >= 0")

    @classmethod
    def parse(cls, spec: "str | KernelFamily") -> "KernelFamily":
        """Build from ``"gamma"``, ``"dirdu:3"`` or ``"sct:2"``."""
        if isinstance(spec, KernelFamily):
            return spec
        name, _, param = spec.strip().lower().partition(":")
        fam = Family(name)
        if fam is Family.DIRDU:
            return cls(fam, c=int(param) if param else None)
        if fam is Family.SYM_COUNT_TRIANGULAR:
            return cls(fam, m=int(param) if param else None)
        if param:
            raise DomainError(f"kernel {name!r} takes no parameter")
        return cls(fam)

    def __str__(self):
        if self.name is Family.DIRDU:
            return f"dirdu:{self.c}"
        if self.name is Family.SYM_COUNT_TRIANGULAR:
            return f"sct:{self.m}"
        return self.name.value

    @property
    def is_count(self) -> bool:
        return self.name in COUNT_FAMILIES

    @property
    def support_kind(self) -> str:
        return "count" if self.is_count else "continuous"

    @property
    def consistency_order(self) -> ConsistencyOrder:
        return ConsistencyOrder.FIRST if self.name in FIRST_ORDER else ConsistencyOrder.SECOND

    @property
    def squared_norm_rate(self) -> float:
        # Continuous kernels: |K|_2^2 grows like h^{-1/2}.  Count kernels keep
        # a bounded norm, so any positive rate satisfies the bound; 1 is nominal.
        return 1.0 if self.is_count else 0.5

    @property
    def max_bandwidth(self) -> float:
        return 1.0 if self.name in UNIT_BANDWIDTH else np.inf


def _valid(fam: KernelFamily, x, h):
    """Boolean mask of admissible (target, bandwidth) pairs."""
    name = fam.name
    integer = x == np.floor(x)
    if name is Family.DIRDU:
        return integer & (x >= 0) & (x <= fam.c - 1) & (h >= 0) & (h <= 1)
    if name is Family.SYM_COUNT_TRIANGULAR:
        return integer & (x >= 0) & (h > 0)
    if name is Family.BINOMIAL:
        return integer & (x >= 0) & (h > 0) & (h <= 1)
    if name is Family.POISSON:
        return integer & (x >= 0) & (h > 0)
    if name is Family.GAMMA:
        return (x >= 0) & (h > 0) & np.isfinite(x)
    if name is Family.INVERSE_GAMMA:
        return (x > 0) & (h > 0) & (x * h < 1) & np.isfinite(x)
    if name is Family.RECIPROCAL_INVERSE_GAUSSIAN:
        return (x > h) & (h > 0) & np.isfinite(x)
    return (x > 0) & (h > 0) & np.isfinite(x)


def _sct_log_norm(m: int, x, h):
    """log of the normalizer over ``{x-m..x+m}`` intersected with the naturals."""
    k = np.arange(-m, m + 1, dtype=float)
    x = np.asarray(x, dtype=float)[..., None]
    h = np.asarray(h, dtype=float)[..., None]
    w = (m + 1.0) ** h - np.abs(k) ** h
    w = np.where(x + k >= 0, w, 0.0)
    return np.log(w.sum(axis=-1))


def _log_density_unchecked(fam: KernelFamily, x, h, u):
    name = fam.name
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if name is Family.DIRDU:
            on_support = (u == np.floor(u)) & (u >= 0) & (u <= fam.c - 1)
            hit = np.where(u == x, xlogy(1.0, 1.0 - h), xlogy(1.0, h / (fam.c - 1)))
            return np.where(on_support, hit, -np.inf)
        if name is Family.SYM_COUNT_TRIANGULAR:
            m = fam.m
            dist = np.abs(u - x)
            on_support = (u == np.floor(u)) & (u >= 0) & (dist <= m)
            num = np.log((m + 1.0) ** h - dist**h)
            return np.where(on_support, num - _sct_log_norm(m, x, h), -np.inf)
        if name is Family.BINOMIAL:
            on_support = (u == np.floor(u)) & (u >= 0) & (u <= x + 1)
            uu = np.where(on_support, u, 0.0)
            val = (
                gammaln(x + 2.0) - gammaln(uu + 1.0) - gammaln(x + 2.0 - uu)
                + xlogy(uu, (x + h) / (x + 1.0))
                + xlogy(x + 1.0 - uu, (1.0 - h) / (x + 1.0))
            )
            return np.where(on_support, val, -np.inf)
        if name is Family.POISSON:
            lam = x + h
            on_support = (u == np.floor(u)) & (u >= 0)
            uu = np.where(on_support, u, 0.0)
            return np.where(on_support, xlogy(uu, lam) - lam - gammaln(uu + 1.0), -np.inf)

        pos = u > 0
        up = np.where(pos, u, 1.0)
        lu = np.log(up)
        if name is Family.GAMMA:
            shape = 1.0 + x / h
            val = xlogy(shape - 1.0, np.where(u >= 0, u, 1.0)) - u / h - gammaln(shape) - shape * np.log(h)
            return np.where(u >= 0, val, -np.inf)
        if name is Family.WEIBULL:
            k = 1.0 / h
            lam = x / np.exp(gammaln(1.0 + h))
            z = np.where(u >= 0, u, 0.0) / lam
            val = np.log(k) - np.log(lam) + xlogy(k - 1.0, z) - z**k
            return np.where(u >= 0, val, -np.inf)
        if name in (Family.LOGNORMAL2, Family.LOGNORMAL1):
            if name is Family.LOGNORMAL2:
                mu, sig = np.log(x) + h**2, h
            else:
                mu, sig = np.log(x), 2.0 * np.sqrt(np.log1p(h))
            val = -lu - np.log(sig) - 0.5 * LOG_2PI - (lu - mu) ** 2 / (2.0 * sig**2)
        elif name is Family.BIRNBAUM_SAUNDERS:
            r = np.sqrt(up / x)
            z2 = (up / x + x / up - 2.0) / h
            val = np.log(r + 1.0 / r) - np.log(2.0 * np.sqrt(h) * up) - 0.5 * z2 - 0.5 * LOG_2PI
        elif name is Family.INVERSE_GAMMA:
            a, b = 1.0 / (x * h) - 1.0, 1.0 / h
            val = a * np.log(b) - gammaln(a) - (a + 1.0) * lu - b / up
        elif name is Family.RECIPROCAL_INVERSE_GAUSSIAN:
            c = x - h
            val = -0.5 * (LOG_2PI + lu + np.log(h)) - (up - c) ** 2 / (2.0 * h * up)
        elif name is Family.INVERSE_GAUSSIAN:
            val = -0.5 * (LOG_2PI + 3.0 * lu + np.log(h)) - (up - x) ** 2 / (2.0 * h * x**2 * up)
        else:  # pragma: no cover
            raise AssertionError(name)
        return np.where(pos, val, -np.inf)


def log_density(family, x, h, u, strict: bool = True):
    """Vectorized log of ``K_{x,h}(u)``; arguments broadcast together.

    With ``strict`` an inadmissible ``(x, h)`` raises :class:`DomainError`;
    otherwise those entries evaluate to ``-inf``.
    """
    fam = KernelFamily.parse(family)
    x, h, u = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (x, h, u)))
    ok = _valid(fam, x, h)
    if not np.all(ok):
        if strict:
            bad = np.argwhere(~ok)[0] if x.ndim else ()
            raise DomainError(
                f"{fam}: invalid target/bandwidth x={x[tuple(bad)]}, h={h[tuple(bad)]}"
            )
        x = np.where(ok, x, 1.0)
        h = np.where(ok, h, 0.5)
        return np.where(ok, _log_density_unchecked(fam, x, h, u), -np.inf)
    out = _log_density_unchecked(fam, x, h, u)
    return out if out.ndim else float(out)


def density(family, x, h, u):
    """Kernel density or mass ``K_{x,h}(u)``; zero outside the kernel support."""
    return np.exp(log_density(family, x, h, u))


def moments(family, x: float, h: float) -> KernelMoments:
    """Closed-form mean shift ``A(x, h)`` and variance ``B(x, h)``."""
    fam = KernelFamily.parse(family)
    x, h = float(x), float(h)
    if not _valid(fam, np.float64(x), np.float64(h)):
        raise DomainError(f"{fam}: invalid target/bandwidth x={x}, h={h}")
    name = fam.name
    if name is Family.DIRDU:
        c = fam.c
        a = h * (c / 2 - x - x / (c - 1))
        b = h * (c * (2 * c - 1) / 6 + x**2 - x * c + x**2 / (c - 1)) - a**2
        return KernelMoments(a, max(b, 0.0))
    if name is Family.SYM_COUNT_TRIANGULAR:
        m = fam.m
        if x >= m:
            ell = np.arange(0, m + 1, dtype=float)
            p = (2 * m + 1) * (m + 1) ** h - 2 * np.sum(ell**h)
            b = (m * (2 * m + 1) * (m + 1) ** (h + 1) / 3 - 2 * np.sum(ell ** (h + 2))) / p
            return KernelMoments(0.0, float(b))
        # Truncated at zero: finite exact sums over the renormalized support.
        u = np.arange(0, x + m + 1, dtype=float)
        w = density(fam, x, h, u)
        mean = float(np.sum(u * w))
        return KernelMoments(mean - x, float(np.sum((u - mean) ** 2 * w)))
    if name is Family.BINOMIAL:
        return KernelMoments(h, (x + h) * (1 - h) / (x + 1))
    if name is Family.POISSON:
        return KernelMoments(h, x + h)
    if name is Family.GAMMA:
        return KernelMoments(h, (x + h) * h)
    if name is Family.LOGNORMAL2:
        return KernelMoments(x * np.expm1(1.5 * h**2), x**2 * np.exp(3 * h**2) * np.expm1(h**2))
    if name is Family.WEIBULL:
        ratio = np.exp(gammaln(1 + 2 * h) - 2 * gammaln(1 + h))
        return KernelMoments(0.0, x**2 * (ratio - 1.0))
    if name is Family.BIRNBAUM_SAUNDERS:
        return KernelMoments(x * h / 2, x**2 * h * (2 + 5 * h / 2) / 2)
    if name is Family.INVERSE_GAMMA:
        if not (1 - 2 * x * h > 0 and 1 - 3 * x * h > 0):
            raise DomainError(f"ig: moments need 3*x*h < 1 (x={x}, h={h})")
        return KernelMoments(
            2 * x**2 * h / (1 - 2 * x * h), x**3 * h / ((1 - 3 * x * h) * (1 - 2 * x * h) ** 2)
        )
    if name is Family.RECIPROCAL_INVERSE_GAUSSIAN:
        return KernelMoments(
            0.0,
            (x + h) * h,
            note="tabulated B=(x-h)h is not the variance of this density; (x+h)h is",
        )
    if name is Family.INVERSE_GAUSSIAN:
        return KernelMoments(0.0, x**3 * h)
    if name is Family.LOGNORMAL1:
        return KernelMoments(x * h * (h + 2), x**2 * (1 + h) ** 4 * ((1 + h) ** 4 - 1))
    raise AssertionError(name)  # pragma: no cover


def _count_support(fam: KernelFamily, x: float, h: float, tail: float) -> np.ndarray:
    name = fam.name
    if name is Family.DIRDU:
        return np.arange(fam.c, dtype=float)
    if name is Family.SYM_COUNT_TRIANGULAR:
        return np.arange(max(0.0, x - fam.m), x + fam.m + 1)
    if name is Family.BINOMIAL:
        return np.arange(0, x + 2, dtype=float)
    lam = x + h
    upper = int(np.ceil(lam + 10 * np.sqrt(lam) + 30))
    while np.exp(log_density(fam, x, h, upper)) > tail * 1e-3:
        upper *= 2
    return np.arange(0, upper + 1, dtype=float)


def _quad_total(f, fam, x, h, quad: QuadratureSpec):
    return integrate_halfline(f, lambda t: log_density(fam, x, h, t), max(x, h), quad)


def numeric_mass(family, x: float, h: float, quad: QuadratureSpec = QuadratureSpec()) -> float:
    """Total mass of the kernel by quadrature or exhaustive summation."""
    fam = KernelFamily.parse(family)
    if fam.is_count:
        u = _count_support(fam, x, h, quad.tail)
        return float(np.sum(np.exp(log_density(fam, x, h, u))))
    total, err = _quad_total(lambda t: float(density(fam, x, h, t)), fam, x, h, quad)
    if err > quad.tol * max(total, 1.0):
        raise NumericalError(f"{fam}: mass quadrature error {err:.3g}", achieved=err)
    return total


def numeric_moments(family, x: float, h: float, quad: QuadratureSpec = QuadratureSpec()) -> KernelMoments:
    """Mean shift and variance of the kernel computed without the closed forms."""
    fam = KernelFamily.parse(family)
    x, h = float(x), float(h)
    if not _valid(fam, np.float64(x), np.float64(h)):
        raise DomainError(f"{fam}: invalid target/bandwidth x={x}, h={h}")
    if fam.is_count:
        if fam.name is Family.DIRDU and h == 0:
            return KernelMoments(0.0, 0.0)
        u = _count_support(fam, x, h, quad.tail)
        w = np.exp(log_density(fam, x, h, u))
        mass = np.sum(w)
        mean = np.sum(u * w) / mass
        return KernelMoments(float(mean - x), float(np.sum((u - mean) ** 2 * w) / mass))

    def pdf(t):
        return float(density(fam, x, h, t))

    mass, e0 = _quad_total(pdf, fam, x, h, quad)
    first, e1 = _quad_total(lambda t: t * pdf(t), fam, x, h, quad)
    mean = first / mass
    second, e2 = _quad_total(lambda t: (t - mean) ** 2 * pdf(t), fam, x, h, quad)
    var = second / mass
    worst = max(e0 / mass, e1 / max(abs(first), 1e-300), e2 / max(second, 1e-300))
    if worst > quad.tol:
        raise NumericalError(f"{fam}: moment quadrature reached only {worst:.3g}", achieved=worst)
    return KernelMoments(mean - x, var)


def _families(families, d):
    fams = [KernelFamily.parse(f) for f in families]
    if len(fams) == 1 and d > 1:
        fams = fams * d
    if len(fams) != d:
        raise DomainError(f"expected {d} kernel families, got {len(fams)}")
    return fams


def log_product_density(x, H, families, u):
    """Log of the product kernel; the last axis indexes coordinates."""
    x = np.asarray(x, dtype=float)
    H = np.asarray(H, dtype=float)
    u = np.asarray(u, dtype=float)
    d = x.shape[-1] if x.ndim else 1
    if (H.ndim and H.shape[-1] != d) or (u.ndim and u.shape[-1] != d):
        raise DomainError("target, bandwidth and point dimensions differ")
    fams = _families(families, d)
    x, H, u = (np.atleast_1d(a) for a in (x, H, u))
    total = 0.0
    for j, fam in enumerate(fams):
        total = total + log_density(fam, x[..., j], H[..., j], u[..., j])
    return total


def product_density(x, H, families, u):
    """Product of univariate kernels, one per coordinate."""
    return np.exp(log_product_density(x, H, families, u))
