"""Parametric start models and the Marshall-Olkin multivariate exponential."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import digamma, gammaln, polygamma

from .data import Dataset, Divisor, SupportKind, empirical_moments
from .errors import DegenerateSample, DomainError, InfeasibleStructure, NumericalError
from .indexes import gvi, mvi


def _positive_vector(values, name, allow_zero=False) -> tuple[float, ...]:
    v = np.atleast_1d(np.asarray(values, dtype=float))
    if v.ndim != 1 or v.size == 0:
        raise DomainError(f"{name} must be a non-empty vector")
    bad = (v < 0) if allow_zero else (v <= 0)
    if np.any(bad | ~np.isfinite(v)):
        raise DomainError(f"{name} must be {'nonnegative' if allow_zero else 'positive'} and finite")
    return tuple(float(t) for t in v)


def _as_points(x, d: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if d == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x = x[..., None]
    if x.shape[-1] != d:
        raise DomainError(f"point dimension {x.shape[-1]} does not match model dimension {d}")
    return x


class StartModel:
    """Base class of the parametric start densities ``p_d(x; theta)``.

    ``log_pdf`` accepts a single point or a stack of points whose last axis
    has length ``dim``.  Separable models also expose their univariate
    factors through ``marginal_log_pdf``.
    """

    variant: str = ""
    separable: bool = True

    @property
    def dim(self) -> int | None:
        raise NotImplementedError

    def log_pdf(self, x):
        raise NotImplementedError

    def pdf(self, x):
        return np.exp(self.log_pdf(x))

    def marginal_log_pdf(self, j: int, t):
        raise NotImplementedError(f"{self.variant} start is not separable")

    def parameters(self) -> dict:
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {"variant": self.variant, "parameters": self.parameters()}


@dataclass(frozen=True)
class ExponentialProduct(StartModel):
    """Independent exponential margins with rates ``mu``."""

    mu: tuple[float, ...]
    variant = "exponential-product"

    def __post_init__(self):
        object.__setattr__(self, "mu", _positive_vector(self.mu, "mu"))

    @property
    def dim(self):
        return len(self.mu)

    def log_pdf(self, x):
        x = _as_points(x, self.dim)
        mu = np.asarray(self.mu)
        out = np.sum(np.log(mu) - mu * x, axis=-1)
        out = np.where(np.all(x >= 0, axis=-1), out, -np.inf)
        return out if out.ndim else float(out)

    def marginal_log_pdf(self, j, t):
        t = np.asarray(t, dtype=float)
        return np.where(t >= 0, math.log(self.mu[j]) - self.mu[j] * t, -np.inf)

    def parameters(self):
        return {"mu": list(self.mu)}


@dataclass(frozen=True)
class GammaUniv(StartModel):
    """Univariate gamma with shape ``a`` and scale ``b``."""

    shape: float
    scale: float
    variant = "gamma"

    def __post_init__(self):
        if not (self.shape > 0 and self.scale > 0 and np.isfinite(self.shape) and np.isfinite(self.scale)):
            raise DomainError("gamma shape and scale must be positive")

    @property
    def dim(self):
        return 1

    def marginal_log_pdf(self, j, t):
        if j != 0:
            raise DomainError("univariate model has a single coordinate")
        a, b = self.shape, self.scale
        t = np.asarray(t, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            tt = np.where(t >= 0, t, 1.0)
            if a == 1.0:
                core = -tt / b
            else:
                core = (a - 1.0) * np.log(tt) - tt / b
            out = core - gammaln(a) - a * math.log(b)
        return np.where(t >= 0, out, -np.inf)

    def log_pdf(self, x):
        x = _as_points(x, 1)
        out = self.marginal_log_pdf(0, x[..., 0])
        return out if out.ndim else float(out)

    def parameters(self):
        return {"shape": self.shape, "scale": self.scale}


@dataclass(frozen=True)
class MarshallOlkin(StartModel):
    """Marshall-Olkin exponential with individual rates ``mu`` and common shock ``mu0``.

    The density is taken with respect to the mixed dominating measure that
    charges the diagonal sets where the largest coordinates tie.  Ties are
    detected by exact equality.
    """

    mu: tuple[float, ...]
    mu0: float
    variant = "marshall-olkin"
    separable = False

    def __post_init__(self):
        object.__setattr__(self, "mu", _positive_vector(self.mu, "mu"))
        if not (self.mu0 >= 0 and np.isfinite(self.mu0)):
            raise DomainError("mu0 must be nonnegative")
        object.__setattr__(self, "mu0", float(self.mu0))

    @property
    def dim(self):
        return len(self.mu)

    def log_survival(self, x):
        x = _as_points(x, self.dim)
        out = -self.mu0 * np.max(x, axis=-1) - x @ np.asarray(self.mu)
        return out if out.ndim else float(out)

    def survival(self, x):
        return np.exp(self.log_survival(x))

    def log_pdf(self, x):
        x = _as_points(x, self.dim)
        flat = x.reshape(-1, self.dim)
        mu = np.asarray(self.mu)
        log_mu = np.log(mu)
        log_mu0 = math.log(self.mu0) if self.mu0 > 0 else -np.inf
        top = flat.max(axis=1)
        tied = flat == top[:, None]
        k = tied.sum(axis=1)
        factor = np.empty(flat.shape[0])
        single = k == 1
        if np.any(single):
            lead = np.argmax(flat[single], axis=1)
            factor[single] = np.log(self.mu0 + mu[lead]) + (log_mu.sum() - log_mu[lead])
        if np.any(~single):
            factor[~single] = log_mu0 + np.sum(np.where(tied[~single], 0.0, log_mu), axis=1)
        out = factor - self.mu0 * top - flat @ mu
        out = np.where(np.all(flat >= 0, axis=1), out, -np.inf).reshape(x.shape[:-1])
        return out if out.ndim else float(out)

    def parameters(self):
        return {"mu": list(self.mu), "mu0": self.mu0}


@dataclass(frozen=True)
class ConstantOne(StartModel):
    """Sentinel start equal to 1 everywhere; turns the semiparametric estimator nonparametric."""

    d: int | None = None
    variant = "constant-one"

    @property
    def dim(self):
        return self.d

    def log_pdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.d is not None:
            x = _as_points(x, self.d)
        out = np.zeros(x.shape[:-1] if x.ndim else ())
        return out if out.ndim else 0.0

    def marginal_log_pdf(self, j, t):
        return np.zeros(np.shape(t))

    def parameters(self):
        return {"d": self.d}


def start_from_dict(desc: dict) -> StartModel:
    """Inverse of :meth:`StartModel.to_dict`."""
    variant, p = desc["variant"], desc.get("parameters", {})
    if variant == ExponentialProduct.variant:
        return ExponentialProduct(tuple(p["mu"]))
    if variant == GammaUniv.variant:
        return GammaUniv(p["shape"], p["scale"])
    if variant == MarshallOlkin.variant:
        return MarshallOlkin(tuple(p["mu"]), p["mu0"])
    if variant == ConstantOne.variant:
        return ConstantOne(p.get("d"))
    raise DomainError(f"unknown start model variant {variant!r}")


# ---------------------------------------------------------------- fitting


def fit_exponential_product(data: Dataset) -> ExponentialProduct:
    """Maximum likelihood rates ``1 / mean`` of independent exponential margins."""
    means = np.array([math.fsum(col) / data.n for col in data.values.T])
    if np.any(means <= 0):
        raise DomainError("every column mean must be positive for an exponential fit")
    return ExponentialProduct(tuple(1.0 / means))


def _sample_1d(data) -> np.ndarray:
    if isinstance(data, Dataset):
        if data.d != 1:
            raise DomainError("gamma fit needs a univariate sample")
        return data.values[:, 0]
    x = np.asarray(data, dtype=float)
    if x.ndim == 2 and x.shape[1] == 1:
        x = x[:, 0]
    if x.ndim != 1:
        raise DomainError("gamma fit needs a univariate sample")
    return x


def fit_gamma_mle(
    data, bias_correction: bool = False, tol: float = 1e-10, max_iter: int = 100
) -> GammaUniv:
    """Gamma maximum likelihood by safeguarded Newton iteration on the shape.

    Solves ``log a - digamma(a) = log(mean) - mean(log x)`` starting from
    the closed-form approximation ``(3 - s + sqrt((s - 3)^2 + 24 s)) / (12 s)``.
    With ``bias_correction`` the shape is replaced by the small-sample
    corrected ``(n - 3) a / n + 2 / (3 n)``; the scale always keeps
    ``shape * scale`` equal to the sample mean.
    """
    x = _sample_1d(data)
    if x.size < 2:
        raise DomainError("gamma fit needs at least two observations")
    if np.any(x <= 0) or not np.all(np.isfinite(x)):
        raise DomainError("gamma fit needs strictly positive values")
    if np.all(x == x[0]):
        raise DegenerateSample("gamma fit on a constant sample")
    mean = math.fsum(x) / x.size
    s = math.log(mean) - math.fsum(np.log(x)) / x.size
    if s <= 0:
        raise DegenerateSample("sample has no spread on the log scale")
    a = (3.0 - s + math.sqrt((s - 3.0) ** 2 + 24.0 * s)) / (12.0 * s)
    for _ in range(max_iter):
        f = math.log(a) - float(digamma(a)) - s
        fp = 1.0 / a - float(polygamma(1, a))
        step = f / fp
        new = a - step
        if new <= 0:
            new = a / 2.0
        if abs(new - a) / a < tol:
            a = new
            break
        a = new
    else:
        raise NumericalError("gamma shape iteration did not converge", achieved=abs(step) / a)
    if bias_correction:
        n = x.size
        a = (n - 3) * a / n + 2.0 / (3 * n)
    return GammaUniv(a, mean / a)


def fit_marshall_olkin(data: Dataset, mu0: float) -> MarshallOlkin:
    """Marshall-Olkin start with a given common shock rate, matching the margin means."""
    means = np.array([math.fsum(col) / data.n for col in data.values.T])
    if np.any(means <= 0):
        raise DomainError("every column mean must be positive")
    mu = 1.0 / means - mu0
    if np.any(mu <= 0):
        raise DomainError(f"mu0={mu0} exceeds the largest rate compatible with the column means")
    return MarshallOlkin(tuple(mu), mu0)


def fit_start(data: Dataset, kind: str, mu0: float | None = None) -> StartModel:
    """Fit a start model by name: ``exp``, ``gamma``, ``mo`` or ``none``."""
    if kind == "exp":
        return fit_exponential_product(data)
    if kind == "gamma":
        return fit_gamma_mle(data)
    if kind == "mo":
        if mu0 is None:
            raise DomainError("a Marshall-Olkin start needs mu0")
        return fit_marshall_olkin(data, mu0)
    if kind == "none":
        return ConstantOne(data.d)
    raise DomainError(f"unknown start model {kind!r}")


# ----------------------------------------------------------- Marshall-Olkin


def mo_sample(mu, mu0: float, n: int, seed: int) -> Dataset:
    """Draw ``n`` seeded Marshall-Olkin vectors ``X_j = min(Y_j, Z)``.

    ``Y_j ~ Exp(mu_j)`` and the common shock ``Z ~ Exp(mu0)`` (infinite when
    ``mu0 = 0``) are obtained by inverse-CDF sampling from a PCG64 stream.
    """
    model = MarshallOlkin(mu, mu0)
    if int(n) != n or n < 1:
        raise DomainError("n must be a positive integer")
    rng = np.random.Generator(np.random.PCG64(seed))
    e = -np.log1p(-rng.random((int(n), model.dim + 1)))
    y = e[:, 1:] / np.asarray(model.mu)
    if model.mu0 > 0:
        y = np.minimum(y, (e[:, :1] / model.mu0))
    return Dataset(y, support_kind=SupportKind.CONTINUOUS)


def mo_moments(mu, mu0: float) -> tuple[np.ndarray, np.ndarray]:
    """Mean vector and covariance matrix of the Marshall-Olkin exponential."""
    model = MarshallOlkin(mu, mu0)
    mu = np.asarray(model.mu)
    m = 1.0 / (mu + model.mu0)
    cov = model.mu0 * np.outer(m, m) / (mu[:, None] + mu[None, :] + model.mu0)
    np.fill_diagonal(cov, m**2)
    return m, cov


def mo_gvi(mu, mu0: float) -> float:
    """Variation index of the Marshall-Olkin law relative to the uncorrelated exponential.

    Equal to ``gvi / mvi`` of its moments; exactly 1 when ``mu0 = 0``.
    """
    model = MarshallOlkin(mu, mu0)
    mu = np.asarray(model.mu)
    m = 1.0 / (mu + model.mu0)
    cross = 0.0
    for j, k in itertools.permutations(range(mu.size), 2):
        cross += m[j] ** 2 * m[k] ** 2 / (mu[j] + mu[k] + model.mu0)
    return 1.0 + model.mu0 * cross / np.sum(m**4)


def mo_mvi(mu, mu0: float) -> float:
    """Marginal variation index ``sum m^4 / (sum m^2)^2`` of the Marshall-Olkin law."""
    model = MarshallOlkin(mu, mu0)
    m = 1.0 / (np.asarray(model.mu) + model.mu0)
    return float(np.sum(m**4) / np.sum(m**2) ** 2)


def empirical_relative_gvi(data: Dataset, divisor=Divisor.N_MINUS_1) -> float:
    """Sample analogue of :func:`mo_gvi`: ``gvi(m, S) / gvi(m, diag(m^2))``."""
    mom = empirical_moments(data, divisor)
    return gvi(mom.mean, mom.cov) / mvi(mom.mean, np.diag(mom.mean**2))


# ------------------------------------------------------ correlation bounds


@dataclass(frozen=True)
class VariationMatrix:
    lam: np.ndarray

    def __post_init__(self):
        lam = np.array(self.lam, dtype=float)
        if lam.ndim != 2 or lam.shape[0] != lam.shape[1]:
            raise DomainError("variation matrix must be square")
        if not np.array_equal(lam, lam.T):
            raise DomainError("variation matrix must be symmetric")
        if np.any(lam < 0) or np.any(np.diag(lam) <= 0):
            raise DomainError("variation matrix needs nonnegative entries and a positive diagonal")
        lam.setflags(write=False)
        object.__setattr__(self, "lam", lam)

    @property
    def d(self) -> int:
        return self.lam.shape[0]


@dataclass(frozen=True)
class CorrelationBounds:
    rho: np.ndarray
    upper: np.ndarray
    violations: tuple[tuple[int, int], ...]
    infeasible: tuple[tuple[int, int], ...]

    @property
    def valid(self) -> bool:
        return not self.violations and not self.infeasible


def correlation_bounds(lam, strict: bool = True) -> CorrelationBounds:
    """Correlations implied by a variation matrix and their admissible upper bounds.

    ``upper[i, j] = min(R(i, j), R(j, i))`` with
    ``R(i, j) = sqrt(l_ii / l_jj) * (1 - sum_{k != i, j} l_ik / l_ii)``.
    A pair whose ``R`` is not positive raises :class:`InfeasibleStructure`
    unless ``strict`` is false, in which case it is only listed.
    """
    vm = lam if isinstance(lam, VariationMatrix) else VariationMatrix(lam)
    L, d = vm.lam, vm.d
    diag = np.diag(L)
    rho = L / np.sqrt(np.outer(diag, diag))
    np.fill_diagonal(rho, 1.0)

    def r(i, j):
        rest = sum(L[i, k] for k in range(d) if k not in (i, j))
        return math.sqrt(diag[i] / diag[j]) * (1.0 - rest / diag[i])

    upper = np.full((d, d), np.nan)
    violations, infeasible = [], []
    for i, j in itertools.combinations(range(d), 2):
        rij, rji = r(i, j), r(j, i)
        upper[i, j] = upper[j, i] = min(rij, rji)
        if rij <= 0 or rji <= 0:
            infeasible.append((i, j))
        elif not (0.0 <= rho[i, j] < upper[i, j]):
            violations.append((i, j))
    if strict and infeasible:
        raise InfeasibleStructure(f"no admissible nonnegative correlation for pairs {infeasible}")
    return CorrelationBounds(rho, upper, tuple(violations), tuple(infeasible))
