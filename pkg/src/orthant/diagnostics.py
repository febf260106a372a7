"""Weight-function diagnostics for choosing among parametric, semiparametric and nonparametric fits.

The log-weight ``W(x) = log f(x) - log p(x)`` of the semiparametric
estimate is evaluated at every observation.  The share of observations
with ``|W(X_i)|`` inside the band decides the model: under 5% calls for a
nonparametric fit, over 95% for the parametric start alone, anything in
between (5 and 95 included) for the semiparametric combination.
"""

from __future__ import annotations

import enum
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .bandwidth import (
    PriorSpec,
    adaptive_bayes_gamma_closed,
    adaptive_bayes_quadrature,
    cv_bandwidth,
    default_prior,
    global_bayes_1d,
    local_bayes,
)
from .data import Dataset
from .errors import DomainError, EvaluationUnderflow
from .estimators import (
    DensityEstimate,
    GlobalBandwidth,
    _log_kernel_terms,
    log_weight_values,
)
from .kernels import Family, KernelFamily
from .parametric import StartModel, fit_start, start_from_dict

DEFAULT_BAND = 1.96
SENSITIVITY_BANDS = (1.0, 1.64, 1.96, 2.58)
SELECTORS = ("adaptive-bayes", "adaptive-bayes-quadrature", "local-bayes", "cv", "global-bayes")


class Decision(str, enum.Enum):
    NONPARAMETRIC = "nonparametric"
    SEMIPARAMETRIC = "semiparametric"
    PARAMETRIC = "parametric"

    @property
    def exit_code(self) -> int:
        return {"nonparametric": 0, "semiparametric": 1, "parametric": 2}[self.value]


def decide(percent: float) -> Decision:
    """Nonparametric below 5%, parametric above 95%, semiparametric in ``[5, 95]``."""
    if percent < 5.0:
        return Decision.NONPARAMETRIC
    if percent > 95.0:
        return Decision.PARAMETRIC
    return Decision.SEMIPARAMETRIC


def percent_in_band(log_weights, band: float = DEFAULT_BAND, scale=None) -> float:
    """``100 * #{i : |W_i| <= band * scale_i} / n`` (``scale`` defaults to 1)."""
    w = np.asarray(log_weights, dtype=float)
    limit = band if scale is None else band * np.asarray(scale, dtype=float)
    return 100.0 * int(np.count_nonzero(np.abs(w) <= limit)) / w.size


def log_weight_at(est: DensityEstimate, x):
    """``log`` of the semiparametric estimate minus ``log p(x)``."""
    w = log_weight_values(est, x)
    if np.any(np.isneginf(w)):
        raise EvaluationUnderflow("estimate is zero at a target; its log-weight is undefined")
    return w if np.ndim(w) else float(w)


def log_weight_se(est: DensityEstimate, x) -> np.ndarray:
    """Delta-method standard error of the log-weight: ``sd(t_i) / (sqrt(n) mean(t_i))``.

    ``t_i`` are the summands of the weight estimate at each target.
    """
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    if est.d == 1 and pts.shape[-1] != 1:
        pts = pts.reshape(-1, 1)
    terms = _log_kernel_terms(est, pts, est.h, est.data.values) - est.log_start[None, :]
    top = np.max(terms, axis=1, keepdims=True)
    t = np.exp(terms - top)
    mean = t.mean(axis=1)
    sd = t.std(axis=1, ddof=1)
    return sd / (math.sqrt(est.n) * mean)


@dataclass(frozen=True)
class DiagnosticReport:
    log_weights: tuple[float, ...]
    band_halfwidth: float
    percent_in_band: float
    decision: Decision
    start: dict
    labels: tuple[str, ...] = ()
    kernel: str = "gamma"
    selector: str = "adaptive-bayes"
    standardized: bool = False
    standard_errors: tuple[float, ...] | None = None
    bandwidths: tuple[tuple[float, ...], ...] = field(default=(), repr=False)

    def __post_init__(self):
        object.__setattr__(self, "decision", Decision(self.decision))
        expected = percent_in_band(
            self.log_weights, self.band_halfwidth, self.standard_errors if self.standardized else None
        )
        if expected != self.percent_in_band:
            raise DomainError("percent_in_band is inconsistent with the log-weights")

    @property
    def n(self) -> int:
        return len(self.log_weights)

    @property
    def start_model(self) -> StartModel:
        return start_from_dict(self.start)

    def sensitivity(self, bands=SENSITIVITY_BANDS) -> dict[float, tuple[float, Decision]]:
        """Percent and decision for each alternative band half-width."""
        scale = self.standard_errors if self.standardized else None
        out = {}
        for b in bands:
            p = percent_in_band(self.log_weights, b, scale)
            out[float(b)] = (p, decide(p))
        return out

    def to_dict(self) -> dict:
        return {
            "labels": list(self.labels),
            "kernel": self.kernel,
            "selector": self.selector,
            "start": self.start,
            "band_halfwidth": self.band_halfwidth,
            "standardized": self.standardized,
            "percent_in_band": self.percent_in_band,
            "decision": self.decision.value,
            "log_weights": list(self.log_weights),
            "standard_errors": None if self.standard_errors is None else list(self.standard_errors),
            "bandwidths": [list(r) for r in self.bandwidths],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DiagnosticReport":
        se = d.get("standard_errors")
        return cls(
            log_weights=tuple(float(v) for v in d["log_weights"]),
            band_halfwidth=float(d["band_halfwidth"]),
            percent_in_band=float(d["percent_in_band"]),
            decision=Decision(d["decision"]),
            start=d["start"],
            labels=tuple(d.get("labels", ())),
            kernel=d.get("kernel", "gamma"),
            selector=d.get("selector", "adaptive-bayes"),
            standardized=bool(d.get("standardized", False)),
            standard_errors=None if se is None else tuple(float(v) for v in se),
            bandwidths=tuple(tuple(float(v) for v in r) for r in d.get("bandwidths", ())),
        )

    def to_json(self) -> str:
        from .io import dumps

        return dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "DiagnosticReport":
        return cls.from_dict(json.loads(text))

    def plot_csv(self) -> str:
        """Plot-ready rows ``i, W_i, lower, upper`` (band lines per point)."""
        buf = io.StringIO()
        buf.write("i,log_weight,lower,upper\n")
        for i, w in enumerate(self.log_weights):
            half = self.band_halfwidth * (self.standard_errors[i] if self.standardized else 1.0)
            buf.write(f"{i + 1},{w!r},{-half!r},{half!r}\n")
        return buf.getvalue()


def select_bandwidths(
    data: Dataset,
    kernel,
    selector: str,
    start: StartModel,
    prior: PriorSpec | None = None,
):
    """Bandwidth assignment for ``selector``; ``local-bayes`` returns per-target rows."""
    fams = [KernelFamily.parse(k) for k in ([kernel] if isinstance(kernel, (str, KernelFamily)) else kernel)]
    if selector == "adaptive-bayes":
        if all(f.name is Family.GAMMA for f in fams):
            return adaptive_bayes_gamma_closed(data, start, prior).bandwidths
        selector = "adaptive-bayes-quadrature"
    if selector == "adaptive-bayes-quadrature":
        return adaptive_bayes_quadrature(data, start, prior, kernel=fams)
    if selector == "cv":
        return cv_bandwidth(data, fams).bandwidth
    if selector == "global-bayes":
        if data.d != 1:
            raise DomainError("global-bayes selector is univariate")
        return GlobalBandwidth((global_bayes_1d(data, fams[0], prior),))
    if selector == "local-bayes":
        prior = prior or default_prior(data.n, data.d)
        return np.array([local_bayes(data, fams, prior, x=row, start=start) for row in data.values])
    raise DomainError(f"unknown selector {selector!r}; choose from {', '.join(SELECTORS)}")


def diagnose(
    data: Dataset,
    start="exp",
    kernel="gamma",
    selector: str = "adaptive-bayes",
    prior: PriorSpec | None = None,
    band: float = DEFAULT_BAND,
    standardize: bool = False,
    mu0: float | None = None,
) -> DiagnosticReport:
    """Fit the start, select bandwidths and classify the model from the log-weights at each observation.

    ``start`` is a fitted :class:`StartModel` or one of ``exp``, ``gamma``,
    ``mo`` (with ``mu0``) and ``none``.
    """
    if not isinstance(start, StartModel):
        start = fit_start(data, start, mu0=mu0)
    bw = select_bandwidths(data, kernel, selector, start, prior)
    if isinstance(bw, np.ndarray):  # one global bandwidth per target
        logw, se = [], []
        for row, h in zip(data.values, bw):
            est = DensityEstimate(data, kernel, GlobalBandwidth(tuple(h)), start)
            logw.append(float(log_weight_at(est, row[None, :])[0]))
            se.append(float(log_weight_se(est, row[None, :])[0]))
        logw, se = np.array(logw), np.array(se)
        rows = bw
    else:
        est = DensityEstimate(data, kernel, bw, start)
        logw = np.asarray(log_weight_at(est, data.values))
        se = log_weight_se(est, data.values)
        rows = est.h
    pct = percent_in_band(logw, band, se if standardize else None)
    kernel_name = kernel if isinstance(kernel, str) else ",".join(str(KernelFamily.parse(k)) for k in kernel)
    return DiagnosticReport(
        log_weights=tuple(float(v) for v in logw),
        band_halfwidth=float(band),
        percent_in_band=pct,
        decision=decide(pct),
        start=start.to_dict(),
        labels=tuple(data.labels),
        kernel=str(kernel_name),
        selector=selector,
        standardized=standardize,
        standard_errors=tuple(float(v) for v in se),
        bandwidths=tuple(tuple(float(v) for v in r) for r in np.asarray(rows)),
    )
