"""``orthant`` command-line interface.

Exit status: 0 on success (``diagnose`` returns 0/1/2 for a
nonparametric/semiparametric/parametric decision), 64 on usage errors,
65 on data errors and 70 on numerical failures.
"""

from __future__ import annotations

import argparse
import itertools
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bandwidth import PriorSpec, default_prior
from .data import DEFAULT_DIVISOR, Dataset, Divisor, empirical_moments, load_csv, waterpumps
from .diagnostics import SELECTORS, SENSITIVITY_BANDS, diagnose, select_bandwidths
from .errors import EvaluationUnderflow, NumericalError, OrthantError
from .estimators import DensityEstimate, GlobalBandwidth, normalizing_constant, semiparametric_at
from .indexes import EMPIRICAL_EPS, index_table, mvi
from .io import atomic_write, dumps, format_float
from .kernels import KernelFamily, moments, numeric_moments, density
from .parametric import fit_exponential_product, fit_gamma_mle, fit_start, mo_sample

EX_USAGE, EX_DATAERR, EX_SOFTWARE = 64, 65, 70
OUTPUT_ENV = "ORTHANT_OUTPUT_DIR"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EX_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _add_data_args(p, columns=True):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--data", type=Path, help="CSV file of nonnegative observations")
    src.add_argument("--fixture", choices=["waterpumps"], help="embedded dataset")
    p.add_argument("--no-header", action="store_true", help="the CSV file has no header row")
    p.add_argument("--count", action="store_true", help="treat the data as counts")
    if columns:
        p.add_argument("--columns", help="comma-separated column labels or 0-based indices")


def _add_common(p):
    p.add_argument(
        "--output-dir",
        type=Path,
        default=None,
        help=f"directory for output files (default: ${OUTPUT_ENV} or the current directory)",
    )
    p.add_argument("--threads", type=int, default=1, help="worker threads for grid evaluation (default 1)")
    p.add_argument(
        "--format", default="json,csv", help="comma-separated output formats among json,csv (default json,csv)"
    )


def _add_prior(p):
    p.add_argument("--prior-alpha", type=float, help="inverse-gamma prior shape (default n^(2/5))")
    p.add_argument("--prior-beta", type=_floats, help="inverse-gamma prior scale(s), one or one per column (default 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="orthant", description="Variability indexes and associated-kernel smoothing of orthant data.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("indexes", help="dispersion and variation indexes of every margin, pair and the joint")
    _add_data_args(p)
    p.add_argument("--divisor", choices=[d.value for d in Divisor], default=DEFAULT_DIVISOR.value, help="covariance divisor")
    p.add_argument("--eps", type=float, default=EMPIRICAL_EPS, help="equi-variability tolerance around 1")
    _add_common(p)

    p = sub.add_parser("fit", help="parametric start estimates, correlations and marginal variation indexes")
    _add_data_args(p)
    p.add_argument(
        "--gamma-estimator",
        choices=["mle", "bias-corrected"],
        default="bias-corrected",
        help="univariate gamma shape estimator (default bias-corrected)",
    )
    p.add_argument("--divisor", choices=[d.value for d in Divisor], default=DEFAULT_DIVISOR.value, help="covariance divisor")
    _add_common(p)

    p = sub.add_parser("smooth", help="density estimate on a grid")
    _add_data_args(p)
    p.add_argument("--kernel", default="gamma", help="kernel family, e.g. gamma, ln2, poisson, dirdu:3, sct:2")
    p.add_argument("--selector", choices=SELECTORS, default="adaptive-bayes", help="bandwidth selector")
    p.add_argument("--start", choices=["none", "exp", "gamma", "mo"], default="none", help="parametric start model")
    p.add_argument("--mu0", type=float, help="common-shock rate of a Marshall-Olkin start")
    p.add_argument("--grid-points", type=int, default=101, help="grid points per axis")
    p.add_argument("--renormalize", action="store_true", help="divide the estimate by its normalizing constant")
    _add_prior(p)
    _add_common(p)

    p = sub.add_parser("diagnose", help="log-weight diagnostic and model decision")
    _add_data_args(p)
    p.add_argument("--start", choices=["exp", "gamma", "mo"], default="exp", help="parametric start model")
    p.add_argument("--mu0", type=float, help="common-shock rate of a Marshall-Olkin start")
    p.add_argument("--kernel", default="gamma", help="kernel family")
    p.add_argument("--selector", choices=SELECTORS, default="adaptive-bayes", help="bandwidth selector")
    p.add_argument("--band", type=float, default=1.96, help="half-width of the log-weight band")
    p.add_argument("--standardize", action="store_true", help="scale the band by a delta-method standard error")
    _add_prior(p)
    _add_common(p)

    p = sub.add_parser("mo-sim", help="seeded Marshall-Olkin exponential sample")
    p.add_argument("--mu", type=_floats, required=True, help="comma-separated individual rates")
    p.add_argument("--mu0", type=float, required=True, help="common-shock rate (>= 0)")
    p.add_argument("--n", type=int, required=True, help="sample size")
    p.add_argument("--seed", type=int, required=True, help="random seed")
    _add_common(p)

    p = sub.add_parser("kernels-probe", help="kernel density grid and closed-form versus numeric moments")
    p.add_argument("--family", required=True, help="kernel family, e.g. gamma or dirdu:3")
    p.add_argument("--x", type=float, required=True, help="target")
    p.add_argument("--h", type=float, required=True, help="bandwidth")
    p.add_argument("--grid-points", type=int, default=201, help="grid points for continuous kernels")
    _add_common(p)

    p = sub.add_parser("export-fixture", help="write the embedded waterpumps data as waterpumps.csv")
    _add_common(p)
    return parser


def subcommand_parsers() -> dict[str, argparse.ArgumentParser]:
    """Parser of every subcommand, keyed by name."""
    parser = build_parser()
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    return dict(sub.choices)


# ------------------------------------------------------------------ helpers


def _output_dir(args) -> Path:
    if args.output_dir is not None:
        return args.output_dir
    return Path(os.environ.get(OUTPUT_ENV, "."))


def _formats(args) -> set[str]:
    fm = {f.strip() for f in args.format.split(",") if f.strip()}
    if not fm <= {"json", "csv"}:
        raise UsageError(f"unknown output format(s): {', '.join(sorted(fm - {'json', 'csv'}))}")
    return fm


def _load(args) -> Dataset:
    kind = "count" if args.count else "continuous"
    if args.fixture:
        data = waterpumps()
        if args.count:
            data = Dataset(data.values, data.labels, kind)
    else:
        if args.data is not None and not args.data.exists():
            raise FileNotFoundError(str(args.data))
        data = load_csv(args.data, has_header=not args.no_header, support_kind=kind)
    cols = getattr(args, "columns", None)
    if cols:
        sel = [c.strip() for c in cols.split(",") if c.strip()]
        try:
            sel = [c if c in data.labels else int(c) for c in sel]
        except ValueError:
            raise UsageError(f"unknown column in {cols!r}") from None
        if any(isinstance(c, int) and not 0 <= c < data.d for c in sel):
            raise UsageError(f"column index out of range in {cols!r}")
        data = data.select(sel)
    return data


def _prior(args, data) -> PriorSpec:
    if args.prior_alpha is None and args.prior_beta is None:
        return default_prior(data.n, data.d)
    alpha = args.prior_alpha if args.prior_alpha is not None else float(data.n) ** 0.4
    beta = tuple(args.prior_beta) if args.prior_beta else (1.0,) * data.d
    return PriorSpec(alpha, beta)


def _fmt4(v: float) -> str:
    return f"{v:.4f}"


def _csv(header, rows) -> str:
    lines = [",".join(header)]
    for r in rows:
        lines.append(",".join(v if isinstance(v, str) else format_float(v) for v in r))
    return "\n".join(lines) + "\n"


# ----------------------------------------------------------------- commands


def cmd_indexes(args, out: Path, fm) -> int:
    data = _load(args)
    rep = index_table(data, args.divisor, args.eps)
    if "json" in fm:
        atomic_write(out / "indexes.json", dumps(rep.to_dict()))
    if "csv" in fm:
        atomic_write(out / "indexes_gvi.csv", rep.table_csv("gvi"))
        atomic_write(out / "indexes_gdi.csv", rep.table_csv("gdi"))
    print("Variation indexes (margins on the diagonal, pairs off it, joint in the corner)")
    print(rep.table_csv("gvi", decimals=4), end="")
    print("Dispersion indexes")
    print(rep.table_csv("gdi", decimals=4), end="")
    return 0


def cmd_fit(args, out: Path, fm) -> int:
    data = _load(args)
    expo = fit_exponential_product(data)
    gammas = []
    for j in range(data.d):
        col = data.values[:, j]
        if np.all(col > 0) and not np.all(col == col[0]):
            g = fit_gamma_mle(col, bias_correction=args.gamma_estimator == "bias-corrected")
            gammas.append({"shape": g.shape, "scale": g.scale})
        else:
            gammas.append(None)
    mom = empirical_moments(data, args.divisor)
    pairs = list(itertools.combinations(range(data.d), 2))
    corr = {f"{data.labels[j]},{data.labels[k]}": float(mom.corr[j, k]) for j, k in pairs}
    subsets = pairs + ([tuple(range(data.d))] if data.d > 2 else [])
    mvis = {
        ",".join(data.labels[j] for j in s): mvi(mom.mean[list(s)], mom.cov[np.ix_(s, s)]) for s in subsets
    }
    result = {
        "labels": list(data.labels),
        "exponential_rates": list(expo.mu),
        "gamma": dict(zip(data.labels, gammas)),
        "gamma_estimator": args.gamma_estimator,
        "correlations": corr,
        "correlation_determinant": float(np.linalg.det(mom.corr)),
        "mvi": mvis,
    }
    if "json" in fm:
        atomic_write(out / "fit.json", dumps(result))
    if "csv" in fm:
        rows = []
        for j, lab in enumerate(data.labels):
            g = gammas[j]
            rows.append([lab, expo.mu[j], g["shape"] if g else "", g["scale"] if g else ""])
        atomic_write(out / "fit.csv", _csv(["column", "mu", "gamma_shape", "gamma_scale"], rows))
    print("column   mu        gamma_a     gamma_b")
    for j, lab in enumerate(data.labels):
        g = gammas[j]
        ga = _fmt4(g["shape"]) if g else "-"
        gb = _fmt4(g["scale"]) if g else "-"
        print(f"{lab:<8} {_fmt4(expo.mu[j]):<9} {ga:<11} {gb}")
    for k, v in corr.items():
        print(f"rho({k}) = {_fmt4(v)}")
    if data.d > 1:
        print(f"det(rho) = {_fmt4(result['correlation_determinant'])}")
    for k, v in mvis.items():
        print(f"MVI({k}) = {_fmt4(v)}")
    return 0


def _grid(data: Dataset, fams, points: int) -> np.ndarray:
    axes = []
    for j, fam in enumerate(fams):
        top = data.values[:, j].max()
        if fam.is_count:
            upper = fam.c - 1 if fam.c is not None else int(top) + 5
            axes.append(np.arange(0, upper + 1, dtype=float))
        else:
            axes.append(np.linspace(0.0, 1.5 * top if top > 0 else 1.0, points))
    return np.array(list(itertools.product(*axes)))


def cmd_smooth(args, out: Path, fm) -> int:
    data = _load(args)
    fams = [KernelFamily.parse(args.kernel)] * data.d
    start = fit_start(data, args.start, mu0=args.mu0)
    prior = _prior(args, data)
    grid = _grid(data, fams, args.grid_points)
    bw = select_bandwidths(data, fams, args.selector, start, prior)
    if isinstance(bw, np.ndarray):
        # Local Bayes: bandwidth chosen at every grid point.
        from .bandwidth import local_bayes

        values, c_n = [], None
        for x in grid:
            h = local_bayes(data, fams, prior, x=x, start=start)
            est = DensityEstimate(data, fams, GlobalBandwidth(tuple(h)), start)
            values.append(float(semiparametric_at(est, x[None, :])[0]))
        values = np.array(values)
        bw_rows = []
    else:
        est = DensityEstimate(data, fams, bw, start)
        c_n = normalizing_constant(est)
        if args.renormalize:
            est = est.normalized()
        values = np.asarray(semiparametric_at(est, grid, threads=args.threads))
        bw_rows = est.h
    header = {
        "kernel": str(fams[0]),
        "selector": args.selector,
        "start": start.to_dict(),
        "prior": {"alpha": prior.alpha, "beta": list(prior.beta)},
        "normalizing_constant": c_n,
        "renormalized": bool(args.renormalize and c_n is not None),
        "labels": list(data.labels),
    }
    if "json" in fm:
        atomic_write(out / "smooth.json", dumps(header))
    if "csv" in fm:
        atomic_write(out / "smooth.csv", _csv(list(data.labels) + ["density"], np.column_stack([grid, values])))
        if len(bw_rows):
            atomic_write(out / "bandwidths.csv", _csv([f"h_{lab}" for lab in data.labels], bw_rows))
    print(f"{len(grid)} grid points written; normalizing constant "
          f"{'n/a' if c_n is None else _fmt4(c_n)}")
    return 0


def cmd_diagnose(args, out: Path, fm) -> int:
    data = _load(args)
    prior = _prior(args, data)
    rep = diagnose(
        data,
        start=args.start,
        kernel=args.kernel,
        selector=args.selector,
        prior=prior,
        band=args.band,
        standardize=args.standardize,
        mu0=args.mu0,
    )
    if "json" in fm:
        atomic_write(out / "diagnose.json", rep.to_json())
    if "csv" in fm:
        atomic_write(out / "diagnose_plot.csv", rep.plot_csv())
    print(f"columns: {','.join(data.labels)}  start: {rep.start['variant']}")
    print(f"percent in band +/-{rep.band_halfwidth:g}: {_fmt4(rep.percent_in_band)}  decision: {rep.decision.value}")
    for band, (pct, dec) in rep.sensitivity(SENSITIVITY_BANDS).items():
        print(f"  band {band:<5g} {_fmt4(pct):>9}  {dec.value}")
    return rep.decision.exit_code


def cmd_mo_sim(args, out: Path, fm) -> int:
    data = mo_sample(args.mu, args.mu0, args.n, args.seed)
    if "csv" in fm:
        atomic_write(out / "mo_sample.csv", data.to_csv())
    if "json" in fm:
        atomic_write(
            out / "mo_sample.json",
            dumps({"mu": args.mu, "mu0": args.mu0, "n": args.n, "seed": args.seed, "values": data.values}),
        )
    print(f"{data.n} draws of dimension {data.d} written")
    return 0


def cmd_kernels_probe(args, out: Path, fm) -> int:
    fam = KernelFamily.parse(args.family)
    closed = moments(fam, args.x, args.h)
    numeric = numeric_moments(fam, args.x, args.h)
    if fam.is_count:
        upper = fam.c - 1 if fam.c is not None else int(args.x + 10 * np.sqrt(args.x + args.h + 1) + 10 + (fam.m or 0))
        u = np.arange(0, upper + 1, dtype=float)
    else:
        span = args.x + args.h + 8.0 * np.sqrt(max(closed.b, 1e-12))
        u = np.linspace(0.0, span, args.grid_points)
    dens = density(fam, args.x, args.h, u)
    summary = {
        "family": str(fam),
        "x": args.x,
        "h": args.h,
        "closed": {"a": closed.a, "b": closed.b},
        "numeric": {"a": numeric.a, "b": numeric.b},
        "note": closed.note,
    }
    if "csv" in fm:
        atomic_write(out / "kernel_density.csv", _csv(["u", "density"], np.column_stack([u, dens])))
        atomic_write(
            out / "kernel_moments.csv",
            _csv(["source", "a", "b"], [["closed", closed.a, closed.b], ["numeric", numeric.a, numeric.b]]),
        )
    if "json" in fm:
        atomic_write(out / "kernel_probe.json", dumps(summary))
    print(f"{fam} x={args.x:g} h={args.h:g}")
    print(f"  closed : A={closed.a:.10g} B={closed.b:.10g}")
    print(f"  numeric: A={numeric.a:.10g} B={numeric.b:.10g}")
    if closed.note:
        print(f"  note: {closed.note}")
    return 0


def cmd_export_fixture(args, out: Path, fm) -> int:
    path = atomic_write(out / "waterpumps.csv", waterpumps().to_csv())
    print(f"wrote {path}")
    return 0


COMMANDS = {
    "indexes": cmd_indexes,
    "fit": cmd_fit,
    "smooth": cmd_smooth,
    "diagnose": cmd_diagnose,
    "mo-sim": cmd_mo_sim,
    "kernels-probe": cmd_kernels_probe,
    "export-fixture": cmd_export_fixture,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.threads < 1:
            raise UsageError("--threads must be at least 1")
        fm = _formats(args)
        out = _output_dir(args)
        return COMMANDS[args.command](args, out, fm)
    except UsageError as exc:
        print(f"orthant: error: {exc}", file=sys.stderr)
        return EX_USAGE
    except (NumericalError, EvaluationUnderflow) as exc:
        print(f"orthant: numerical error: {exc}", file=sys.stderr)
        return EX_SOFTWARE
    except (OrthantError, FileNotFoundError) as exc:
        print(f"orthant: data error: {exc}", file=sys.stderr)
        return EX_DATAERR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
