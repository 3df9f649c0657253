"""Command-line front end: ``gspca <subcommand> [options]``.

Exit codes: 0 on success, 1 on usage errors (bad flags, unknown radial
function, missing files), 2 on data errors (malformed or degenerate input).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from dataclasses import replace
from typing import Optional, Sequence

import numpy as np

from . import analysis, simulate
from .dataio import DataError, DataMatrix, format_float, load_csv, standardize
from .pca import PATHS, DegenerateDataError, PcaModel, diagnose, fit, fit_classical
from .radial import RadialKind

log = logging.getLogger("gspca")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _kind(value: str) -> RadialKind:
    try:
        return RadialKind.parse(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _kinds(value: str) -> list:
    return [_kind(v) for v in value.split(",") if v.strip()]


def _floats(value: str) -> list:
    try:
        return [float(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {value!r}") from None


def _ints(value: str) -> list:
    try:
        return [int(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {value!r}") from None


def _rank(value: str):
    """An integer rank, or a float in (0, 1) read as a variance fraction."""
    try:
        return int(value)
    except ValueError:
        pass
    try:
        frac = float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer rank or a fraction, got {value!r}") from None
    if not 0.0 < frac <= 1.0:
        raise argparse.ArgumentTypeError("variance fraction must lie in (0, 1]")
    return frac


def _gamma(value: str) -> float:
    g = float(value)
    if not 0.0 < g < 1.0:
        raise argparse.ArgumentTypeError("gamma must lie strictly between 0 and 1")
    return g


def _add_common(p):
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0); outputs are reproducible per seed")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")


def _add_input(p, required=True):
    p.add_argument("--input", required=required, help="CSV file, one observation per row")
    p.add_argument("--header", action="store_true", help="first CSV row holds column names")
    p.add_argument("--label-column", type=int, default=None, help="0-based column holding row labels")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gspca", description="Generalized spherical PCA: fitting, diagnostics, theory and simulations.")
    sub = parser.add_subparsers(dest="command", metavar="subcommand", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("fit", help="fit a model and write it as JSON")
    _add_input(p)
    p.add_argument("--kind", type=_kind, default=RadialKind.LR, help="radial function (default lr)")
    p.add_argument("--classical", action="store_true", help="fit classical PCA instead")
    p.add_argument("--k", type=_rank, default=None, help="rank (integer) or variance fraction in (0, 1]; default all components")
    p.add_argument("--path", choices=PATHS, default="spectral", help="decomposition path (default spectral)")
    p.add_argument("--location-k", type=int, default=2, help="LTS refinement steps (default 2)")
    p.add_argument("--standardize", choices=("none", "classical", "robust"), default="none", help="column standardization before fitting")
    p.add_argument("--out", required=True, help="model JSON path")
    _add_common(p)

    p = sub.add_parser("diagnose", help="score/orthogonal distances and outlier classes")
    _add_input(p)
    p.add_argument("--model", required=True, help="model JSON written by 'fit'")
    p.add_argument("--quantile", type=float, default=0.975, help="cutoff quantile (default 0.975)")
    p.add_argument("--out", required=True, help="diagnostics CSV path")
    _add_common(p)

    p = sub.add_parser("simulate", help="run a scenario grid from a TOML config")
    p.add_argument("--config", required=True, help="TOML scenario config")
    p.add_argument("--out", default=None, help="results CSV (default: stdout)")
    p.add_argument("--summary", default=None, help="JSON summary path")
    p.add_argument("--reps", type=int, default=None, help="override replications per cell")
    p.add_argument("--workers", type=int, default=None, help="worker processes (capped by GSPCA_THREADS)")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    p = sub.add_parser("influence", help="influence function curves along a direction")
    p.add_argument("--gamma", type=_gamma, default=0.5, help="second variance of N(0, diag(1, gamma)) (default 0.5)")
    p.add_argument("--kind", type=_kinds, default=[RadialKind.SSCM, RadialKind.WINSOR, RadialKind.LR], help="comma-separated radial functions")
    p.add_argument("--quantity", choices=("loading", "eigenvalue", "combined"), default="loading",
                   help="second entry of IF(v_1), IF of the corrected first eigenvalue, or the off-diagonal IF of the combined covariance")
    p.add_argument("--angle", type=float, default=45.0, help="direction in degrees from the first axis (default 45)")
    p.add_argument("--tmax", type=float, default=5.0, help="largest distance along the direction (default 5)")
    p.add_argument("--points", type=int, default=501, help="grid points (default 501)")
    p.add_argument("--out", default=None, help="curve CSV (default: stdout)")
    _add_common(p)

    p = sub.add_parser("efficiency", help="asymptotic relative efficiency curves")
    p.add_argument("--gamma", type=_floats, default=[round(0.05 * i, 2) for i in range(1, 20)], help="comma-separated gamma values")
    p.add_argument("--kind", type=_kinds, default=[RadialKind.SSCM, RadialKind.WINSOR, RadialKind.QUAD, RadialKind.BALL, RadialKind.SHELL, RadialKind.LR],
                   help="comma-separated radial functions")
    p.add_argument("--out", default=None, help="curve CSV (default: stdout)")
    _add_common(p)

    p = sub.add_parser("ges", help="gross-error sensitivity of the first loading")
    p.add_argument("--gamma", type=_gamma, default=0.5, help="second variance (default 0.5)")
    p.add_argument("--kind", type=_kinds, default=[RadialKind.SSCM], help="comma-separated radial functions")
    p.add_argument("--radii", type=int, default=2000, help="radial grid size (default 2000)")
    p.add_argument("--angles", type=int, default=720, help="angular grid size (default 720)")
    _add_common(p)

    p = sub.add_parser("breakdown", help="largest GSSCM eigenvalue under growing replacement outliers")
    _add_input(p, required=False)
    p.add_argument("--kind", type=_kind, default=RadialKind.WINSOR, help="radial function (default winsor)")
    p.add_argument("--m", type=int, required=True, help="number of replaced rows")
    p.add_argument("--n", type=int, default=100, help="rows of the generated clean sample when --input is absent (default 100)")
    p.add_argument("--magnitudes", type=_floats, default=[10.0**e for e in range(2, 9)], help="comma-separated magnitudes")
    p.add_argument("--out", default=None, help="curve CSV (default: stdout)")
    _add_common(p)

    p = sub.add_parser("bench", help="fit timing against classical PCA")
    p.add_argument("--family", choices=("lowdim", "highdim"), default="lowdim", help="scenario shape (default lowdim)")
    p.add_argument("--n-grid", type=_ints, default=list(range(50, 501, 50)), help="comma-separated sample sizes")
    p.add_argument("--methods", default="cpca,ball,lr", help="comma-separated methods, cpca first for ratios")
    p.add_argument("--runs", type=int, default=100, help="data sets per grid point (default 100)")
    p.add_argument("--out", default=None, help="timing CSV (default: stdout)")
    _add_common(p)
    return parser


def _open_out(path):
    if path is None:
        return sys.stdout, False
    return open(path, "w", newline=""), True


def _write_rows(path, fields, rows):
    fh, close = _open_out(path)
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(fields)
        for row in rows:
            writer.writerow([format_float(v) if isinstance(v, float) else v for v in row])
    finally:
        if close:
            fh.close()


def _load(args) -> DataMatrix:
    if not os.path.isfile(args.input):
        raise UsageError(f"gspca {args.command}: error: file not found: {args.input}")
    return load_csv(args.input, has_header=args.header, label_column=args.label_column)


def cmd_fit(args):
    X = _load(args)
    if args.standardize != "none":
        X = standardize(X, args.standardize)
    if args.classical:
        model = fit_classical(X.values, k=args.k, path=args.path)
    else:
        model = fit(X.values, args.kind, k=args.k, path=args.path, location_k=args.location_k)
    with open(args.out, "w") as fh:
        fh.write(model.to_json())
        fh.write("\n")
    log.info("wrote %s (k=%d)", args.out, model.k)


def cmd_diagnose(args):
    if not os.path.isfile(args.model):
        raise UsageError(f"gspca diagnose: error: file not found: {args.model}")
    try:
        with open(args.model) as fh:
            model = PcaModel.from_json(fh.read())
    except (KeyError, ValueError, TypeError) as exc:
        raise DataError(f"{args.model}: not a valid model file ({exc})") from None
    X = _load(args)
    if X.p != model.p:
        raise DataError(f"{args.input} has {X.p} columns but the model expects {model.p}")
    rep = diagnose(model, X.values, quantile=args.quantile)
    labels = X.row_labels or tuple(str(i + 1) for i in range(X.n))
    rows = zip(labels, rep.score_distance.tolist(), rep.orthogonal_distance.tolist(), rep.labels)
    _write_rows(args.out, ("row", "score_distance", "orthogonal_distance", "class"), rows)
    print(f"sd_cutoff={format_float(rep.sd_cutoff)} od_cutoff={format_float(rep.od_cutoff)}")
    for name, count in rep.counts().items():
        print(f"{name}={count}")


def cmd_simulate(args):
    specs, methods, workers = simulate.load_config(args.config)
    if args.workers is not None:
        workers = args.workers
    overrides = {}
    if args.reps is not None:
        overrides["reps"] = args.reps
    if args.seed is not None:
        overrides["seed"] = args.seed
    if overrides:
        specs = [replace(s, **overrides) for s in specs]
    results = []
    for spec in specs:
        res = simulate.run_experiment(spec, methods, workers=workers)
        log.info("%s: fit seconds %s", spec.label(), {m: round(t, 3) for m, t in res.total_time.items()})
        results.append(res)
    if args.out is None:
        fields = simulate._CSV_FIELDS
        _write_rows(None, fields, ([row[f] for f in fields] for res in results for row in res.rows()))
    else:
        simulate.write_results_csv(args.out, results)
    if args.summary:
        with open(args.summary, "w") as fh:
            json.dump(simulate.results_summary(results), fh, indent=2, sort_keys=True)
            fh.write("\n")


def cmd_influence(args):
    theta = math.radians(args.angle)
    t = np.linspace(-args.tmax, args.tmax, args.points)
    pts = np.stack([t * math.cos(theta), t * math.sin(theta)], axis=1)
    rows = []
    for kind in args.kind:
        model = analysis.build_model(args.gamma, kind)
        if args.quantity == "loading":
            y = analysis.if_loading(model, pts, 1)[:, 1]
        elif args.quantity == "eigenvalue":
            y = analysis.if_corrected_eigenvalue(model, pts, 1)
        else:
            y = analysis.if_combined_covariance(model, pts)[:, 0, 1]
        rows.extend((kind.value, float(a), float(b)) for a, b in zip(t, y))
    _write_rows(args.out, ("series", "t", "y"), rows)


def cmd_efficiency(args):
    for g in args.gamma:
        if not 0.0 < g < 1.0:
            raise UsageError("gspca efficiency: error: gamma values must lie strictly between 0 and 1")
    series = analysis.curve("efficiency", args.gamma, args.kind)
    rows = ((name, float(g), float(v)) for name, ys in series.items() for g, v in zip(args.gamma, ys))
    _write_rows(args.out, ("series", "gamma", "y"), rows)


def cmd_ges(args):
    for kind in args.kind:
        model = analysis.build_model(args.gamma, kind)
        value = analysis.ges(model, 1, n_radii=args.radii, n_angles=args.angles)
        shown = "inf" if math.isinf(value) else f"{value:.7g}"
        print(f"{kind.value} {shown}")


def cmd_breakdown(args):
    if args.input:
        X = _load(args).values
    else:
        X = simulate.generate(simulate.ScenarioSpec.lowdim(n=args.n, seed=args.seed), 0).values
    if not 0 <= args.m <= X.shape[0]:
        raise UsageError(f"gspca breakdown: error: --m must lie in [0, {X.shape[0]}]")
    curve = simulate.empirical_breakdown(X, args.kind, args.m, args.magnitudes, seed=args.seed)
    rows = (
        (float(a), float(b), float(c), float(d), float(e), float(f))
        for a, b, c, d, e, f in zip(
            curve.magnitudes, curve.lambda_max, curve.trace, curve.location_shift,
            curve.bounded_limit, curve.explosion_floor,
        )
    )
    _write_rows(args.out, ("magnitude", "lambda_max", "trace", "location_shift", "bounded_limit", "explosion_floor"), rows)


def cmd_bench(args):
    methods = [m for m in args.methods.split(",") if m.strip()]
    try:
        table = simulate.benchmark_timing(args.family, args.n_grid, methods, runs=args.runs, seed=args.seed)
    except ValueError as exc:
        raise UsageError(f"gspca bench: error: {exc}") from None
    base = table.methods[0]
    rows = []
    for i, n in enumerate(table.n_grid):
        for j, m in enumerate(table.methods):
            rows.append((n, m, float(table.seconds[i, j]), float(table.seconds[i, j] / table.seconds[i, 0])))
    _write_rows(args.out, ("n", "method", "total_seconds", f"ratio_to_{base}"), rows)


_COMMANDS = {
    "fit": cmd_fit,
    "diagnose": cmd_diagnose,
    "simulate": cmd_simulate,
    "influence": cmd_influence,
    "efficiency": cmd_efficiency,
    "ges": cmd_ges,
    "breakdown": cmd_breakdown,
    "bench": cmd_bench,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(name)s %(message)s",
        stream=sys.stderr,
    )
    try:
        _COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"gspca {args.command}: error: file not found: {exc.filename}", file=sys.stderr)
        return 1
    except (DataError, DegenerateDataError) as exc:
        print(f"gspca {args.command}: data error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"gspca {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
