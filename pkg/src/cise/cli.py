"""Command-line interface: fit, tune, simulate and bootstrap commands.

Reports are UTF-8 JSON (schema 1) with numbers rounded to six significant
digits; the fully resolved configuration is echoed so a report suffices to
reproduce its run. Errors exit nonzero with a machine-readable JSON payload
on stderr.
"""

import argparse
import csv
import json
import math
import sys

import numpy as np

from . import simlab, solver
from .errors import (
    CiseError,
    InvalidInput,
    MissingColumn,
    ParseError,
    TooFewRows,
)
from .kernels import DEFAULT_SLICES, Dataset, build_kernel

SCHEMA = 1


def load_csv(path, response_col):
    """Read a headered numeric CSV into a Dataset.

    Predictors keep file order with the response column removed. Any
    non-numeric or missing cell is rejected with its (1-based) data row and
    column name.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("file is empty") from None
        header = [h.strip() for h in header]
        if response_col not in header:
            raise MissingColumn(
                f"response column {response_col!r} not in header {header}"
            )
        y_pos = header.index(response_col)
        names = [h for i, h in enumerate(header) if i != y_pos]
        xs = []
        ys = []
        for rownum, row in enumerate(reader, start=1):
            if len(row) != len(header):
                raise ParseError(
                    f"row {rownum} has {len(row)} cells, expected {len(header)}",
                    row=rownum,
                )
            vals = []
            for colname, cell in zip(header, row):
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise ParseError(
                        f"row {rownum}, column {colname!r}: "
                        f"cannot parse {cell!r} as a number",
                        row=rownum,
                        col=colname,
                    ) from None
            ys.append(vals[y_pos])
            del vals[y_pos]
            xs.append(vals)
    if not xs:
        raise TooFewRows("file has no data rows")
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape[0] <= x.shape[1]:
        raise TooFewRows(
            f"need more rows than predictors, got n={x.shape[0]}, p={x.shape[1]}"
        )
    try:
        return Dataset(x=x, y=y, names=tuple(names))
    except InvalidInput as exc:
        raise ParseError(str(exc)) from None


def _round6(x):
    if isinstance(x, float):
        if not math.isfinite(x):
            return None
        return float(f"{x:.6g}")
    return x


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.floating, float)):
        return _round6(float(obj))
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    return obj


def render_report(report):
    """Serialize a report dict to the canonical JSON text."""
    return json.dumps(_jsonable(report), indent=2, allow_nan=False) + "\n"


def _emit(report, output):
    text = render_report(report)
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def parse_theta_grid(spec):
    """Parse 'lo:hi:count' (optionally suffixed '(log)' or '(lin)') to a grid.

    Values are absolute penalty scales; log spacing is the default.
    """
    spacing = "log"
    body = spec.strip()
    for tag in ("(log)", "(lin)"):
        if body.endswith(tag):
            spacing = tag[1:-1]
            body = body[: -len(tag)]
    parts = body.split(":")
    if len(parts) != 3:
        raise InvalidInput(
            f"theta grid must be lo:hi:count, optionally with (log) or (lin): {spec!r}"
        )
    try:
        lo, hi = float(parts[0]), float(parts[1])
        count = int(parts[2])
    except ValueError:
        raise InvalidInput(f"cannot parse theta grid {spec!r}") from None
    if count < 1 or lo < 0 or hi < lo:
        raise InvalidInput(f"bad theta grid bounds {spec!r}")
    if count == 1:
        return np.array([lo])
    if spacing == "log":
        if lo <= 0:
            raise InvalidInput("log-spaced grid needs lo > 0; use (lin) for 0")
        return np.geomspace(lo, hi, count)
    return np.linspace(lo, hi, count)


def _standardize(data):
    sd = data.x.std(axis=0)
    if np.any(sd == 0):
        raise InvalidInput("cannot standardize a constant predictor column")
    x = (data.x - data.x.mean(axis=0)) / sd
    return Dataset(x=x, y=data.y, names=data.names)


def _trace_entries(trace):
    return [
        {
            "theta": pt.theta,
            "criterion": pt.criterion if math.isfinite(pt.criterion) else None,
            "p_active": pt.p_active,
            "converged": pt.converged,
            "error": pt.error,
        }
        for pt in trace.grid
    ]


def _fit_config(args, data):
    return {
        "command": args.command,
        "input": args.input,
        "response": args.response,
        "method": args.method,
        "d": args.d,
        "slices": args.slices,
        "fbasis": args.fbasis,
        "rule": args.rule,
        "theta_grid": args.theta_grid,
        "r": args.r,
        "eps": args.eps,
        "standardize": bool(args.standardize),
        "n": data.n,
        "p": data.p,
    }


def _run_fit(args, with_basis):
    data = load_csv(args.input, args.response)
    if args.standardize:
        data = _standardize(data)
    grid = parse_theta_grid(args.theta_grid) if args.theta_grid else None
    kp = build_kernel(data, args.method, h=args.slices, basis=args.fbasis)
    trace, est = solver.tune(
        kp, args.d, data.n, grid=grid, rule=args.rule, r=args.r, eps=args.eps,
    )
    names = data.column_names()
    sel = trace.grid[trace.selected]
    report = {
        "schema": SCHEMA,
        "config": _fit_config(args, data),
        "method": kp.method,
        "d": args.d,
        "rule": trace.gamma_rule,
        "gamma": trace.gamma,
        "selected_theta": sel.theta,
        "criterion": sel.criterion,
        "active": [names[i] for i in est.active],
        "active_indices": [int(i) + 1 for i in est.active],
        "p_active": est.p_active,
        "eigenvalues": est.eigenvalues,
        "eigen_gap": est.eigen_gap,
        "degenerate_spectrum": est.degenerate,
        "converged": est.converged,
        "iterations": est.iterations,
        "tuning": {
            "selected_index": trace.selected,
            "grid": _trace_entries(trace),
        },
    }
    if with_basis:
        report["variables"] = list(names)
        report["basis"] = est.basis
    return report


def cmd_fit(args):
    return _run_fit(args, with_basis=True)


def cmd_tune(args):
    return _run_fit(args, with_basis=False)


def cmd_simulate(args):
    cfg = simlab.StudyConfig(
        study=args.study,
        n=args.n,
        reps=args.reps,
        seed=args.seed,
        method=args.method,
        d=args.d,
        rule=args.rule,
        h=args.slices,
        fbasis=args.fbasis,
        grid=parse_theta_grid(args.theta_grid) if args.theta_grid else None,
        r=args.r,
        eps=args.eps,
    )
    probe = simlab.generate_study(cfg, 0)
    relevant = probe[1]
    report = simlab.run_replications(cfg)
    return {
        "schema": SCHEMA,
        "config": {
            "command": "simulate",
            "study": cfg.study,
            "n": cfg.n,
            "reps": cfg.reps,
            "seed": cfg.seed,
            "method": cfg.method,
            "d": cfg.d,
            "rule": cfg.rule,
            "slices": cfg.h,
            "fbasis": cfg.fbasis,
            "theta_grid": args.theta_grid,
            "r": cfg.r,
            "eps": cfg.eps,
        },
        "study": {
            "relevant_indices": [int(i) + 1 for i in relevant],
            "true_d": 1 if cfg.study in (1, 2) else 2,
            "p": simlab.STUDY_P,
        },
        "report": {
            "r1": report.r1,
            "r2": report.r2,
            "r3": report.r3,
            "se3": report.se3,
            "reps_used": report.reps_used,
            "failures": report.failures,
        },
    }


def cmd_bootstrap(args):
    data = load_csv(args.input, args.response)
    if args.standardize:
        data = _standardize(data)
    grid = parse_theta_grid(args.theta_grid) if args.theta_grid else None
    kp = build_kernel(data, args.method, h=args.slices, basis=args.fbasis)
    _, first = solver.tune(
        kp, args.d, data.n, grid=grid, rule=args.rule, r=args.r, eps=args.eps,
    )
    relevant = [int(i) for i in first.active]
    report = simlab.bootstrap_screen(
        data, relevant, reps=args.reps, seed=args.seed, method=args.method,
        d=args.d, fbasis=args.fbasis, rule=args.rule, h=args.slices,
        grid=grid, r=args.r, eps=args.eps,
    )
    names = data.column_names()
    return {
        "schema": SCHEMA,
        "config": {
            "command": "bootstrap",
            "input": args.input,
            "response": args.response,
            "method": args.method,
            "d": args.d,
            "slices": args.slices,
            "fbasis": args.fbasis,
            "rule": args.rule,
            "theta_grid": args.theta_grid,
            "r": args.r,
            "eps": args.eps,
            "seed": args.seed,
            "reps": args.reps,
            "standardize": bool(args.standardize),
            "n": data.n,
            "p": data.p,
        },
        "relevant": [names[i] for i in relevant],
        "relevant_indices": [i + 1 for i in relevant],
        "report": {
            "r1": report.r1,
            "r2": report.r2,
            "r3": report.r3,
            "se3": report.se3,
            "reps_used": report.reps_used,
            "failures": report.failures,
        },
    }


def _add_data_options(sub):
    sub.add_argument("--input", required=True, help="CSV file with a header row")
    sub.add_argument("--response", required=True, help="response column name")
    sub.add_argument("--standardize", action="store_true",
                     help="center and scale predictors before fitting")


def _add_model_options(sub, d_required):
    sub.add_argument("--method", default="pfc",
                     choices=["pca", "pfc", "sir", "save", "dr"])
    sub.add_argument("--d", type=int, required=d_required, default=None,
                     help="target subspace dimension")
    sub.add_argument("--slices", type=int, default=DEFAULT_SLICES,
                     help="slice count for sir/save/dr")
    sub.add_argument("--fbasis", default="abs-lin-quad",
                     choices=["abs-lin-quad", "sqrt-lin-quad"],
                     help="f-basis for the pfc kernel")
    sub.add_argument("--rule", default="bic", choices=["aic", "bic"])
    sub.add_argument("--theta-grid", default=None,
                     help="lo:hi:count with optional (log)/(lin); absolute scales")
    sub.add_argument("--r", type=float, default=solver.DEFAULT_R,
                     help="adaptive-weight exponent")
    sub.add_argument("--eps", type=float, default=solver.DEFAULT_EPS,
                     help="row-norm drop threshold")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="cise",
        description="Sparse sufficient dimension reduction: fit, tune, "
                    "simulate, bootstrap.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, helptext in (("fit", "fit one dataset and report the basis"),
                           ("tune", "report the tuning-grid trace")):
        s = sub.add_parser(name, help=helptext)
        _add_data_options(s)
        _add_model_options(s, d_required=True)
        s.add_argument("--output", default=None, help="write JSON here")
        s.set_defaults(func=cmd_fit if name == "fit" else cmd_tune)

    s = sub.add_parser("simulate", help="run a seeded Monte-Carlo study")
    s.add_argument("--study", type=int, required=True, choices=[1, 2, 3, 4])
    s.add_argument("--n", type=int, required=True, help="sample size")
    s.add_argument("--reps", type=int, default=simlab.DEFAULT_REPS)
    s.add_argument("--seed", type=int, default=0)
    _add_model_options(s, d_required=False)
    s.add_argument("--output", default=None)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("bootstrap", help="resampling screen on a dataset")
    _add_data_options(s)
    _add_model_options(s, d_required=True)
    s.add_argument("--reps", type=int, default=simlab.DEFAULT_REPS)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--output", default=None)
    s.set_defaults(func=cmd_bootstrap)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        report = args.func(args)
    except CiseError as exc:
        payload = {
            "schema": SCHEMA,
            "error": {"type": type(exc).__name__, "message": str(exc)},
        }
        if isinstance(exc, ParseError):
            payload["error"]["row"] = exc.row
            payload["error"]["col"] = exc.col
        sys.stderr.write(json.dumps(payload, indent=2) + "\n")
        return 1
    _emit(report, args.output)
    return 0


if __name__ == "__main__":
    sys.exit(main())
