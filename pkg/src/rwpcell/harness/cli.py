"""Command-line interface: emits plot-ready CSV or JSON tables.

Exit codes: 0 success, 2 invalid arguments, 3 input-file error,
4 numerical convergence failure.
"""

from __future__ import annotations

import argparse
import io
import json
import sys

import numpy as np

from ..analytics import mean_transition_time
from ..errors import ConvergenceError, DomainError, InputFileError
from ..models import (LevyParams, MobilityParams, Window, generate_classical_rwp_trace,
                      generate_levy_trace, generate_rwp_trace)
from ..numerics import RandomStream
from .deploy import ingest_deployment
from .experiments import (run_handover_experiment, run_model_comparison, run_sojourn_experiment,
                          run_sweep)
from .scenario import DeploymentSpec, HexSpec, PppSpec, Scenario, parse_pause, parse_velocity

EXIT_OK, EXIT_ARGS, EXIT_INPUT, EXIT_CONVERGENCE = 0, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_ARGS)


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def _csv(header, rows):
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def _json(obj):
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def _emit(text, out):
    if out:
        with open(out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _report_csv(rep):
    d = rep.to_dict()
    keys = ["metric", "mean", "var", "reps", "ci95", "seed"]
    header = keys + [f"analytic_{k}" for k in d["analytic"]]
    return _csv(header, [[d[k] for k in keys] + list(d["analytic"].values())])


def _common(p, needs_lambda=True):
    if needs_lambda:
        p.add_argument("--lambda", dest="lam", type=float, default=1.0, help="waypoint intensity")
    p.add_argument("--velocity", default="const:1", help="const:<v> | uniform:<lo>:<hi>")
    p.add_argument("--pause", default="none", help="none | const:<s> | power:<beta>:<smin>:<smax>")
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="output path (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--workers", type=int, default=1)


def build_parser():
    ap = _Parser(prog="rwpcell", description="Random-waypoint handover and sojourn analytics.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("trace", help="emit a movement trace as CSV")
    _common(p)
    p.add_argument("--periods", type=int, default=1000)
    p.add_argument("--model", choices=("rwp", "classical", "levy"), default="rwp")
    p.add_argument("--window", type=float, nargs=2, metavar=("W", "H"), default=None,
                   help="reflecting window; infinite plane when omitted (rwp only)")

    p = sub.add_parser("stats", help="transition-length and switch-rate CCDFs of three models")
    _common(p, needs_lambda=False)
    p.add_argument("--periods", type=int, default=100_000)
    p.add_argument("--alpha", type=float, default=1.0, help="Levy length exponent")
    p.add_argument("--beta", type=float, default=1.0, help="Levy pause exponent")
    p.add_argument("--l-min", type=float, default=0.1)
    p.add_argument("--l-max", type=float, default=None)
    p.add_argument("--s-min", type=float, default=1.0)
    p.add_argument("--s-max", type=float, default=1000.0)
    p.add_argument("--window", type=float, nargs=2, metavar=("W", "H"), default=(1000.0, 1000.0))

    for name, helptext in (("hex", "hexagonal cells"), ("pvt", "Poisson-Voronoi cells")):
        p = sub.add_parser(name, help=f"handover or sojourn analytics and MC for {helptext}")
        _common(p)
        if name == "hex":
            p.add_argument("--d", type=float, default=1.0, help="hexagon side")
        else:
            p.add_argument("--mu", type=float, default=1.0, help="BS intensity")
        p.add_argument("--metric", choices=("handovers", "sojourn"), default="handovers")
        p.add_argument("--t-grid", type=int, default=41, help="sojourn grid size (pvt)")

    p = sub.add_parser("deploy", help="handover MC on an ingested BS layout")
    p.add_argument("file")
    _common(p)
    p.add_argument("--guard", type=float, default=None, help="guard margin in normalised units")

    p = sub.add_parser("sweep", help="handover counts over a BS-density grid")
    _common(p)
    p.add_argument("--network", choices=("pvt", "hex"), default="pvt")
    p.add_argument("--mu-list", default="1,4,16,64")
    return ap


def _mobility(args):
    return MobilityParams(args.lam, parse_velocity(args.velocity), parse_pause(args.pause))


def _cmd_trace(args):
    mob = _mobility(args)
    stream = RandomStream(args.seed, 0)
    if args.model == "rwp":
        win = Window.reflecting(*args.window) if args.window else Window()
        start = (0.5 * win.width, 0.5 * win.height) if args.window else (0.0, 0.0)
        tr = generate_rwp_trace(mob, args.periods, stream, start, win)
    else:
        if not args.window:
            raise DomainError(f"--window is required for the {args.model} model")
        win = Window.reflecting(*args.window)
        centre = (0.5 * win.width, 0.5 * win.height)
        if args.model == "classical":
            tr = generate_classical_rwp_trace(win, mob.velocity, mob.pause, args.periods, stream, centre)
        else:
            lev = LevyParams(velocity=mob.velocity)
            tr = generate_levy_trace(lev, args.periods, stream, centre, win)
    if args.format == "json":
        rows = [{"period": i, "x0": p.start[0], "y0": p.start[1], "x1": p.end[0], "y1": p.end[1],
                 "velocity": p.velocity, "pause": p.pause}
                for i, p in enumerate(tr)]
        return _json([{k: (float(v) if k != "period" else v) for k, v in r.items()} for r in rows])
    buf = io.StringIO()
    tr.to_csv(buf)
    return buf.getvalue()


def _cmd_stats(args):
    lev = LevyParams(args.alpha, args.beta, args.l_min, args.l_max, args.s_min, args.s_max,
                     parse_velocity(args.velocity))
    res = run_model_comparison(lev, Window.reflecting(*args.window), args.periods, args.seed)
    if args.format == "json":
        return _json({"lambda": res.lam, "mean_length": res.mean_length,
                      "length_ccdf": [dict(zip(("l", "proposed", "classical", "levy"), r))
                                      for r in res.length_rows],
                      "switch_rate_ccdf": [dict(zip(("d", "proposed", "classical", "levy"), r))
                                           for r in res.rate_rows]})
    rows = [("length",) + r for r in res.length_rows] + [("switch_rate",) + r for r in res.rate_rows]
    return _csv(["quantity", "x", "proposed", "classical", "levy"], rows)


def _cmd_cell(args, net):
    sc = Scenario(_mobility(args), net, args.reps, args.seed, workers=args.workers)
    if args.metric == "handovers":
        rep = run_handover_experiment(sc)
        return _json(rep.to_dict()) if args.format == "json" else _report_csv(rep)
    grid = None
    if isinstance(net, PppSpec):
        mt = mean_transition_time(sc.mobility)
        grid = np.linspace(0.0, mt, args.t_grid + 1)[:-1]
    res = run_sojourn_experiment(sc, grid)
    if args.format == "json":
        out = res.report.to_dict()
        out["table"] = [dict(zip(("t", "pdf", "cdf", "empirical_cdf"), r)) for r in res.rows]
        return _json(out)
    text = _report_csv(res.report)
    if res.rows:
        text += "\n" + _csv(["t", "pdf", "cdf", "empirical_cdf"], res.rows)
    return text


def _cmd_deploy(args):
    dep = ingest_deployment(args.file, args.guard)  # fail fast on bad input
    sc = Scenario(_mobility(args), DeploymentSpec(args.file, dep.guard_margin), args.reps,
                  args.seed, workers=args.workers)
    rep = run_handover_experiment(sc)
    return _json(rep.to_dict()) if args.format == "json" else _report_csv(rep)


def _cmd_sweep(args):
    try:
        mus = [float(m) for m in args.mu_list.split(",") if m.strip()]
    except ValueError:
        raise DomainError(f"bad --mu-list {args.mu_list!r}") from None
    res = run_sweep(_mobility(args), mus, args.network, args.reps, args.seed, args.workers)
    if args.format == "json":
        return _json({"slope": res.slope, "analytic_slope": res.analytic_slope,
                      "points": [r.to_dict() for r in res.reports]})
    key = "expected" if args.network == "pvt" else "expected_exact"
    rows = [(mu, r.mean, r.var, r.reps, r.ci95, r.seed, r.analytic[key])
            for mu, r in zip(res.mus, res.reports)]
    text = _csv(["mu", "mean", "var", "reps", "ci95", "seed", "analytic"], rows)
    return text + "\n" + _csv(["slope", "analytic_slope"], [(res.slope, res.analytic_slope)])


def run(argv=None):
    """Parse ``argv`` and return ``(text, out_path)``."""
    args = build_parser().parse_args(argv)
    if args.reps < 1 or args.workers < 1:
        raise DomainError("--reps and --workers must be >= 1")
    if args.command == "trace":
        return _cmd_trace(args), args.out
    if args.command == "stats":
        return _cmd_stats(args), args.out
    if args.command == "hex":
        return _cmd_cell(args, HexSpec(args.d)), args.out
    if args.command == "pvt":
        return _cmd_cell(args, PppSpec(args.mu)), args.out
    if args.command == "deploy":
        return _cmd_deploy(args), args.out
    return _cmd_sweep(args), args.out


def main(argv=None) -> int:
    try:
        text, out = run(argv)
        _emit(text, out)
    except SystemExit as exc:
        return int(exc.code or 0)
    except InputFileError as exc:
        print(f"rwpcell: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ConvergenceError as exc:
        print(f"rwpcell: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except DomainError as exc:
        print(f"rwpcell: {exc}", file=sys.stderr)
        return EXIT_ARGS
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
