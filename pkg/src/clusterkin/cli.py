"""Command line entry point: ``clusterkin {predict,run,analyze,selfcheck}``."""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys

from . import __version__
from .analytics import f_mass, solve_conjugate
from .experiments import ExperimentConfig, cmd_analyze, cmd_predict, cmd_run, write_predict_tables
from .trees import cayley_count, enumerate_trees, prufer_decode, prufer_encode, quadrature_oracle_f


def _print_table(rows, columns):
    w = csv.writer(sys.stdout)
    w.writerow(columns)
    for r in rows:
        w.writerow([repr(v) if isinstance(v, float) else v for v in (r[c] for c in columns)])


def _predict(args) -> int:
    if args.out:
        out = write_predict_tables(args.t_grid, args.k_max, args.out)
        print(f"wrote {out / 'predict_distribution.csv'} and {out / 'predict_summary.csv'}")
        return 0
    dist, summary = cmd_predict(args.t_grid, args.k_max)
    _print_table(summary, ("t", "Z", "F", "F_giant", "gamma", "f_tail_bound", "g_tail_bound"))
    print()
    _print_table(dist, ("t", "k", "f", "g"))
    return 0


def _run(args) -> int:
    config = ExperimentConfig.from_json(args.config)
    if args.output_dir:
        config.output_dir = args.output_dir
    out = cmd_run(config)
    print(f"run written to {out}")
    return 0


def _analyze(args) -> int:
    report = cmd_analyze(args.run)
    for t, fit in sorted(report.fits.items()):
        if "error" in fit:
            print(f"t={t:g}: fit unavailable ({fit['error']})")
        else:
            print(f"t={t:g}: exponent={fit['exponent']:.4f} damping={fit['damping']:.4f} "
                  f"(predicted damping {fit['damping_pred']:.4f})")
    for g in report.giant:
        print(f"t={g['t']:g}: largest cluster {g['largest_mean']:.4f} +- {g['largest_se']:.4f}, "
              f"giant mass {g['giant_pred']:.4f}")
    if report.calibration:
        print(f"mean free time {report.calibration['mean_free_time']:.6g}")
    if report.takeoff:
        print(f"takeoff at t={report.takeoff['t']:g}, largest fraction {report.takeoff['largest_fraction']:.4f}")
    return 0


def selfcheck(verbose: bool = True) -> bool:
    """Run the oracle suites; returns True when every check passes."""
    results = []

    def record(name, ok, detail=""):
        results.append(ok)
        if verbose:
            print(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")

    for k in range(1, 8):
        trees = list(enumerate_trees(k))
        round_trip = all(prufer_decode(prufer_encode(tr), k) == tr for tr in trees)
        record(f"cayley k={k}", len(trees) == cayley_count(k) and round_trip, f"{len(trees)} trees")

    for k in (2, 3, 4):
        for t in (0.3, 1.0, 2.0):
            exact = float(f_mass(k, t))
            oracle = quadrature_oracle_f(k, t)
            rel = abs(oracle - exact) / exact
            record(f"quadrature k={k} t={t}", rel < 1e-6, f"rel err {rel:.1e}")

    for t in (1.05, 1.5, 2.0, 3.0, 5.0, 10.0):
        sol = solve_conjugate(t)
        target = t * math.exp(-t)
        ok = sol.residual <= 1e-12 * target and 0 < sol.t_star < 1
        record(f"conjugate t={t}", ok, f"t*={sol.t_star:.10f} residual {sol.residual:.1e}")
    return all(results)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="clusterkin", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("predict", help="analytic cluster tables")
    p.add_argument("--t-grid", type=float, nargs="+", required=True)
    p.add_argument("--k-max", type=int, default=50)
    p.add_argument("--out", help="directory for CSV files (default: print to stdout)")
    p.set_defaults(func=_predict)

    p = sub.add_parser("run", help="run a DSMC or MD ensemble from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--output-dir", help="override the config's output_dir")
    p.set_defaults(func=_run)

    p = sub.add_parser("analyze", help="compare a finished run with the closed forms")
    p.add_argument("--run", required=True)
    p.set_defaults(func=_analyze)

    p = sub.add_parser("selfcheck", help="run the oracle suites")
    p.set_defaults(func=lambda args: 0 if selfcheck() else 1)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
