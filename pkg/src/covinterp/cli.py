"""Command-line entry point ``covinterp``.

Examples::

    covinterp run distortion_sweep --config sweep.json --out results/
    covinterp bounds --M 64 --rho 0.5 --out bounds.csv
    covinterp interpolate --sigma-ul ul.csv --M 100 --rho 0.9 --nu 0.9 --mode theory --out dl.csv

The exit status is 0 iff every declared check passes.
"""
from __future__ import annotations

import argparse
import csv
import logging
import os
import sys

from .chebyshev import width_bound
from .estimators import SolverConfig
from .harness import SCENARIOS, ExperimentConfig, run_scenario
from .interpolate import parse_mode, run_algorithm1, write_result_csv
from .covariance import read_covariance_csv
from .manifold import DL, ArrayConfig, ula_lattice
from .psf import AngularPSF, sample_on_lattice

log = logging.getLogger("covinterp")


def _cmd_run(args):
    if args.config:
        config = ExperimentConfig.from_json_file(args.scenario, args.config)
    else:
        config = ExperimentConfig.from_dict(args.scenario)
    if args.from_snapshots:
        config.ul_source = "snapshots"
    if args.exact_ul:
        config.ul_source = "exact"
    report = run_scenario(config)
    paths = report.write(args.out, figures=not args.no_figures)
    summary = report.text_summary()
    with open(os.path.join(args.out, f"{config.scenario}_summary.txt"), "w") as fh:
        fh.write(summary + "\n")
    print(summary)
    for p in paths:
        log.info("wrote %s", p)
    return 0 if report.passed else 1


def _cmd_bounds(args):
    if not 0.0 < args.rho < 1.0:
        raise SystemExit("--rho must lie in (0, 1)")
    M, rho = args.M, args.rho
    rows = []
    for i in range(args.points + 1):
        s = M * rho * i / args.points
        wb = width_bound(s, M, rho)
        rows.append((s, wb.real_part, wb.imag_part, wb.bound, wb.asymptotic))
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["s", "real_part", "imag_part", "bound", "asymptotic"])
        for r in rows:
            w.writerow([repr(float(v)) for v in r])
    ok = all(0.0 <= r[3] <= 2.0 for r in rows)
    lattice = max(width_bound(k * rho, M, rho).bound for k in range(M))
    ok &= lattice == 0.0
    print(f"bounds: {len(rows)} probes, bound range [{min(r[3] for r in rows):.3g}, "
          f"{max(r[3] for r in rows):.3g}], lattice max {lattice:.3g}: {'PASS' if ok else 'FAIL'}")
    if not args.no_figures:
        from .plotting import plot_bounds_table

        plot_bounds_table(rows, os.path.splitext(args.out)[0] + ".png")
    return 0 if ok else 1


def _cmd_interpolate(args):
    sigma_ul = read_covariance_csv(args.sigma_ul)
    if sigma_ul.size != args.M:
        raise SystemExit(f"--M {args.M} does not match the {sigma_ul.size} rows of {args.sigma_ul}")
    if sigma_ul[0].real > 0 and args.normalize:
        sigma_ul = sigma_ul / sigma_ul[0].real
    cfg = ArrayConfig(args.M, args.rho, args.nu)
    solver = SolverConfig()
    if args.solver:
        with open(args.solver) as fh:
            solver = SolverConfig.from_json(fh.read())
    result, _ = run_algorithm1(sigma_ul, cfg, solver, parse_mode(args.mode))
    truth = None
    if args.truth_psf:
        with open(args.truth_psf) as fh:
            truth = sample_on_lattice(AngularPSF.from_json(fh.read()), ula_lattice(cfg, DL)).values
    write_result_csv(args.out, result, truth)
    rep = result.solver_report
    print(f"interpolate: kept {len(result.kept_indices)}/{args.M} indices, "
          f"NNLS kkt {rep.kkt_residual:.2e}: {'PASS' if rep.converged else 'FAIL'}")
    return 0 if rep.converged else 1


def build_parser():
    parser = argparse.ArgumentParser(prog="covinterp", description="UL-to-DL covariance interpolation tools")
    parser.add_argument("-v", "--verbose", action="store_true", help="log written files")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a reproduction scenario")
    run.add_argument("scenario", choices=SCENARIOS)
    run.add_argument("--config", help="JSON config file (keys as in FORMATS.md)")
    run.add_argument("--out", required=True, help="output directory")
    src = run.add_mutually_exclusive_group()
    src.add_argument("--from-snapshots", action="store_true", help="estimate the UL column from snapshots")
    src.add_argument("--exact-ul", action="store_true", help="sample the UL column from the PSF")
    run.add_argument("--no-figures", action="store_true", help="skip PNG output")
    run.set_defaults(func=_cmd_run)

    bounds = sub.add_parser("bounds", help="tabulate the finite-M width bound")
    bounds.add_argument("--M", type=int, required=True)
    bounds.add_argument("--rho", type=float, required=True)
    bounds.add_argument("--points", type=int, default=200, help="probe intervals over [0, M rho]")
    bounds.add_argument("--out", required=True, help="output CSV")
    bounds.add_argument("--no-figures", action="store_true")
    bounds.set_defaults(func=_cmd_bounds)

    interp = sub.add_parser("interpolate", help="run the interpolation pipeline on a UL column")
    interp.add_argument("--sigma-ul", required=True, help="CSV with columns index,re,im")
    interp.add_argument("--M", type=int, required=True)
    interp.add_argument("--rho", type=float, required=True)
    interp.add_argument("--nu", type=float, required=True)
    interp.add_argument("--mode", default="theory", help="'theory' or 'fraction=<x>'")
    interp.add_argument("--solver", help="solver JSON config")
    interp.add_argument("--truth-psf", help="PSF JSON used to fill the error column")
    interp.add_argument("--no-normalize", dest="normalize", action="store_false",
                        help="do not rescale the column to sigma[0] = 1")
    interp.add_argument("--out", required=True, help="output CSV")
    interp.set_defaults(func=_cmd_interpolate)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"covinterp: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
