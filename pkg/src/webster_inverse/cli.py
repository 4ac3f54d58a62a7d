"""Command-line entry point ``webster-inverse``.

Subcommands::

    gen-profiles  sample area profiles to CSV
    forward       simulate an inlet trace for a profile
    invert        reconstruct a profile from a trace with SG or KLO
    compare       run the paired Monte Carlo study
    stats         recompute the statistical report from an errors.csv

Exit status is 0 on success, 1 on a usage or input error and 2 on a
numerical failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import _csvio
from .errors import NumericalError, WebsterError
from .forward_klo import KloForwardConfig, simulate_klo
from .forward_sg import SgForwardConfig, simulate_sg
from .harness import (
    ExperimentConfig,
    klo_config,
    load_config,
    read_errors_csv,
    run_experiment,
    sg_config,
    with_seed,
    write_outputs,
    write_reports,
)
from .klo_invert import reconstruct_klo
from .profiles import AreaProfile, sample_area, uniform_grid
from .sg_invert import reconstruct_sg
from .stats import summarize
from .traces import KLO_TRACE, SG_IMPULSE_RESPONSE, BoundaryTrace
from .transfer import klo_trace_from_sg, sg_kernel_from_klo

OUT_ENV = "WEBSTER_INVERSE_OUT"
EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Argument parser that reports usage errors with exit status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p):
    p.add_argument("--seed", type=int, default=None, help="master seed (overrides the config)")
    p.add_argument("--config", type=Path, default=None, help="experiment config file")
    p.add_argument("--out", type=Path, default=None, help=f"output path (default from ${OUT_ENV})")


def build_parser():
    parser = _Parser(prog="webster-inverse", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen-profiles", help="sample area profiles")
    _common(p)
    p.add_argument("--kind", choices=("se", "matern", "hybrid"), default="se")
    p.add_argument("-n", "--count", type=int, default=1, help="number of profiles")

    p = sub.add_parser("forward", help="simulate the inlet trace of a profile")
    _common(p)
    p.add_argument("--solver", choices=("sg", "klo"), required=True)
    p.add_argument("--profile", type=Path, required=True, help="profile CSV (columns x,A)")
    p.add_argument("--nx", type=int, default=None, help="forward grid size (default fine_ratio x coarse)")
    p.add_argument("--dt", type=float, default=None, help="resample the trace to this step")

    p = sub.add_parser("invert", help="reconstruct an area profile from a trace")
    _common(p)
    p.add_argument("--method", choices=("sg", "klo"), required=True)
    p.add_argument("--trace", type=Path, required=True, help="trace CSV (columns t,H0)")
    p.add_argument("--delta", type=float, default=0.0, help="noise level used to pick regularisation")

    p = sub.add_parser("compare", help="paired Monte Carlo comparison")
    _common(p)
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("-n", "--n-realisations", type=int, default=None)

    p = sub.add_parser("stats", help="statistics from an errors.csv")
    _common(p)
    p.add_argument("--errors", type=Path, required=True)
    return parser


def _config(args):
    cfg = load_config(args.config) if args.config is not None else ExperimentConfig()
    return with_seed(cfg, args.seed)


def _out(args, default_name):
    if args.out is not None:
        return args.out
    base = os.environ.get(OUT_ENV)
    if base is None:
        raise UsageError("--out is required (or set $" + OUT_ENV + ")")
    return Path(base) / default_name


def _load_trace(path):
    """Trace CSV; SG files without an ``impulse_removed`` entry count as impulse-removed."""
    meta, _ = _csvio.read_columns(path)
    trace = BoundaryTrace.from_csv(path)
    if trace.kind == SG_IMPULSE_RESPONSE and "impulse_removed" not in meta:
        trace = trace.replace(impulse_removed=True)
    return trace


def cmd_gen_profiles(args):
    cfg = _config(args)
    if args.count < 1:
        raise UsageError("--count must be >= 1")
    out = _out(args, "profiles")
    out.mkdir(parents=True, exist_ok=True)
    grid = uniform_grid(cfg.length, cfg.coarse_points)
    spec = cfg.specs[args.kind]
    for i in range(args.count):
        sample_area(spec, grid, (cfg.master_seed, i), bounds=cfg.bounds).to_csv(out / f"profile_{i:04d}.csv")
    print(f"wrote {args.count} profile(s) to {out}")


def cmd_forward(args):
    cfg = _config(args)
    profile = AreaProfile.from_csv(args.profile)
    n_cells = len(profile.x) - 1
    if args.solver == "sg":
        nx = args.nx or cfg.fine_ratio * n_cells
        trace = simulate_sg(profile, SgForwardConfig(nx=nx, impulse_width=cfg.sg_impulse_width))
    else:
        nx = args.nx or cfg.fine_ratio * n_cells + 1
        trace = simulate_klo(profile, KloForwardConfig(nx=nx, courant=cfg.klo_courant))
    if args.dt is not None:
        trace = trace.resample(args.dt)
    out = _out(args, "trace.csv")
    trace.to_csv(out)
    print(f"wrote {len(trace)} samples to {out}")


def cmd_invert(args):
    cfg = _config(args)
    trace = _load_trace(args.trace)
    if args.method == "sg":
        if trace.kind == KLO_TRACE:
            trace = sg_kernel_from_klo(trace)
        profile = reconstruct_sg(trace, sg_config(cfg, args.delta))
    else:
        if trace.kind == SG_IMPULSE_RESPONSE:
            trace = klo_trace_from_sg(trace)
        n_t = len(trace)
        length = (n_t - 1) // 2 * trace.dt
        local = replace(cfg, length=length, coarse_points=(n_t - 1) // 2 + 1)
        kcfg = klo_config(local, args.delta, trace.dt * trace.samples)
        profile = reconstruct_klo(trace, kcfg)
    out = _out(args, "area.csv")
    profile.to_csv(out, value_column="A_rec")
    print(f"wrote {len(profile.x)} points to {out}")


def cmd_compare(args):
    cfg = _config(args)
    if args.n_realisations is not None:
        cfg = replace(cfg, n_realisations=args.n_realisations)
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    out = _out(args, "results")
    result = run_experiment(cfg, jobs=args.jobs)
    write_outputs(out, cfg, result)
    for i, why in result.failures:
        print(f"realisation {i} failed: {why}", file=sys.stderr)
    if not result.records:
        raise NumericalError("every realisation failed")
    print(f"{cfg.n_realisations - len(result.failures)} of {cfg.n_realisations} realisations written to {out}")


def cmd_stats(args):
    records = read_errors_csv(args.errors)
    out = _out(args, "results")
    out.mkdir(parents=True, exist_ok=True)
    n = len({r.realisation for r in records})
    write_reports(out, summarize(records), n_realisations=n)
    print(f"wrote report.json and table8.csv to {out}")


COMMANDS = {
    "gen-profiles": cmd_gen_profiles,
    "forward": cmd_forward,
    "invert": cmd_invert,
    "compare": cmd_compare,
    "stats": cmd_stats,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        COMMANDS[args.command](args)
    except (NumericalError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (UsageError, WebsterError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
