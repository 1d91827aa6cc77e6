"""Command line: ``liftns run | validate | selftest``.

Exit codes: 0 all checks pass, 1 a check failed, 2 usage or configuration
error, 3 the solver diverged.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import harness, spectral
from .config import ConfigError, ExperimentConfig, parse_config
from .diagnostics import PHYSICAL, energy_inequality_check
from .selftest import run_selftest
from .solver import DivergedError, integrate_physical

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_DIVERGED = 0, 1, 2, 3


def _load(path) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig()
    return parse_config(path)


def cmd_run(args) -> int:
    cfg = _load(args.config)
    grid = spectral.make_grid(cfg.grid_n, cfg.period)
    u0 = spectral.taylor_green(grid, cfg.tg_amplitude)
    qs = sorted({q for _, q in cfg.pq})
    try:
        _, series = integrate_physical(u0, harness.solver_params(cfg), cfg.T, cfg.sample_every, qs=qs)
    except DivergedError as e:
        print(f"diverged: {e}", file=sys.stderr)
        return EXIT_DIVERGED
    report = harness.RunReport(cfg, physical=series)
    out = Path(args.out or cfg.output_dir)
    harness.emit_csv(report, out)
    ok, slack = energy_inequality_check(series, PHYSICAL, cfg.nu)
    for i in harness.table_indices(series.t, cfg.table_rows):
        print(f"t={series.t[i]:8.3f}  ||u||^2={series.energy[i]:.6f}  "
              f"int||grad u||^2={series.cum_dissipation[i]:.6f}  ||omega||_inf={series.vort_sup[i]:.6f}")
    print(f"{'PASS' if ok else 'FAIL'}  energy inequality slack {slack:.3e}")
    print(f"wrote {out / 'diagnostics.csv'}")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_validate(args) -> int:
    cfg = _load(args.config)
    report = harness.run_validation(cfg)
    out = Path(args.out or cfg.output_dir)
    harness.write_outputs(report, out)
    sys.stdout.write(harness.render_table(report))
    if report.diverged:
        return EXIT_DIVERGED
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_selftest(args) -> int:
    results = run_selftest("full" if args.full else "quick")
    failed = [r.name for r in results if not r.ok]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_FAIL if failed else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="liftns", description="Navier-Stokes integration in physical and lifted time."
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="integrate one physical-time experiment")
    p.add_argument("--config", required=True, help="key = value configuration file")
    p.add_argument("--out", help="output directory (default: output_dir from config)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("validate", help="paired physical/lifted runs with report panels")
    p.add_argument("--config", required=True, help="key = value configuration file")
    p.add_argument("--out", help="output directory (default: output_dir from config)")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("selftest", help="verify the build")
    p.add_argument("--full", action="store_true", help="add n=32 paired runs (several minutes)")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
