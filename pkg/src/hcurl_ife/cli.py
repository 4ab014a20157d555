"""Command-line driver: ``hcurl-ife {solve,study,diagnose} --config FILE``."""
from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .diagnostics import run_checks
from .geometry import A1Violation
from .solve import SolverBreakdown
from .study import ConfigError, discretize, load_config, run_study, solve_level, write_csv

log = logging.getLogger("hcurl_ife")

EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_GEOMETRY = 3
EXIT_SOLVER = 4


def _cmd_solve(cfg) -> int:
    out = cfg.resolved_output_dir()
    n = cfg.sizes[-1]
    disc = discretize(cfg, n)
    for scheme in cfg.schemes:
        res = solve_level(cfg, disc, scheme)
        path = write_csv(out / f"solve_{scheme}_N{n}.csv", [res])
        np.savetxt(out / f"solution_{scheme}_N{n}.txt", res.solution, fmt="%.16e")
        print(f"{scheme}: N={n} dofs={res.error.n_dofs} e0={res.error.e0:.6e} e1={res.error.e1:.6e} "
              f"residual={res.residual:.2e} -> {path}")
    return 0


def _cmd_study(cfg) -> int:
    out = cfg.resolved_output_dir()

    def progress(r):
        log.info("%s N=%d e0=%.4e e1=%.4e", r.scheme, r.n, r.error.e0, r.error.e1)

    results = run_study(cfg, progress)
    for scheme, levels in results.items():
        path = write_csv(out / f"errors_{scheme}.csv", levels)
        print(f"wrote {path}")
    return 0


def _cmd_diagnose(cfg) -> int:
    out = cfg.resolved_output_dir()
    out.mkdir(parents=True, exist_ok=True)
    checks = run_checks(cfg.diagnose_n, cfg.interface, cfg.coeff, cfg.diagnose_random, cfg.bounds, cfg.quad)
    lines = [c.line() for c in checks]
    (out / "diagnostics.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return 0 if all(c.passed for c in checks) else EXIT_CHECK_FAILED


COMMANDS = {"solve": _cmd_solve, "study": _cmd_study, "diagnose": _cmd_diagnose}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hcurl-ife", description="Immersed Nedelec solvers for H(curl) interface problems")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True, help="key = value configuration file")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = load_config(args.config)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except A1Violation as exc:
        print(f"interface resolution error: {exc}", file=sys.stderr)
        return EXIT_GEOMETRY
    except SolverBreakdown as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
