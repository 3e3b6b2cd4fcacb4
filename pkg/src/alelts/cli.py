"""Command-line driver.

Subcommands::

    alelts solve <system> <case> [--order k] [--cells N] [--cfl c] [--flux F] [--mode M]
                 [--out DIR] [--dump-mesh] [--config FILE]
    alelts converge <case> --orders 3,4,5 [--grids 200,400,800]
    alelts compare <system> <case>

Errors exit with status 2 (usage) or 1 (solver) and print ``error[<category>]: message``.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .config import parse_config
from .errors import ConfigurationError, SolverError
from .io import write_report, write_solution, write_spacetime_mesh
from .studies import COMPARE_TOLERANCE, DEFAULT_GRIDS, compare_modes, convergence_study, run


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _common(p):
    p.add_argument("--config", help="INI file with run settings (flags override it)")
    p.add_argument("--order", type=int, help="scheme order M+1 (2..5)")
    p.add_argument("--cells", type=int, help="initial number of cells")
    p.add_argument("--cfl", type=float, help="CFL number in (0, 1]")
    p.add_argument("--flux", help="rusanov or osher")
    p.add_argument("--velocity", help="mesh velocity: fluid-u, fluid-v or zero")
    p.add_argument("--cfl-speed", dest="cfl_speed", help="physical or ale")
    p.add_argument("--t-end", dest="t_end", type=float, help="override the final time")


def build_parser():
    parser = argparse.ArgumentParser(prog="alelts", description="1D ALE ADER-WENO solver with local time stepping")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run one case")
    p.add_argument("system", help="euler or mhd")
    p.add_argument("case", help="case name, e.g. rp1, or 'custom' with --config")
    _common(p)
    p.add_argument("--mode", help="lts or gts")
    p.add_argument("--out", help="directory for solution.csv and report.json")
    p.add_argument("--dump-mesh", dest="dump_mesh", action="store_true", default=None,
                   help="also write the space-time mesh (mesh.csv)")

    p = sub.add_parser("converge", help="convergence study on a smooth case")
    p.add_argument("case", help="e.g. mhd/alfven or alfven")
    p.add_argument("--orders", type=_int_list, default=[3, 4, 5])
    p.add_argument("--grids", type=_int_list, help="cell counts (default depends on order)")
    _common(p)

    p = sub.add_parser("compare", help="run GTS and LTS and report the update ratio")
    p.add_argument("system")
    p.add_argument("case")
    p.add_argument("--tolerance", type=float, default=COMPARE_TOLERANCE,
                   help="L1 tolerance per component between the two solutions")
    _common(p)
    return parser


def _config(args, system, case, **more):
    keys = ("order", "cells", "cfl", "flux", "velocity", "cfl_speed", "t_end")
    flags = {k: getattr(args, k, None) for k in keys}
    flags.update(more)
    return parse_config(args.config, system=system, case=case, **flags)


def _solve(args, out):
    cfg = _config(args, args.system, args.case, mode=args.mode, out=args.out, dump_mesh=args.dump_mesh)
    report, solver, _ = run(cfg)
    summary = {
        "case": cfg.name, "mode": report.mode, "order": cfg.order, "cells": cfg.cells,
        "updates": report.updates, "cycles": report.cycles,
        "max_conservation_rel": float(report.conservation_rel.max()),
        "wall_time": round(report.wall_time, 3),
    }
    if cfg.out:
        folder = Path(cfg.out)
        folder.mkdir(parents=True, exist_ok=True)
        write_solution(folder / "solution.csv", report, solver.system)
        write_report(folder / "report.json", report, solver.system, {"case": cfg.name, "order": cfg.order})
        if cfg.dump_mesh:
            write_spacetime_mesh(folder / "mesh.csv", report.mesh)
        summary["out"] = str(folder)
    print(json.dumps(summary), file=out)


def _converge(args, out):
    system, _, name = args.case.rpartition("/")
    system = system or "mhd"
    print(f"{'order':>5} {'N':>6} {'L2 error':>12} {'observed':>9}", file=out)
    for order in args.orders:
        grids = args.grids or DEFAULT_GRIDS.get(order)
        if not grids:
            raise ConfigurationError(f"no default grids for order {order}; pass --grids")
        cfg = _config(args, system, name, order=order)
        for row in convergence_study(cfg, grids):
            obs = "" if row.observed is None else f"{row.observed:9.2f}"
            print(f"{row.order:>5} {row.cells:>6} {row.error:12.4e} {obs:>9}", file=out)


def _compare(args, out):
    cfg = _config(args, args.system, args.case)
    res = compare_modes(cfg)
    print(json.dumps({
        "case": cfg.name,
        "gts_updates": res.gts.updates,
        "lts_updates": res.lts.updates,
        "ratio": round(res.ratio, 4),
        "l1_difference": [float(v) for v in res.l1_difference],
        "tolerance": args.tolerance,
        "within_tolerance": [bool(v <= args.tolerance) for v in res.l1_difference],
        "max_conservation_rel": float(max(res.gts.conservation_rel.max(), res.lts.conservation_rel.max())),
    }), file=out)


COMMANDS = {"solve": _solve, "converge": _converge, "compare": _compare}


def main(argv=None, out=None):
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args, out)
    except ConfigurationError as exc:
        print(f"error[{exc.category}]: {exc}", file=sys.stderr)
        return 2
    except SolverError as exc:
        print(f"error[{exc.category}]: {exc}", file=sys.stderr)
        return 1
    return 0


def main_entry():
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
