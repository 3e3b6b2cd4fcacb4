"""Regenerate the fine-grid MHD references and pin the golden thresholds.

Usage::

    python tools/make_references.py [--skip-references] [--margin 1.1]

Writes ``src/alelts/data/mhd_rp*_gts800.csv`` and ``src/alelts/data/golden.json``.
Each threshold is the error of the current code times ``margin``; rerun only
after a deliberate change of the numerical method.
"""
import argparse
import math
import time

from alelts.config import parse_config
from alelts.references import lts_run, load_golden, make_reference, reference_l1, save_golden
from alelts.riemann import error_norms
from alelts.studies import run

MHD_CASES = [f"mhd/rp{k}" for k in range(1, 7)]


def round_up(value, digits=3):
    scale = 10.0 ** (math.floor(math.log10(value)) - digits + 1)
    return float(f"{math.ceil(value / scale) * scale:.{digits}g}")


def sod_gts_error():
    report, _, case = run(parse_config(system="euler", case="rp1", mode="gts", cells=200))
    exact = lambda x: case.exact_primitive(x, report.t_end)[..., 0]  # noqa: E731
    return float(error_norms(report, exact, 0, "L1", use_polynomial=False))


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--skip-references", action="store_true", help="reuse the stored 800-cell dumps")
    parser.add_argument("--margin", type=float, default=1.1)
    parser.add_argument("--cases", nargs="*", default=MHD_CASES)
    args = parser.parse_args()

    golden = load_golden()
    for name in args.cases:
        if not args.skip_references:
            t0 = time.perf_counter()
            path, report = make_reference(name)
            print(f"{name}: reference {path.name} ({report.updates} updates, {time.perf_counter() - t0:.0f} s)",
                  flush=True)
        report, _, _ = lts_run(name)
        err = reference_l1(report, name)
        golden[name] = {"l1_density_lts200": err, "threshold": round_up(args.margin * err)}
        print(f"{name}: LTS N=200 L1(rho) = {err:.4e}", flush=True)
        save_golden(golden)

    err = sod_gts_error()
    golden["euler/rp1"] = {"l1_density_gts200": err, "threshold": round_up(args.margin * err)}
    print(f"euler/rp1: GTS N=200 L1(rho) vs exact = {err:.4e}")
    save_golden(golden)


if __name__ == "__main__":
    main()
