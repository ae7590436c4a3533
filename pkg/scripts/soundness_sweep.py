"""Validate the inferred bounds of every corpus program against concrete runs.

Every input of the box is covered (array cells are enumerated on demand).
Exits with status 2 if any bound is violated.

Usage: python scripts/soundness_sweep.py [--box LO:HI,SIZE,VAL] [--step-cap N]
"""

import argparse
import pathlib
import sys
import time

from loopbound.analysis import analyze
from loopbound.ir import load
from loopbound.oracle import Box, validate_bounds

ROOT = pathlib.Path(__file__).resolve().parent.parent


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--corpus", default=str(ROOT / "corpus"))
    ap.add_argument("--box", default="-6:6,5,2")
    ap.add_argument("--step-cap", type=int, default=100_000)
    args = ap.parse_args()
    box = Box.parse(args.box)
    bad = 0
    for path in sorted(pathlib.Path(args.corpus).glob("*")):
        if path.suffix not in (".fg", ".loopc"):
            continue
        start = time.perf_counter()
        P = load(str(path), ignore_array_writes=True)
        rep = analyze(P)
        val = validate_bounds(P, rep.edge_bounds, box, step_cap=args.step_cap)
        worst = max(val.tightness.values(), default=0.0)
        print(f"{path.name:24s} runs={val.runs:6d} violations={len(val.violations):3d} "
              f"unbounded-edges={len(val.skipped_edges)} max-tightness={worst:.2f} "
              f"({time.perf_counter() - start:.2f} s)")
        for v in val.violations[:5]:
            print(f"    {v.edge}: count {v.count} > {v.bound} = {v.value} at {v.scalars} {v.arrays}")
        bad += len(val.violations)
    print(f"total violations: {bad}")
    return 2 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
