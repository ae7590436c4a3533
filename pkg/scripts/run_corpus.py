"""Analyze every corpus program and print loop bounds and asymptotic classes.

Usage: python scripts/run_corpus.py [--corpus DIR] [--json]
"""

import argparse
import json
import pathlib
import time

from loopbound import symexpr as sx
from loopbound.analysis import analyze
from loopbound.ir import load

ROOT = pathlib.Path(__file__).resolve().parent.parent


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--corpus", default=str(ROOT / "corpus"))
    ap.add_argument("--json", action="store_true", help="emit one JSON object per program")
    args = ap.parse_args()
    for path in sorted(pathlib.Path(args.corpus).glob("*")):
        if path.suffix not in (".fg", ".loopc"):
            continue
        start = time.perf_counter()
        P = load(str(path), ignore_array_writes=True)
        rep = analyze(P)
        elapsed = time.perf_counter() - start
        loops = {v: (sx.render(b) if b is not None else None) for v, b in sorted(rep.loop_bounds.items())}
        if args.json:
            print(json.dumps({"program": path.name, "loops": loops, "asymptotic": rep.asymptotic,
                              "seconds": round(elapsed, 3)}))
        else:
            print(f"{path.name:24s} {rep.asymptotic:10s} {elapsed * 1000:7.1f} ms")
            for v, b in loops.items():
                print(f"    loop@{v}: {b if b is not None else 'unbounded'}")


if __name__ == "__main__":
    main()
