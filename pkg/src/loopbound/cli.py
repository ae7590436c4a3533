"""Command-line driver: ``loopbound PROGRAM [options]``."""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

from . import symexpr as sx
from .analysis import AnalysisConfig, AnalysisReport, analyze
from .errors import ExternalSolverError, LoopBoundError
from .ir import load
from .oracle import Box, validate_bounds
from .solver import ExternalSolver, Solver


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="loopbound",
        description="Infer symbolic bounds on edge visits and loop iterations.")
    p.add_argument("input", help="program file (.fg flowgraph or .loopc mini-language)")
    p.add_argument("--kind", choices=["auto", "fg", "loopc"], default="auto",
                   help="input kind (default: by file extension)")
    p.add_argument("--format", choices=["text", "json"], default="text", help="output format")
    p.add_argument("--edge-bounds", action="store_true", help="print bounds for every edge")
    p.add_argument("--loop-bounds", action="store_true", help="print bounds for every loop")
    p.add_argument("--asymptotic", action="store_true", help="print asymptotic classes")
    p.add_argument("--validate", action="store_true",
                   help="check the bounds against concrete runs over the input box")
    p.add_argument("--box", default="-6:6,5,2", metavar="LO:HI,SIZE,VAL",
                   help="input box: scalars in [LO,HI], array sizes <= SIZE, "
                        "cell values in [-VAL,VAL] (default: %(default)s)")
    p.add_argument("--step-cap", type=int, default=100_000,
                   help="maximum steps per concrete run (default: %(default)s)")
    p.add_argument("--solver", metavar="PATH", help="external SMT-LIB2 solver binary")
    p.add_argument("--solver-timeout-ms", type=int, default=5000,
                   help="per-query timeout for the external solver (default: %(default)s)")
    p.add_argument("--prune-infeasible", action="store_true",
                   help="zero the bounds of backbones whose path condition is unsatisfiable")
    p.add_argument("--ignore-array-writes", action="store_true",
                   help="lower array stores to no-ops instead of rejecting them")
    p.add_argument("--backbone-cap", type=int, default=256,
                   help="maximum number of backbones per graph (default: %(default)s)")
    p.add_argument("--no-smart-elim", action="store_true",
                   help="replace every counter-dependent value by * after a loop")
    p.add_argument("--closed-forms", action="store_true",
                   help="replace nested-loop sums by closed forms when provably equal")
    return p


def _bounds_text(bounds: list) -> str:
    return ", ".join(sx.render(b) for b in bounds)


def _min_text(bounds: list) -> Optional[str]:
    """The min over a bound set, listed in the set's own order."""
    if not bounds:
        return None
    return sx.render(bounds[0] if len(bounds) == 1 else sx.Min(tuple(bounds)))


def report_json(rep: AnalysisReport, validation=None) -> dict:
    P = rep.graph
    edges = []
    for e in P.sorted_edges():
        bs = rep.edge_bounds.get(e.id, [])
        edges.append({"src": e.src, "dst": e.dst, "bounds": [sx.render(b) for b in bs],
                      "min": _min_text(bs),
                      "class": rep.edge_classes.get(e.id)})
    loops = [{"entry": v, "bound": sx.render(b) if b is not None else None}
             for v, b in sorted(rep.loop_bounds.items())]
    out = {"edges": edges, "loops": loops, "asymptotic": rep.asymptotic,
           "diagnostics": list(rep.diagnostics)}
    if validation is not None:
        out["validation"] = {
            "runs": validation.runs,
            "statuses": dict(sorted(validation.statuses.items())),
            "violations": [{"src": v.edge[0], "dst": v.edge[1], "bound": v.bound,
                            "count": v.count, "value": v.value, "scalars": v.scalars,
                            "arrays": v.arrays} for v in validation.violations],
        }
    return out


def report_text(rep: AnalysisReport, edges: bool, loops: bool, asym: bool, validation=None) -> str:
    P = rep.graph
    lines = []
    if edges:
        for e in P.sorted_edges():
            bs = rep.edge_bounds.get(e.id, [])
            if bs:
                lines.append(f"{e.src} -> {e.dst}: {_bounds_text(bs)} ; min = {_min_text(bs)}")
            else:
                lines.append(f"{e.src} -> {e.dst}: unbounded")
    if loops:
        for v, b in sorted(rep.loop_bounds.items()):
            lines.append(f"loop@{v}: {sx.render(b) if b is not None else 'unbounded'}")
    if asym:
        lines.append(f"asymptotic: {rep.asymptotic}")
        for e in P.sorted_edges():
            lines.append(f"  {e.src} -> {e.dst}: {rep.edge_classes.get(e.id)}")
    if validation is not None:
        st = ", ".join(f"{k}={v}" for k, v in sorted(validation.statuses.items()))
        lines.append(f"validation: {validation.runs} runs ({st}); "
                     f"{len(validation.violations)} violations")
        for v in validation.violations[:20]:
            lines.append(f"  violation {v.edge[0]} -> {v.edge[1]}: count {v.count} > "
                         f"{v.bound} = {v.value} at {v.scalars} {v.arrays}")
    for d in rep.diagnostics:
        lines.append(f"note: {d}")
    return "\n".join(lines)


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        box = Box.parse(args.box)
    except ValueError as exc:
        print(f"loopbound: {exc}", file=sys.stderr)
        return 1
    try:
        P = load(args.input, kind=args.kind, ignore_array_writes=args.ignore_array_writes)
    except OSError as exc:
        print(f"loopbound: {exc}", file=sys.stderr)
        return 1
    except LoopBoundError as exc:
        print(f"loopbound: {args.input}: {exc}", file=sys.stderr)
        return 1
    external = None
    if args.solver:
        try:
            external = ExternalSolver(args.solver, timeout_ms=args.solver_timeout_ms)
        except ExternalSolverError as exc:
            print(f"loopbound: {exc}", file=sys.stderr)
            return 1
    log = []
    config = AnalysisConfig(backbone_cap=args.backbone_cap, smart_elim=not args.no_smart_elim,
                            prune_infeasible=args.prune_infeasible,
                            closed_forms=args.closed_forms, solver=Solver(external, log))
    try:
        rep = analyze(P, config)
    except LoopBoundError as exc:
        print(f"loopbound: {args.input}: {exc}", file=sys.stderr)
        return 1
    for msg in log:
        if msg not in rep.diagnostics:
            rep.diagnostics.append(msg)
    validation = None
    if args.validate:
        validation = validate_bounds(P, rep.edge_bounds, box, step_cap=args.step_cap)
    if args.format == "json":
        print(json.dumps(report_json(rep, validation), indent=2, sort_keys=True))
    else:
        show_all = not (args.edge_bounds or args.loop_bounds or args.asymptotic)
        print(report_text(rep, args.edge_bounds or show_all, args.loop_bounds or show_all,
                          args.asymptotic or show_all, validation))
    if validation is not None and validation.violations:
        print(f"loopbound: {len(validation.violations)} bound violations", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
