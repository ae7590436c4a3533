"""Concrete interpreter and exhaustive bound validation.

Array inputs are enumerated lazily: a run that reads a cell whose value has
not been fixed yet is restarted once per possible value of that cell. Every
explored run therefore stands for the whole class of inputs that agree on
the cells it read, which keeps exhaustive validation over a box cheap
without skipping any input.
"""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from . import symexpr as sx
from .ir import Assign, Assume, FlowGraph


class Status(enum.Enum):
    FINISHED = "finished"
    STEP_CAP = "step-cap"
    UNDEFINED = "undefined"


@dataclass
class ConcreteInput:
    scalars: dict
    arrays: dict = field(default_factory=dict)  # name -> list of ints


@dataclass
class RunTrace:
    edge_counts: dict
    status: Status
    steps: int = 0
    path: Optional[list] = None


@dataclass(frozen=True)
class Box:
    lo: int = -6
    hi: int = 6
    max_size: int = 5
    value: int = 2

    @classmethod
    def parse(cls, text: str) -> "Box":
        """Parse ``lo:hi,size,val`` (e.g. ``-6:6,5,2``)."""
        try:
            rng, size, val = text.split(",")
            lo, hi = rng.rsplit(":", 1) if rng.count(":") else (rng, rng)
            return cls(int(lo), int(hi), int(size), int(val))
        except ValueError as exc:
            raise ValueError(f"bad box spec {text!r}; expected lo:hi,size,val") from exc


class _Undefined(Exception):
    pass


class _NeedCell(Exception):
    def __init__(self, key):
        super().__init__(key)
        self.key = key


class LazyArrays:
    """Arrays of fixed sizes whose cells are revealed on demand."""

    def __init__(self, sizes: dict, cells: dict):
        self.sizes = sizes
        self.cells = cells

    def get(self, name: str, idx: tuple) -> int:
        if len(idx) != 1:
            raise _Undefined()
        i = idx[0]
        if not 0 <= i < self.sizes.get(name, 0):
            raise _Undefined()
        key = (name, i)
        if key not in self.cells:
            raise _NeedCell(key)
        return self.cells[key]

    def reader(self, name: str):
        def read(*idx):
            try:
                return self.get(name, idx)
            except _Undefined:
                raise IndexError(name) from None
        return read


class FixedArrays:
    def __init__(self, arrays: dict):
        self.arrays = arrays

    def get(self, name: str, idx: tuple) -> int:
        arr = self.arrays.get(name, [])
        if len(idx) != 1 or not 0 <= idx[0] < len(arr):
            raise _Undefined()
        return arr[idx[0]]


# ---------------------------------------------------------------------------
# Compilation of program expressions to closures


def _trunc_div(n, d):
    if d == 0:
        raise _Undefined()
    q = abs(n) // abs(d)
    return q if (n >= 0) == (d > 0) else -q


def compile_node(e):
    """A closure ``f(env, arrays)`` computing ``e``; raises on undefined values."""
    t = type(e)
    if t is sx.Const:
        v = e.value
        return lambda env, arr: v
    if t is sx.Sym:
        name = e.name
        return lambda env, arr: env[name]
    if t is sx.ArrayRead:
        name = e.name
        args = [compile_node(a) for a in e.args]
        return lambda env, arr: arr.get(name, tuple(f(env, arr) for f in args))
    if t is sx.Add:
        fs = [compile_node(a) for a in e.args]
        return lambda env, arr: sum(f(env, arr) for f in fs)
    if t is sx.Sub:
        a, b = compile_node(e.lhs), compile_node(e.rhs)
        return lambda env, arr: a(env, arr) - b(env, arr)
    if t is sx.Mul:
        fs = [compile_node(a) for a in e.args]

        def mul(env, arr):
            r = 1
            for f in fs:
                r *= f(env, arr)
            return r
        return mul
    if t is sx.Div:
        a, b = compile_node(e.num), compile_node(e.den)
        return lambda env, arr: _trunc_div(a(env, arr), b(env, arr))
    if t in (sx.Ceil, sx.Floor):
        a, b = compile_node(e.num), compile_node(e.den)
        rnd = math.ceil if t is sx.Ceil else math.floor

        def rounding(env, arr):
            d = b(env, arr)
            if d == 0:
                raise _Undefined()
            return rnd(Fraction(a(env, arr), d))
        return rounding
    if t in (sx.Max, sx.Min):
        fs = [compile_node(a) for a in e.args]
        pick = max if t is sx.Max else min
        return lambda env, arr: pick(f(env, arr) for f in fs)
    if t is sx.Ite:
        c, a, b = compile_node(e.cond), compile_node(e.then), compile_node(e.other)
        return lambda env, arr: a(env, arr) if c(env, arr) else b(env, arr)
    if t is sx.BoolConst:
        v = e.value
        return lambda env, arr: v
    if t is sx.Cmp:
        a, b = compile_node(e.lhs), compile_node(e.rhs)
        op = e.op
        if op == "<":
            return lambda env, arr: a(env, arr) < b(env, arr)
        if op == "<=":
            return lambda env, arr: a(env, arr) <= b(env, arr)
        if op == "==":
            return lambda env, arr: a(env, arr) == b(env, arr)
        return lambda env, arr: a(env, arr) != b(env, arr)
    if t is sx.And:
        fs = [compile_node(a) for a in e.args]
        return lambda env, arr: all(f(env, arr) for f in fs)
    if t is sx.Or:
        fs = [compile_node(a) for a in e.args]
        return lambda env, arr: any(f(env, arr) for f in fs)
    if t is sx.Not:
        f = compile_node(e.arg)
        return lambda env, arr: not f(env, arr)
    raise TypeError(f"cannot execute {sx.render(e)}")


class CompiledGraph:
    """Per-node successor tables with compiled instructions."""

    def __init__(self, P: FlowGraph):
        self.P = P
        self.table = {}
        for n in P.nodes:
            outs = []
            for e in P.out_edges(n):
                if isinstance(e.instr, Assign):
                    outs.append((e.id, e.dst, "assign", e.instr.var, compile_node(e.instr.expr)))
                else:
                    outs.append((e.id, e.dst, "assume", None, compile_node(e.instr.cond)))
            self.table[n] = outs

    def run(self, env: dict, arrays, step_cap: int = 100_000, record_path: bool = False) -> RunTrace:
        env = dict(env)
        counts = {}
        node = self.P.begin
        end = self.P.end
        path = [node] if record_path else None
        steps = 0
        status = Status.FINISHED
        try:
            while node != end:
                if steps >= step_cap:
                    status = Status.STEP_CAP
                    break
                outs = self.table[node]
                if len(outs) == 1:
                    eid, dst, kind, var, f = outs[0]
                    if kind == "assume":
                        if not f(env, arrays):
                            status = Status.UNDEFINED  # blocked run
                            break
                    else:
                        env[var] = f(env, arrays)
                else:
                    taken = [o for o in outs if o[4](env, arrays)]
                    if len(taken) != 1:
                        raise RuntimeError(
                            f"node {node}: {len(taken)} branch conditions hold; "
                            "branch conditions must be complementary")
                    eid, dst = taken[0][0], taken[0][1]
                counts[eid] = counts.get(eid, 0) + 1
                steps += 1
                node = dst
                if record_path:
                    path.append(node)
        except (_Undefined, ZeroDivisionError):
            status = Status.UNDEFINED
        return RunTrace(counts, status, steps, path)


def run_concrete(P: FlowGraph, inp: ConcreteInput, step_cap: int = 100_000,
                 record_path: bool = False) -> RunTrace:
    env = {a: 0 for a in P.scalars}
    env.update(inp.scalars)
    return CompiledGraph(P).run(env, FixedArrays(inp.arrays), step_cap, record_path)


# ---------------------------------------------------------------------------
# Input variables


def live_at_begin(P: FlowGraph) -> set:
    """Scalars that may be read before being written on some path."""
    live = {n: set() for n in P.nodes}
    changed = True
    while changed:
        changed = False
        for n in P.nodes:
            acc = set()
            for e in P.out_edges(n):
                after = set(live[e.dst])
                if isinstance(e.instr, Assign):
                    after.discard(e.instr.var)
                    used = sx.symbols_of(e.instr.expr)
                else:
                    used = sx.symbols_of(e.instr.cond)
                acc |= after | used
            if acc != live[n]:
                live[n] = acc
                changed = True
    return live[P.begin]


def input_scalars(P: FlowGraph, bounds: Optional[dict] = None) -> list:
    names = set(live_at_begin(P))
    for bs in (bounds or {}).values():
        for b in bs:
            names |= sx.symbols_of(b)
    return sorted(n for n in names if n in P.scalars)


# ---------------------------------------------------------------------------
# Validation


@dataclass
class Violation:
    edge: tuple
    bound: str
    count: int
    value: int
    scalars: dict
    arrays: dict


@dataclass
class ValidationReport:
    runs: int = 0
    statuses: dict = field(default_factory=dict)
    violations: list = field(default_factory=list)
    skipped_edges: list = field(default_factory=list)
    undefined_bounds: int = 0
    tightness: dict = field(default_factory=dict)  # edge -> max count / min-bound value
    max_counts: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.violations


def explore(P: FlowGraph, box: Box = Box(), step_cap: int = 100_000,
            scalars: Optional[list] = None, record_path: bool = False, extra=None):
    """Yield ``(scalars, sizes, cells, trace, extra_value)`` for every input class.

    ``extra(env, arrays)`` is evaluated under the same lazily revealed
    arrays (it may read further cells), so its value is exact for the class.
    """
    cg = CompiledGraph(P)
    names = scalars if scalars is not None else input_scalars(P)
    arrays = sorted(P.arrays)
    values = range(-box.value, box.value + 1)
    for combo in itertools.product(range(box.lo, box.hi + 1), repeat=len(names)):
        env = {a: 0 for a in P.scalars}
        env.update(zip(names, combo))
        for sizes in itertools.product(range(box.max_size + 1), repeat=len(arrays)):
            size_map = dict(zip(arrays, sizes))
            stack = [{}]
            while stack:
                cells = stack.pop()
                lazy = LazyArrays(size_map, cells)
                try:
                    trace = cg.run(env, lazy, step_cap, record_path)
                    val = extra(env, lazy) if extra is not None else None
                except _NeedCell as need:
                    for v in values:
                        c2 = dict(cells)
                        c2[need.key] = v
                        stack.append(c2)
                    continue
                yield dict(zip(names, combo)), size_map, cells, trace, val


def validate_bounds(P: FlowGraph, bounds: dict, box: Box = Box(),
                    step_cap: int = 100_000, scalars: Optional[list] = None) -> ValidationReport:
    """Check ``count(e) <= evaluate(rho)`` for every input in the box and every bound."""
    rep = ValidationReport()
    checked = {}
    for eid, bs in sorted(bounds.items()):
        e = P.edge(eid)
        if not bs:
            rep.skipped_edges.append((e.src, e.dst))
        else:
            checked[eid] = list(bs)
    names = scalars if scalars is not None else input_scalars(P, bounds)

    def eval_bounds(env, lazy):
        arrs = {a: lazy.reader(a) for a in P.arrays}
        return {eid: [sx.evaluate(b, env, arrs) for b in bs] for eid, bs in checked.items()}

    for sc, sizes, cells, trace, vals in explore(P, box, step_cap, names, extra=eval_bounds):
        rep.runs += 1
        rep.statuses[trace.status.value] = rep.statuses.get(trace.status.value, 0) + 1
        if trace.status is Status.UNDEFINED:
            continue
        for eid, bs in checked.items():
            cnt = trace.edge_counts.get(eid, 0)
            e = P.edge(eid)
            key = (e.src, e.dst)
            rep.max_counts[key] = max(rep.max_counts.get(key, 0), cnt)
            best = None
            for b, v in zip(bs, vals[eid]):
                if v is None:
                    rep.undefined_bounds += 1
                    continue
                best = v if best is None else min(best, v)
                if cnt > v:
                    arrays = {a: [cells.get((a, i)) for i in range(n)] for a, n in sizes.items()}
                    rep.violations.append(Violation(key, sx.render(b), cnt, v, sc, arrays))
            if best is not None and best > 0:
                rep.tightness[key] = max(rep.tightness.get(key, 0.0), cnt / best)
    return rep
