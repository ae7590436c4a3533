"""Lowering of the mini-language to flowgraphs.

Statements are lowered into a graph over integer node ids, with skip edges
(``assume true``) wherever control simply falls through. A cleanup pass
then contracts skip edges whose source has no other successor, drops
unreachable nodes and names the remaining nodes ``a, b, c, ...`` in
depth-first order from the begin node, visiting the then-branch of every
condition first. For the loops of a structured program this reproduces the
usual hand-drawn node naming.
"""

from __future__ import annotations

from typing import Optional

from . import symexpr as sx
from .errors import ParseError, UnsupportedFeature
from .ir import Assign, Assume, FlowGraph, make_flowgraph
from .parse import (Program, SArrayWrite, SAssign, SAssume, SBlock, SDoWhile, SFor, SIf,
                    SJump, SLabel, SWhile, Stmt, parse_program)


class _Builder:
    def __init__(self, ignore_array_writes: bool):
        self.ignore_array_writes = ignore_array_writes
        self.n_nodes = 0
        self.edges = []  # [src, dst, instr, (line, col)]
        self.labels = {}
        self.defined_labels = set()
        self.begin = self.new()
        self.end = self.new()

    def new(self) -> int:
        self.n_nodes += 1
        return self.n_nodes - 1

    def edge(self, u: int, v: int, instr, stmt: Optional[Stmt] = None):
        pos = (stmt.line, stmt.col) if stmt is not None and stmt.line else None
        self.edges.append([u, v, instr, pos])

    def label(self, name: str) -> int:
        if name not in self.labels:
            self.labels[name] = self.new()
        return self.labels[name]

    def head_from(self, cur: int) -> int:
        """A node usable as a loop head; begin must keep in-degree 0."""
        if cur == self.begin:
            h = self.new()
            self.edge(cur, h, Assume(sx.TRUE))
            return h
        return cur

    def branch(self, cur: int, cond: sx.Formula, stmt: Stmt):
        t, f = self.new(), self.new()
        self.edge(cur, t, Assume(cond), stmt)
        self.edge(cur, f, Assume(sx.Not(cond)), stmt)
        return t, f

    # Each lowering function returns the fall-through node, or None when
    # control never falls through.
    def stmt(self, s: Stmt, cur: Optional[int], brk, cont) -> Optional[int]:
        if cur is None:
            if isinstance(s, SLabel):
                cur = self.new()
            elif isinstance(s, SBlock) and not s.stmts:
                return None
            else:
                cur = self.new()  # dead code; pruned later
        if isinstance(s, SBlock):
            for t in s.stmts:
                cur = self.stmt(t, cur, brk, cont)
            return cur
        if isinstance(s, SAssign):
            n = self.new()
            self.edge(cur, n, Assign(s.var, s.expr), s)
            return n
        if isinstance(s, SArrayWrite):
            if not self.ignore_array_writes:
                raise UnsupportedFeature(
                    f"write to array {s.name} at {s.line}:{s.col} "
                    "(arrays are read-only; see --ignore-array-writes)")
            n = self.new()
            self.edge(cur, n, Assume(sx.TRUE), s)
            return n
        if isinstance(s, SAssume):
            n = self.new()
            self.edge(cur, n, Assume(s.cond), s)
            return n
        if isinstance(s, SIf):
            t, f = self.branch(cur, s.cond, s)
            join = self.new()
            for start, body in ((t, s.then), (f, s.other)):
                out = self.stmt(body, start, brk, cont) if body is not None else start
                if out is not None:
                    self.edge(out, join, Assume(sx.TRUE))
            return join
        if isinstance(s, SWhile):
            head = self.head_from(cur)
            body, exit_ = self.branch(head, s.cond, s)
            out = self.stmt(s.body, body, exit_, head)
            if out is not None:
                self.edge(out, head, Assume(sx.TRUE))
            return exit_
        if isinstance(s, SDoWhile):
            start = self.head_from(cur)
            test, exit_ = self.new(), self.new()
            out = self.stmt(s.body, start, exit_, test)
            if out is not None:
                self.edge(out, test, Assume(sx.TRUE))
            self.edge(test, start, Assume(s.cond), s)
            self.edge(test, exit_, Assume(sx.Not(s.cond)), s)
            return exit_
        if isinstance(s, SFor):
            for t in s.init:
                cur = self.stmt(t, cur, brk, cont)
            head = self.head_from(cur)
            body, exit_ = self.branch(head, s.cond, s)
            step = self.new() if s.step else head
            out = self.stmt(s.body, body, exit_, step)
            if out is not None:
                self.edge(out, step, Assume(sx.TRUE))
            if s.step:
                cur2 = step
                for t in s.step:
                    cur2 = self.stmt(t, cur2, exit_, step)
                self.edge(cur2, head, Assume(sx.TRUE))
            return exit_
        if isinstance(s, SJump):
            if s.kind == "return":
                target = self.end
            elif s.kind == "goto":
                target = self.label(s.label)
            else:
                target = brk if s.kind == "break" else cont
                if target is None:
                    raise ParseError(f"'{s.kind}' outside of a loop", s.line, s.col)
            self.edge(cur, target, Assume(sx.TRUE), s)
            return None
        if isinstance(s, SLabel):
            if s.label in self.defined_labels:
                raise ParseError(f"duplicate label {s.label}", s.line, s.col)
            self.defined_labels.add(s.label)
            node = self.label(s.label)
            self.edge(cur, node, Assume(sx.TRUE))
            return self.stmt(s.stmt, node, brk, cont)
        raise TypeError(f"unknown statement {s!r}")


def _letters(i: int) -> str:
    s = ""
    i += 1
    while i:
        i, r = divmod(i - 1, 26)
        s = chr(ord("a") + r) + s
    return s


def _cleanup(b: _Builder):
    edges = b.edges
    # contract skip edges u -> w where u has no other successor
    changed = True
    while changed:
        changed = False
        out = {}
        for e in edges:
            out.setdefault(e[0], []).append(e)
        for u, es in out.items():
            if len(es) != 1 or u == b.begin:
                continue
            e = es[0]
            w = e[1]
            if w == u or e[2] != Assume(sx.TRUE):
                continue
            ins = [f for f in edges if f[1] == u]
            srcs = {f[0] for f in ins}
            if any(f[0] in srcs and f[1] == w for f in edges):
                continue
            if u == b.end:
                continue
            edges = [f for f in edges if f is not e]
            for f in ins:
                f[1] = w
                if f[3] is None:
                    f[3] = e[3]
            for name, node in b.labels.items():
                if node == u:
                    b.labels[name] = w
            changed = True
            break
    # drop nodes unreachable from begin
    succ = {}
    for e in edges:
        succ.setdefault(e[0], []).append(e)
    seen, order = {b.begin}, [b.begin]
    stack = [b.begin]
    while stack:
        n = stack.pop()
        for e in succ.get(n, []):
            if e[1] not in seen:
                seen.add(e[1])
                order.append(e[1])
                stack.append(e[1])
    edges = [e for e in edges if e[0] in seen]
    # name nodes depth-first, then-branches first
    names = {}

    def visit(n):
        stack = [n]
        while stack:
            m = stack.pop()
            if m in names:
                continue
            names[m] = _letters(len(names))
            for e in reversed(succ.get(m, [])):
                if e[1] not in names:
                    stack.append(e[1])

    visit(b.begin)
    if b.end not in names:
        names[b.end] = _letters(len(names))
    return edges, names


def lower(prog: Program, ignore_array_writes: bool = False) -> FlowGraph:
    b = _Builder(ignore_array_writes)
    out = b.stmt(prog.body, b.begin, None, None)
    if out is not None:
        b.edge(out, b.end, Assume(sx.TRUE))
    for name in b.labels:
        if name not in b.defined_labels:
            raise ParseError(f"goto to undefined label {name}")
    edges, names = _cleanup(b)
    triples = [(names[u], names[v], ins) for u, v, ins, _ in edges]
    prov = {i: pos for i, (_, _, _, pos) in enumerate(edges) if pos is not None}
    return make_flowgraph(triples, names[b.begin], names[b.end],
                          scalars=prog.scalars, arrays=prog.arrays, provenance=prov)


def lower_program(source: str, ignore_array_writes: bool = False) -> FlowGraph:
    return lower(parse_program(source), ignore_array_writes=ignore_array_writes)
