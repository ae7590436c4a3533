"""Flowgraphs, backbones, loops along backbones and induced flowgraphs.

A flowgraph has a begin node without predecessors, an end node without
successors, and every other node has one or two out-edges. A node with two
out-edges branches: its edges carry ``assume(g)`` and ``assume(!g)``.

Edges carry integer ids. An induced flowgraph keeps the ids of the edges
it copies (including the ones redirected to the fresh end node) so that
bounds computed inside a loop can be added back to the enclosing graph.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from . import symexpr as sx
from .errors import BackboneLimitExceeded, ParseError, StructureError
from .parse import ExprParser, TokenStream, as_arith, as_cond, tokenize


@dataclass(frozen=True)
class Assign:
    var: str
    expr: sx.Expr

    def render(self) -> str:
        return f"{self.var} := {_program_text(self.expr)}"


@dataclass(frozen=True)
class Assume:
    cond: sx.Formula

    def render(self) -> str:
        return f"assume {_program_text(self.cond)}"


Instruction = Union[Assign, Assume]

SKIP = Assume(sx.TRUE)


def _bracket_arrays(e):
    if type(e) is sx.ArrayRead:
        return sx.Sym(e.name + "".join(f"[{_program_text(a)}]" for a in e.args))
    kids = sx.children(e)
    return sx.rebuild(e, tuple(_bracket_arrays(k) for k in kids)) if kids else e


def _program_text(e) -> str:
    """Render a program expression: no symbol sigil, ``A[i]`` for array reads."""
    return sx.render(_bracket_arrays(e)).replace("$", "")


@dataclass(frozen=True)
class Edge:
    id: int
    src: str
    dst: str
    instr: Instruction

    def key(self) -> tuple:
        return (self.src, self.dst)


@dataclass(frozen=True)
class Backbone:
    nodes: tuple

    def edges(self) -> list:
        return list(zip(self.nodes, self.nodes[1:]))

    def __len__(self):
        return len(self.nodes)

    def __str__(self):
        return " ".join(self.nodes)


@dataclass(frozen=True)
class LoopRef:
    entry: str
    body: frozenset
    backbone: Backbone
    prefix: tuple


@dataclass
class FlowGraph:
    nodes: tuple
    edges: tuple
    begin: str
    end: str
    scalars: frozenset = frozenset()
    arrays: frozenset = frozenset()
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self._out = {n: [] for n in self.nodes}
        self._in = {n: [] for n in self.nodes}
        self._by_id = {}
        self._by_pair = {}
        for e in self.edges:
            if e.src not in self._out or e.dst not in self._in:
                raise StructureError(f"edge {e.src}->{e.dst} mentions an undeclared node")
            self._out[e.src].append(e)
            self._in[e.dst].append(e)
            if e.id in self._by_id:
                raise StructureError(f"duplicate edge id {e.id}")
            self._by_id[e.id] = e
            if (e.src, e.dst) in self._by_pair:
                raise StructureError(f"parallel edges {e.src}->{e.dst} are not supported")
            self._by_pair[(e.src, e.dst)] = e
        for lst in self._out.values():
            lst.sort(key=lambda e: e.dst)

    def out_edges(self, n: str) -> list:
        return self._out[n]

    def in_edges(self, n: str) -> list:
        return self._in[n]

    def edge(self, eid: int) -> Edge:
        return self._by_id[eid]

    def edge_between(self, u: str, v: str) -> Edge:
        return self._by_pair[(u, v)]

    def has_edge(self, u: str, v: str) -> bool:
        return (u, v) in self._by_pair

    def edge_ids(self) -> list:
        return sorted(self._by_id)

    def sorted_edges(self) -> list:
        return sorted(self.edges, key=lambda e: (e.src, e.dst))

    def variables(self) -> frozenset:
        return self.scalars | self.arrays

    def validate(self, strict_branches: bool = True) -> "FlowGraph":
        """Check the structural invariants; raises StructureError."""
        if self.begin not in self._out:
            raise StructureError(f"begin node {self.begin} is not a node")
        if self.end not in self._out:
            raise StructureError(f"end node {self.end} is not a node")
        if self.begin == self.end:
            raise StructureError("begin and end must be different nodes")
        if self._in[self.begin]:
            raise StructureError(f"begin node {self.begin} has incoming edges")
        if self._out[self.end]:
            raise StructureError(f"end node {self.end} has outgoing edges")
        for n in self.nodes:
            if n == self.end:
                continue
            out = self._out[n]
            if not 1 <= len(out) <= 2:
                raise StructureError(f"node {n} has out-degree {len(out)}; expected 1 or 2")
            if len(out) == 2 and strict_branches:
                a, b = out
                if not (isinstance(a.instr, Assume) and isinstance(b.instr, Assume)):
                    raise StructureError(f"branching node {n} must carry two assume edges")
                if sx.simplify(sx.negate(a.instr.cond)) != sx.simplify(b.instr.cond):
                    raise StructureError(
                        f"branch conditions at node {n} are not complementary: "
                        f"{_program_text(a.instr.cond)} / {_program_text(b.instr.cond)}")
        for e in self.edges:
            if isinstance(e.instr, Assign) and e.instr.var in self.arrays:
                raise StructureError(f"edge {e.src}->{e.dst} assigns to array {e.instr.var}")
        return self

    def render(self) -> str:
        """The graph in ``.fg`` syntax."""
        lines = [f"begin {self.begin}", f"end {self.end}"]
        for e in sorted(self.edges, key=lambda e: e.id):
            kind = "assign" if isinstance(e.instr, Assign) else "assume"
            body = e.instr.render()
            if kind == "assume":
                body = body[len("assume "):]
            lines.append(f"edge {e.src} {e.dst} {kind} {body}")
        return "\n".join(lines) + "\n"


def _free_names(graph_edges) -> tuple:
    scalars, arrays = set(), set()
    for e in graph_edges:
        node = e.instr.expr if isinstance(e.instr, Assign) else e.instr.cond
        if isinstance(e.instr, Assign):
            scalars.add(e.instr.var)
        for n in sx.walk(node):
            if type(n) is sx.Sym:
                scalars.add(n.name)
            elif type(n) is sx.ArrayRead:
                arrays.add(n.name)
    return scalars, arrays


def make_flowgraph(edges, begin: str, end: str, nodes=None, scalars=(), arrays=(),
                   provenance=None, validate: bool = True) -> FlowGraph:
    """Build a flowgraph from ``(src, dst, instr)`` triples (ids are positions)."""
    es = tuple(Edge(i, s, d, ins) for i, (s, d, ins) in enumerate(edges))
    ns = set(nodes or ()) | {begin, end}
    for e in es:
        ns.update((e.src, e.dst))
    sc, ar = _free_names(es)
    if (sc | set(scalars)) & (ar | set(arrays)):
        raise StructureError("a name is used both as a scalar and as an array")
    g = FlowGraph(tuple(sorted(ns)), es, begin, end,
                  frozenset(sc | set(scalars)), frozenset(ar | set(arrays)),
                  dict(provenance or {}))
    return g.validate() if validate else g


# ---------------------------------------------------------------------------
# The .fg text format


def parse_flowgraph(text: str) -> FlowGraph:
    """Parse the ``.fg`` line format into a validated flowgraph."""
    begin = end = None
    edges = []
    prov = {}
    nodes = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        col0 = len(raw) - len(raw.lstrip()) + 1
        words = line.split(None, 1)
        head = words[0]
        if head in ("begin", "end"):
            args = line.split()
            if len(args) != 2:
                raise ParseError(f"'{head}' takes exactly one node id", lineno, col0)
            if (begin if head == "begin" else end) is not None:
                raise ParseError(f"duplicate '{head}' declaration", lineno, col0)
            if head == "begin":
                begin = args[1]
            else:
                end = args[1]
            continue
        if head == "node":
            nodes.update(line.split()[1:])
            continue
        if head != "edge":
            raise ParseError(f"unknown declaration {head!r}", lineno, col0)
        parts = line.split(None, 4)
        if len(parts) < 5:
            raise ParseError("edge needs: edge <src> <dst> assign|assume <...>", lineno, col0)
        _, src, dst, kind, rest = parts
        rest_col = col0 + raw.strip().find(rest, len(" ".join(parts[:4])))
        ts = TokenStream(tokenize(rest, lineno, rest_col))
        ep = ExprParser(ts)
        if kind == "assign":
            var = ts.ident().text
            if not (ts.accept(":=") or ts.accept("=")):
                raise ts.error("expected ':='")
            instr = Assign(var, as_arith(ep.expression()))
        elif kind == "assume":
            instr = Assume(as_cond(ep.expression()))
        else:
            raise ParseError(f"unknown instruction kind {kind!r}", lineno, col0)
        if ts.peek().kind != "eof":
            raise ts.error(f"trailing input {ts.peek().text!r}")
        prov[len(edges)] = (lineno, col0)
        edges.append((src, dst, instr))
    if begin is None:
        raise ParseError("missing 'begin' declaration")
    if end is None:
        raise ParseError("missing 'end' declaration")
    return make_flowgraph(edges, begin, end, nodes=nodes, provenance=prov)


def lower_program(source: str, ignore_array_writes: bool = False) -> FlowGraph:
    """Lower mini-language source to a flowgraph (see :mod:`loopbound.lower`)."""
    from .lower import lower_program as _lower

    return _lower(source, ignore_array_writes=ignore_array_writes)


def load(path: str, kind: str = "auto", ignore_array_writes: bool = False) -> FlowGraph:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if kind == "auto":
        kind = "fg" if path.endswith(".fg") else "loopc"
    if kind == "fg":
        return parse_flowgraph(text)
    return lower_program(text, ignore_array_writes=ignore_array_writes)


# ---------------------------------------------------------------------------
# Graph queries


def backbones(P: FlowGraph, cap: Optional[int] = 256) -> list:
    """All simple begin-to-end paths, in lexicographic order of node ids."""
    out = []
    path = [P.begin]
    on_path = {P.begin}

    def dfs(n):
        if n == P.end:
            out.append(Backbone(tuple(path)))
            if cap is not None and len(out) > cap:
                raise BackboneLimitExceeded(f"more than {cap} backbones")
            return
        for e in P.out_edges(n):
            if e.dst in on_path:
                continue
            path.append(e.dst)
            on_path.add(e.dst)
            dfs(e.dst)
            path.pop()
            on_path.discard(e.dst)

    dfs(P.begin)
    return out


def _reach(P: FlowGraph, start: str, avoid: set, forward: bool) -> set:
    seen = {start}
    stack = [start]
    while stack:
        n = stack.pop()
        nxt = [e.dst for e in P.out_edges(n)] if forward else [e.src for e in P.in_edges(n)]
        for m in nxt:
            if m not in seen and m not in avoid:
                seen.add(m)
                stack.append(m)
    return seen


def loop_at(P: FlowGraph, backbone: Backbone, index: int) -> Optional[LoopRef]:
    """The loop entered at ``backbone.nodes[index]``, or None.

    The body consists of the nodes lying on a cycle through the entry that
    avoids every node before the entry on the backbone.
    """
    v = backbone.nodes[index]
    prefix = tuple(backbone.nodes[:index])
    avoid = set(prefix)
    fwd = _reach(P, v, avoid, True)
    if not any(e.src in fwd for e in P.in_edges(v)):
        return None
    bwd = _reach(P, v, avoid, False)
    return LoopRef(v, frozenset(fwd & bwd), backbone, prefix)


def fresh_node(P: FlowGraph, base: str) -> str:
    name = base + "'"
    while name in P._out:
        name += "'"
    return name


def induced_flowgraph(P: FlowGraph, loop: LoopRef) -> FlowGraph:
    v = loop.entry
    vend = fresh_node(P, v)
    edges = []
    for e in P.edges:
        if e.src in loop.body and e.dst in loop.body:
            edges.append(Edge(e.id, e.src, vend if e.dst == v else e.dst, e.instr))
    g = FlowGraph(tuple(sorted(loop.body | {vend})), tuple(edges), v, vend,
                  P.scalars, P.arrays,
                  {e.id: P.provenance[e.id] for e in edges if e.id in P.provenance})
    return g.validate(strict_branches=False)


def backbone_of_run(path, truncated: bool = False) -> tuple:
    """Project a run onto the acyclic prefix of the backbone it follows.

    Cycles are removed by repeatedly cutting the segment between the first
    and last occurrence of the leftmost repeating node. For a truncated
    (possibly infinite) run the result is cut after the leftmost node that
    keeps recurring in the second half of the trace.
    """
    p = list(path)
    tail = set(p[len(p) // 2:]) if truncated else set()
    if truncated:
        counts = {}
        for n in p:
            counts[n] = counts.get(n, 0) + 1
        tail = {n for n in tail if counts[n] > 1}
    i = 0
    while i < len(p):
        n = p[i]
        j = len(p) - 1 - p[::-1].index(n)
        if j > i:
            p = p[:i] + p[j:]
        i += 1
    if truncated:
        for k, n in enumerate(p):
            if n in tail:
                return tuple(p[:k + 1])
    return tuple(p)


def reachable_edges(P: FlowGraph, from_edge: Edge) -> set:
    """Ids of edges reachable from ``from_edge`` (including itself)."""
    nodes = _reach(P, from_edge.dst, set(), True)
    ids = {from_edge.id}
    for n in nodes:
        ids.update(e.id for e in P.out_edges(n))
    return ids


def reachable_nodes(P: FlowGraph, start: Optional[str] = None) -> set:
    return _reach(P, start or P.begin, set(), True)
