"""Reachability-bound analysis over flowgraphs.

The entry point is :func:`analyze`. Each backbone of a flowgraph is
executed symbolically; whenever the walk reaches a loop entry, the loop is
cut out as an induced flowgraph and processed recursively: its paths are
summarised over path counters, the necessary conditions for one more
iteration yield inequalities on the counters, and those give bounds on the
number of visits of every loop edge. Per-backbone bounds are merged by
taking maxima.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

from . import symexpr as sx
from .errors import BackboneLimitExceeded, LoopBoundError
from .ir import (Assign, Assume, Backbone, FlowGraph, backbones, induced_flowgraph, loop_at,
                 reachable_edges, reachable_nodes)
from .solver import SatResult, Solver, compute_bounds, extract_counter_inequalities


@dataclass
class AnalysisConfig:
    backbone_cap: int = 256
    smart_elim: bool = True
    prune_infeasible: bool = False
    closed_forms: bool = False
    product_cap: int = 64
    cnf_cap: int = 64
    strict: bool = False
    solver: Optional[Solver] = None


@dataclass
class BackboneState:
    backbone: Backbone
    memory: sx.SymbolicMemory
    condition: sx.Formula
    covered: frozenset = frozenset()  # edges on the backbone or on loops along it


@dataclass
class LoopSummary:
    counters: tuple
    memory: sx.SymbolicMemory
    path_conditions: tuple = ()


@dataclass
class LoopRecord:
    """Everything computed while processing one loop occurrence."""

    entry: str
    body: frozenset
    depth: int
    graph: FlowGraph
    paths: tuple
    path_memories: tuple
    path_conditions: tuple
    summary: LoopSummary
    iteration_bounds: list  # bounds on complete iterations (all paths)
    edge_bounds: dict  # edge id -> bounds contributed by this loop occurrence
    theta_in: sx.SymbolicMemory
    phi_in: sx.Formula


@dataclass
class AnalysisReport:
    graph: FlowGraph
    edge_bounds: dict  # edge id -> list of expressions (empty: no bound)
    loop_bounds: dict  # entry node -> expression or None
    asymptotic: str
    edge_classes: dict
    states: list
    loops: list
    diagnostics: list = field(default_factory=list)

    def bounds_between(self, src: str, dst: str) -> list:
        return self.edge_bounds[self.graph.edge_between(src, dst).id]

    def min_bound(self, eid: int) -> Optional[sx.Expr]:
        return min_of(self.edge_bounds[eid])


def min_of(bounds) -> Optional[sx.Expr]:
    bounds = list(bounds)
    if not bounds:
        return None
    return bounds[0] if len(bounds) == 1 else sx.simplify(sx.Min(tuple(bounds)))


def _dedupe(exprs) -> list:
    out = []
    for e in exprs:
        if e not in out:
            out.append(e)
    return out


class Analyzer:
    def __init__(self, config: Optional[AnalysisConfig] = None):
        self.config = config or AnalysisConfig()
        self.diagnostics = []
        self.solver = self.config.solver or Solver(log=self.diagnostics)
        self.loops = []
        self._next_counter = 1

    # -- helpers ---------------------------------------------------------

    def fresh_counters(self, n: int) -> tuple:
        ids = tuple(range(self._next_counter, self._next_counter + n))
        self._next_counter += n
        return ids

    def note(self, msg: str):
        if msg not in self.diagnostics:
            self.diagnostics.append(msg)

    def _plus(self, A: list, B: list) -> list:
        if not A or not B:
            return []
        if len(A) * len(B) > self.config.product_cap:
            return [sx.simplify(sx.Add((min_of(A), min_of(B))))]
        return _dedupe(sx.simplify(sx.Add((a, b))) for a in A for b in B)

    def _merge(self, sets: list) -> list:
        if any(not s for s in sets):
            return []
        size = 1
        for s in sets:
            size *= len(s)
        if size > self.config.product_cap:
            return [sx.simplify(sx.Max(tuple(min_of(s) for s in sets)))]
        return _dedupe(sx.simplify(sx.Max(combo)) for combo in itertools.product(*sets))

    def _bounds(self, I, phi) -> list:
        if not I:
            return [sx.ZERO]
        return compute_bounds(I, phi, self.solver, self.config.cnf_cap, self.diagnostics)

    # -- executeProgram ---------------------------------------------------

    def execute_program(self, P: FlowGraph, depth: int = 0):
        """Symbolically execute every backbone of ``P``.

        Returns the backbone states and a map from edge ids to bound lists.
        """
        paths = backbones(P, self.config.backbone_cap)
        states, per_path = [], []
        for pi in paths:
            try:
                state, beta = self._execute_backbone(P, pi, depth)
            except BackboneLimitExceeded:
                raise
            except (LoopBoundError, RecursionError, ZeroDivisionError, OverflowError) as exc:
                if self.config.strict:
                    raise
                self.note(f"backbone {pi} failed ({exc}); its edges are left unbounded")
                star = sx.SymbolicMemory({a: sx.STAR for a in P.scalars}, P.arrays)
                state = BackboneState(pi, star, sx.TRUE, frozenset(e.id for e in P.edges))
                beta = {e.id: [] for e in P.edges}
            if self.config.prune_infeasible and \
                    self.solver.is_satisfiable(state.condition) is SatResult.UNSAT:
                beta = {eid: [sx.ZERO] for eid in beta}
            states.append(state)
            per_path.append(beta)
        merged = {}
        for e in P.edges:
            if not per_path:
                merged[e.id] = [sx.ZERO]
            else:
                merged[e.id] = self._merge([b[e.id] for b in per_path])
        # edges a run can reach without lying on any backbone or loop along one
        covered = set()
        for s in states:
            covered |= s.covered
        live = reachable_nodes(P)
        for e in P.edges:
            if e.id not in covered and e.src in live:
                merged[e.id] = []
                self.note(f"edge {e.src}->{e.dst} lies on no backbone; left unbounded")
        return states, merged

    def _execute_backbone(self, P: FlowGraph, pi: Backbone, depth: int):
        theta = sx.SymbolicMemory.initial(P.scalars, P.arrays)
        phi = sx.TRUE
        beta = {e.id: [sx.ZERO] for e in P.edges}
        covered = set()
        nodes = pi.nodes
        for j in range(len(nodes) - 1):
            loop = loop_at(P, pi, j)
            if loop is not None:
                Q = induced_flowgraph(P, loop)
                beta_loop, theta = self.process_loop(Q, theta, phi, depth + 1, P)
                for e in Q.edges:
                    beta[e.id] = self._plus(beta[e.id], beta_loop[e.id])
                    covered.add(e.id)
            e = P.edge_between(nodes[j], nodes[j + 1])
            ins = e.instr
            if isinstance(ins, Assume):
                c = sx.drop_unknown(theta.apply(ins.cond))
                phi = sx.simplify(sx.And((phi, c)))
            elif isinstance(ins, Assign):
                theta = theta.assign(ins.var, sx.simplify(theta.apply(ins.expr)))
            beta[e.id] = _dedupe(sx.simplify(sx.Add((r, sx.ONE))) for r in beta[e.id])
            covered.add(e.id)
        return BackboneState(pi, theta, phi, frozenset(covered)), beta

    # -- computeSummary ---------------------------------------------------

    def compute_summary(self, paths_and_memories: list, scalars, arrays=frozenset()) -> LoopSummary:
        counters = self.fresh_counters(len(paths_and_memories))
        mems = [m for _, m in paths_and_memories]
        return compute_summary(counters, mems, scalars, arrays)

    # -- processLoop ------------------------------------------------------

    def process_loop(self, Q: FlowGraph, theta_in: sx.SymbolicMemory, phi_in: sx.Formula,
                     depth: int = 1, parent: Optional[FlowGraph] = None):
        states, beta_inner = self.execute_program(Q, depth)
        summary = self.compute_summary([(s.backbone, s.memory) for s in states],
                                       Q.scalars, Q.arrays)
        theta_k = summary.memory
        ks = summary.counters
        phis = []
        for s in states:
            inner = theta_in.compose(theta_k.compose(s.condition))
            phis.append(sx.simplify(sx.And((phi_in, sx.drop_unknown(inner)))))
        summary.path_conditions = tuple(phis)
        beta_k = {}
        for e in Q.edges:
            vals = [sx.simplify(theta_in.compose(theta_k.compose(r))) for r in beta_inner[e.id]]
            beta_k[e.id] = _dedupe(v for v in vals if not sx.contains_unknown(v))

        def disj(idx):
            return sx.simplify(sx.Or(tuple(phis[i] for i in idx))) if idx else sx.FALSE

        beta_loop = {}
        bounds_cache = {}
        for e in Q.edges:
            I = tuple(i for i, s in enumerate(states) if e.id in s.covered)
            key = I
            if key not in bounds_cache:
                bounds_cache[key] = self._bounds([ks[i] for i in I], disj(I))
            B_outer = bounds_cache[key]
            out = []
            if sx.ZERO in B_outer:
                out = [sx.ZERO]
            else:
                for rho in beta_k[e.id]:
                    if sx.is_kappa_free(rho):
                        out.extend(sx.simplify(sx.Mul((rho, ro))) for ro in B_outer)
                        continue
                    form = _affine_form(rho)
                    if form is None:
                        self.note(f"bound {sx.render(rho)} on {e.src}->{e.dst} has no usable shape")
                        continue
                    in_I = {ks[i] for i in I}
                    coeff = dict(form.coeffs)
                    J = [j for j in sorted(coeff) if j not in in_I and coeff[j] != sx.ZERO]
                    if J:
                        idxJ = tuple(ks.index(j) for j in J)
                        B_J = self._bounds(list(J), disj(idxJ))
                    else:
                        B_J = [sx.ZERO]
                    if not B_J:
                        self.note(f"no bound on paths {J} needed for {e.src}->{e.dst}")
                        continue
                    mB = min_of(B_J)
                    if sx.contains_unknown(mB):
                        continue
                    aJ = sx.Max((sx.ZERO,) + tuple(coeff[j] for j in J))
                    b2 = sx.simplify(sx.Add((form.b, sx.Mul((aJ, mB)))))
                    a = sx.simplify(sx.Max(tuple(coeff.get(k, sx.ZERO) for k in sorted(in_I))))
                    for ro in B_outer:
                        out.append(self.closed_form_sum(form.c, b2, a, ro, phi_in))
            beta_loop[e.id] = _dedupe(out)
        # iterations that start but never finish
        empty = {e.id for e in Q.edges if not beta_k[e.id]}
        if empty:
            for e in Q.edges:
                if reachable_edges(Q, e) & empty:
                    extra = [r for r in beta_k[e.id] if sx.is_kappa_free(r)]
                    beta_loop[e.id] = self._plus(beta_loop[e.id], extra)
        # memory after the loop
        all_idx = tuple(range(len(states)))
        iter_bounds = bounds_cache.get(all_idx)
        if iter_bounds is None:
            iter_bounds = self._bounds(list(ks), disj(all_idx))
        theta_out = theta_in.map(lambda a, v: sx.simplify(theta_in.compose(theta_k[a])))
        theta_out = self.eliminate_counters(theta_out, Q, parent, states, summary, theta_in)
        self.loops.append(LoopRecord(
            Q.begin, frozenset(n for n in Q.nodes if n != Q.end), depth, Q,
            tuple(s.backbone for s in states), tuple(s.memory for s in states),
            tuple(s.condition for s in states), summary, iter_bounds, dict(beta_loop),
            theta_in, phi_in))
        return beta_loop, theta_out

    # -- counter elimination ---------------------------------------------

    def eliminate_counters(self, theta_out: sx.SymbolicMemory, Q: FlowGraph,
                           parent: Optional[FlowGraph], states: list, summary: LoopSummary,
                           theta_in: sx.SymbolicMemory) -> sx.SymbolicMemory:
        binding = None
        if self.config.smart_elim and parent is not None:
            binding = self._exact_iterations(Q, parent, states, summary, theta_in)

        def elim(a, v):
            if sx.is_kappa_free(v):
                return v
            if binding is not None:
                w = sx.simplify(sx.substitute(v, binding))
                if sx.is_kappa_free(w):
                    return w
            return sx.STAR

        return theta_out.map(elim)

    def _exact_iterations(self, Q, parent, states, summary, theta_in) -> Optional[dict]:
        """Counter value at loop exit, when the loop has one path and a plain guard."""
        if len(states) != 1:
            return None
        v = Q.begin
        body = set(Q.nodes) - {Q.end}
        for n in body:
            for e in parent.out_edges(n):
                if e.dst not in body and n != v:
                    return None
        outs = parent.out_edges(v)
        if len(outs) != 2:
            return None
        inside = [e for e in outs if e.dst in body]
        if len(inside) != 1 or not isinstance(inside[0].instr, Assume):
            return None
        (k,) = summary.counters
        guard = sx.simplify(theta_in.compose(summary.memory.compose(inside[0].instr.cond)))
        if type(guard) is not sx.Cmp or guard.op not in ("<", "<=") or sx.contains_unknown(guard):
            return None
        ineqs = extract_counter_inequalities(guard, [k])
        if len(ineqs) != 1 or len(ineqs[0].coeffs) != 1:
            return None
        a = ineqs[0].coeff(k)
        count = sx.simplify(sx.Max((sx.ZERO, sx.Ceil(ineqs[0].bound, sx.Const(a)))))
        return {sx.Counter(k): count}

    # -- closed forms -------------------------------------------------------

    def closed_form_sum(self, c: sx.Expr, b2: sx.Expr, a: sx.Expr, rho: sx.Expr,
                        phi_in: sx.Formula = sx.TRUE) -> sx.Expr:
        return closed_form_sum(c, b2, a, rho, phi_in,
                               self.solver if self.config.closed_forms else None)

    # -- driver -----------------------------------------------------------

    def analyze(self, P: FlowGraph) -> AnalysisReport:
        states, beta = self.execute_program(P, 0)
        lb = loop_bounds(P, beta, self.loops)
        growths = {eid: edge_growth(bs) for eid, bs in beta.items()}
        classes = {eid: UNBOUNDED if g == UNBOUNDED else render_class(g)
                   for eid, g in growths.items()}
        overall = program_class(growths.values())
        if overall == "unknown":
            self.note("some edge has no bound; asymptotic class unknown")
        return AnalysisReport(P, beta, lb, overall, classes, states, list(self.loops),
                              list(self.diagnostics))


def _affine_form(rho: sx.Expr) -> Optional[sx.AffineCounterForm]:
    form = sx.match_affine_counter_form(rho)
    if form is not None:
        return form
    # a bare counter-linear bound: visits are never negative, so max{0, .} is equivalent
    split = sx.split_counter_linear(rho)
    if split is None or not split[0]:
        return None
    coeffs, b = split
    return sx.AffineCounterForm(sx.ZERO, b, tuple(coeffs.items()))


# ---------------------------------------------------------------------------
# computeSummary


def _divide_by(e: sx.Expr, a: sx.Expr) -> Optional[sx.Expr]:
    """``e / a`` when every monomial of ``e`` contains ``a`` exactly once."""
    out = {}
    for mono, c in sx.poly_of(e).items():
        exps = dict(mono)
        if exps.get(a) != 1:
            return None
        rest = tuple((x, k) for x, k in mono if x != a)
        out[rest] = out.get(rest, 0) + c
    return sx.poly_to_expr(out)


def _usable(t: sx.Expr) -> bool:
    return not sx.contains_unknown(t) and sx.is_kappa_free(t)


def improve(a: str, vals: list, theta_k: sx.SymbolicMemory, counters: tuple) -> sx.Expr:
    """One attempt at an exact value for ``a`` after the counted iterations."""
    A = sx.Sym(a)
    changed = [i for i, v in enumerate(vals) if v != A]
    # 1: never modified
    if not changed:
        return A
    # 2: additive or multiplicative progression
    terms = []
    for i in changed:
        d = sx.simplify(sx.Sub(vals[i], A))
        t = sx.simplify(theta_k.compose(d))
        if not _usable(t):
            break
        terms.append(sx.Mul((t, sx.Counter(counters[i]))))
    else:
        return sx.simplify(sx.Add((A,) + tuple(terms)))
    factors = []
    for i in changed:
        d = _divide_by(vals[i], A)
        if d is None:
            break
        t = sx.simplify(theta_k.compose(d))
        if not _usable(t):
            break
        factors.append(sx.Pow(t, sx.Counter(counters[i])))
    else:
        return sx.simplify(sx.Mul((A,) + tuple(factors)))
    # 3: reset to a common loop-invariant value
    d = vals[changed[0]]
    if all(vals[i] == d for i in changed):
        t = sx.simplify(theta_k.compose(d))
        if _usable(t):
            total = sx.Add(tuple(sx.Counter(counters[i]) for i in changed))
            return sx.simplify(sx.Ite(sx.lt(0, total), t, A))
    # 4: a single path modifies a, depending only on its own counter
    if len(changed) == 1:
        i = changed[0]
        k = sx.Counter(counters[i])
        t = sx.simplify(theta_k.compose(vals[i]))
        if not sx.contains_unknown(t) and sx.counters_of(t) <= {counters[i]}:
            prev = sx.simplify(sx.substitute(t, {k: sx.Sub(k, sx.ONE)}))
            return sx.simplify(sx.Ite(sx.lt(0, k), prev, A))
    return sx.STAR


def compute_summary(counters: tuple, memories: list, scalars, arrays=frozenset()) -> LoopSummary:
    """Memory after ``counters[i]`` iterations along path ``i`` (any interleaving)."""
    theta_k = sx.SymbolicMemory({a: sx.STAR for a in sorted(scalars)}, frozenset(arrays))
    vals = {a: [sx.simplify(m[a]) for m in memories] for a in sorted(scalars)}
    changed = True
    while changed:
        changed = False
        for a in sorted(scalars):
            if theta_k[a] != sx.STAR:
                continue
            b = improve(a, vals[a], theta_k, counters)
            if b != sx.STAR:
                theta_k = theta_k.assign(a, b)
                changed = True
    return LoopSummary(tuple(counters), theta_k)


# ---------------------------------------------------------------------------
# Sums over outer iterations

SUM_INDEX = "K"


def closed_form_sum(c: sx.Expr, b2: sx.Expr, a: sx.Expr, rho: sx.Expr,
                    phi_in: sx.Formula = sx.TRUE, solver: Optional[Solver] = None) -> sx.Expr:
    """``sum(K=0..rho-1, max{c, b2 + a*K})``, in closed form when that is provably equal.

    The closed form is used only when a solver is given, ``a`` is constant
    and the solver shows that every term of the sum is at least ``c``.
    """
    K = sx.Index(SUM_INDEX)
    body = sx.Max((c, sx.Add((b2, sx.Mul((a, K))))))
    total = sx.simplify(sx.BoundedSum(SUM_INDEX, sx.ZERO, sx.Sub(rho, sx.ONE), body))
    if solver is None or type(a) is not sx.Const or type(total) is not sx.BoundedSum:
        return total
    n = sx.Max((sx.ZERO, rho))
    first_low = sx.And((phi_in, sx.le(1, n), sx.lt(b2, c)))
    last_low = sx.And((phi_in, sx.le(1, n),
                       sx.lt(sx.Add((b2, sx.Mul((a, sx.Sub(n, sx.ONE))))), c)))
    if solver.is_satisfiable(first_low) is not SatResult.UNSAT:
        return total
    if solver.is_satisfiable(last_low) is not SatResult.UNSAT:
        return total
    series = sx.Add((sx.Mul((n, b2)),
                     sx.Mul((a, sx.Floor(sx.Mul((n, sx.Sub(n, sx.ONE))), sx.Const(2))))))
    return sx.simplify(sx.Max((sx.ZERO, series)))


# ---------------------------------------------------------------------------
# Loop bounds and asymptotics


def loop_bounds(P: FlowGraph, beta: dict, loops: list) -> dict:
    """Per loop entry: the sum of the min-bounds of the edges entering the body."""
    out = {}
    seen = set()
    for rec in loops:
        key = (rec.entry, rec.body)
        if key in seen:
            continue
        seen.add(key)
        total = []
        for e in P.out_edges(rec.entry):
            if e.dst in rec.body:
                total.append(min_of(beta.get(e.id, [])))
        if any(t is None for t in total) or not total:
            val = None
        else:
            val = sx.simplify(sx.Add(tuple(total))) if len(total) > 1 else total[0]
        if rec.entry in out and out[rec.entry] is not None and val is not None \
                and out[rec.entry] != val:
            val = sx.simplify(sx.Max((out[rec.entry], val)))
        elif rec.entry in out and out[rec.entry] is None:
            val = None
        out[rec.entry] = val
    return dict(sorted(out.items()))


_EXP = (10 ** 9, 0)


def growth(e: sx.Expr):
    """Asymptotic growth ``(d, l)`` meaning n^d * log(n)^l, or None if unknown."""
    t = type(e)
    if t is sx.Const:
        return (0, 0)
    if t in (sx.Sym, sx.ArrayRead, sx.Counter, sx.Index):
        return (1, 0)
    if t is sx.Unknown:
        return None
    if t in (sx.Add, sx.Mul, sx.Sub):
        best = (0, 0)
        for mono, c in sx.poly_of(sx.simplify(e)).items():
            if c <= 0:
                continue
            g = (0, 0)
            for atom, k in mono:
                ga = growth(atom)
                if ga is None:
                    return None
                g = (g[0] + k * ga[0], g[1] + k * ga[1])
            best = max(best, g)
        return best
    if t in (sx.Max, sx.Min, sx.Ite):
        kids = e.args if t is not sx.Ite else (e.then, e.other)
        gs = [growth(a) for a in kids]
        if any(g is None for g in gs):
            return None
        return max(gs) if t is not sx.Min else min(gs)
    if t in (sx.Ceil, sx.Floor, sx.Div):
        return growth(e.num)
    if t is sx.BoundedSum:
        gu, gb = growth(e.upper), growth(e.body)
        if gu is None or gb is None:
            return None
        return (gu[0] + gb[0], gu[1] + gb[1])
    if t is sx.Pow:
        gb, ge = growth(e.base), growth(e.exp)
        if gb is None or ge is None:
            return None
        if type(e.base) is sx.Const and abs(e.base.value) <= 1:
            return (0, 0)
        if ge == (0, 0) and type(e.exp) is sx.Const:
            return (gb[0] * e.exp.value, gb[1] * e.exp.value)
        return _EXP
    if t is sx.Log:
        g = growth(e.arg)
        if g is None:
            return None
        return (0, 0) if g == (0, 0) else (0, 1)
    return None


def render_class(g) -> str:
    if g is None:
        return "unknown"
    if g == _EXP:
        return "O(2^n)"
    d, l = g
    parts = []
    if d:
        parts.append("n" if d == 1 else f"n^{d}")
    if l:
        parts.append("log n" if l == 1 else f"log^{l} n")
    return "O(" + (" ".join(parts) or "1") + ")"


def asymptotic_class(e: sx.Expr) -> str:
    return render_class(growth(sx.simplify(e)))


UNBOUNDED = "unbounded"


def edge_growth(bounds: list):
    """Growth of the min-bound of an edge; ``UNBOUNDED`` for an empty set."""
    if not bounds:
        return UNBOUNDED
    return growth(min_of(bounds))


def edge_class(bounds: list) -> str:
    g = edge_growth(bounds)
    return UNBOUNDED if g == UNBOUNDED else render_class(g)


def program_class(growths) -> str:
    """The largest edge growth; unknown if any edge is unbounded or unclassified."""
    best = (0, 0)
    for g in growths:
        if g == UNBOUNDED or g is None:
            return "unknown"
        best = max(best, g)
    return render_class(best)


def analyze(P: FlowGraph, config: Optional[AnalysisConfig] = None) -> AnalysisReport:
    return Analyzer(config).analyze(P)
