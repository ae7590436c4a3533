"""Satisfiability checks and counter-inequality extraction.

The internal checker works on an abstraction of the formula: max/min/ite,
ceil/floor and division by constants are replaced by fresh integer
variables with defining constraints, while powers, logarithms, sums,
nonlinear monomials and array reads become unconstrained variables.
Atoms mentioning the unknown value are weakened to true. Every step only
weakens the formula, so "unsat" answers remain valid for the original.

Unsatisfiability is proved by Fourier-Motzkin elimination with integer
tightening on each disjunct of the (lazily enumerated) DNF; satisfiability
of the abstraction is shown by a bounded search for an integer model.
"""

from __future__ import annotations

import enum
import math
import os
import shutil
import subprocess
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Optional

from . import symexpr as sx
from .errors import ExternalSolverError


class SatResult(enum.Enum):
    SAT = "sat"
    UNSAT = "unsat"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class CounterInequality:
    """``sum(coeffs[j] * k_j) < bound`` with positive integer coefficients."""

    coeffs: tuple  # ((counter id, positive int), ...)
    bound: sx.Expr

    def coeff(self, cid: int) -> int:
        return dict(self.coeffs).get(cid, 0)

    def render(self) -> str:
        lhs = " + ".join(f"{a}*k{j}" if a != 1 else f"k{j}" for j, a in self.coeffs)
        return f"{lhs} < {sx.render(self.bound)}"


@dataclass(frozen=True)
class GeometricInequality:
    """``scale * base**k < bound`` for a single counter ``k``."""

    base: int
    counter: int
    scale: sx.Expr
    bound: sx.Expr


# ---------------------------------------------------------------------------
# Abstraction to linear constraints
#
# Internal formulas are tuples:
#   ("const", bool) | ("atom", coeffs, c, op) | ("and", [..]) | ("or", [..])
# where an atom means  sum(coeffs[v] * v) + c  op  0  with op in <=, ==, !=.

_TRUE = ("const", True)
_FALSE = ("const", False)


def _atom(coeffs: dict, c: int, op: str):
    coeffs = {v: a for v, a in coeffs.items() if a}
    if not coeffs:
        holds = {"<=": c <= 0, "==": c == 0, "!=": c != 0}[op]
        return _TRUE if holds else _FALSE
    return ("atom", coeffs, c, op)


def _lin_sub(p, q):
    (a, c), (b, d) = p, q
    out = dict(a)
    for v, k in b.items():
        out[v] = out.get(v, 0) - k
    return out, c - d


class _Abstraction:
    def __init__(self):
        self.defs = []
        self.terms = {}
        self.counters = set()

    def var_for(self, e: sx.Expr) -> str:
        t = type(e)
        if t is sx.Sym:
            return "$" + e.name
        if t is sx.Counter:
            name = f"k{e.id}"
            self.counters.add(name)
            return name
        key = sx.render(e)
        if key in self.terms:
            return self.terms[key]
        v = f"t{len(self.terms)}"
        self.terms[key] = v
        self._define(v, e)
        return v

    def _define(self, v: str, e: sx.Expr):
        t = type(e)
        one = ({v: 1}, 0)
        if t in (sx.Max, sx.Min):
            lins = [self.lin(a) for a in e.args]
            sign = 1 if t is sx.Max else -1
            for a in lins:
                # Max: a - v <= 0   Min: v - a <= 0
                d = _lin_sub(a, one) if sign == 1 else _lin_sub(one, a)
                self.defs.append(_atom(d[0], d[1], "<="))
            self.defs.append(("or", [_atom(*_lin_sub(one, a), "==") for a in lins]))
        elif t is sx.Ite:
            c = self.formula(e.cond)
            nc = self.formula(sx.simplify(sx.negate(e.cond)))
            a, b = self.lin(e.then), self.lin(e.other)
            self.defs.append(("or", [("and", [c, _atom(*_lin_sub(one, a), "==")]),
                                     ("and", [nc, _atom(*_lin_sub(one, b), "==")])]))
        elif t in (sx.Ceil, sx.Floor) and type(e.den) is sx.Const and e.den.value > 0:
            self.defs.extend(self._rounding(v, 1, self.lin(e.num), e.den.value, t is sx.Ceil))
        elif t is sx.Div and type(e.den) is sx.Const and e.den.value != 0:
            d = abs(e.den.value)
            s = 1 if e.den.value > 0 else -1
            n = self.lin(e.num)
            nonneg = _atom({k: -a for k, a in n[0].items()}, -n[1], "<=")
            neg = _atom(n[0], n[1] + 1, "<=")
            self.defs.append(("or", [
                ("and", [nonneg] + self._rounding(v, s, n, d, False)),
                ("and", [neg] + self._rounding(v, s, n, d, True))]))
        # anything else stays unconstrained

    @staticmethod
    def _rounding(v: str, s: int, n, d: int, ceil: bool) -> list:
        """Constraints tying ``s*v`` to ceil or floor of ``n/d``."""
        dv = ({v: s * d}, 0)
        if ceil:  # n <= d*sv <= n + d - 1
            a = _lin_sub(n, dv)
            b = _lin_sub(dv, n)
            return [_atom(a[0], a[1], "<="), _atom(b[0], b[1] - (d - 1), "<=")]
        # n - d + 1 <= d*sv <= n
        a = _lin_sub(dv, n)
        b = _lin_sub(n, dv)
        return [_atom(a[0], a[1], "<="), _atom(b[0], b[1] - (d - 1), "<=")]

    def lin(self, e: sx.Expr):
        coeffs, c = {}, 0
        for mono, k in sx.poly_of(e).items():
            if mono == ():
                c += k
                continue
            if len(mono) == 1 and mono[0][1] == 1:
                v = self.var_for(mono[0][0])
            else:
                v = self.var_for(sx._mono_expr(mono, 1))
            coeffs[v] = coeffs.get(v, 0) + k
        return coeffs, c

    def formula(self, f: sx.Formula):
        t = type(f)
        if t is sx.BoolConst:
            return _TRUE if f.value else _FALSE
        if t is sx.Cmp:
            if sx.contains_unknown(f):
                return _TRUE
            d = _lin_sub(self.lin(f.lhs), self.lin(f.rhs))
            if f.op == "<":
                return _atom(d[0], d[1] + 1, "<=")
            return _atom(d[0], d[1], f.op)
        if t is sx.And:
            return ("and", [self.formula(a) for a in f.args])
        if t is sx.Or:
            return ("or", [self.formula(a) for a in f.args])
        if t is sx.Not:
            return self.formula(sx.simplify(sx.negate(f.arg)))
        raise TypeError(f"not a formula: {f!r}")


# ---------------------------------------------------------------------------
# Fourier-Motzkin with integer tightening


def _normalize(coeffs: dict, c: int):
    """Tighten ``sum a*x + c <= 0`` over the integers; None if trivially true."""
    coeffs = {v: a for v, a in coeffs.items() if a}
    if not coeffs:
        return False if c > 0 else None
    g = reduce(math.gcd, coeffs.values())
    if g > 1:
        coeffs = {v: a // g for v, a in coeffs.items()}
        c = -((-c) // g)  # ceil(c / g)
    return (tuple(sorted(coeffs.items())), c)


def _fm_infeasible(rows: list, cap: int = 4000) -> Optional[bool]:
    """True if the integer system is proved infeasible, False if FM finds it
    rationally feasible, None if the elimination blew up."""
    cons = {}
    for coeffs, c in rows:
        r = _normalize(coeffs, c)
        if r is False:
            return True
        if r is None:
            continue
        key, cc = r
        cons[key] = max(cons.get(key, cc), cc)
    while cons:
        vars_ = set()
        for key in cons:
            vars_.update(v for v, _ in key)
        if not vars_:
            break
        best, best_cost = None, None
        for v in sorted(vars_):
            pos = sum(1 for key in cons if dict(key).get(v, 0) > 0)
            neg = sum(1 for key in cons if dict(key).get(v, 0) < 0)
            cost = pos * neg - pos - neg
            if best_cost is None or cost < best_cost:
                best, best_cost = v, cost
        v = best
        pos, neg, rest = [], [], {}
        for key, c in cons.items():
            a = dict(key).get(v, 0)
            if a > 0:
                pos.append((dict(key), c, a))
            elif a < 0:
                neg.append((dict(key), c, -a))
            else:
                rest[key] = c
        for pk, pc, pa in pos:
            for nk, nc, na in neg:
                comb = {}
                for x, a in pk.items():
                    comb[x] = comb.get(x, 0) + na * a
                for x, a in nk.items():
                    comb[x] = comb.get(x, 0) + pa * a
                comb.pop(v, None)
                r = _normalize(comb, na * pc + pa * nc)
                if r is False:
                    return True
                if r is None:
                    continue
                key, cc = r
                rest[key] = max(rest.get(key, cc), cc)
        if len(rest) > cap:
            return None
        cons = rest
    return False


# ---------------------------------------------------------------------------
# Bounded integer model search

_BOX = 64


def _search_model(rows: list, counters: set, budget: int = 4000) -> Optional[dict]:
    vars_ = sorted({v for coeffs, _ in rows for v in coeffs})
    lo = {v: (0 if v in counters else -_BOX) for v in vars_}
    hi = {v: _BOX for v in vars_}
    rows = [(dict(c), k) for c, k in rows]
    nodes = [0]

    def propagate(lo, hi) -> bool:
        for _ in range(50):
            changed = False
            for coeffs, c in rows:
                mins = {v: min(a * lo[v], a * hi[v]) for v, a in coeffs.items()}
                total = sum(mins.values()) + c
                if total > 0:
                    return False
                for v, a in coeffs.items():
                    slack = -(total - mins[v])  # a*v <= slack
                    if a > 0:
                        nb = slack // a
                        if nb < hi[v]:
                            hi[v] = nb
                            changed = True
                    else:
                        nb = _ceil_div(-slack, -a)  # v >= slack / a
                        if nb > lo[v]:
                            lo[v] = nb
                            changed = True
                    if lo[v] > hi[v]:
                        return False
            if not changed:
                return True
        return True

    def go(lo, hi):
        nodes[0] += 1
        if nodes[0] > budget:
            raise _Budget()
        if not propagate(lo, hi):
            return None
        free = [v for v in vars_ if lo[v] < hi[v]]
        if not free:
            return dict(lo)
        v = min(free, key=lambda x: (hi[x] - lo[x], x))
        cands = sorted(range(lo[v], hi[v] + 1), key=lambda x: (abs(x), x))
        for val in cands:
            l2, h2 = dict(lo), dict(hi)
            l2[v] = h2[v] = val
            m = go(l2, h2)
            if m is not None:
                return m
        return None

    try:
        return go(lo, hi)
    except _Budget:
        return None


class _Budget(Exception):
    pass


def _ceil_div(a: int, b: int) -> int:
    return -((-a) // b)


# ---------------------------------------------------------------------------
# Public checker


def _disjuncts(root, limit: int):
    """Lazily enumerate conjunctions of atoms of the DNF of ``root``."""
    count = [0]

    def go(pending, atoms):
        pending = list(pending)
        while pending:
            g = pending.pop()
            kind = g[0]
            if kind == "const":
                if not g[1]:
                    return
                continue
            if kind == "and":
                pending.extend(g[1])
                continue
            if kind == "atom":
                if g[3] == "!=":
                    lt = ("atom", g[1], g[2] + 1, "<=")
                    gt = ("atom", {v: -a for v, a in g[1].items()}, -g[2] + 1, "<=")
                    g = ("or", [lt, gt])
                else:
                    atoms = atoms + [g]
                    continue
            for alt in g[1]:
                yield from go(pending + [alt], atoms)
            return
        count[0] += 1
        if count[0] > limit:
            raise _Budget()
        yield atoms

    return go([root], [])


def _rows(atoms) -> list:
    rows = []
    for _, coeffs, c, op in atoms:
        rows.append((coeffs, c))
        if op == "==":
            rows.append(({v: -a for v, a in coeffs.items()}, -c))
    return rows


def check_internal(phi: sx.Formula, disjunct_limit: int = 512) -> SatResult:
    phi = sx.simplify(phi)
    if phi == sx.TRUE:
        return SatResult.SAT
    if phi == sx.FALSE:
        return SatResult.UNSAT
    ab = _Abstraction()
    body = ab.formula(phi)
    root = ("and", [body] + ab.defs)
    unknown = False
    try:
        for atoms in _disjuncts(root, disjunct_limit):
            rows = _rows(atoms)
            for k in ab.counters:
                rows.append(({k: -1}, 0))
            proof = _fm_infeasible(rows)
            if proof:
                continue
            if _search_model(rows, ab.counters) is not None:
                return SatResult.SAT
            unknown = True
    except _Budget:
        return SatResult.UNKNOWN
    return SatResult.UNKNOWN if unknown else SatResult.UNSAT


class Solver:
    """Internal checker with an optional external SMT-LIB2 fallback."""

    def __init__(self, external: Optional["ExternalSolver"] = None, log: Optional[list] = None):
        self.external = external
        self.log = log
        self._cache = {}

    def is_satisfiable(self, phi: sx.Formula) -> SatResult:
        phi = sx.simplify(phi)
        if phi in self._cache:
            return self._cache[phi]
        res = check_internal(phi)
        if res is SatResult.UNKNOWN and self.external is not None:
            try:
                res = self.external.check(phi)
            except ExternalSolverError as exc:
                if self.log is not None:
                    self.log.append(f"external solver failed: {exc}")
                res = SatResult.UNKNOWN
        if res is SatResult.UNKNOWN and self.log is not None:
            self.log.append(f"satisfiability unknown: {sx.render(phi)}")
        self._cache[phi] = res
        return res


def is_satisfiable(phi: sx.Formula, solver: Optional[Solver] = None) -> SatResult:
    return (solver or Solver()).is_satisfiable(phi)


# ---------------------------------------------------------------------------
# Conjunctive normal form


def _literal_key(a: sx.Formula):
    return sx.render(a)


def cnf_clauses(phi: sx.Formula, cap: int = 64) -> list:
    """CNF of ``phi`` as a list of frozensets of atoms.

    When distributing a disjunction would exceed ``cap`` clauses, only the
    clauses shared by all its disjuncts are kept: a weaker but still implied
    conjunction.
    """
    phi = sx.simplify(phi)

    def go(f) -> list:
        t = type(f)
        if t is sx.BoolConst:
            return [] if f.value else [frozenset()]
        if t is sx.And:
            out = []
            for a in f.args:
                out.extend(go(a))
            return _reduce(out)
        if t is sx.Or:
            parts = [go(a) for a in f.args]
            size = 1
            for p in parts:
                size *= max(1, len(p))
            if size <= cap:
                acc = [frozenset()]
                for p in parts:
                    acc = _reduce([c | d for c in acc for d in p])
                return acc
            common = set(parts[0])
            for p in parts[1:]:
                common &= set(p)
            return _reduce(list(common))
        return [frozenset([f])]

    return sorted(go(phi), key=lambda c: sorted(_literal_key(a) for a in c))


def _tautology(clause: frozenset) -> bool:
    for a in clause:
        if type(a) is sx.Cmp and sx.simplify(sx.negate(a)) in clause:
            return True
    return False


def _reduce(clauses: list) -> list:
    uniq = []
    for c in sorted(set(clauses), key=len):
        if _tautology(c):
            continue
        if any(d <= c for d in uniq):
            continue
        uniq.append(c)
    return uniq


def to_cnf(phi: sx.Formula, cap: int = 64) -> sx.Formula:
    clauses = cnf_clauses(phi, cap)
    return sx.conj(sx.disj(sorted(c, key=_literal_key)) for c in clauses)


# ---------------------------------------------------------------------------
# Inequality extraction


def _int_coeffs(coeffs: dict) -> Optional[dict]:
    out = {}
    for j, a in coeffs.items():
        if type(a) is not sx.Const:
            return None
        out[j] = a.value
    return out


def _directed(atom: sx.Cmp):
    """Yield ``(expr, strict)`` meaning ``expr < 0`` (strict) or ``expr <= 0``."""
    d = sx.simplify(sx.Sub(atom.lhs, atom.rhs))
    if atom.op == "<":
        yield d, True
    elif atom.op == "<=":
        yield d, False
    elif atom.op == "==":
        yield d, False
        yield sx.simplify(sx.Mul((sx.Const(-1), d))), False


def singleton_atoms(phi: sx.Formula, cap: int = 64) -> list:
    return [next(iter(c)) for c in cnf_clauses(phi, cap) if len(c) == 1]


def extract_counter_inequalities(phi: sx.Formula, I: Iterable[int], cap: int = 64) -> list:
    I = set(I)
    out = []
    for atom in singleton_atoms(phi, cap):
        if type(atom) is not sx.Cmp or sx.contains_unknown(atom):
            continue
        for d, strict in _directed(atom):
            split = sx.split_counter_linear(d)
            if split is None:
                continue
            coeffs, rest = split
            ints = _int_coeffs(coeffs)
            if not ints or any(a <= 0 for a in ints.values()):
                continue
            if not I <= set(ints):
                continue
            # sum a*k + rest < 0  (or <= 0)
            bound = sx.simplify(sx.Mul((sx.Const(-1), rest)))
            if not strict:
                bound = sx.simplify(sx.Add((bound, sx.ONE)))
            g = reduce(math.gcd, ints.values())
            if g > 1 and type(bound) is sx.Const:
                ints = {j: a // g for j, a in ints.items()}
                bound = sx.Const(_ceil_div(bound.value, g))
            ineq = CounterInequality(tuple(sorted(ints.items())), bound)
            if ineq not in out:
                out.append(ineq)
    return out


def extract_geometric_inequalities(phi: sx.Formula, I: Iterable[int], cap: int = 64) -> list:
    I = set(I)
    if len(I) != 1:
        return []
    (cid,) = I
    out = []
    for atom in singleton_atoms(phi, cap):
        if type(atom) is not sx.Cmp or sx.contains_unknown(atom):
            continue
        for d, strict in _directed(atom):
            g = _match_geometric(d, cid)
            if g is None:
                continue
            base, scale, rest = g
            bound = sx.simplify(sx.Mul((sx.Const(-1), rest)))
            if not strict:
                bound = sx.simplify(sx.Add((bound, sx.ONE)))
            ineq = GeometricInequality(base, cid, sx.Const(scale), bound)
            if ineq not in out:
                out.append(ineq)
    return out


def _match_geometric(d: sx.Expr, cid: int):
    """Match ``d == scale * base**k_cid + rest`` with constant scale >= 1."""
    target = None
    rest = {}
    for mono, c in sx.poly_of(d).items():
        pows = [a for a, k in mono
                if type(a) is sx.Pow and a.exp == sx.Counter(cid) and type(a.base) is sx.Const]
        if pows:
            if target is not None or len(mono) != 1 or mono[0][1] != 1:
                return None
            target = (pows[0].base.value, c)
            continue
        if any(not sx.is_kappa_free(a) for a, _ in mono):
            return None
        rest[mono] = c
    if target is None:
        return None
    base, scale = target
    if base < 2 or scale < 1:
        return None
    return base, scale, sx.poly_to_expr(rest)


def compute_bounds(I: Iterable[int], phi: sx.Formula, solver: Optional[Solver] = None,
                   cap: int = 64, notes: Optional[list] = None) -> list:
    """Upper bounds on the number of iterations along the loop paths ``I``.

    Returns ``[0]`` when even a first iteration along ``I`` is infeasible,
    otherwise one bound per implied counter inequality (possibly none).
    """
    I = sorted(set(I))
    solver = solver or Solver()
    phi0 = sx.simplify(sx.substitute(phi, {sx.Counter(i): sx.ZERO for i in I}))
    if solver.is_satisfiable(phi0) is SatResult.UNSAT:
        return [sx.ZERO]
    bounds = []
    for ineq in extract_counter_inequalities(phi, I, cap):
        m = min(ineq.coeff(i) for i in I)
        b = sx.simplify(sx.Max((sx.ZERO, sx.Ceil(ineq.bound, sx.Const(m)))))
        if b not in bounds:
            bounds.append(b)
    for g in extract_geometric_inequalities(phi, I, cap):
        x = sx.Ceil(g.bound, g.scale)
        b = sx.simplify(sx.Max((sx.ZERO, sx.Log(g.base, x))))
        if b not in bounds:
            bounds.append(b)
    if not bounds and notes is not None:
        notes.append(f"no counter inequality found for paths {I}")
    return bounds


# ---------------------------------------------------------------------------
# SMT-LIB2


def _smt_int(n: int) -> str:
    return str(n) if n >= 0 else f"(- {-n})"


class _SmtWriter:
    def __init__(self):
        self.decls = {}
        self.asserts = []

    def name(self, raw: str) -> str:
        return "|" + raw.replace("|", "_") + "|"

    def declare(self, name: str, arity: int = 0):
        if name not in self.decls:
            args = " ".join(["Int"] * arity)
            self.decls[name] = f"(declare-fun {name} ({args}) Int)"

    def opaque(self, e: sx.Expr) -> str:
        n = self.name("t:" + sx.render(e))
        self.declare(n)
        return n

    def term(self, e: sx.Expr) -> str:
        t = type(e)
        if t is sx.Const:
            return _smt_int(e.value)
        if t is sx.Sym:
            n = self.name(e.name)
            self.declare(n)
            return n
        if t is sx.Counter:
            n = self.name(f"k{e.id}")
            if n not in self.decls:
                self.declare(n)
                self.asserts.append(f"(>= {n} 0)")
            return n
        if t is sx.ArrayRead:
            n = self.name("arr:" + e.name)
            self.declare(n, len(e.args))
            return f"({n} {' '.join(self.term(a) for a in e.args)})"
        if t is sx.Add:
            return f"(+ {' '.join(self.term(a) for a in e.args)})"
        if t is sx.Sub:
            return f"(- {self.term(e.lhs)} {self.term(e.rhs)})"
        if t is sx.Mul:
            consts = [a for a in e.args if type(a) is sx.Const]
            others = [a for a in e.args if type(a) is not sx.Const]
            if len(others) > 1:
                return self.opaque(e)
            k = 1
            for c in consts:
                k *= c.value
            inner = self.term(others[0]) if others else "1"
            return f"(* {_smt_int(k)} {inner})"
        if t in (sx.Max, sx.Min):
            acc = self.term(e.args[0])
            op = ">=" if t is sx.Max else "<="
            for a in e.args[1:]:
                b = self.term(a)
                acc = f"(ite ({op} {acc} {b}) {acc} {b})"
            return acc
        if t is sx.Ite:
            return f"(ite {self.formula(e.cond)} {self.term(e.then)} {self.term(e.other)})"
        if t in (sx.Ceil, sx.Floor) and type(e.den) is sx.Const and e.den.value > 0:
            n, d = self.term(e.num), e.den.value
            if t is sx.Floor:
                return f"(div {n} {d})"
            return f"(- (div (- {n}) {d}))"
        if t is sx.Div and type(e.den) is sx.Const and e.den.value != 0:
            n, d = self.term(e.num), abs(e.den.value)
            q = f"(ite (>= {n} 0) (div {n} {d}) (- (div (- {n}) {d})))"
            return q if e.den.value > 0 else f"(- {q})"
        return self.opaque(e)

    def formula(self, f: sx.Formula) -> str:
        t = type(f)
        if t is sx.BoolConst:
            return "true" if f.value else "false"
        if t is sx.Cmp:
            if sx.contains_unknown(f):
                return "true"
            a, b = self.term(f.lhs), self.term(f.rhs)
            if f.op == "!=":
                return f"(not (= {a} {b}))"
            op = {"<": "<", "<=": "<=", "==": "="}[f.op]
            return f"({op} {a} {b})"
        if t is sx.And:
            return f"(and {' '.join(self.formula(a) for a in f.args)})"
        if t is sx.Or:
            return f"(or {' '.join(self.formula(a) for a in f.args)})"
        if t is sx.Not:
            return f"(not {self.formula(f.arg)})"
        raise TypeError(f"not a formula: {f!r}")


def emit_smtlib(phi: sx.Formula) -> str:
    """An SMT-LIB2 script deciding (an abstraction of) ``phi``."""
    w = _SmtWriter()
    body = w.formula(sx.simplify(phi))
    lines = ["(set-logic QF_UFLIA)"]
    lines.extend(w.decls[k] for k in sorted(w.decls))
    lines.extend(f"(assert {a})" for a in w.asserts)
    lines.append(f"(assert {body})")
    lines.append("(check-sat)")
    lines.append("(exit)")
    return "\n".join(lines) + "\n"


class ExternalSolver:
    """Runs an SMT-LIB2 solver binary, feeding the script on standard input."""

    def __init__(self, path: str, timeout_ms: int = 5000, args: Optional[list] = None):
        resolved = shutil.which(path) or path
        if not os.path.exists(resolved):
            raise ExternalSolverError(f"solver binary not found: {path}")
        self.path = resolved
        self.timeout_ms = timeout_ms
        if args is None:
            base = os.path.basename(resolved)
            args = ["-in"] if base.startswith("z3") else (
                ["--lang=smt2"] if base.startswith("cvc") else [])
        self.args = list(args)

    def check_text(self, script: str) -> SatResult:
        try:
            proc = subprocess.run([self.path, *self.args], input=script, capture_output=True,
                                  text=True, timeout=self.timeout_ms / 1000.0 + 1.0)
        except subprocess.TimeoutExpired as exc:
            raise ExternalSolverError("solver timed out") from exc
        except OSError as exc:
            raise ExternalSolverError(str(exc)) from exc
        for line in proc.stdout.splitlines():
            word = line.strip()
            if word in ("sat", "unsat", "unknown"):
                return SatResult(word)
            if word:
                raise ExternalSolverError(f"unexpected solver output: {word[:80]}")
        raise ExternalSolverError(f"no answer from solver (exit {proc.returncode})")

    def check(self, phi: sx.Formula) -> SatResult:
        script = emit_smtlib(phi)
        if self.timeout_ms:
            script = f"(set-option :timeout {int(self.timeout_ms)})\n" + script
        return self.check_text(script)
