"""Symbolic integer expressions, formulas and symbolic memories.

Expressions are immutable trees. Program expressions share the same node
types: a program variable ``x`` is represented by ``Sym("x")`` and reading
array ``A`` at ``e`` by ``ArrayRead("A", (e,))``. Applying a memory to a
program expression therefore coincides with composing the memory with a
symbolic expression.

Canonical text rendering (also used for ordering and reports):

    $x          symbol of scalar x          k3        path counter 3
    $A(e, f)    array symbol applied        *         the unknown value
    max{a, b}   min{a, b}                   ceil(p/q) floor(p/q)
    div(p, q)   truncating division         ite(f, a, b)
    sum(K=lo..hi, body)                     pow(b, e)  clog(c, x)

``clog(c, x)`` is the ceiling logarithm: the least ``k >= 0`` with
``c**k >= x``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache, reduce
from typing import Callable, Iterable, Mapping, Optional, Union

from .errors import UnknownVariable


class Expr:
    """Base class of symbolic integer expressions."""

    __slots__ = ()

    def __add__(self, other):
        return Add((self, as_expr(other)))

    def __radd__(self, other):
        return Add((as_expr(other), self))

    def __sub__(self, other):
        return Sub(self, as_expr(other))

    def __rsub__(self, other):
        return Sub(as_expr(other), self)

    def __mul__(self, other):
        return Mul((self, as_expr(other)))

    def __rmul__(self, other):
        return Mul((as_expr(other), self))

    def __neg__(self):
        return Mul((Const(-1), self))

    def __str__(self):
        return render(self)


class Formula:
    """Base class of quantifier-free formulas over expressions."""

    __slots__ = ()

    def __and__(self, other):
        return And((self, other))

    def __or__(self, other):
        return Or((self, other))

    def __invert__(self):
        return Not(self)

    def __str__(self):
        return render(self)


@dataclass(frozen=True)
class Const(Expr):
    value: int


@dataclass(frozen=True)
class Sym(Expr):
    name: str


@dataclass(frozen=True)
class ArrayRead(Expr):
    name: str
    args: tuple


@dataclass(frozen=True)
class Counter(Expr):
    id: int


@dataclass(frozen=True)
class Unknown(Expr):
    pass


@dataclass(frozen=True)
class Index(Expr):
    """The bound variable of a BoundedSum."""

    name: str


@dataclass(frozen=True)
class Add(Expr):
    args: tuple


@dataclass(frozen=True)
class Sub(Expr):
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True)
class Mul(Expr):
    args: tuple


@dataclass(frozen=True)
class Div(Expr):
    num: Expr
    den: Expr


@dataclass(frozen=True)
class Max(Expr):
    args: tuple


@dataclass(frozen=True)
class Min(Expr):
    args: tuple


@dataclass(frozen=True)
class Ceil(Expr):
    num: Expr
    den: Expr


@dataclass(frozen=True)
class Floor(Expr):
    num: Expr
    den: Expr


@dataclass(frozen=True)
class Ite(Expr):
    cond: Formula
    then: Expr
    other: Expr


@dataclass(frozen=True)
class BoundedSum(Expr):
    index: str
    lower: Expr
    upper: Expr
    body: Expr


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exp: Expr


@dataclass(frozen=True)
class Log(Expr):
    base: int
    arg: Expr


@dataclass(frozen=True)
class BoolConst(Formula):
    value: bool


@dataclass(frozen=True)
class Cmp(Formula):
    op: str  # one of < <= == !=
    lhs: Expr
    rhs: Expr


@dataclass(frozen=True)
class And(Formula):
    args: tuple


@dataclass(frozen=True)
class Or(Formula):
    args: tuple


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula


STAR = Unknown()
TRUE = BoolConst(True)
FALSE = BoolConst(False)
ZERO = Const(0)
ONE = Const(1)

Node = Union[Expr, Formula]

_NEGATED_OP = {"<": "<=", "<=": "<", "==": "!=", "!=": "=="}


def as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not expressions")
    if isinstance(x, int):
        return Const(x)
    raise TypeError(f"cannot convert {x!r} to an expression")


def lt(a, b):
    return Cmp("<", as_expr(a), as_expr(b))


def le(a, b):
    return Cmp("<=", as_expr(a), as_expr(b))


def gt(a, b):
    return Cmp("<", as_expr(b), as_expr(a))


def ge(a, b):
    return Cmp("<=", as_expr(b), as_expr(a))


def eq(a, b):
    return Cmp("==", as_expr(a), as_expr(b))


def ne(a, b):
    return Cmp("!=", as_expr(a), as_expr(b))


def conj(parts: Iterable[Formula]) -> Formula:
    parts = tuple(parts)
    if not parts:
        return TRUE
    return parts[0] if len(parts) == 1 else And(parts)


def disj(parts: Iterable[Formula]) -> Formula:
    parts = tuple(parts)
    if not parts:
        return FALSE
    return parts[0] if len(parts) == 1 else Or(parts)


# ---------------------------------------------------------------------------
# Generic traversal


def children(e: Node) -> tuple:
    t = type(e)
    if t in (Const, Sym, Counter, Unknown, Index, BoolConst):
        return ()
    if t in (Add, Mul, Max, Min, And, Or, ArrayRead):
        return e.args
    if t is Sub:
        return (e.lhs, e.rhs)
    if t in (Div, Ceil, Floor):
        return (e.num, e.den)
    if t is Ite:
        return (e.cond, e.then, e.other)
    if t is BoundedSum:
        return (e.lower, e.upper, e.body)
    if t is Pow:
        return (e.base, e.exp)
    if t is Log:
        return (e.arg,)
    if t is Cmp:
        return (e.lhs, e.rhs)
    if t is Not:
        return (e.arg,)
    raise TypeError(f"not a node: {e!r}")


def rebuild(e: Node, kids: tuple) -> Node:
    t = type(e)
    if t in (Add, Mul, Max, Min, And, Or):
        return t(tuple(kids))
    if t is ArrayRead:
        return ArrayRead(e.name, tuple(kids))
    if t is Sub:
        return Sub(*kids)
    if t in (Div, Ceil, Floor):
        return t(*kids)
    if t is Ite:
        return Ite(*kids)
    if t is BoundedSum:
        return BoundedSum(e.index, *kids)
    if t is Pow:
        return Pow(*kids)
    if t is Log:
        return Log(e.base, kids[0])
    if t is Cmp:
        return Cmp(e.op, *kids)
    if t is Not:
        return Not(kids[0])
    return e


def walk(e: Node):
    stack = [e]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(children(n))


def is_kappa_free(e: Node) -> bool:
    return not any(type(n) is Counter for n in walk(e))


def contains_unknown(e: Node) -> bool:
    return any(type(n) is Unknown for n in walk(e))


def counters_of(e: Node) -> frozenset:
    return frozenset(n.id for n in walk(e) if type(n) is Counter)


def symbols_of(e: Node) -> frozenset:
    return frozenset(n.name for n in walk(e) if type(n) is Sym)


def arrays_of(e: Node) -> frozenset:
    return frozenset(n.name for n in walk(e) if type(n) is ArrayRead)


# ---------------------------------------------------------------------------
# Rendering


_ATOM = 3


def _prec(e: Expr) -> int:
    t = type(e)
    if t in (Add, Sub):
        return 1
    if t is Mul:
        return 2
    if t is Const and e.value < 0:
        return 1
    return _ATOM


def _wrap(e: Expr, prec: int) -> str:
    s = _render_expr(e)
    return f"({s})" if _prec(e) < prec else s


def _render_term(t: Expr, first: bool) -> str:
    """Render one summand of an Add, folding its sign into the joiner."""
    neg = False
    body = t
    if type(t) is Const and t.value < 0:
        neg, body = True, Const(-t.value)
    elif type(t) is Mul and type(t.args[0]) is Const and t.args[0].value < 0:
        neg = True
        c = -t.args[0].value
        rest = t.args[1:]
        if c == 1:
            body = rest[0] if len(rest) == 1 else Mul(rest)
        else:
            body = Mul((Const(c),) + rest)
    s = _wrap(body, 2 if neg else 1)
    if first:
        return f"-{s}" if neg else s
    return f" - {s}" if neg else f" + {s}"


def _render_expr(e: Expr) -> str:
    t = type(e)
    if t is Const:
        return str(e.value)
    if t is Sym:
        return f"${e.name}"
    if t is Counter:
        return f"k{e.id}"
    if t is Unknown:
        return "*"
    if t is Index:
        return e.name
    if t is ArrayRead:
        return f"${e.name}(" + ", ".join(_render_expr(a) for a in e.args) + ")"
    if t is Add:
        return "".join(_render_term(a, i == 0) for i, a in enumerate(e.args))
    if t is Sub:
        return f"{_wrap(e.lhs, 1)} - {_wrap(e.rhs, 2)}"
    if t is Mul:
        args = e.args
        if len(args) > 1 and type(args[0]) is Const and args[0].value == -1:
            return "-" + "*".join(_wrap(a, 2) for a in args[1:])
        return "*".join(_wrap(a, 2 if i == 0 else _ATOM) if type(a) is Const else _wrap(a, 2)
                        for i, a in enumerate(args))
    if t is Div:
        return f"div({_render_expr(e.num)}, {_render_expr(e.den)})"
    if t is Max:
        return "max{" + ", ".join(_render_expr(a) for a in e.args) + "}"
    if t is Min:
        return "min{" + ", ".join(_render_expr(a) for a in e.args) + "}"
    if t is Ceil:
        return f"ceil({_wrap(e.num, _ATOM)}/{_wrap(e.den, _ATOM)})"
    if t is Floor:
        return f"floor({_wrap(e.num, _ATOM)}/{_wrap(e.den, _ATOM)})"
    if t is Ite:
        return f"ite({_render_formula(e.cond)}, {_render_expr(e.then)}, {_render_expr(e.other)})"
    if t is BoundedSum:
        return (f"sum({e.index}={_render_expr(e.lower)}..{_render_expr(e.upper)}, "
                f"{_render_expr(e.body)})")
    if t is Pow:
        return f"pow({_render_expr(e.base)}, {_render_expr(e.exp)})"
    if t is Log:
        return f"clog({e.base}, {_render_expr(e.arg)})"
    raise TypeError(f"not an expression: {e!r}")


def _render_formula(f: Formula, parent: str = "") -> str:
    t = type(f)
    if t is BoolConst:
        return "true" if f.value else "false"
    if t is Cmp:
        return f"{_render_expr(f.lhs)} {f.op} {_render_expr(f.rhs)}"
    if t is Not:
        return f"!({_render_formula(f.arg)})"
    if t is And:
        s = " && ".join(_render_formula(a, "and") for a in f.args)
        return s
    if t is Or:
        s = " || ".join(_render_formula(a, "or") for a in f.args)
        return f"({s})" if parent == "and" else s
    raise TypeError(f"not a formula: {f!r}")


@lru_cache(maxsize=1 << 17)
def render(e: Node) -> str:
    if isinstance(e, Formula):
        return _render_formula(e)
    return _render_expr(e)


def _key(e: Node) -> str:
    return render(e)


# ---------------------------------------------------------------------------
# Substitution and memories


def substitute(e: Node, bindings: Mapping[Expr, Expr]) -> Node:
    """Simultaneously replace every key of ``bindings`` occurring in ``e``.

    Keys are Sym, Counter or Index nodes. Inserted subterms are never
    revisited, so ``{x: y, y: x}`` swaps the two.
    """
    if not bindings:
        return e
    return _subst(e, bindings)


_LEAF_KEYS = (Sym, Counter, Index)


def _subst(e, bindings):
    t = type(e)
    if t in _LEAF_KEYS:
        return bindings.get(e, e)
    if t in (Const, Unknown, BoolConst):
        return e
    if t is BoundedSum:
        inner = bindings
        idx = Index(e.index)
        if idx in bindings:
            inner = {k: v for k, v in bindings.items() if k != idx}
        return BoundedSum(e.index, _subst(e.lower, bindings), _subst(e.upper, bindings),
                          _subst(e.body, inner))
    kids = children(e)
    new = tuple(_subst(k, bindings) for k in kids)
    if all(a is b for a, b in zip(new, kids)):
        return e
    return rebuild(e, new)


@dataclass(frozen=True)
class SymbolicMemory:
    """Maps every scalar variable to an expression; arrays stay symbolic."""

    values: Mapping[str, Expr]
    arrays: frozenset = frozenset()

    @classmethod
    def initial(cls, scalars: Iterable[str], arrays: Iterable[str] = ()) -> "SymbolicMemory":
        return cls({a: Sym(a) for a in sorted(scalars)}, frozenset(arrays))

    def __getitem__(self, name: str) -> Expr:
        return self.values[name]

    def __contains__(self, name: str) -> bool:
        return name in self.values

    @property
    def scalars(self) -> tuple:
        return tuple(self.values)

    def assign(self, name: str, value: Expr) -> "SymbolicMemory":
        vals = dict(self.values)
        vals[name] = value
        return SymbolicMemory(vals, self.arrays)

    def map(self, fn: Callable[[str, Expr], Expr]) -> "SymbolicMemory":
        return SymbolicMemory({a: fn(a, v) for a, v in self.values.items()}, self.arrays)

    def bindings(self) -> dict:
        return {Sym(a): v for a, v in self.values.items() if not (type(v) is Sym and v.name == a)}

    def compose(self, psi: Node) -> Node:
        """Replace every symbol of a scalar variable in ``psi`` by its value here."""
        return substitute(psi, self.bindings())

    def apply(self, expr: Node) -> Node:
        """Evaluate a program expression (or condition) in this memory."""
        for n in walk(expr):
            if type(n) is Sym and n.name not in self.values:
                raise UnknownVariable(n.name)
        return self.compose(expr)

    def render(self) -> str:
        return ", ".join(f"{a} -> {render(v)}" for a, v in sorted(self.values.items()))


def apply_memory(theta: SymbolicMemory, expr: Node) -> Node:
    return theta.apply(expr)


def compose(theta: SymbolicMemory, psi: Node) -> Node:
    return theta.compose(psi)


# ---------------------------------------------------------------------------
# Evaluation


class _Undefined(Exception):
    pass


def _array_get(arr, idx: tuple) -> int:
    try:
        if callable(arr):
            return arr(*idx)
        if isinstance(arr, Mapping):
            key = idx[0] if len(idx) == 1 and idx[0] in arr else idx
            return arr[key]
        if len(idx) != 1:
            raise _Undefined()
        i = idx[0]
        if i < 0 or i >= len(arr):
            raise _Undefined()
        return arr[i]
    except (KeyError, IndexError):
        raise _Undefined() from None


def _trunc_div(n: int, d: int) -> int:
    q = abs(n) // abs(d)
    return q if (n >= 0) == (d > 0) else -q


def clog(base: int, x: int) -> int:
    """Least ``k >= 0`` with ``base**k >= x``."""
    k, p = 0, 1
    while p < x:
        p *= base
        k += 1
    return k


_SUM_LIMIT = 10 ** 6


def _ev(e, env, arrays, counters, idx):
    t = type(e)
    if t is Const:
        return e.value
    if t is Sym:
        try:
            return env[e.name]
        except KeyError:
            raise UnknownVariable(e.name) from None
    if t is Counter:
        try:
            return counters[e.id]
        except KeyError:
            raise UnknownVariable(f"k{e.id}") from None
    if t is Add:
        return sum(_ev(a, env, arrays, counters, idx) for a in e.args)
    if t is Mul:
        r = 1
        for a in e.args:
            r *= _ev(a, env, arrays, counters, idx)
        return r
    if t is Index:
        return idx[e.name]
    if t is Unknown:
        raise _Undefined()
    if t is Sub:
        return _ev(e.lhs, env, arrays, counters, idx) - _ev(e.rhs, env, arrays, counters, idx)
    if t is Max:
        return max(_ev(a, env, arrays, counters, idx) for a in e.args)
    if t is Min:
        return min(_ev(a, env, arrays, counters, idx) for a in e.args)
    if t is ArrayRead:
        vals = tuple(_ev(a, env, arrays, counters, idx) for a in e.args)
        if e.name not in arrays:
            raise UnknownVariable(e.name)
        return _array_get(arrays[e.name], vals)
    if t in (Div, Ceil, Floor):
        n = _ev(e.num, env, arrays, counters, idx)
        d = _ev(e.den, env, arrays, counters, idx)
        if d == 0:
            raise _Undefined()
        if t is Div:
            return _trunc_div(n, d)
        q = Fraction(n, d)
        return math.ceil(q) if t is Ceil else math.floor(q)
    if t is Ite:
        c = _evf(e.cond, env, arrays, counters, idx)
        return _ev(e.then if c else e.other, env, arrays, counters, idx)
    if t is BoundedSum:
        lo = _ev(e.lower, env, arrays, counters, idx)
        hi = _ev(e.upper, env, arrays, counters, idx)
        if hi - lo > _SUM_LIMIT:
            raise _Undefined()
        total = 0
        inner = dict(idx)
        for k in range(lo, hi + 1):
            inner[e.index] = k
            total += _ev(e.body, env, arrays, counters, inner)
        return total
    if t is Pow:
        b = _ev(e.base, env, arrays, counters, idx)
        x = _ev(e.exp, env, arrays, counters, idx)
        if x < 0:
            if b in (1, -1):
                return b ** (-x)
            raise _Undefined()
        if x > 100000 and abs(b) > 1:
            raise _Undefined()
        return b ** x
    if t is Log:
        return clog(e.base, _ev(e.arg, env, arrays, counters, idx))
    raise TypeError(f"cannot evaluate {e!r}")


def _evf(f, env, arrays, counters, idx) -> bool:
    t = type(f)
    if t is Cmp:
        a = _ev(f.lhs, env, arrays, counters, idx)
        b = _ev(f.rhs, env, arrays, counters, idx)
        op = f.op
        if op == "<":
            return a < b
        if op == "<=":
            return a <= b
        if op == "==":
            return a == b
        return a != b
    if t is BoolConst:
        return f.value
    if t is Not:
        return not _evf(f.arg, env, arrays, counters, idx)
    if t in (And, Or):
        short = t is Or
        undefined = False
        for a in f.args:
            try:
                if _evf(a, env, arrays, counters, idx) == short:
                    return short
            except _Undefined:
                undefined = True
        if undefined:
            raise _Undefined()
        return not short
    raise TypeError(f"cannot evaluate {f!r}")


def evaluate(e: Node, valuation: Optional[Mapping[str, int]] = None,
             arrays: Optional[Mapping] = None,
             counters: Optional[Mapping[int, int]] = None):
    """Concrete value of ``e``; ``None`` stands for the unknown value.

    ``arrays`` maps array names to a callable, a mapping keyed by index
    tuples, or a list (one-dimensional). Formulas evaluate to booleans.
    """
    env = valuation or {}
    arrs = arrays or {}
    ctrs = counters or {}
    try:
        if isinstance(e, Formula):
            return _evf(e, env, arrs, ctrs, {})
        return _ev(e, env, arrs, ctrs, {})
    except _Undefined:
        return None


# ---------------------------------------------------------------------------
# Polynomial normal form for sums of products


def _mono_key(mono: tuple):
    return [(_key(a), -k) for a, k in mono]


def _mono_mul(m1: tuple, m2: tuple) -> tuple:
    if not m1:
        return m2
    if not m2:
        return m1
    acc = {}
    for a, k in m1 + m2:
        acc[a] = acc.get(a, 0) + k
    return tuple(sorted(acc.items(), key=lambda ak: _key(ak[0])))


def poly_of(e: Expr) -> dict:
    """Polynomial view of a simplified expression: monomial -> coefficient."""
    t = type(e)
    if t is Const:
        return {(): e.value} if e.value else {}
    if t is Add:
        p = {}
        for a in e.args:
            for m, c in poly_of(a).items():
                p[m] = p.get(m, 0) + c
        return {m: c for m, c in p.items() if c}
    if t is Mul:
        p = {(): 1}
        for a in e.args:
            p = poly_mul(p, poly_of(a))
        return p
    return {((e, 1),): 1}


def poly_add(p: dict, q: dict, scale: int = 1) -> dict:
    r = dict(p)
    for m, c in q.items():
        r[m] = r.get(m, 0) + scale * c
    return {m: c for m, c in r.items() if c}


def poly_mul(p: dict, q: dict) -> dict:
    r = {}
    for m1, c1 in p.items():
        for m2, c2 in q.items():
            m = _mono_mul(m1, m2)
            r[m] = r.get(m, 0) + c1 * c2
    return {m: c for m, c in r.items() if c}


def _mono_expr(mono: tuple, coef: int) -> Expr:
    factors = tuple(a for a, k in mono for _ in range(k))
    if not factors:
        return Const(coef)
    if coef == 1:
        return factors[0] if len(factors) == 1 else Mul(factors)
    return Mul((Const(coef),) + factors)


def poly_to_expr(p: dict) -> Expr:
    items = [(m, c) for m, c in p.items() if c]
    items.sort(key=lambda mc: (len(mc[0]) == 0, _mono_key(mc[0])))
    terms = tuple(_mono_expr(m, c) for m, c in items)
    if not terms:
        return ZERO
    return terms[0] if len(terms) == 1 else Add(terms)


def poly_const(p: dict) -> Optional[int]:
    """The constant value of ``p`` if it has no variable monomials."""
    if all(m == () for m in p):
        return p.get((), 0)
    return None


# ---------------------------------------------------------------------------
# Simplification

SIMPLIFY_HOOK: Optional[Callable[[Node, Node], None]] = None


def simplify(e: Node) -> Node:
    """Evaluation-preserving rewrite into canonical form.

    Folds constants, expands products into a polynomial normal form with
    like terms collected, flattens and prunes max/min, cancels common
    factors in ceil/floor, absorbs the unknown value and normalises
    formulas to negation normal form with canonical comparisons.
    """
    out = _simplify(e)
    if SIMPLIFY_HOOK is not None:
        SIMPLIFY_HOOK(e, out)
    return out


@lru_cache(maxsize=1 << 16)
def _simplify(e: Node) -> Node:
    if isinstance(e, Formula):
        return _simplify_formula(e)
    t = type(e)
    if t in (Const, Sym, Counter, Unknown, Index):
        return e
    if t is ArrayRead:
        args = tuple(_simplify(a) for a in e.args)
        if any(type(a) is Unknown for a in args):
            return STAR
        return ArrayRead(e.name, args)
    if t in (Add, Sub, Mul):
        kids = tuple(_simplify(a) for a in children(e))
        if any(type(k) is Unknown for k in kids):
            return STAR
        if t is Add:
            p = {}
            for k in kids:
                p = poly_add(p, poly_of(k))
        elif t is Sub:
            p = poly_add(poly_of(kids[0]), poly_of(kids[1]), -1)
        else:
            p = {(): 1}
            for k in kids:
                p = poly_mul(p, poly_of(k))
        return poly_to_expr(p)
    if t is Div:
        n, d = _simplify(e.num), _simplify(e.den)
        if STAR in (n, d):
            return STAR
        if type(d) is Const:
            if d.value == 0:
                return Div(n, d)
            if type(n) is Const:
                return Const(_trunc_div(n.value, d.value))
            if d.value == 1:
                return n
            if d.value == -1:
                return poly_to_expr(poly_add({}, poly_of(n), -1))
        return Div(n, d)
    if t in (Ceil, Floor):
        return _simplify_round(t, _simplify(e.num), _simplify(e.den))
    if t in (Max, Min):
        return _simplify_extremum(t, e.args)
    if t is Ite:
        c = _simplify_formula(e.cond)
        if type(c) is BoolConst:
            return _simplify(e.then if c.value else e.other)
        if contains_unknown(c):
            return STAR
        a, b = _simplify(e.then), _simplify(e.other)
        if a == b:
            return a
        return Ite(c, a, b)
    if t is BoundedSum:
        return _simplify_sum(e)
    if t is Pow:
        b, x = _simplify(e.base), _simplify(e.exp)
        if STAR in (b, x):
            return STAR
        if type(x) is Const:
            if x.value == 0:
                return ONE
            if x.value == 1:
                return b
            if type(b) is Const and 0 < x.value <= 4096:
                return Const(b.value ** x.value)
        if b == ONE:
            return ONE
        return Pow(b, x)
    if t is Log:
        x = _simplify(e.arg)
        if x == STAR:
            return STAR
        if type(x) is Const:
            return Const(clog(e.base, x.value))
        return Log(e.base, x)
    raise TypeError(f"cannot simplify {e!r}")


def _simplify_round(t, n: Expr, d: Expr) -> Expr:
    if STAR in (n, d):
        return STAR
    if type(d) is not Const or d.value == 0:
        return t(n, d)
    dv = d.value
    p = poly_of(n)
    if dv < 0:
        p = poly_add({}, p, -1)
        dv = -dv
    c = poly_const(p)
    if c is not None:
        q = Fraction(c, dv)
        return Const(math.ceil(q) if t is Ceil else math.floor(q))
    g = reduce(math.gcd, p.values(), dv)
    if g > 1:
        p = {m: v // g for m, v in p.items()}
        dv //= g
    if dv == 1:
        return poly_to_expr(p)
    # pull out the integer part when only a constant remainder is left
    whole = {m: v // dv for m, v in p.items() if m != () and v % dv == 0}
    if len(whole) == len([m for m in p if m != ()]):
        r = Fraction(p.get((), 0), dv)
        whole[()] = math.ceil(r) if t is Ceil else math.floor(r)
        return poly_to_expr(whole)
    return t(poly_to_expr(p), Const(dv))


def _simplify_extremum(t, raw_args) -> Expr:
    flat = []
    todo = list(raw_args)
    while todo:
        a = _simplify(todo.pop(0))
        if type(a) is t:
            todo[0:0] = list(a.args)
            continue
        flat.append(a)
    if any(type(a) is Unknown for a in flat):
        return STAR
    pick = max if t is Max else min
    consts = [a.value for a in flat if type(a) is Const]
    args = []
    for a in flat:
        if type(a) is not Const and a not in args:
            args.append(a)
    if consts:
        args.append(Const(pick(consts)))
    # drop arguments dominated by a constant offset
    polys = [poly_of(a) for a in args]
    witnesses = [_bound_witnesses(a, p, t) for a, p in zip(args, polys)]
    keep = [True] * len(args)
    for i in range(len(args)):
        for j in range(len(args)):
            if i == j or not keep[i] or not keep[j]:
                continue
            # argument i beats argument j
            for w in witnesses[i]:
                diff = poly_const(poly_add(w, polys[j], -1))
                if diff is not None and ((t is Max and diff >= 0) or (t is Min and diff <= 0)):
                    keep[j] = False
                    break
    args = [a for a, k in zip(args, keep) if k]
    if len(args) == 1:
        return args[0]
    args.sort(key=lambda a: (type(a) is not Const, _key(a)))
    return t(tuple(args))


def _bound_witnesses(a: Expr, pa, t) -> list:
    """Polynomials known to be below ``a`` (for Max) or above it (for Min).

    Besides ``a`` itself, ``m + c`` with ``m`` of the same kind as ``t`` yields
    ``arg + c`` for every argument of ``m``.
    """
    out = [pa]
    inner, offset = None, 0
    if type(a) is t:
        inner = a
    elif type(a) is Add:
        rest = [x for x in a.args if type(x) is not Const]
        if len(rest) == 1 and type(rest[0]) is t:
            inner = rest[0]
            offset = sum(x.value for x in a.args if type(x) is Const)
    if inner is not None:
        for x in inner.args:
            out.append(poly_add(poly_of(x), {(): offset} if offset else {}, 1))
    return out


def _simplify_sum(e: BoundedSum) -> Expr:
    lo, hi, body = _simplify(e.lower), _simplify(e.upper), _simplify(e.body)
    if STAR in (lo, hi, body):
        return STAR
    idx = Index(e.index)
    if idx not in walk(body):
        count = _simplify(Max((ZERO, Add((hi, Mul((Const(-1), lo)), ONE)))))
        return _simplify(Mul((count, body)))
    if type(lo) is Const and type(hi) is Const:
        if hi.value < lo.value:
            return ZERO
        if hi.value - lo.value < 64:
            parts = tuple(substitute(body, {idx: Const(k)})
                          for k in range(lo.value, hi.value + 1))
            return _simplify(Add(parts))
    return BoundedSum(e.index, lo, hi, body)


def _split_sides(p: dict):
    pos = {m: c for m, c in p.items() if m != () and c > 0}
    neg = {m: -c for m, c in p.items() if m != () and c < 0}
    c0 = p.get((), 0)
    if c0 > 0:
        pos[()] = c0
    elif c0 < 0:
        neg[()] = -c0
    return poly_to_expr(pos), poly_to_expr(neg)


def _cmp_holds(op: str, d: int) -> bool:
    return {"<": d < 0, "<=": d <= 0, "==": d == 0, "!=": d != 0}[op]


def _simplify_cmp(op: str, lhs: Expr, rhs: Expr) -> Formula:
    l, r = _simplify(lhs), _simplify(rhs)
    if contains_unknown(l) or contains_unknown(r):
        return Cmp(op, l, r)
    p = poly_add(poly_of(l), poly_of(r), -1)
    c = poly_const(p)
    if c is not None:
        return TRUE if _cmp_holds(op, c) else FALSE
    a, b = _split_sides(p)
    if op in ("==", "!="):
        if (type(a) is Const and type(b) is not Const) or (
                type(a) is not Const and type(b) is not Const and _key(a) > _key(b)):
            a, b = b, a
    return Cmp(op, a, b)


def negate(f: Formula) -> Formula:
    """Negation pushed to the atoms (not simplified)."""
    t = type(f)
    if t is BoolConst:
        return FALSE if f.value else TRUE
    if t is Cmp:
        if f.op in ("<", "<="):
            return Cmp(_NEGATED_OP[f.op], f.rhs, f.lhs)
        return Cmp(_NEGATED_OP[f.op], f.lhs, f.rhs)
    if t is Not:
        return f.arg
    if t is And:
        return Or(tuple(negate(a) for a in f.args))
    if t is Or:
        return And(tuple(negate(a) for a in f.args))
    raise TypeError(f"not a formula: {f!r}")


def _simplify_formula(f: Formula) -> Formula:
    t = type(f)
    if t is BoolConst:
        return f
    if t is Cmp:
        return _simplify_cmp(f.op, f.lhs, f.rhs)
    if t is Not:
        return _simplify_formula(negate(f.arg))
    absorbing = FALSE if t is And else TRUE
    neutral = TRUE if t is And else FALSE
    out = []
    todo = list(f.args)
    while todo:
        a = _simplify_formula(todo.pop(0))
        if type(a) is t:
            todo[0:0] = list(a.args)
            continue
        if a == absorbing:
            return absorbing
        if a == neutral or a in out:
            continue
        out.append(a)
    for a in out:
        if type(a) is Cmp and not contains_unknown(a) and _simplify_formula(negate(a)) in out:
            return absorbing
    if not out:
        return neutral
    return out[0] if len(out) == 1 else t(tuple(out))


def drop_unknown(f: Formula) -> Formula:
    """Weaken ``f`` by replacing every atom that mentions the unknown value by true.

    Atoms sit under conjunctions and disjunctions only once the formula is
    in negation normal form, so the result is implied by ``f``.
    """
    f = simplify(f)

    def go(g):
        t = type(g)
        if t is Cmp:
            return TRUE if contains_unknown(g) else g
        if t in (And, Or):
            return t(tuple(go(a) for a in g.args))
        return g

    return simplify(go(f))


# ---------------------------------------------------------------------------
# Counter-linear forms


def split_counter_linear(e: Expr):
    """Split a simplified ``e`` into ``(coeffs, rest)`` with ``e == rest + sum coeffs[i]*k_i``.

    Every coefficient and ``rest`` are counter-free. Returns None when a
    counter occurs non-linearly (inside another node, squared, or
    multiplied with another counter).
    """
    coeffs = {}
    rest = {}
    for mono, c in poly_of(e).items():
        ctrs = [(a, k) for a, k in mono if type(a) is Counter]
        others = tuple((a, k) for a, k in mono if type(a) is not Counter)
        if any(not is_kappa_free(a) for a, _ in others):
            return None
        if not ctrs:
            rest[mono] = rest.get(mono, 0) + c
            continue
        if len(ctrs) != 1 or ctrs[0][1] != 1:
            return None
        cid = ctrs[0][0].id
        coeffs.setdefault(cid, {})
        coeffs[cid][others] = coeffs[cid].get(others, 0) + c
    out = {i: poly_to_expr(p) for i, p in coeffs.items()}
    return {i: v for i, v in sorted(out.items()) if v != ZERO}, poly_to_expr(rest)


@dataclass(frozen=True)
class AffineCounterForm:
    """Represents ``max{c, b + sum coeffs[i] * k_i}``."""

    c: Expr
    b: Expr
    coeffs: tuple  # ((counter id, coefficient expr), ...)

    def coeff(self, cid: int) -> Expr:
        return dict(self.coeffs).get(cid, ZERO)

    def to_expr(self) -> Expr:
        lin = Add((self.b,) + tuple(Mul((a, Counter(i))) for i, a in self.coeffs))
        return simplify(Max((self.c, lin)))


def match_affine_counter_form(e: Expr) -> Optional[AffineCounterForm]:
    e = simplify(e)
    if type(e) is not Max or is_kappa_free(e):
        return None
    free = [a for a in e.args if is_kappa_free(a)]
    bound = [a for a in e.args if not is_kappa_free(a)]
    if len(bound) != 1 or not free:
        return None
    split = split_counter_linear(bound[0])
    if split is None or not split[0]:
        return None
    coeffs, b = split
    c = simplify(Max(tuple(free)))
    return AffineCounterForm(c, b, tuple(coeffs.items()))
