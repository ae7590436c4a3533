import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from loopbound import symexpr as sx
from loopbound.analysis import (AnalysisConfig, analyze, asymptotic_class, closed_form_sum,
                                compute_summary, edge_class, improve, program_class)
from loopbound.ir import lower_program
from loopbound.solver import Solver

from conftest import load_corpus

A, B = sx.Sym("a"), sx.Sym("b")
k1, k2 = sx.Counter(1), sx.Counter(2)


def _summary(memories, scalars=("a", "b")):
    mems = [sx.SymbolicMemory({v: m.get(v, sx.Sym(v)) for v in scalars}) for m in memories]
    return compute_summary((1, 2)[:len(memories)], mems, scalars)


def test_unmodified_variable():
    s = _summary([{}, {}])
    assert s.memory["a"] == A


def test_additive_progression():
    s = _summary([{"a": A + sx.Const(2)}, {"a": A + sx.ONE}])
    assert sx.render(s.memory["a"]) == "$a + 2*k1 + k2"


def test_multiplicative_progression():
    s = _summary([{"a": sx.Const(2) * A}])
    assert sx.render(s.memory["a"]) == "$a*pow(2, k1)"


def test_reset_to_invariant_value():
    s = _summary([{"a": sx.ZERO}, {"a": sx.ZERO}])
    m = s.memory["a"]
    assert sx.evaluate(m, {"a": 5}, counters={1: 0, 2: 0}) == 5
    assert sx.evaluate(m, {"a": 5}, counters={1: 0, 2: 3}) == 0


def test_single_path_dependent_on_own_counter():
    # b grows by one per iteration, a copies b: after k1 > 0 iterations a = b + k1 - 1
    s = _summary([{"a": B, "b": B + sx.ONE}])
    m = s.memory["a"]
    assert sx.evaluate(m, {"a": 9, "b": 4}, counters={1: 0}) == 9
    assert sx.evaluate(m, {"a": 9, "b": 4}, counters={1: 3}) == 6


def test_unimprovable_value_is_unknown():
    s = _summary([{"a": A * A}])
    assert s.memory["a"] == sx.STAR
    assert improve("a", [A * A], sx.SymbolicMemory({"a": sx.STAR}), (1,)) == sx.STAR


_FORMS = [
    lambda v, o, r: sx.Sym(v),
    lambda v, o, r: sx.Sym(v) + sx.Const(r.randint(-3, 3)),
    lambda v, o, r: sx.Const(r.randint(2, 3)) * sx.Sym(v),
    lambda v, o, r: sx.Const(r.randint(-4, 4)),
    lambda v, o, r: sx.Sym(o) + sx.Const(r.randint(-2, 2)),
    lambda v, o, r: sx.Sym(v) + sx.Sym(o),
]


@settings(max_examples=120, deadline=None)
@given(st.integers(0, 2 ** 32))
def test_summary_matches_interleaved_execution(seed):
    rng = random.Random(seed)
    paths = rng.randint(1, 3)
    mems = []
    for _ in range(paths):
        mems.append({v: rng.choice(_FORMS)(v, o, rng) for v, o in (("a", "b"), ("b", "a"))})
    counters = tuple(range(1, paths + 1))
    memories = [sx.SymbolicMemory(m) for m in mems]
    s = compute_summary(counters, memories, ("a", "b"))
    for kappa in itertools.product(range(4), repeat=paths):
        order = [i for i, k in enumerate(kappa) for _ in range(k)]
        rng.shuffle(order)
        init = {"a": rng.randint(-5, 5), "b": rng.randint(-5, 5)}
        state = dict(init)
        for i in order:
            state = {v: sx.evaluate(memories[i][v], state) for v in ("a", "b")}
        for v in ("a", "b"):
            if s.memory[v] == sx.STAR:
                continue
            assert sx.evaluate(s.memory[v], init, counters=dict(zip(counters, kappa))) == state[v]


def test_closed_form_sum_matches_bounded_sum():
    n = sx.Sym("n")
    closed = closed_form_sum(sx.ZERO, n - sx.ONE, sx.Const(-1), n, sx.TRUE, Solver())
    assert type(closed) is not sx.BoundedSum
    open_form = closed_form_sum(sx.ZERO, n - sx.ONE, sx.Const(-1), n)
    assert type(open_form) is sx.BoundedSum
    for v in range(-3, 12):
        assert sx.evaluate(closed, {"n": v}) == sx.evaluate(open_form, {"n": v}) == (v * (v - 1) // 2 if v > 0 else 0)


def test_closed_forms_flag_on_bubble():
    P = load_corpus("bubble.loopc")
    rep = analyze(P, AnalysisConfig(closed_forms=True))
    (b,) = rep.edge_bounds[P.edge_between("d", "e").id]
    for v in range(0, 9):
        assert sx.evaluate(b, {"n": v}) == v * (v - 1) // 2


n_, m_ = sx.Sym("n"), sx.Sym("m")


@pytest.mark.parametrize("expr, cls", [
    (sx.Const(3), "O(1)"),
    (sx.Max((sx.ZERO, n_)), "O(n)"),
    (sx.Ceil(n_ - sx.Const(5), sx.Const(2)), "O(n)"),
    (n_ * m_ + sx.ONE, "O(n^2)"),
    (sx.Mul((n_, n_, n_)), "O(n^3)"),
    (sx.Mul((n_, sx.Log(2, n_))), "O(n log n)"),
])
def test_asymptotic_classes(expr, cls):
    assert asymptotic_class(expr) == cls


def test_log_and_sum_classes():
    n = sx.Sym("n")
    assert asymptotic_class(sx.Log(2, n)) == "O(log n)"
    assert asymptotic_class(sx.BoundedSum("K", sx.ZERO, n, sx.Index("K"))) == "O(n^2)"
    assert asymptotic_class(sx.Pow(sx.Const(2), n)) == "O(2^n)"
    assert edge_class([]) == "unbounded"
    assert program_class([(1, 0), (0, 0)]) == "O(n)"
    assert program_class([(1, 0), "unbounded"]) == "unknown"


def test_smart_elimination_bounds_a_following_loop():
    P = lower_program("void f(int n) { int i = 0, j = 0; while (i < n) i++; while (j < i) j++; }")
    smart = analyze(P)
    plain = analyze(P, AnalysisConfig(smart_elim=False))
    assert sx.render(smart.loop_bounds["e"]) == "max{0, $n}"
    assert plain.loop_bounds["e"] is None
    assert plain.asymptotic == "unknown"


def test_prune_infeasible_zeroes_dead_backbones():
    P = lower_program("void f(int n) { int x = 0; if (n < 0) { if (n > 5) { x = 1; } } }")
    e = next(e for e in P.edges if getattr(e.instr, "var", None) == "x" and e.instr.expr == sx.ONE)
    assert analyze(P).edge_bounds[e.id] == [sx.ONE]
    assert analyze(P, AnalysisConfig(prune_infeasible=True)).edge_bounds[e.id] == [sx.ZERO]


def test_nested_loops_sum_inner_bounds():
    P = load_corpus("triangular.loopc")
    rep = analyze(P)
    inner = rep.loop_bounds["d"]
    for v in range(-2, 9):
        assert sx.evaluate(inner, {"n": v}) == (v * (v - 1) // 2 if v > 0 else 0)
    assert rep.asymptotic == "O(n^2)"


def test_unbounded_edges_are_reported():
    rep = analyze(load_corpus("incomplete.loopc"))
    assert rep.asymptotic == "unknown"
    assert any(not bs for bs in rep.edge_bounds.values())
    assert rep.diagnostics
