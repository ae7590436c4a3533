import itertools
import random
import shutil

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from loopbound import symexpr as sx
from loopbound.parse import parse_expression
from loopbound.solver import (ExternalSolver, SatResult, check_internal, cnf_clauses, compute_bounds,
                              emit_smtlib, extract_counter_inequalities,
                              extract_geometric_inequalities, to_cnf)

from gen import random_formula, random_valuation

k1, k2 = sx.Counter(1), sx.Counter(2)
Z3 = shutil.which("z3")


@pytest.mark.parametrize("text, expected", [
    ("x < 3 && 5 < x", SatResult.UNSAT),
    ("x < 3 && 2 < x", SatResult.UNSAT),
    ("2*x == 3", SatResult.UNSAT),
    ("x != x", SatResult.UNSAT),
    ("x < y && y < x + 1", SatResult.UNSAT),
    ("x < 3 && 1 < x", SatResult.SAT),
    ("x + y == 7 && x - y == 1", SatResult.SAT),
])
def test_check_internal(text, expected):
    assert check_internal(parse_expression(text)) is expected


def _linear_system(rng):
    atoms = []
    for _ in range(rng.randint(1, 4)):
        lhs = sx.Add((sx.Mul((sx.Const(rng.randint(-3, 3)), sx.Sym("x"))),
                      sx.Mul((sx.Const(rng.randint(-3, 3)), sx.Sym("y")))))
        atoms.append(sx.Cmp(rng.choice(["<", "<=", "==", "!="]), lhs, sx.Const(rng.randint(-6, 6))))
    return sx.conj(atoms)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2 ** 32))
def test_internal_checker_agrees_with_enumeration(seed):
    phi = _linear_system(random.Random(seed))
    res = check_internal(phi)
    has_model = any(sx.evaluate(phi, {"x": a, "y": b})
                    for a, b in itertools.product(range(-30, 31), repeat=2))
    if has_model:
        assert res is not SatResult.UNSAT
    if res is SatResult.SAT:
        assert has_model


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 32))
def test_cnf_is_equivalent(seed):
    rng = random.Random(seed)
    f = random_formula(rng, 3)
    clauses = cnf_clauses(sx.simplify(f), cap=10_000)
    g = to_cnf(f, cap=10_000)
    for _ in range(30):
        val = random_valuation(rng)
        want = sx.evaluate(f, val)
        if want is None:
            continue
        got = all(any(sx.evaluate(a, val) for a in c) for c in clauses)
        assert got == want
        assert sx.evaluate(g, val) == want


def test_cnf_over_cap_keeps_common_clauses():
    f = parse_expression("(a < 1 && b < 1) || c < 1")
    clauses = cnf_clauses(sx.simplify(f))
    assert len(clauses) == 2


def test_extract_counter_inequalities():
    phi = sx.lt(sx.Sym("i") + sx.Const(2) * k1, sx.Sym("x"))
    (ineq,) = extract_counter_inequalities(phi, [1])
    assert ineq.coeff(1) == 2
    assert sx.render(ineq.bound) == "-$i + $x"
    # the counter set of the inequality must cover I
    assert extract_counter_inequalities(phi, [1, 2]) == []


def test_compute_bounds_linear():
    phi = sx.lt(sx.Const(5) + sx.Const(2) * k1, sx.Sym("x"))
    (b,) = compute_bounds([1], phi)
    assert sx.render(b) == "max{0, ceil(($x - 5)/2)}"


def test_compute_bounds_unsat_gives_zero():
    phi = sx.conj([sx.lt(sx.Sym("x"), sx.ZERO), sx.lt(sx.ZERO, sx.Sym("x"))])
    assert compute_bounds([1], phi) == [sx.ZERO]


def test_compute_bounds_only_zeroes_counters_in_i():
    # k2 may still be positive; with k1 = 0 the condition stays satisfiable
    phi = sx.lt(k1 + k2, sx.Const(3))
    bounds = compute_bounds([1], phi)
    assert [sx.evaluate(b) for b in bounds] == [3]


def test_geometric_bound():
    phi = sx.lt(sx.Pow(sx.Const(2), k1), sx.Sym("n"))
    assert [g.base for g in extract_geometric_inequalities(phi, [1])] == [2]
    (b,) = compute_bounds([1], phi)
    for n in range(-3, 200):
        # iterations: least K with 2^K >= n
        count = 0
        while 2 ** count < n:
            count += 1
        assert sx.evaluate(b, {"n": n}) == count


def test_smtlib_text():
    text = emit_smtlib(parse_expression("x < 3 && A[x] > div(y, 2)"))
    assert "(set-logic QF_UFLIA)" in text
    assert "(declare-fun |arr:A| (Int) Int)" in text
    assert text.rstrip().endswith("(exit)")


@pytest.mark.skipif(Z3 is None, reason="z3 not installed")
@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32))
def test_external_solver_agrees_with_internal(seed):
    phi = _linear_system(random.Random(seed))
    internal = check_internal(phi)
    if internal is SatResult.UNKNOWN:
        return
    assert ExternalSolver(Z3).check(phi) is internal
