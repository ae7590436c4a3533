import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from loopbound import symexpr as sx
from loopbound.ir import lower_program
from loopbound.oracle import (Box, ConcreteInput, Status, explore, input_scalars, live_at_begin,
                              run_concrete, validate_bounds)

from conftest import load_corpus


def test_run_fig1():
    P = load_corpus("fig1.fg")
    trace = run_concrete(P, ConcreteInput({"x": 10}), record_path=True)
    assert trace.status is Status.FINISHED
    assert trace.edge_counts[P.edge_between("b", "c").id] == 3
    assert trace.path[0] == "a" and trace.path[-1] == "d"


@given(st.integers(-20, 40))
def test_fig1_count_is_exact_ceiling(x):
    P = load_corpus("fig1.fg")
    count = run_concrete(P, ConcreteInput({"x": x})).edge_counts.get(P.edge_between("b", "c").id, 0)
    assert count == max(0, -(-(x - 5) // 2))


def test_step_cap_and_undefined():
    P = load_corpus("incomplete.loopc")
    assert run_concrete(P, ConcreteInput({"x": 1}), step_cap=50).status is Status.STEP_CAP
    Q = lower_program("int f(int* A, int n) { int s = A[n]; return s; }")
    assert run_concrete(Q, ConcreteInput({"n": 3}, {"A": [1, 2]})).status is Status.UNDEFINED
    R = lower_program("void f(int n) { int x = 4 / n; }")
    assert run_concrete(R, ConcreteInput({"n": 0})).status is Status.UNDEFINED


def test_box_parse():
    assert Box.parse("-0:6,6,2") == Box(0, 6, 6, 2)
    assert Box.parse("-6:6,5,2") == Box()
    with pytest.raises(ValueError):
        Box.parse("nonsense")


def test_live_variables():
    P = load_corpus("nonzeros.loopc")
    assert live_at_begin(P) == {"n"}
    assert input_scalars(P) == ["n"]


def test_lazy_enumeration_covers_every_input():
    P = load_corpus("nonzeros.loopc")
    box = Box(0, 3, 3, 1)
    classes = list(explore(P, box))
    values = range(-box.value, box.value + 1)
    full = 0
    for n in range(box.lo, box.hi + 1):
        for size in range(box.max_size + 1):
            for arr in itertools.product(values, repeat=size):
                full += 1
                trace = run_concrete(P, ConcreteInput({"n": n}, {"A": list(arr)}))
                match = [c for c in classes
                         if c[0] == {"n": n} and c[1] == {"A": size}
                         and all(arr[i] == v for (_, i), v in c[2].items())]
                assert len(match) == 1
                assert match[0][3].edge_counts == trace.edge_counts
                assert match[0][3].status == trace.status
    weights = sum((2 * box.value + 1) ** (c[1]["A"] - len(c[2])) for c in classes)
    assert weights == full


def test_violations_are_reported():
    P = load_corpus("count_up.loopc")
    loop = P.edge_between("b", "c").id
    rep = validate_bounds(P, {loop: [sx.Const(2)]}, Box(-3, 5, 0, 0))
    assert not rep.ok
    assert {v.count for v in rep.violations} == {3, 4, 5}
    good = validate_bounds(P, {loop: [sx.Max((sx.ZERO, sx.Sym("n")))]}, Box(-3, 5, 0, 0))
    assert good.ok and good.tightness[("b", "c")] == 1.0


def test_empty_bound_sets_are_skipped():
    P = load_corpus("count_up.loopc")
    rep = validate_bounds(P, {P.edge_between("b", "c").id: []}, Box(0, 2, 0, 0))
    assert rep.skipped_edges == [("b", "c")]
