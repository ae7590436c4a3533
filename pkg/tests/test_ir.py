import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from loopbound import symexpr as sx
from loopbound.errors import BackboneLimitExceeded, ParseError, StructureError, UnsupportedFeature
from loopbound.ir import (backbone_of_run, backbones, induced_flowgraph, loop_at, lower_program,
                          make_flowgraph, parse_flowgraph)
from loopbound.ir import Assign, Assume

from conftest import CORPUS, corpus_files, load_corpus


def _shape(P):
    return sorted((e.src, e.dst, e.instr.render()) for e in P.edges)


def test_nonzeros_lowers_to_seven_nodes():
    P = load_corpus("nonzeros.loopc")
    assert sorted(P.nodes) == list("abcdefg")
    assert (P.begin, P.end) == ("a", "g")
    assert _shape(P) == [
        ("a", "b", "k := 0"),
        ("b", "c", "i := 0"),
        ("c", "d", "assume i < n && k < 3"),
        ("c", "g", "assume !(i < n && k < 3)"),
        ("d", "e", "assume A[i] != 0"),
        ("d", "f", "assume !(A[i] != 0)"),
        ("e", "f", "k := k + 1"),
        ("f", "c", "i := i + 1"),
    ]


def test_fig1_source_and_flowgraph_agree():
    assert _shape(load_corpus("fig1.loopc")) == _shape(load_corpus("fig1.fg"))


@pytest.mark.parametrize("path", corpus_files(), ids=lambda p: p.name)
def test_render_round_trips(path):
    P = load_corpus(path.name)
    P.validate()
    text = P.render()
    assert parse_flowgraph(text).render() == text


def test_array_writes_need_flag():
    src = (CORPUS / "bubble.loopc").read_text()
    with pytest.raises(UnsupportedFeature):
        lower_program(src)
    lower_program(src, ignore_array_writes=True).validate()


def test_jumps():
    P = lower_program("void f(int n) { int i = 0; L: if (i < n) { i++; goto L; } }")
    assert len(backbones(P)) == 1
    with pytest.raises(ParseError):
        lower_program("void f() { goto nowhere; }")
    with pytest.raises(ParseError):
        lower_program("void f() { break; }")


def test_infinite_loop_keeps_begin_free_of_incoming_edges():
    P = lower_program("void f() { while (true) { } }")
    P.validate()
    assert not P.in_edges(P.begin)


def test_validation_errors():
    with pytest.raises(StructureError):
        parse_flowgraph("begin a\nend c\nedge a b assume x < 1\nedge a c assume x < 2\nedge b c assign x := 1\n").validate()
    with pytest.raises(StructureError):
        make_flowgraph([("a", "b", Assign("x", sx.ONE)), ("a", "b", Assume(sx.TRUE))], "a", "b")
    with pytest.raises(ParseError):
        parse_flowgraph("begin a\nedge a b frobnicate\n")


def test_backbones_and_loops():
    P = load_corpus("nonzeros.loopc")
    (bb,) = backbones(P)
    assert bb.nodes == ("a", "b", "c", "g")
    loop = loop_at(P, bb, 2)
    assert loop.entry == "c" and loop.body == frozenset("cdef")
    assert loop_at(P, bb, 1) is None
    Q = induced_flowgraph(P, loop)
    assert Q.begin == "c" and Q.end not in P.nodes
    assert {e.id for e in Q.edges} <= {e.id for e in P.edges}
    assert len(backbones(Q)) == 2


def test_backbone_cap():
    src = "void f(int a, int b, int c) { if (a) a = 1; if (b) b = 1; if (c) c = 1; }"
    P = lower_program(src)
    assert len(backbones(P)) == 8
    with pytest.raises(BackboneLimitExceeded):
        backbones(P, cap=4)


def test_backbone_of_run():
    assert backbone_of_run(["a", "b", "c", "b", "c", "d"]) == ("a", "b", "c", "d")
    assert backbone_of_run(["a", "b", "d"]) == ("a", "b", "d")


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 3), min_size=0, max_size=6))
def test_backbone_of_run_is_a_backbone(trips):
    # one loop b -> c -> b, taken trips[0] times; the projection never repeats nodes
    path = ["a", "b"]
    for _ in range(sum(trips)):
        path += ["c", "b"]
    path.append("d")
    out = backbone_of_run(path)
    assert out == ("a", "b", "d")
    assert len(set(out)) == len(out)
