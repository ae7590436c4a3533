import pytest
from hypothesis import given
from hypothesis import strategies as st

from loopbound import symexpr as sx
from loopbound.errors import ParseError, UnsupportedFeature
from loopbound.parse import SFor, SWhile, parse_expression, parse_program, tokenize


def test_precedence_follows_c():
    e = parse_expression("1 + 2 * x - y / 2")
    assert sx.evaluate(e, {"x": 3, "y": 7}) == 1 + 6 - 3


def test_logical_operators():
    f = parse_expression("!x || y && z")
    assert sx.evaluate(f, {"x": 1, "y": 1, "z": 0}) is False
    assert sx.evaluate(f, {"x": 0, "y": 0, "z": 0}) is True


@given(st.integers(-50, 50), st.integers(-9, 9).filter(bool))
def test_modulo_truncates_like_c(a, b):
    e = parse_expression("a % b")
    r = sx.evaluate(e, {"a": a, "b": b})
    q = abs(a) // abs(b) * (1 if (a >= 0) == (b > 0) else -1)
    assert r == a - b * q


def test_array_reads_are_tracked():
    prog = parse_program("int f(int* A, int n) { int s = 0; s = A[n - 1]; return s; }")
    assert "A" in prog.arrays
    assert "n" in prog.scalars and "s" in prog.scalars


def test_comments_are_skipped():
    toks = tokenize("x // line\n/* block */ y # hash\n")
    assert [t.text for t in toks if t.kind != "eof"] == ["x", "y"]


def test_statements():
    prog = parse_program("""
        void f(int n) {
          int i;
          for (i = 0; i < n; i++) { }
          while (n > 0) n -= 1;
        }""")
    kinds = [type(s) for s in prog.body.stmts]
    assert SFor in kinds and SWhile in kinds


@pytest.mark.parametrize("src", [
    "void f() { g(1); }",
    "void f(int *p) { *p = 1; }",
    "void f() { int x = h(); }",
])
def test_unsupported_features(src):
    with pytest.raises(UnsupportedFeature):
        parse_program(src)


def test_parse_error_has_position():
    with pytest.raises(ParseError) as info:
        parse_program("void f() {\n  int x = ;\n}")
    assert info.value.line == 2
