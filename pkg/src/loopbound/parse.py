"""Tokenizer and recursive-descent parsers for expressions and the mini-language.

Program expressions are built directly as symbolic expressions: a variable
``x`` becomes ``Sym("x")`` and ``A[i]`` becomes ``ArrayRead("A", (Sym("i"),))``.
Boolean operators produce formulas; where C would silently convert between
integers and truth values we do the same (``while (x)`` means ``x != 0``).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from . import symexpr as sx
from .errors import ParseError, UnsupportedFeature

_TOKEN = re.compile(
    r"""
    (?P<ws>[ \t\r\n]+)
  | (?P<comment>//[^\n]*|/\*.*?\*/|\#[^\n]*)
  | (?P<num>\d+)
  | (?P<id>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>:=|==|!=|<=|>=|&&|\|\||\+\+|--|\+=|-=|\*=|[-+*/%<>=!(){}\[\];,:&])
    """,
    re.S | re.X,
)

KEYWORDS = {"if", "else", "while", "for", "do", "break", "continue", "goto",
            "return", "assume", "int", "void", "true", "false"}


@dataclass(frozen=True)
class Token:
    kind: str  # num, id, op, eof
    text: str
    line: int
    col: int


def tokenize(text: str, line0: int = 1, col0: int = 1) -> list:
    out = []
    pos, line, col = 0, line0, col0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        s = m.group()
        if kind not in ("ws", "comment"):
            out.append(Token(kind, s, line, col))
        nl = s.count("\n")
        if nl:
            line += nl
            col = len(s) - s.rfind("\n")
        else:
            col += len(s)
        pos = m.end()
    out.append(Token("eof", "", line, col))
    return out


def as_cond(v) -> sx.Formula:
    return v if isinstance(v, sx.Formula) else sx.ne(v, 0)


def as_arith(v) -> sx.Expr:
    return v if isinstance(v, sx.Expr) else sx.Ite(v, sx.ONE, sx.ZERO)


class TokenStream:
    def __init__(self, tokens: list):
        self.toks = tokens
        self.i = 0

    def peek(self, k: int = 0) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def next(self) -> Token:
        t = self.toks[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def at(self, text: str, k: int = 0) -> bool:
        t = self.peek(k)
        return t.kind in ("op", "id") and t.text == text

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def expect(self, text: str) -> Token:
        t = self.peek()
        if not self.at(text):
            raise ParseError(f"expected {text!r}, found {t.text or 'end of input'!r}", t.line, t.col)
        return self.next()

    def ident(self) -> Token:
        t = self.peek()
        if t.kind != "id" or t.text in KEYWORDS:
            raise ParseError(f"expected identifier, found {t.text or 'end of input'!r}", t.line, t.col)
        return self.next()

    def error(self, msg: str) -> ParseError:
        t = self.peek()
        return ParseError(msg, t.line, t.col)


class ExprParser:
    """C-precedence expression parser; records which names are used as arrays."""

    def __init__(self, ts: TokenStream):
        self.ts = ts
        self.arrays = set()
        self.scalars = set()

    def expression(self):
        return self._or()

    def _or(self):
        v = self._and()
        while self.ts.accept("||"):
            v = sx.Or((as_cond(v), as_cond(self._and())))
        return v

    def _and(self):
        v = self._eq()
        while self.ts.accept("&&"):
            v = sx.And((as_cond(v), as_cond(self._eq())))
        return v

    def _eq(self):
        v = self._rel()
        while self.ts.at("==") or self.ts.at("!="):
            op = self.ts.next().text
            w = self._rel()
            v = sx.Cmp(op, as_arith(v), as_arith(w))
        return v

    def _rel(self):
        v = self._add()
        while any(self.ts.at(o) for o in ("<", "<=", ">", ">=")):
            op = self.ts.next().text
            a, b = as_arith(v), as_arith(self._add())
            v = {"<": sx.lt, "<=": sx.le, ">": sx.gt, ">=": sx.ge}[op](a, b)
        return v

    def _add(self):
        v = self._mul()
        while self.ts.at("+") or self.ts.at("-"):
            op = self.ts.next().text
            w = as_arith(self._mul())
            v = sx.Add((as_arith(v), w)) if op == "+" else sx.Sub(as_arith(v), w)
        return v

    def _mul(self):
        v = self._unary()
        while self.ts.at("*") or self.ts.at("/") or self.ts.at("%"):
            op = self.ts.next().text
            a, b = as_arith(v), as_arith(self._unary())
            if op == "*":
                v = sx.Mul((a, b))
            elif op == "/":
                v = sx.Div(a, b)
            else:
                v = sx.Sub(a, sx.Mul((b, sx.Div(a, b))))
        return v

    def _unary(self):
        if self.ts.accept("!"):
            return sx.Not(as_cond(self._unary()))
        if self.ts.accept("-"):
            t = self.ts.peek()
            if t.kind == "num":
                self.ts.next()
                return sx.Const(-int(t.text))
            return sx.Mul((sx.Const(-1), as_arith(self._unary())))
        if self.ts.accept("+"):
            return as_arith(self._unary())
        if self.ts.at("*") or self.ts.at("&"):
            raise UnsupportedFeature("pointer operations are not supported")
        return self._primary()

    def _primary(self):
        t = self.ts.peek()
        if t.kind == "num":
            self.ts.next()
            return sx.Const(int(t.text))
        if self.ts.accept("("):
            v = self.expression()
            self.ts.expect(")")
            return v
        if t.kind == "id" and t.text in ("true", "false"):
            self.ts.next()
            return sx.TRUE if t.text == "true" else sx.FALSE
        if t.kind == "id" and t.text not in KEYWORDS:
            self.ts.next()
            name = t.text
            if name == "div" and self.ts.accept("("):
                # truncating division, as printed for lowered '%'
                num = as_arith(self.expression())
                self.ts.expect(",")
                den = as_arith(self.expression())
                self.ts.expect(")")
                return sx.Div(num, den)
            if self.ts.at("("):
                raise UnsupportedFeature(f"function call {name}(...) at {t.line}:{t.col}")
            if self.ts.at("["):
                args = []
                while self.ts.accept("["):
                    args.append(as_arith(self.expression()))
                    self.ts.expect("]")
                self.note_array(name, t)
                return sx.ArrayRead(name, tuple(args))
            self.note_scalar(name, t)
            return sx.Sym(name)
        raise ParseError(f"unexpected {t.text or 'end of input'!r} in expression", t.line, t.col)

    def note_array(self, name: str, tok: Optional[Token] = None):
        if name in self.scalars:
            raise ParseError(f"{name} is used both as a scalar and as an array",
                             tok.line if tok else None, tok.col if tok else None)
        self.arrays.add(name)

    def note_scalar(self, name: str, tok: Optional[Token] = None):
        if name in self.arrays:
            raise ParseError(f"{name} is used both as a scalar and as an array",
                             tok.line if tok else None, tok.col if tok else None)
        self.scalars.add(name)


def parse_expression(text: str):
    """Parse a standalone program expression (integer or boolean)."""
    ts = TokenStream(tokenize(text))
    p = ExprParser(ts)
    v = p.expression()
    if ts.peek().kind != "eof":
        raise ts.error(f"trailing input {ts.peek().text!r}")
    return v


# ---------------------------------------------------------------------------
# Statement syntax of the mini-language


@dataclass
class Stmt:
    line: int = field(default=0, kw_only=True)
    col: int = field(default=0, kw_only=True)


@dataclass
class SAssign(Stmt):
    var: str
    expr: sx.Expr


@dataclass
class SArrayWrite(Stmt):
    name: str


@dataclass
class SIf(Stmt):
    cond: sx.Formula
    then: Stmt
    other: Optional[Stmt]


@dataclass
class SWhile(Stmt):
    cond: sx.Formula
    body: Stmt


@dataclass
class SDoWhile(Stmt):
    body: Stmt
    cond: sx.Formula


@dataclass
class SFor(Stmt):
    init: list
    cond: sx.Formula
    step: list
    body: Stmt


@dataclass
class SJump(Stmt):
    kind: str  # break, continue, return, goto
    label: Optional[str] = None


@dataclass
class SLabel(Stmt):
    label: str
    stmt: Stmt


@dataclass
class SAssume(Stmt):
    cond: sx.Formula


@dataclass
class SBlock(Stmt):
    stmts: list


@dataclass
class Program:
    body: SBlock
    scalars: frozenset
    arrays: frozenset
    params: tuple = ()


class ProgramParser:
    def __init__(self, text: str):
        self.ts = TokenStream(tokenize(text))
        self.ep = ExprParser(self.ts)

    def program(self) -> Program:
        ts = self.ts
        params = []
        if (ts.at("void") or ts.at("int")) and ts.peek(1).kind == "id" and ts.at("(", 2):
            ts.next()
            ts.next()
            ts.expect("(")
            if not ts.at(")"):
                while True:
                    params.append(self._param())
                    if not ts.accept(","):
                        break
            ts.expect(")")
            body = self._block()
            if ts.peek().kind != "eof":
                raise UnsupportedFeature("only a single function is supported")
        else:
            stmts = []
            while ts.peek().kind != "eof":
                stmts.append(self.statement())
            body = SBlock(stmts)
        return Program(body, frozenset(self.ep.scalars), frozenset(self.ep.arrays), tuple(params))

    def _param(self) -> str:
        ts = self.ts
        ts.expect("int")
        is_array = ts.accept("*")
        name = ts.ident()
        if ts.accept("["):
            ts.expect("]")
            is_array = True
        if is_array:
            self.ep.note_array(name.text, name)
        else:
            self.ep.note_scalar(name.text, name)
        return name.text

    def _block(self) -> SBlock:
        t = self.ts.expect("{")
        stmts = []
        while not self.ts.at("}"):
            if self.ts.peek().kind == "eof":
                raise self.ts.error("unterminated block")
            stmts.append(self.statement())
        self.ts.expect("}")
        return SBlock(stmts, line=t.line, col=t.col)

    def _cond(self):
        self.ts.expect("(")
        c = as_cond(self.ep.expression())
        self.ts.expect(")")
        return c

    def statement(self) -> Stmt:
        ts = self.ts
        t = ts.peek()
        pos = {"line": t.line, "col": t.col}
        if ts.at("{"):
            return self._block()
        if ts.accept(";"):
            return SBlock([], **pos)
        if ts.at("*") or ts.at("&"):
            raise UnsupportedFeature(f"pointer operations are not supported ({t.line}:{t.col})")
        if ts.accept("if"):
            c = self._cond()
            then = self.statement()
            other = self.statement() if ts.accept("else") else None
            return SIf(c, then, other, **pos)
        if ts.accept("while"):
            c = self._cond()
            return SWhile(c, self.statement(), **pos)
        if ts.accept("do"):
            body = self.statement()
            ts.expect("while")
            c = self._cond()
            ts.expect(";")
            return SDoWhile(body, c, **pos)
        if ts.accept("for"):
            ts.expect("(")
            init = [] if ts.at(";") else self._simple_list(allow_decl=True)
            ts.expect(";")
            cond = sx.TRUE if ts.at(";") else as_cond(self.ep.expression())
            ts.expect(";")
            step = [] if ts.at(")") else self._simple_list(allow_decl=False)
            ts.expect(")")
            return SFor(init, cond, step, self.statement(), **pos)
        if ts.accept("break") or ts.accept("continue"):
            ts.expect(";")
            return SJump(t.text, **pos)
        if ts.accept("goto"):
            label = ts.ident().text
            ts.expect(";")
            return SJump("goto", label, **pos)
        if ts.accept("return"):
            if not ts.at(";"):
                self.ep.expression()
            ts.expect(";")
            return SJump("return", **pos)
        if ts.accept("assume"):
            c = self._cond()
            ts.expect(";")
            return SAssume(c, **pos)
        if t.kind == "id" and t.text not in KEYWORDS and ts.at(":", 1):
            ts.next()
            ts.next()
            return SLabel(t.text, self.statement(), **pos)
        stmts = self._simple_list(allow_decl=True)
        ts.expect(";")
        return stmts[0] if len(stmts) == 1 else SBlock(stmts, **pos)

    def _simple_list(self, allow_decl: bool) -> list:
        ts = self.ts
        out = []
        if ts.at("int"):
            if not allow_decl:
                raise ts.error("declaration not allowed here")
            ts.next()
            while True:
                is_array = ts.accept("*")
                name = ts.ident()
                if ts.at("["):
                    while ts.accept("["):
                        if not ts.at("]"):
                            self.ep.expression()
                        ts.expect("]")
                    is_array = True
                if is_array:
                    self.ep.note_array(name.text, name)
                    if ts.at("="):
                        raise UnsupportedFeature(f"array initialisation at {name.line}:{name.col}")
                else:
                    self.ep.note_scalar(name.text, name)
                    if ts.accept("=") or ts.accept(":="):
                        out.append(SAssign(name.text, as_arith(self.ep.expression()),
                                           line=name.line, col=name.col))
                if not ts.accept(","):
                    break
            return out
        while True:
            out.append(self._simple())
            if not ts.accept(","):
                break
        return out

    def _simple(self) -> Stmt:
        ts = self.ts
        t = ts.peek()
        pos = {"line": t.line, "col": t.col}
        if ts.at("++") or ts.at("--"):
            op = ts.next().text
            name = ts.ident()
            if ts.at("["):
                return self._array_write(name)
            self.ep.note_scalar(name.text, name)
            return SAssign(name.text, _step(name.text, op), **pos)
        name = ts.ident()
        if ts.at("("):
            raise UnsupportedFeature(f"function call {name.text}(...) at {name.line}:{name.col}")
        if ts.at("["):
            return self._array_write(name)
        self.ep.note_scalar(name.text, name)
        var = sx.Sym(name.text)
        if ts.at("++") or ts.at("--"):
            return SAssign(name.text, _step(name.text, ts.next().text), **pos)
        if ts.accept("=") or ts.accept(":="):
            return SAssign(name.text, as_arith(self.ep.expression()), **pos)
        for op, mk in (("+=", lambda a, b: sx.Add((a, b))), ("-=", sx.Sub),
                       ("*=", lambda a, b: sx.Mul((a, b)))):
            if ts.accept(op):
                return SAssign(name.text, mk(var, as_arith(self.ep.expression())), **pos)
        raise ts.error(f"expected an assignment to {name.text}")

    def _array_write(self, name: Token) -> Stmt:
        ts = self.ts
        self.ep.note_array(name.text, name)
        while ts.accept("["):
            self.ep.expression()
            ts.expect("]")
        if ts.accept("++") or ts.accept("--"):
            pass
        elif any(ts.accept(o) for o in ("=", ":=", "+=", "-=", "*=")):
            self.ep.expression()
        else:
            raise ts.error("expected an assignment")
        return SArrayWrite(name.text, line=name.line, col=name.col)


def _step(name: str, op: str) -> sx.Expr:
    v = sx.Sym(name)
    return sx.Add((v, sx.ONE)) if op == "++" else sx.Sub(v, sx.ONE)


def parse_program(text: str) -> Program:
    return ProgramParser(text).program()
