"""Infix expression parser producing an AST that evaluates to jets.

Grammar (whitespace insignificant, identifiers case-sensitive)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | '+' unary | power
    power   := atom ('^' exponent)*
    exponent:= ['-' | '+'] INT | '(' ['-' | '+'] INT ')'
    atom    := NUMBER | NAME | FUNC '(' expr ')' | '(' expr ')'

``^`` binds tighter than unary minus, so ``-x^2`` is ``-(x^2)``. All binary
operators, ``^`` included, associate to the left.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from . import jets as J
from .errors import ExprSyntaxError, UnknownIdentifierError
from .jets import Jet

FUNCTION_NAMES = ("sin", "cos", "tan", "exp", "log", "sqrt", "sinh", "cosh", "tanh", "atan")


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str
    index: int


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: int


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


Expr = Union[Num, Var, Neg, BinOp, Pow, Call]

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if m is None or m.lastgroup is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", _offset(text, pos))
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), _offset(text, start)))
        pos = m.end()
    tokens.append(("end", "", _offset(text, len(text))))
    return tokens


def _offset(text: str, pos: int) -> int:
    """Byte offset of character position ``pos``."""
    return len(text[:pos].encode("utf-8"))


class _Parser:
    def __init__(self, text: str, coords: Sequence[str]):
        self.tokens = _tokenize(text)
        self.i = 0
        self.coords = {name: k for k, name in enumerate(coords)}

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, v, off = self.take()
        if v != value:
            what = "end of input" if kind == "end" else repr(v)
            raise ExprSyntaxError(f"expected {value!r}, found {what}", off)

    def fail(self, tok, expected: str):
        kind, v, off = tok
        what = "end of input" if kind == "end" else repr(v)
        raise ExprSyntaxError(f"expected {expected}, found {what}", off)

    def parse(self) -> Expr:
        e = self.expr()
        if self.peek()[0] != "end":
            self.fail(self.peek(), "operator or end of input")
        return e

    def expr(self) -> Expr:
        left = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            left = BinOp(op, left, self.term())
        return left

    def term(self) -> Expr:
        left = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            left = BinOp(op, left, self.unary())
        return left

    def unary(self) -> Expr:
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "-":
            self.take()
            return Neg(self.unary())
        if tok[0] == "op" and tok[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        while self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            base = Pow(base, self.exponent())
        return base

    def exponent(self) -> int:
        paren = self.peek()[1] == "("
        if paren:
            self.take()
        sign = 1
        if self.peek()[1] in ("-", "+") and self.peek()[0] == "op":
            sign = -1 if self.take()[1] == "-" else 1
        tok = self.take()
        if tok[0] != "num" or not tok[1].isdigit():
            self.fail(tok, "integer exponent")
        if paren:
            self.expect(")")
        return sign * int(tok[1])

    def atom(self) -> Expr:
        tok = self.take()
        kind, v, off = tok
        if kind == "num":
            return Num(float(v))
        if kind == "name":
            if v in self.coords:
                return Var(v, self.coords[v])
            if v in FUNCTION_NAMES:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(v, arg)
            raise UnknownIdentifierError(v, off)
        if kind == "op" and v == "(":
            e = self.expr()
            self.expect(")")
            return e
        self.fail(tok, "number, name or '('")


def parse(text: str, coords: Sequence[str]) -> Expr:
    """Parse ``text`` into an :data:`Expr` over the named coordinates."""
    if not text or not text.strip():
        raise ExprSyntaxError("empty expression", 0)
    return _Parser(text, coords).parse()


def to_string(e: Expr) -> str:
    """Fully parenthesized rendering that :func:`parse` maps back to ``e``."""
    if isinstance(e, Num):
        return repr(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        return f"(-{to_string(e.operand)})"
    if isinstance(e, BinOp):
        return f"({to_string(e.left)} {e.op} {to_string(e.right)})"
    if isinstance(e, Pow):
        return f"({to_string(e.base)}^{e.exponent})"
    if isinstance(e, Call):
        return f"{e.func}({to_string(e.arg)})"
    raise TypeError(f"not an expression node: {e!r}")


def variables(e: Expr) -> set[str]:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Num):
        return set()
    if isinstance(e, (Neg,)):
        return variables(e.operand)
    if isinstance(e, BinOp):
        return variables(e.left) | variables(e.right)
    if isinstance(e, Pow):
        return variables(e.base)
    return variables(e.arg)


def eval_jet(e: Expr, point, order: int, dim: int | None = None) -> Jet:
    """Taylor jet of ``e`` at ``point`` (shape ``(..., dim)``) truncated at ``order``."""
    point = np.asarray(point, dtype=float)
    if point.ndim == 0:
        point = point[None]
    dim = point.shape[-1] if dim is None else dim
    if point.shape[-1] != dim:
        raise ValueError(f"point has {point.shape[-1]} coordinates, expected {dim}")
    if order < 0:
        raise ValueError("order must be nonnegative")
    batch = point.shape[:-1]
    cache: dict[int, Jet] = {}

    def var(k: int) -> Jet:
        if k not in cache:
            cache[k] = Jet.variable(point[..., k], k, dim, order)
        return cache[k]

    def ev(node: Expr) -> Jet:
        if isinstance(node, Num):
            return Jet.constant(np.full(batch, node.value), dim, order)
        if isinstance(node, Var):
            if node.index >= dim:
                raise ValueError(f"variable {node.name!r} outside a {dim}-point")
            return var(node.index)
        if isinstance(node, Neg):
            return -ev(node.operand)
        if isinstance(node, BinOp):
            a, b = ev(node.left), ev(node.right)
            if node.op == "+":
                return a + b
            if node.op == "-":
                return a - b
            if node.op == "*":
                return a * b
            return a / b
        if isinstance(node, Pow):
            return ev(node.base) ** node.exponent
        return J.FUNCTIONS[node.func](ev(node.arg))

    return ev(e)
