"""Tiny arithmetic expression language over ``x`` and ``y``.

Grammar (``^`` binds tighter than unary minus and is right associative)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | '+' unary | power
    power   := atom ('^' unary)?
    atom    := NUMBER | NAME | FUNC '(' expr ')' | '(' expr ')'

Names are ``x``, ``y``, ``pi`` and ``e``; functions are ``exp``, ``log``,
``sin`` and ``cos``.  Evaluation is vectorized over numpy arrays.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import EvalError, ParseError

FUNCTIONS = ("exp", "log", "sin", "cos")
CONSTANTS = {"pi": np.pi, "e": np.e}
VARIABLES = ("x", "y")


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Num, Var, Neg, BinOp, Call]

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>\*\*|[-+*/^()]))"
)


def _tokenize(text: str, line: int | None, col_offset: int = 0):
    pos = 0
    tokens = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            col = pos + len(text[pos:]) - len(text[pos:].lstrip()) + 1
            raise ParseError(f"unexpected character {text[col - 1]!r}", line, col + col_offset)
        kind = m.lastgroup
        value = m.group(kind)
        col = m.start(kind) + 1
        if value == "**":
            value = "^"
        tokens.append((kind, value, col))
        pos = m.end()
    tokens.append(("end", "", len(text) + 1))
    return tokens


class _Parser:
    def __init__(self, text: str, line: int | None, col_offset: int):
        self.tokens = _tokenize(text, line, col_offset)
        self.i = 0
        self.line = line
        self.col_offset = col_offset

    def error(self, msg, tok=None):
        tok = tok or self.tokens[self.i]
        raise ParseError(msg, self.line, tok[2] + self.col_offset)

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        tok = self.take()
        if tok[1] != value:
            self.error(f"expected {value!r}, found {tok[1] or 'end of input'!r}", tok)
        return tok

    def parse(self) -> Node:
        node = self.expr()
        if self.peek()[0] != "end":
            self.error(f"unexpected token {self.peek()[1]!r}")
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "-":
            self.take()
            return Neg(self.unary())
        if tok[0] == "op" and tok[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        tok = self.take()
        kind, value, _ = tok
        if kind == "num":
            return Num(float(value))
        if kind == "name":
            if value in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(value, arg)
            if value in VARIABLES:
                return Var(value)
            if value in CONSTANTS:
                return Num(float(CONSTANTS[value]))
            self.error(f"unknown name {value!r}", tok)
        if kind == "op" and value == "(":
            node = self.expr()
            self.expect(")")
            return node
        self.error(f"unexpected {value or 'end of input'!r}", tok)


def parse(text: str, line: int | None = None, col_offset: int = 0) -> Node:
    """Parse ``text`` into an AST; errors carry 1-based line/column."""
    return _Parser(text, line, col_offset).parse()


def variables(node: Node) -> set[str]:
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Num):
        return set()
    if isinstance(node, (Neg, Call)):
        return variables(node.arg)
    return variables(node.left) | variables(node.right)


def evaluate(node: Node, x, y):
    """Evaluate ``node`` at (x, y); arrays broadcast."""
    with np.errstate(over="ignore", invalid="ignore"):
        return _eval(node, np.asarray(x, dtype=float), np.asarray(y, dtype=float))


def _eval(node, x, y):
    if isinstance(node, Num):
        return np.broadcast_to(np.float64(node.value), np.broadcast(x, y).shape).copy()
    if isinstance(node, Var):
        v = x if node.name == "x" else y
        return np.broadcast_to(v, np.broadcast(x, y).shape).astype(float, copy=True)
    if isinstance(node, Neg):
        return -_eval(node.arg, x, y)
    if isinstance(node, Call):
        arg = _eval(node.arg, x, y)
        if node.func == "log":
            if np.any(arg <= 0):
                raise EvalError("log of a non-positive value")
            return np.log(arg)
        return getattr(np, node.func)(arg)
    left = _eval(node.left, x, y)
    right = _eval(node.right, x, y)
    if node.op == "+":
        return left + right
    if node.op == "-":
        return left - right
    if node.op == "*":
        return left * right
    if node.op == "/":
        if np.any(right == 0):
            raise EvalError("division by zero")
        return left / right
    return np.power(left, right)


def to_text(node: Node) -> str:
    """Render ``node`` back to fully parenthesized source text."""
    if isinstance(node, Num):
        return repr(float(node.value))
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_text(node.arg)})"
    if isinstance(node, Call):
        return f"{node.func}({to_text(node.arg)})"
    return f"({to_text(node.left)} {node.op} {to_text(node.right)})"
