"""Closed-form scalar expressions: parser, evaluator and canonical printer.

Grammar (usual precedence, ``^`` right-associative and binding tighter than
unary minus)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | '+' unary | power
    power  := atom ('^' unary)?
    atom   := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

``**`` is accepted as a synonym for ``^``.  Trees are immutable and hashable so
metric specs built from them can key compilation caches.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping

import jax.numpy as jnp
import numpy as np

from .errors import ParseError, UnknownSymbol

FUNCTIONS = {
    "sin": jnp.sin,
    "cos": jnp.cos,
    "tan": jnp.tan,
    "exp": jnp.exp,
    "ln": jnp.log,
    "log": jnp.log,
    "sqrt": jnp.sqrt,
    "sinh": jnp.sinh,
    "cosh": jnp.cosh,
    "tanh": jnp.tanh,
}
CONSTANTS = {"pi": math.pi, "e": math.e}


class Expr:
    def eval(self, env: Mapping[str, object]):
        raise NotImplementedError

    def symbols(self) -> frozenset[str]:
        raise NotImplementedError

    def __str__(self) -> str:
        return to_string(self)


@dataclass(frozen=True)
class Num(Expr):
    value: float

    def eval(self, env):
        return np.float64(self.value)

    def symbols(self):
        return frozenset()


@dataclass(frozen=True)
class Sym(Expr):
    name: str

    def eval(self, env):
        if self.name in env:
            return env[self.name]
        if self.name in CONSTANTS:
            return CONSTANTS[self.name]
        raise UnknownSymbol([(None, None, f"unknown symbol '{self.name}'")])

    def symbols(self):
        if self.name in CONSTANTS:
            return frozenset()
        return frozenset([self.name])


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr

    def eval(self, env):
        return -self.arg.eval(env)

    def symbols(self):
        return self.arg.symbols()


@dataclass(frozen=True)
class Bin(Expr):
    op: str
    left: Expr
    right: Expr

    def eval(self, env):
        a = self.left.eval(env)
        b = self.right.eval(env)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        if self.op == "/":
            return a / b
        # integer powers stay polynomial (exact under AD at any sign of the base)
        if isinstance(self.right, Num) and float(self.right.value).is_integer():
            return a ** int(self.right.value)
        return a**b

    def symbols(self):
        return self.left.symbols() | self.right.symbols()


@dataclass(frozen=True)
class Call(Expr):
    fn: str
    arg: Expr

    def eval(self, env):
        return FUNCTIONS[self.fn](self.arg.eval(env))

    def symbols(self):
        return self.arg.symbols()


_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>\*\*|[-+*/^(),]))"
)


def _tokenize(text: str):
    pos = 0
    out = []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            col = pos + len(text[pos:]) - len(text[pos:].lstrip())
            raise ParseError([(1, col + 1, f"unexpected character {text[col]!r}")])
        kind = m.lastgroup
        start = m.start(kind)
        val = m.group(kind)
        if val == "**":
            val = "^"
        out.append((kind, val, start))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def fail(self, msg, tok=None):
        tok = tok or self.peek()
        raise ParseError([(1, tok[2] + 1, msg)])

    def expect(self, val):
        tok = self.peek()
        if tok[1] != val or tok[0] == "end":
            self.fail(f"expected {val!r}")
        return self.take()

    def parse(self) -> Expr:
        node = self.expr()
        if self.peek()[0] != "end":
            self.fail(f"unexpected token {self.peek()[1]!r}")
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = Bin(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = Bin(op, node, self.unary())
        return node

    def unary(self):
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "-":
            self.take()
            arg = self.unary()
            if isinstance(arg, Num):
                return Num(-arg.value)
            return Neg(arg)
        if tok[0] == "op" and tok[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            return Bin("^", base, self.unary())
        return base

    def atom(self):
        tok = self.take()
        kind, val, _ = tok
        if kind == "num":
            return Num(float(val))
        if kind == "name":
            if self.peek()[1] == "(" and self.peek()[0] == "op":
                if val not in FUNCTIONS:
                    raise UnknownSymbol([(1, tok[2] + 1, f"unknown function '{val}'")])
                self.take()
                arg = self.expr()
                self.expect(")")
                return Call(val, arg)
            if val in FUNCTIONS:
                self.fail(f"function '{val}' needs an argument", tok)
            return Sym(val)
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect(")")
            return node
        if kind == "end":
            self.fail("unexpected end of expression", tok)
        self.fail(f"unexpected token {val!r}", tok)


def parse(text: str | float | int | Expr, allowed: set[str] | None = None) -> Expr:
    """Parse ``text`` into a tree; numbers pass through as constants.

    With ``allowed`` given, any free symbol outside it raises UnknownSymbol.
    """
    if isinstance(text, Expr):
        node = text
    elif isinstance(text, (int, float)) and not isinstance(text, bool):
        node = Num(float(text))
    else:
        node = _Parser(str(text)).parse()
    if allowed is not None:
        bad = sorted(node.symbols() - set(allowed))
        if bad:
            col = _find_col(str(text), bad[0])
            raise UnknownSymbol([(1, col, f"unknown symbol '{bad[0]}'")])
    return node


def _find_col(text: str, name: str) -> int:
    m = re.search(rf"\b{re.escape(name)}\b", text)
    return m.start() + 1 if m else 1


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def to_string(node: Expr) -> str:
    """Canonical text; ``parse(to_string(e)) == e`` for every tree that ``parse`` produced."""
    if isinstance(node, Num):
        if math.copysign(1.0, node.value) < 0:
            return f"(-{-float(node.value)!r})"
        return repr(float(node.value))
    if isinstance(node, Sym):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_string(node.arg)})"
    if isinstance(node, Call):
        return f"{node.fn}({to_string(node.arg)})"
    if isinstance(node, Bin):
        return f"({to_string(node.left)} {node.op} {to_string(node.right)})"
    raise TypeError(node)


def evaluate(node: Expr, env: Mapping[str, object]):
    return node.eval(env)
