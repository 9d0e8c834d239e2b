"""Small scalar expression language with exact first and second derivatives.

Grammar (highest precedence first)::

    atom    := NUMBER | NAME | FUNC '(' expr ')' | '(' expr ')'
    power   := atom ('^' exponent)*          exponent is a constant rational
    unary   := '-' unary | power
    term    := unary (('*' | '/') unary)*
    expr    := term (('+' | '-') term)*

Functions: sin, cos, exp, log, sqrt.  Binary levels are left-associative.

Derivatives are propagated in forward mode through second-order jets
``(value, gradient, hessian)``, so they are exact up to rounding.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, singledispatch
from typing import Mapping, Sequence

import numpy as np

from .errors import DomainError, ExpressionError, ParseError, UnknownIdentifierError

FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt")


# ---------------------------------------------------------------------------
# Tree


class Node:
    __slots__ = ()


@dataclass(frozen=True)
class Num(Node):
    value: float


@dataclass(frozen=True)
class Var(Node):
    name: str


@dataclass(frozen=True)
class Neg(Node):
    operand: Node


@dataclass(frozen=True)
class BinOp(Node):
    op: str
    left: Node
    right: Node


@dataclass(frozen=True)
class Pow(Node):
    base: Node
    exponent: Fraction


@dataclass(frozen=True)
class Call(Node):
    func: str
    arg: Node


@dataclass(frozen=True)
class Expression:
    """A parsed expression together with the variable set it was declared over."""

    root: Node
    variables: tuple

    def __str__(self):
        return to_source(self.root)

    def evaluate(self, bindings):
        return evaluate(self, bindings)

    def derivatives(self, bindings, wrt):
        return derivatives(self, bindings, wrt)

    @cached_property
    def free_names(self):
        return frozenset(_free_names(self.root))

    @property
    def is_constant(self):
        return not self.free_names


@dataclass(frozen=True)
class EvalResult:
    value: float
    gradient: np.ndarray
    hessian: np.ndarray


# ---------------------------------------------------------------------------
# Lexer / parser

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(source):
    tokens = []
    pos = 0
    while pos < len(source):
        if source[pos:].strip() == "":
            break
        m = _TOKEN.match(source, pos)
        if m is None:
            bad = pos + (len(source[pos:]) - len(source[pos:].lstrip()))
            raise ParseError(f"unexpected character {source[bad]!r}", bad)
        kind = m.lastgroup
        text = m.group(kind)
        tokens.append((kind, text, m.start(kind)))
        pos = m.end()
    tokens.append(("eof", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, source, variables):
        self.source = source
        self.variables = frozenset(variables)
        self.tokens = _tokenize(source)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, text):
        kind, got, offset = self.take()
        if got != text:
            what = "end of input" if kind == "eof" else repr(got)
            raise ParseError(f"expected {text!r}, found {what}", offset)

    def parse(self):
        node = self.expr()
        kind, text, offset = self.peek()
        if kind != "eof":
            raise ParseError(f"unexpected token {text!r}", offset)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[1] == "-":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self):
        node = self.atom()
        while self.peek()[1] == "^":
            self.take()
            node = Pow(node, self.exponent())
        return node

    def exponent(self):
        kind, text, offset = self.peek()
        sign = 1
        if text == "-":
            self.take()
            sign = -1
            kind, text, offset = self.peek()
        if kind == "num":
            self.take()
            return sign * Fraction(text)
        if text == "(":
            self.take()
            sub = self.expr()
            self.expect(")")
            try:
                return sign * _fold(sub)
            except _NotConstant:
                raise ParseError("exponent must be a constant rational", offset) from None
        what = "end of input" if kind == "eof" else repr(text)
        raise ParseError(f"expected exponent, found {what}", offset)

    def atom(self):
        kind, text, offset = self.take()
        if kind == "num":
            return Num(float(text))
        if kind == "name":
            if self.peek()[1] == "(":
                if text not in FUNCTIONS:
                    raise UnknownIdentifierError(text, offset)
                self.take()
                arg = self.expr()
                self.expect(")")
                return Call(text, arg)
            if text in FUNCTIONS:
                raise ParseError(f"function {text!r} requires an argument", offset)
            if text not in self.variables:
                raise UnknownIdentifierError(text, offset)
            return Var(text)
        if text == "(":
            node = self.expr()
            self.expect(")")
            return node
        what = "end of input" if kind == "eof" else repr(text)
        raise ParseError(f"unexpected {what}", offset)


class _NotConstant(Exception):
    pass


def _fold(node):
    """Constant-fold a subtree to an exact Fraction."""
    if isinstance(node, Num):
        return Fraction(repr(node.value))
    if isinstance(node, Neg):
        return -_fold(node.operand)
    if isinstance(node, BinOp):
        a, b = _fold(node.left), _fold(node.right)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if b == 0:
            raise _NotConstant
        return a / b
    if isinstance(node, Pow) and node.exponent.denominator == 1:
        base = _fold(node.base)
        if base == 0 and node.exponent < 0:
            raise _NotConstant
        return base ** int(node.exponent)
    raise _NotConstant


def parse(source: str, variables: Sequence[str]) -> Expression:
    """Parse ``source`` over the declared ``variables``."""
    if not source or not source.strip():
        raise ParseError("empty expression", 0)
    root = _Parser(source, variables).parse()
    return Expression(root, tuple(variables))


# ---------------------------------------------------------------------------
# Printing


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


@singledispatch
def to_source(node) -> str:
    raise TypeError(f"not an expression node: {node!r}")


@to_source.register
def _(node: Num):
    text = repr(float(node.value))
    return f"({text})" if node.value < 0 else text


@to_source.register
def _(node: Var):
    return node.name


@to_source.register
def _(node: Neg):
    return f"(-{to_source(node.operand)})"


@to_source.register
def _(node: BinOp):
    return f"({to_source(node.left)} {node.op} {to_source(node.right)})"


@to_source.register
def _(node: Pow):
    e = node.exponent
    exp = str(e.numerator) if e.denominator == 1 else f"{e.numerator}/{e.denominator}"
    return f"({to_source(node.base)}^({exp}))"


@to_source.register
def _(node: Call):
    return f"{node.func}({to_source(node.arg)})"


def _free_names(node):
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Num):
        return set()
    if isinstance(node, (Neg,)):
        return _free_names(node.operand)
    if isinstance(node, Pow):
        return _free_names(node.base)
    if isinstance(node, Call):
        return _free_names(node.arg)
    return _free_names(node.left) | _free_names(node.right)


def substitute(expr: Expression, replacements: Mapping[str, Node], variables=None) -> Expression:
    """Replace variables by subtrees.  The result is declared over ``variables``."""

    def walk(node):
        if isinstance(node, Var):
            return replacements.get(node.name, node)
        if isinstance(node, Num):
            return node
        if isinstance(node, Neg):
            return Neg(walk(node.operand))
        if isinstance(node, Pow):
            return Pow(walk(node.base), node.exponent)
        if isinstance(node, Call):
            return Call(node.func, walk(node.arg))
        return BinOp(node.op, walk(node.left), walk(node.right))

    return Expression(walk(expr.root), tuple(variables or expr.variables))


# ---------------------------------------------------------------------------
# Value evaluation (scalars or numpy arrays)


def _check_bound(expr, bindings):
    missing = [v for v in expr.free_names if v not in bindings]
    if missing:
        raise ExpressionError(f"unbound variable(s): {', '.join(sorted(missing))}")


def evaluate(expr: Expression, bindings: Mapping[str, float]):
    """Value of ``expr``; bindings may be floats or equally shaped arrays."""
    _check_bound(expr, bindings)
    with np.errstate(all="ignore"):
        return _value(expr.root, bindings)


@singledispatch
def _value(node, env):
    raise TypeError(node)


@_value.register
def _(node: Num, env):
    return node.value


@_value.register
def _(node: Var, env):
    return env[node.name]


@_value.register
def _(node: Neg, env):
    return -_value(node.operand, env)


@_value.register
def _(node: BinOp, env):
    a = _value(node.left, env)
    b = _value(node.right, env)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    if np.any(np.asarray(b) == 0):
        raise DomainError("division by zero")
    return a / b


@_value.register
def _(node: Pow, env):
    base = _value(node.base, env)
    e = node.exponent
    if e.denominator == 1:
        if e < 0 and np.any(np.asarray(base) == 0):
            raise DomainError("division by zero in negative power")
        if np.ndim(base) == 0:
            return float(base) ** int(e)
        return np.power(base, int(e))
    if np.any(np.asarray(base) < 0) or (e < 0 and np.any(np.asarray(base) == 0)):
        raise DomainError("fractional power of a non-positive number")
    return np.power(base, float(e)) if np.ndim(base) else float(base) ** float(e)


@_value.register
def _(node: Call, env):
    u = _value(node.arg, env)
    scalar = np.ndim(u) == 0
    if node.func == "log":
        if np.any(np.asarray(u) <= 0):
            raise DomainError("log of a non-positive number")
        return math.log(u) if scalar else np.log(u)
    if node.func == "sqrt":
        if np.any(np.asarray(u) < 0):
            raise DomainError("sqrt of a negative number")
        return math.sqrt(u) if scalar else np.sqrt(u)
    fn = {"sin": (math.sin, np.sin), "cos": (math.cos, np.cos), "exp": (math.exp, np.exp)}
    return fn[node.func][0](u) if scalar else fn[node.func][1](u)


# ---------------------------------------------------------------------------
# Second-order forward mode


class _Jet:
    __slots__ = ("v", "g", "h")

    def __init__(self, v, g, h):
        self.v = v
        self.g = g
        self.h = h

    def chain(self, f0, f1, f2):
        """Compose with a scalar function whose value/derivatives at self.v are f0, f1, f2."""
        h = f1 * self.h
        if f2:
            h = h + f2 * np.outer(self.g, self.g)
        return _Jet(f0, f1 * self.g, h)


def derivatives(expr: Expression, bindings: Mapping[str, float], wrt: Sequence[str]) -> EvalResult:
    """Exact value, gradient and Hessian of ``expr`` with respect to ``wrt``."""
    _check_bound(expr, bindings)
    k = len(wrt)
    index = {name: i for i, name in enumerate(wrt)}
    zeros_h = np.zeros((k, k))
    zeros_g = np.zeros(k)

    def seed(name):
        g = zeros_g.copy()
        if name in index:
            g[index[name]] = 1.0
        return _Jet(float(bindings[name]), g, zeros_h)

    def const(value):
        return _Jet(float(value), zeros_g, zeros_h)

    def walk(node):
        if isinstance(node, Num):
            return const(node.value)
        if isinstance(node, Var):
            return seed(node.name)
        if isinstance(node, Neg):
            a = walk(node.operand)
            return _Jet(-a.v, -a.g, -a.h)
        if isinstance(node, BinOp):
            a, b = walk(node.left), walk(node.right)
            if node.op == "+":
                return _Jet(a.v + b.v, a.g + b.g, a.h + b.h)
            if node.op == "-":
                return _Jet(a.v - b.v, a.g - b.g, a.h - b.h)
            if node.op == "/":
                if b.v == 0:
                    raise DomainError("division by zero")
                b = b.chain(1.0 / b.v, -1.0 / b.v**2, 2.0 / b.v**3)
            cross = np.outer(a.g, b.g)
            return _Jet(a.v * b.v, a.v * b.g + b.v * a.g, a.v * b.h + b.v * a.h + cross + cross.T)
        if isinstance(node, Pow):
            return _power(walk(node.base), node.exponent)
        if isinstance(node, Call):
            return _call(node.func, walk(node.arg))
        raise TypeError(node)

    jet = walk(expr.root)
    hess = 0.5 * (jet.h + jet.h.T)
    return EvalResult(float(jet.v), np.array(jet.g, dtype=float), hess)


def _power(a, e):
    u = a.v
    if e == 0:
        return _Jet(1.0, np.zeros_like(a.g), np.zeros_like(a.h))
    integral = e.denominator == 1
    if not integral and u <= 0:
        raise DomainError("fractional power of a non-positive number")
    if u == 0 and e < 0:
        raise DomainError("division by zero in negative power")
    r = int(e) if integral else float(e)
    f1 = r * u ** (r - 1)
    c2 = r * (r - 1)
    f2 = c2 * u ** (r - 2) if c2 else 0.0
    return a.chain(u**r, f1, f2)


def _call(func, a):
    u = a.v
    if func == "sin":
        s, c = math.sin(u), math.cos(u)
        return a.chain(s, c, -s)
    if func == "cos":
        s, c = math.sin(u), math.cos(u)
        return a.chain(c, -s, -c)
    if func == "exp":
        e = math.exp(u)
        return a.chain(e, e, e)
    if func == "log":
        if u <= 0:
            raise DomainError("log of a non-positive number")
        return a.chain(math.log(u), 1.0 / u, -1.0 / u**2)
    if func == "sqrt":
        if u <= 0:
            raise DomainError("sqrt is not differentiable at a non-positive number")
        r = math.sqrt(u)
        return a.chain(r, 0.5 / r, -0.25 / (r * u))
    raise ExpressionError(f"unknown function {func!r}")
