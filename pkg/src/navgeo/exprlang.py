"""Tiny closed expression language for metric entries, winds, and curves.

Grammar (binding tightest first):  ^  (right-assoc),  unary -,  * /,  + -.
Atoms are float literals, coordinates x1..xn, the constants pi and e, the
single-argument functions sin cos exp log sqrt tanh, and parentheses.

Expressions evaluate over plain floats, numpy arrays (batched points), and
dual numbers; the same tree serves values and directional derivatives. No
symbolic rewriting, no code generation: just a recursive walk.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from . import numkernel as nk
from .errors import (ArityError, DomainError, ExpressionSyntaxError,
                     NonFiniteValue, UnknownIdentifier)

FUNCTION_NAMES = ("sin", "cos", "exp", "log", "sqrt", "tanh")
CONSTANTS = {"pi": math.pi, "e": math.e}


# ---------------------------------------------------------------------------
# AST

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    index: int  # 0-based slot into the coordinate tuple


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class Binary:
    op: str  # one of + - * / ^
    lhs: "Node"
    rhs: "Node"


@dataclass(frozen=True)
class Call:
    fn: str
    arg: "Node"


Node = Union[Num, Var, Neg, Binary, Call]


@dataclass(frozen=True)
class Expression:
    """A parsed expression plus the coordinate-name table it was built with."""

    root: Node
    var_names: tuple[str, ...]
    source: str = ""

    @property
    def n_vars(self) -> int:
        return len(self.var_names)

    @property
    def free_vars(self) -> frozenset[int]:
        out: set[int] = set()
        _collect_vars(self.root, out)
        return frozenset(out)


def _collect_vars(node: Node, out: set[int]) -> None:
    if isinstance(node, Var):
        out.add(node.index)
    elif isinstance(node, Neg):
        _collect_vars(node.arg, out)
    elif isinstance(node, Binary):
        _collect_vars(node.lhs, out)
        _collect_vars(node.rhs, out)
    elif isinstance(node, Call):
        _collect_vars(node.arg, out)


# ---------------------------------------------------------------------------
# tokenizer

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            bad_at = len(text) - len(stripped)
            raise ExpressionSyntaxError(f"unexpected character {text[bad_at]!r}", bad_at)
        if m.lastgroup == "num":
            tokens.append(("num", m.group("num"), m.start("num")))
        elif m.lastgroup == "ident":
            tokens.append(("ident", m.group("ident"), m.start("ident")))
        else:
            tokens.append((m.group("op"), m.group("op"), m.start("op")))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


# ---------------------------------------------------------------------------
# parser

class _Parser:
    def __init__(self, text: str, var_names: tuple[str, ...]):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0
        self.vars = {name: i for i, name in enumerate(var_names)}

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str):
        tok = self.advance()
        if tok[0] != kind:
            raise ExpressionSyntaxError(f"expected {kind!r}, found {tok[1] or 'end of input'!r}", tok[2])
        return tok

    def parse(self) -> Node:
        node = self.sum_()
        tok = self.peek()
        if tok[0] != "end":
            raise ExpressionSyntaxError(f"unexpected trailing {tok[1]!r}", tok[2])
        return node

    def sum_(self) -> Node:
        node = self.product()
        while self.peek()[0] in ("+", "-"):
            op = self.advance()[0]
            node = Binary(op, node, self.product())
        return node

    def product(self) -> Node:
        node = self.unary()
        while self.peek()[0] in ("*", "/"):
            op = self.advance()[0]
            node = Binary(op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.peek()[0] == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.peek()[0] == "^":
            self.advance()
            # right-associative; exponent may carry its own unary minus
            return Binary("^", base, self.unary())
        return base

    def atom(self) -> Node:
        tok = self.advance()
        kind, text, off = tok
        if kind == "num":
            return Num(float(text))
        if kind == "(":
            node = self.sum_()
            self.expect(")")
            return node
        if kind == "ident":
            if text in FUNCTION_NAMES:
                if self.peek()[0] != "(":
                    raise ArityError(f"function {text!r} takes exactly one argument", off)
                self.advance()
                if self.peek()[0] == ")":
                    raise ArityError(f"function {text!r} takes exactly one argument", off)
                arg = self.sum_()
                if self.peek()[0] == ",":
                    raise ArityError(f"function {text!r} takes exactly one argument", self.peek()[2])
                self.expect(")")
                return Call(text, arg)
            if text in self.vars:
                return Var(self.vars[text])
            if text in CONSTANTS:
                return Num(CONSTANTS[text])
            raise UnknownIdentifier(f"unknown identifier {text!r}", off)
        raise ExpressionSyntaxError(f"unexpected {text or 'end of input'!r}", off)


def parse(text: str, n: int) -> Expression:
    """Parse an expression in coordinates x1..xn."""
    return parse_with_names(text, tuple(f"x{i + 1}" for i in range(n)))


def parse_with_names(text: str, var_names: tuple[str, ...]) -> Expression:
    root = _Parser(text, var_names).parse()
    return Expression(root, tuple(var_names), text)


def split_components(text: str) -> list[str]:
    """Split 'expr, expr, ...' on top-level commas only."""
    parts, depth, start = [], 0, 0
    for i, ch in enumerate(text):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch == "," and depth == 0:
            parts.append(text[start:i])
            start = i + 1
    parts.append(text[start:])
    return [p.strip() for p in parts]


# ---------------------------------------------------------------------------
# evaluation

def _apply(fn: str, arg):
    v = nk.value_of(arg)
    if fn == "log":
        if np.any(v <= 0.0):
            raise DomainError("log of a nonpositive value")
        return nk.log(arg)
    if fn == "sqrt":
        if np.any(v < 0.0):
            raise DomainError("sqrt of a negative value")
        return nk.sqrt(arg)
    if fn == "sin":
        return nk.sin(arg)
    if fn == "cos":
        return nk.cos(arg)
    if fn == "exp":
        return nk.exp(arg)
    return nk.tanh(arg)


def _eval(node: Node, coords: tuple):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return coords[node.index]
    if isinstance(node, Binary):
        a = _eval(node.lhs, coords)
        b = _eval(node.rhs, coords)
        op = node.op
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            return a / b
        return a ** b
    if isinstance(node, Neg):
        return -_eval(node.arg, coords)
    return _apply(node.fn, _eval(node.arg, coords))


def _finish(raw, lead_shape):
    out = np.asarray(raw, dtype=float)
    if not np.all(np.isfinite(out)):
        raise NonFiniteValue("expression evaluated to a non-finite value")
    if out.shape != lead_shape:
        out = np.broadcast_to(out, lead_shape).copy()
    if lead_shape == ():
        return float(out)
    return out


def evaluate(e: Expression, x) -> float | np.ndarray:
    """Evaluate at a point (n,) or a batch of points (..., n)."""
    x = np.asarray(x, dtype=float)
    coords = tuple(x[..., i] for i in range(e.n_vars))
    with np.errstate(all="ignore"):
        raw = _eval(e.root, coords)
    return _finish(raw, x.shape[:-1])


def evaluate_dual(e: Expression, x, direction) -> tuple:
    """Value and directional derivative along `direction`, via dual numbers."""
    x = np.asarray(x, dtype=float)
    d = np.broadcast_to(np.asarray(direction, dtype=float), x.shape)
    coords = tuple(nk.Dual(x[..., i], d[..., i]) for i in range(e.n_vars))
    with np.errstate(all="ignore"):
        raw = _eval(e.root, coords)
    lead = x.shape[:-1]
    if isinstance(raw, nk.Dual):
        return _finish(raw.val, lead), _finish(raw.dot, lead)
    # constant tree: dual slots never touched
    return _finish(raw, lead), _finish(np.zeros(lead), lead)


# ---------------------------------------------------------------------------
# rendering (used for serialization round-trips)

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def render(e: Expression) -> str:
    """Render to text that reparses to a structurally equal tree."""
    return _render_node(e.root, e.var_names, 0)


def _render_node(node: Node, names: tuple[str, ...], min_prec: int) -> str:
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Var):
        return names[node.index]
    if isinstance(node, Call):
        return f"{node.fn}({_render_node(node.arg, names, 0)})"
    if isinstance(node, Neg):
        inner = "-" + _render_node(node.arg, names, _PREC["neg"])
        return f"({inner})" if _PREC["neg"] < min_prec else inner
    op = node.op
    prec = _PREC[op]
    if op == "^":
        # base must be an atom-level item; exponent admits unary minus
        text = _render_node(node.lhs, names, prec + 1) + "^" + _render_node(node.rhs, names, 3)
    else:
        right_min = prec + 1 if op in ("-", "/") else prec
        text = (_render_node(node.lhs, names, prec) + op
                + _render_node(node.rhs, names, right_min))
    return f"({text})" if prec < min_prec else text
