"""Arithmetic expressions over torus points ``x`` and momenta ``p``.

Grammar (whitespace insignificant)::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := unary ('^' unary)?
    unary  := '-'? atom
    atom   := number | 'pi' | ident | func '(' expr (',' expr)* ')' | '(' expr ')'

Note that unary minus binds tighter than ``^``: ``-p^2`` is ``(-p)^2``, and
``^`` does not chain.  In one dimension ``x`` and ``p`` are shorthand for
``x1`` and ``p1``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np

from .errors import EvaluationDomainError, ExpressionSyntaxError, UnknownIdentifierError

UNARY_FUNCS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "abs": np.abs,
    "sqrt": np.sqrt,
    "sin": np.sin,
    "cos": np.cos,
    "tanh": np.tanh,
    "exp": np.exp,
}
VARIADIC_FUNCS = {"min": np.minimum, "max": np.maximum}
FUNCS = set(UNARY_FUNCS) | set(VARIADIC_FUNCS)

BINARY_OPS: dict[str, Callable] = {
    "+": np.add,
    "-": np.subtract,
    "*": np.multiply,
    "/": np.divide,
    "^": np.power,
}


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    kind: str  # "x" or "p"
    index: int  # 0-based coordinate


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple["Node", ...]


Node = Union[Const, Var, Neg, BinOp, Call]


def to_text(node: Node) -> str:
    """Fully parenthesized text that parses back to an equivalent tree."""
    if isinstance(node, Const):
        if node.value < 0:
            return f"(-{repr(-node.value)})"
        return repr(node.value)
    if isinstance(node, Var):
        return f"{node.kind}{node.index + 1}"
    if isinstance(node, Neg):
        return f"(-{to_text(node.operand)})"
    if isinstance(node, BinOp):
        return f"({to_text(node.left)} {node.op} {to_text(node.right)})"
    return f"{node.func}({', '.join(to_text(a) for a in node.args)})"


def variables(node: Node) -> set[tuple[str, int]]:
    if isinstance(node, Var):
        return {(node.kind, node.index)}
    if isinstance(node, Const):
        return set()
    if isinstance(node, Neg):
        return variables(node.operand)
    if isinstance(node, BinOp):
        return variables(node.left) | variables(node.right)
    out: set[tuple[str, int]] = set()
    for a in node.args:
        out |= variables(a)
    return out


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^(),]))"
)


@dataclass(frozen=True)
class _Token:
    kind: str  # num, name, op, end
    text: str
    pos: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            bad = len(text[pos:]) - len(text[pos:].lstrip()) + pos
            raise ExpressionSyntaxError(f"unexpected character {text[bad]!r}", bad)
        kind = m.lastgroup
        tokens.append(_Token(kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(_Token("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, dimension: int):
        self.text = text
        self.dimension = dimension
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        t = self.tokens[self.i]
        self.i += 1
        return t

    def expect(self, text: str) -> _Token:
        if self.tok.text != text or self.tok.kind != "op":
            found = self.tok.text or "end of input"
            raise ExpressionSyntaxError(f"expected {text!r}, found {found!r}", self.tok.pos)
        return self.advance()

    def parse(self) -> Node:
        node = self.expr()
        if self.tok.kind != "end":
            raise ExpressionSyntaxError(f"unexpected {self.tok.text!r}", self.tok.pos)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.advance().text
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.factor()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.advance().text
            node = BinOp(op, node, self.factor())
        return node

    def factor(self) -> Node:
        node = self.unary()
        if self.tok.kind == "op" and self.tok.text == "^":
            self.advance()
            node = BinOp("^", node, self.unary())
        return node

    def unary(self) -> Node:
        if self.tok.kind == "op" and self.tok.text == "-":
            self.advance()
            return Neg(self.atom())
        return self.atom()

    def atom(self) -> Node:
        t = self.tok
        if t.kind == "num":
            self.advance()
            return Const(float(t.text))
        if t.kind == "name":
            self.advance()
            if t.text in FUNCS:
                return self.call(t)
            if t.text == "pi":
                return Const(math.pi)
            return self.ident(t)
        if t.kind == "op" and t.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        found = t.text or "end of input"
        raise ExpressionSyntaxError(f"unexpected {found!r}", t.pos)

    def call(self, t: _Token) -> Node:
        self.expect("(")
        args = [self.expr()]
        while self.tok.kind == "op" and self.tok.text == ",":
            self.advance()
            args.append(self.expr())
        self.expect(")")
        if t.text in UNARY_FUNCS and len(args) != 1:
            raise ExpressionSyntaxError(f"{t.text}() takes exactly 1 argument, got {len(args)}", t.pos)
        if t.text in VARIADIC_FUNCS and len(args) < 2:
            raise ExpressionSyntaxError(f"{t.text}() takes at least 2 arguments", t.pos)
        return Call(t.text, tuple(args))

    def ident(self, t: _Token) -> Node:
        name = t.text
        m = re.fullmatch(r"([xp])([12]?)", name)
        if m is None:
            raise UnknownIdentifierError(name, t.pos)
        kind, digit = m.groups()
        if not digit:
            if self.dimension != 1:
                raise UnknownIdentifierError(
                    name, t.pos, f"'{name}' is only a shorthand in dimension 1; use {name}1/{name}2"
                )
            return Var(kind, 0)
        index = int(digit) - 1
        if index >= self.dimension:
            raise UnknownIdentifierError(
                name, t.pos, f"'{name}' refers to coordinate {index + 1} in a {self.dimension}D Hamiltonian"
            )
        return Var(kind, index)


def parse(text: str, dimension: int = 1) -> Node:
    """Parse ``text`` into an expression tree for a ``dimension``-D Hamiltonian."""
    if dimension not in (1, 2):
        raise ValueError(f"dimension must be 1 or 2, got {dimension}")
    return _Parser(text, dimension).parse()


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

Arrays = Sequence[np.ndarray]


def _apply(node: Node, vals: list[np.ndarray]) -> np.ndarray:
    if isinstance(node, Neg):
        return np.negative(vals[0])
    if isinstance(node, BinOp):
        return BINARY_OPS[node.op](vals[0], vals[1])
    if node.func in UNARY_FUNCS:
        return UNARY_FUNCS[node.func](vals[0])
    f = VARIADIC_FUNCS[node.func]
    out = vals[0]
    for v in vals[1:]:
        out = f(out, v)
    return out


def _children(node: Node) -> tuple[Node, ...]:
    if isinstance(node, Neg):
        return (node.operand,)
    if isinstance(node, BinOp):
        return (node.left, node.right)
    if isinstance(node, Call):
        return node.args
    return ()


def _eval_fast(node: Node, x: Arrays, p: Arrays):
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        return (x if node.kind == "x" else p)[node.index]
    return _apply(node, [_eval_fast(c, x, p) for c in _children(node)])


def _eval_checked(node: Node, x: Arrays, p: Arrays):
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        return (x if node.kind == "x" else p)[node.index]
    out = _apply(node, [_eval_checked(c, x, p) for c in _children(node)])
    if not np.all(np.isfinite(out)):
        raise EvaluationDomainError(to_text(node))
    return out


def evaluate(node: Node, x: Arrays, p: Arrays) -> np.ndarray:
    """Evaluate ``node`` on coordinate arrays; raise on any non-finite node."""
    with np.errstate(all="ignore"):
        out = _eval_fast(node, x, p)
        if np.all(np.isfinite(out)):
            return out
        _eval_checked(node, x, p)
    raise EvaluationDomainError(to_text(node))


def depends_on_p(node: Node) -> bool:
    return any(kind == "p" for kind, _ in variables(node))


def bind_x(node: Node, x: Arrays) -> Node:
    """Fold every ``p``-free subtree into a cached array for fixed ``x``.

    Returns a tree whose ``Const`` leaves may hold arrays; used by time-marching
    loops where ``x`` never changes.
    """
    if not depends_on_p(node):
        with np.errstate(all="ignore"):
            return Const(_eval_fast(node, x, ()))
    if isinstance(node, Var):
        return node
    if isinstance(node, Neg):
        return Neg(bind_x(node.operand, x))
    if isinstance(node, BinOp):
        return BinOp(node.op, bind_x(node.left, x), bind_x(node.right, x))
    return Call(node.func, tuple(bind_x(a, x) for a in node.args))
