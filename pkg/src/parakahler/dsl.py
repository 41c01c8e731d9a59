"""A small expression language for potentials written in null coordinates.

Grammar::

    expr   := term (("+"|"-") term)* ;
    term   := factor (("*"|"/") factor)* ;
    factor := atom ("^" INT)? | "-" factor ;
    atom   := NUMBER | VAR | "(" expr ")" | "exp" "(" expr ")"
            | "log" "(" expr ")" | "bump" "(" expr "," INT ")" ;
    VAR    := ("xi"|"eta") INT ;

``bump(x, i)`` is ``exp(-1/(x - i)^(i+1))`` for ``x > i`` and 0 otherwise.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

import numpy as np


class DSLError(ValueError):
    pass


class DSLSyntaxError(DSLError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} at line {line}, column {column}")
        self.line = line
        self.column = column


class UnknownVariableError(DSLSyntaxError):
    pass


class DomainError(ArithmeticError):
    """Evaluation left the domain of log or division."""


# --- AST -------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    kind: str  # "xi" or "eta"
    index: int  # 1-based


@dataclass(frozen=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: int


@dataclass(frozen=True)
class Func:
    name: str  # "exp" or "log"
    arg: "Node"


@dataclass(frozen=True)
class Bump:
    arg: "Node"
    index: int


Node = Union[Num, Var, Neg, BinOp, Pow, Func, Bump]


@dataclass(frozen=True)
class PotentialExpr:
    """A parsed real-valued function of ``xi1..xin, eta1..etan``."""

    ast: Node
    nvars: int

    def __call__(self, xi, eta):
        return evaluate(self, xi, eta)

    def __str__(self) -> str:
        return to_text(self.ast)


# --- tokenizer -------------------------------------------------------------

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
""", re.VERBOSE)

_VAR_RE = re.compile(r"(xi|eta)([0-9]+)$")
_FUNCS = ("exp", "log", "bump")


@dataclass
class _Token:
    kind: str
    text: str
    line: int
    column: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise DSLSyntaxError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "ws":
            chunk = m.group()
            nl = chunk.count("\n")
            if nl:
                line += nl
                line_start = pos + chunk.rindex("\n") + 1
        else:
            tokens.append(_Token(kind, m.group(), line, pos - line_start + 1))
        pos = m.end()
    tokens.append(_Token("eof", "", line, pos - line_start + 1))
    return tokens


# --- parser ----------------------------------------------------------------

class _Parser:
    def __init__(self, text: str, nvars: int):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.nvars = nvars

    @property
    def tok(self) -> _Token:
        return self.tokens[self.pos]

    def error(self, message: str, tok: _Token | None = None, cls=DSLSyntaxError):
        tok = tok or self.tok
        raise cls(message, tok.line, tok.column)

    def accept(self, text: str) -> bool:
        if self.tok.kind == "op" and self.tok.text == text:
            self.pos += 1
            return True
        return False

    def expect(self, text: str) -> None:
        if not self.accept(text):
            found = self.tok.text or "end of input"
            self.error(f"expected {text!r}, found {found!r}")

    def integer(self) -> int:
        tok = self.tok
        if tok.kind != "number" or not tok.text.isdigit():
            self.error("expected a non-negative integer literal")
        self.pos += 1
        return int(tok.text)

    def parse(self) -> Node:
        node = self.expr()
        if self.tok.kind != "eof":
            self.error(f"unexpected {self.tok.text!r}")
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.tok.kind == "op" and self.tok.text in "+-":
            op = self.tok.text
            self.pos += 1
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.factor()
        while self.tok.kind == "op" and self.tok.text in "*/":
            op = self.tok.text
            self.pos += 1
            node = BinOp(op, node, self.factor())
        return node

    def factor(self) -> Node:
        if self.accept("-"):
            return Neg(self.factor())
        node = self.atom()
        if self.accept("^"):
            node = Pow(node, self.integer())
        return node

    def atom(self) -> Node:
        tok = self.tok
        if tok.kind == "number":
            self.pos += 1
            return Num(float(tok.text))
        if tok.kind == "op" and tok.text == "(":
            self.pos += 1
            node = self.expr()
            self.expect(")")
            return node
        if tok.kind == "name":
            self.pos += 1
            if tok.text in _FUNCS:
                self.expect("(")
                arg = self.expr()
                if tok.text == "bump":
                    self.expect(",")
                    node = Bump(arg, self.integer())
                else:
                    node = Func(tok.text, arg)
                self.expect(")")
                return node
            m = _VAR_RE.match(tok.text)
            if m is None:
                self.error(f"unknown identifier {tok.text!r}", tok, UnknownVariableError)
            index = int(m.group(2))
            if not 1 <= index <= self.nvars:
                self.error(f"unknown variable {tok.text!r} (n = {self.nvars})", tok, UnknownVariableError)
            return Var(m.group(1), index)
        found = tok.text or "end of input"
        self.error(f"unexpected {found!r}")


def parse(text: str, n: int) -> PotentialExpr:
    """Parse ``text`` as a function of ``xi1..xin, eta1..etan``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    parser = _Parser(text, n)
    try:
        ast = parser.parse()
    except RecursionError:
        raise DSLSyntaxError("expression nested too deeply", 1, 1) from None
    return PotentialExpr(ast, n)


def infer_nvars(text: str) -> int:
    """Largest variable index mentioned in ``text`` (at least 1)."""
    indices = [int(m.group(2)) for m in re.finditer(r"\b(xi|eta)([0-9]+)\b", text)]
    return max(indices, default=1) or 1


# --- printing --------------------------------------------------------------

def _num_text(value: float) -> str:
    if value < 0 or not np.isfinite(value):
        raise DSLError(f"literal {value!r} has no textual form; use Neg")
    text = repr(float(value))
    return text


def to_text(node: Node) -> str:
    """Fully parenthesised text that parses back to the same tree."""
    if isinstance(node, PotentialExpr):
        node = node.ast
    if isinstance(node, Num):
        return _num_text(node.value)
    if isinstance(node, Var):
        return f"{node.kind}{node.index}"
    if isinstance(node, Neg):
        return f"-{_atomic(node.arg)}"
    if isinstance(node, BinOp):
        return f"({to_text(node.left)} {node.op} {to_text(node.right)})"
    if isinstance(node, Pow):
        return f"{_atomic(node.base)}^{node.exponent}"
    if isinstance(node, Func):
        return f"{node.name}({to_text(node.arg)})"
    if isinstance(node, Bump):
        return f"bump({to_text(node.arg)}, {node.index})"
    raise TypeError(f"not an expression node: {node!r}")


def _atomic(node: Node) -> str:
    text = to_text(node)
    if isinstance(node, (Neg, Pow)):
        return f"({text})"
    return text


# --- construction helpers --------------------------------------------------

def num(value: float) -> Node:
    value = float(value)
    return Neg(Num(-value)) if value < 0 else Num(value)


def add(a: Node, b: Node) -> Node:
    return BinOp("+", a, b)


def sub(a: Node, b: Node) -> Node:
    return BinOp("-", a, b)


def mul(a: Node, b: Node) -> Node:
    return BinOp("*", a, b)


def div(a: Node, b: Node) -> Node:
    return BinOp("/", a, b)


def substitute(node: Node, xi=None, eta=None) -> Node:
    """Replace whole variable blocks by constants (``xi=0`` freezes every xi_k)."""
    if isinstance(node, Var):
        value = xi if node.kind == "xi" else eta
        if value is None:
            return node
        value = np.broadcast_to(np.asarray(value, dtype=float), (node.index,)) \
            if np.ndim(value) == 0 else np.asarray(value, dtype=float)
        return num(value[node.index - 1])
    if isinstance(node, Num):
        return node
    if isinstance(node, Neg):
        return Neg(substitute(node.arg, xi, eta))
    if isinstance(node, BinOp):
        return BinOp(node.op, substitute(node.left, xi, eta), substitute(node.right, xi, eta))
    if isinstance(node, Pow):
        return Pow(substitute(node.base, xi, eta), node.exponent)
    if isinstance(node, Func):
        return Func(node.name, substitute(node.arg, xi, eta))
    if isinstance(node, Bump):
        return Bump(substitute(node.arg, xi, eta), node.index)
    raise TypeError(f"not an expression node: {node!r}")


def uses_block(node: Node, kind: str) -> bool:
    if isinstance(node, Var):
        return node.kind == kind
    if isinstance(node, Num):
        return False
    if isinstance(node, BinOp):
        return uses_block(node.left, kind) or uses_block(node.right, kind)
    if isinstance(node, Pow):
        return uses_block(node.base, kind)
    return uses_block(node.arg, kind)


# --- evaluation ------------------------------------------------------------

def bump(x, i: int):
    """``exp(-1/(x - i)^(i+1))`` for ``x > i``, else 0 (vectorised)."""
    x = np.asarray(x, dtype=float)
    s = x - i
    out = np.zeros_like(s)
    pos = s > 0
    with np.errstate(over="ignore", under="ignore", divide="ignore"):
        out[pos] = np.exp(-1.0 / s[pos] ** (i + 1))
    return out if out.ndim else float(out)


def _as_points(values, n: int, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.shape[-1] != n:
        if n == 1:
            arr = arr[..., None]
        else:
            raise ValueError(f"{name} must have trailing dimension {n}, got shape {arr.shape}")
    return arr


def evaluate(expr: PotentialExpr, xi, eta):
    """Evaluate at points; ``xi`` and ``eta`` broadcast with trailing size ``n``.

    Scalars are accepted for ``n = 1``.  Returns a float for a single point.
    """
    n = expr.nvars
    scalar = np.ndim(xi) <= (0 if n == 1 else 1) and np.ndim(eta) <= (0 if n == 1 else 1)
    xi_arr = _as_points(xi, n, "xi")
    eta_arr = _as_points(eta, n, "eta")
    out = _eval(expr.ast, xi_arr, eta_arr)
    out = np.broadcast_to(out, np.broadcast_shapes(xi_arr.shape[:-1], eta_arr.shape[:-1]))
    if scalar:
        return float(out.reshape(-1)[0])
    return np.array(out, dtype=float)


def _eval(node: Node, xi: np.ndarray, eta: np.ndarray):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        block = xi if node.kind == "xi" else eta
        return block[..., node.index - 1]
    if isinstance(node, Neg):
        return -_eval(node.arg, xi, eta)
    if isinstance(node, BinOp):
        a = _eval(node.left, xi, eta)
        b = _eval(node.right, xi, eta)
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if np.any(np.asarray(b) == 0):
            raise DomainError("division by zero")
        return a / b
    if isinstance(node, Pow):
        return _eval(node.base, xi, eta) ** node.exponent
    if isinstance(node, Func):
        a = _eval(node.arg, xi, eta)
        if node.name == "exp":
            return np.exp(a)
        if np.any(np.asarray(a) <= 0):
            raise DomainError("log of a non-positive value")
        return np.log(a)
    if isinstance(node, Bump):
        return bump(_eval(node.arg, xi, eta), node.index)
    raise TypeError(f"not an expression node: {node!r}")
