"""Closed-form scalar expressions with exact structural differentiation.

A small expression language over named coordinates supporting the operators
+, -, *, /, ^ and the functions sin, cos, sinh, cosh, tanh, exp, log, sqrt,
abs.  Text is parsed into immutable, interned syntax trees; partial
derivatives of any order are produced by differentiating the tree (never by
finite differences), so fourth-order pipelines keep full double precision.
Evaluation is vectorised over numpy arrays and raises ``DomainError`` instead
of letting NaN or inf leak into downstream tensor algebra.
"""

from __future__ import annotations

import re
import sys
from typing import Callable, Sequence

import numpy as np

sys.setrecursionlimit(max(sys.getrecursionlimit(), 50_000))

__all__ = [
    "ExpressionError",
    "ParseError",
    "DomainError",
    "Expr",
    "ExpressionField",
    "parse_expression",
    "eval_deriv",
    "num",
    "var",
    "add",
    "sub",
    "mul",
    "div",
    "pow_",
    "fun",
    "field_det",
    "field_inverse",
]


class ExpressionError(Exception):
    """Base class for expression failures."""


class ParseError(ExpressionError):
    """Syntax or symbol error, carrying the byte offset into the source."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


class DomainError(ExpressionError):
    """Evaluation hit a singularity (division, log, sqrt, overflow)."""


# ---------------------------------------------------------------------------
# Interned syntax tree
# ---------------------------------------------------------------------------

_NUM = "num"
_VAR = "var"
_ADD = "add"
_SUB = "sub"
_MUL = "mul"
_DIV = "div"
_POW = "pow"
_FUN = "fun"

_INTERN: dict = {}


class Expr:
    """Immutable expression node.  Nodes are interned, so structural equality
    coincides with object identity and evaluation memoisation is cheap."""

    __slots__ = ("op", "args", "data")

    def __repr__(self):  # pragma: no cover - debugging aid
        return f"Expr({to_text(self)})"


def _intern(op: str, args: tuple, data) -> Expr:
    key = (op, args, data)
    node = _INTERN.get(key)
    if node is None:
        node = object.__new__(Expr)
        node.op = op
        node.args = args
        node.data = data
        _INTERN[key] = node
    return node


def num(value: float) -> Expr:
    return _intern(_NUM, (), float(value))


def var(index: int, name: str) -> Expr:
    return _intern(_VAR, (), (int(index), name))


def _is_num(node: Expr, value: float | None = None) -> bool:
    if node.op != _NUM:
        return False
    return value is None or node.data == value


def _finite(value: float) -> bool:
    # constant folding must never manufacture a non-finite literal; the
    # unfolded node keeps its hard evaluation error instead
    return np.isfinite(value)


def add(a: Expr, b: Expr) -> Expr:
    if _is_num(a) and _is_num(b) and _finite(a.data + b.data):
        return num(a.data + b.data)
    if _is_num(b):  # canonical constant on the left
        a, b = b, a
    if _is_num(a, 0.0):
        return b
    if _is_num(a) and b.op == _ADD and _is_num(b.args[0]) and _finite(a.data + b.args[0].data):
        return add(num(a.data + b.args[0].data), b.args[1])
    return _intern(_ADD, (a, b), None)


def sub(a: Expr, b: Expr) -> Expr:
    if _is_num(a) and _is_num(b) and _finite(a.data - b.data):
        return num(a.data - b.data)
    if a is b:
        return num(0.0)
    if _is_num(b, 0.0):
        return a
    if _is_num(a, 0.0):
        return mul(num(-1.0), b)
    return _intern(_SUB, (a, b), None)


def mul(a: Expr, b: Expr) -> Expr:
    if _is_num(a) and _is_num(b) and _finite(a.data * b.data):
        return num(a.data * b.data)
    if _is_num(b):
        a, b = b, a
    if _is_num(a):
        if a.data == 0.0:
            return num(0.0)
        if a.data == 1.0:
            return b
        if b.op == _MUL and _is_num(b.args[0]) and _finite(a.data * b.args[0].data):
            return mul(num(a.data * b.args[0].data), b.args[1])
    return _intern(_MUL, (a, b), None)


def div(a: Expr, b: Expr) -> Expr:
    if _is_num(a, 0.0):
        return num(0.0)
    if _is_num(b, 1.0):
        return a
    if _is_num(b) and b.data != 0.0 and _finite(1.0 / b.data):
        return mul(num(1.0 / b.data), a)
    return _intern(_DIV, (a, b), None)


def pow_(base: Expr, exponent: Expr) -> Expr:
    if _is_num(exponent, 1.0):
        return base
    if _is_num(exponent, 0.0):
        return num(1.0)
    if _is_num(base) and _is_num(exponent):
        b, e = base.data, exponent.data
        if b > 0.0 or float(e).is_integer():
            try:
                v = float(b) ** float(e)
            except (OverflowError, ZeroDivisionError):
                v = None
            if v is not None and np.isfinite(v):
                return num(v)
    return _intern(_POW, (base, exponent), None)


_FUNCTIONS = ("sin", "cos", "sinh", "cosh", "tanh", "exp", "log", "sqrt", "abs")

_FUN_EVAL: dict[str, Callable] = {
    "sin": np.sin,
    "cos": np.cos,
    "sinh": np.sinh,
    "cosh": np.cosh,
    "tanh": np.tanh,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "abs": np.abs,
}


def fun(name: str, arg: Expr) -> Expr:
    if name not in _FUN_EVAL:
        raise ExpressionError(f"unknown function {name!r}")
    if _is_num(arg):
        x = arg.data
        ok = not ((name == "log" and x <= 0.0) or (name == "sqrt" and x < 0.0))
        if ok:
            v = float(_FUN_EVAL[name](x))
            if np.isfinite(v):
                return num(v)
    return _intern(_FUN, (arg,), name)


# ---------------------------------------------------------------------------
# Differentiation
# ---------------------------------------------------------------------------

_DIFF_CACHE: dict = {}


def diff(node: Expr, axis: int) -> Expr:
    """Exact partial derivative of ``node`` with respect to coordinate ``axis``."""
    key = (node, axis)
    out = _DIFF_CACHE.get(key)
    if out is not None:
        return out
    op = node.op
    if op == _NUM:
        out = num(0.0)
    elif op == _VAR:
        out = num(1.0 if node.data[0] == axis else 0.0)
    elif op == _ADD:
        out = add(diff(node.args[0], axis), diff(node.args[1], axis))
    elif op == _SUB:
        out = sub(diff(node.args[0], axis), diff(node.args[1], axis))
    elif op == _MUL:
        a, b = node.args
        out = add(mul(diff(a, axis), b), mul(a, diff(b, axis)))
    elif op == _DIV:
        a, b = node.args
        out = div(sub(mul(diff(a, axis), b), mul(a, diff(b, axis))), mul(b, b))
    elif op == _POW:
        base, expo = node.args
        dbase = diff(base, axis)
        if _is_num(expo):
            c = expo.data
            out = mul(mul(num(c), pow_(base, num(c - 1.0))), dbase)
        else:
            dexpo = diff(expo, axis)
            inner = add(mul(dexpo, fun("log", base)), mul(expo, div(dbase, base)))
            out = mul(node, inner)
    else:  # _FUN
        name = node.data
        u = node.args[0]
        du = diff(u, axis)
        if name == "sin":
            out = mul(fun("cos", u), du)
        elif name == "cos":
            out = mul(num(-1.0), mul(fun("sin", u), du))
        elif name == "sinh":
            out = mul(fun("cosh", u), du)
        elif name == "cosh":
            out = mul(fun("sinh", u), du)
        elif name == "tanh":
            t = fun("tanh", u)
            out = mul(sub(num(1.0), mul(t, t)), du)
        elif name == "exp":
            out = mul(node, du)
        elif name == "log":
            out = div(du, u)
        elif name == "sqrt":
            out = div(du, mul(num(2.0), node))
        else:  # abs: u/|u| * du, hard error at the kink
            out = mul(div(u, node), du)
    _DIFF_CACHE[key] = out
    return out


# ---------------------------------------------------------------------------
# Evaluation (vectorised, hard domain errors)
# ---------------------------------------------------------------------------


def _check_finite(value, node: Expr):
    if not np.all(np.isfinite(value)):
        raise DomainError(f"non-finite value in subexpression {to_text(node)!r}")
    return value


def evaluate(root: Expr, coord_values: Sequence) -> np.ndarray | float:
    """Evaluate ``root`` given one scalar or array per coordinate index."""
    memo: dict[Expr, object] = {}
    stack = [root]
    with np.errstate(all="ignore"):
        while stack:
            node = stack[-1]
            if node in memo:
                stack.pop()
                continue
            op = node.op
            if op == _NUM:
                memo[node] = node.data
                stack.pop()
                continue
            if op == _VAR:
                memo[node] = coord_values[node.data[0]]
                stack.pop()
                continue
            pending = [c for c in node.args if c not in memo]
            if pending:
                stack.extend(pending)
                continue
            stack.pop()
            vals = [memo[c] for c in node.args]
            if op == _ADD:
                out = vals[0] + vals[1]
            elif op == _SUB:
                out = vals[0] - vals[1]
            elif op == _MUL:
                out = vals[0] * vals[1]
            elif op == _DIV:
                if np.any(vals[1] == 0.0):
                    raise DomainError(f"division by zero in {to_text(node)!r}")
                out = vals[0] / vals[1]
            elif op == _POW:
                base, expo = vals
                enode = node.args[1]
                if _is_num(enode) and float(enode.data).is_integer():
                    k = enode.data
                    if k < 0 and np.any(base == 0.0):
                        raise DomainError(f"zero base with negative power in {to_text(node)!r}")
                    out = np.power(base, k) if isinstance(base, np.ndarray) else base**k
                else:
                    if np.any(base <= 0.0):
                        raise DomainError(
                            f"non-positive base for non-integer power in {to_text(node)!r}"
                        )
                    out = np.power(base, expo)
            else:  # _FUN
                name = node.data
                x = vals[0]
                if name == "log" and np.any(x <= 0.0):
                    raise DomainError(f"log of non-positive value in {to_text(node)!r}")
                if name == "sqrt" and np.any(x < 0.0):
                    raise DomainError(f"sqrt of negative value in {to_text(node)!r}")
                out = _FUN_EVAL[name](x)
            memo[node] = _check_finite(out, node)
    return memo[root]


# ---------------------------------------------------------------------------
# Printing (round-trips through the parser to the identical tree)
# ---------------------------------------------------------------------------

_PREC_ADD = 1
_PREC_MUL = 2
_PREC_UNARY = 3
_PREC_POW = 4
_PREC_ATOM = 5


def _render(node: Expr) -> tuple[str, int]:
    op = node.op
    if op == _NUM:
        v = node.data
        if v < 0:
            return repr(v), _PREC_UNARY
        return repr(v), _PREC_ATOM
    if op == _VAR:
        return node.data[1], _PREC_ATOM
    if op == _FUN:
        inner, _ = _render(node.args[0])
        return f"{node.data}({inner})", _PREC_ATOM
    if op in (_ADD, _SUB):
        ls, lp = _render(node.args[0])
        rs, rp = _render(node.args[1])
        if lp < _PREC_ADD:
            ls = f"({ls})"
        # right operand needs parens at equal precedence (left association)
        if rp <= _PREC_ADD:
            rs = f"({rs})"
        return f"{ls} {'+' if op == _ADD else '-'} {rs}", _PREC_ADD
    if op in (_MUL, _DIV):
        if op == _MUL and _is_num(node.args[0], -1.0):
            rs, rp = _render(node.args[1])
            if rp < _PREC_UNARY:
                rs = f"({rs})"
            return f"-{rs}", _PREC_UNARY
        ls, lp = _render(node.args[0])
        rs, rp = _render(node.args[1])
        if lp < _PREC_MUL:
            ls = f"({ls})"
        if rp <= _PREC_MUL:
            rs = f"({rs})"
        return f"{ls} {'*' if op == _MUL else '/'} {rs}", _PREC_MUL
    # _POW, right associative and tighter than unary minus
    ls, lp = _render(node.args[0])
    rs, rp = _render(node.args[1])
    if lp <= _PREC_POW:
        ls = f"({ls})"
    if rp < _PREC_POW:
        rs = f"({rs})"
    return f"{ls}^{rs}", _PREC_POW


def to_text(node: Expr) -> str:
    return _render(node)[0]


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^()]))"
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
            raise ParseError(f"unexpected character {stripped[0]!r}", len(text) - len(stripped))
        if m.lastgroup == "num":
            tokens.append(("num", m.group("num"), m.start("num")))
        elif m.lastgroup == "ident":
            tokens.append(("ident", m.group("ident"), m.start("ident")))
        else:
            tokens.append(("op", m.group("op"), m.start("op")))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, coords: Sequence[str]):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0
        self.index = {name: i for i, name in enumerate(coords)}

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, symbol: str):
        kind, text, offset = self.peek()
        if kind != "op" or text != symbol:
            raise ParseError(f"expected {symbol!r}", offset)
        self.advance()

    def parse(self) -> Expr:
        node = self.expr()
        kind, text, offset = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {text!r}", offset)
        return node

    def expr(self) -> Expr:
        node = self.term()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "+-":
                self.advance()
                rhs = self.term()
                node = add(node, rhs) if text == "+" else sub(node, rhs)
            else:
                return node

    def term(self) -> Expr:
        node = self.unary()
        while True:
            kind, text, _ = self.peek()
            if kind == "op" and text in "*/":
                self.advance()
                rhs = self.unary()
                node = mul(node, rhs) if text == "*" else div(node, rhs)
            else:
                return node

    def unary(self) -> Expr:
        kind, text, _ = self.peek()
        if kind == "op" and text == "-":
            self.advance()
            return mul(num(-1.0), self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        kind, text, _ = self.peek()
        if kind == "op" and text == "^":
            self.advance()
            return pow_(base, self.unary())
        return base

    def atom(self) -> Expr:
        kind, text, offset = self.advance()
        if kind == "num":
            return num(float(text))
        if kind == "ident":
            nk, ntext, _ = self.peek()
            if nk == "op" and ntext == "(":
                if text not in _FUN_EVAL:
                    raise ParseError(f"unknown function {text!r}", offset)
                self.advance()
                arg = self.expr()
                self.expect_op(")")
                return fun(text, arg)
            if text not in self.index:
                raise ParseError(f"unknown identifier {text!r}", offset)
            return var(self.index[text], text)
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        raise ParseError(f"unexpected token {text!r}" if text else "unexpected end of input", offset)


# ---------------------------------------------------------------------------
# ExpressionField: an expression bound to an ordered coordinate tuple
# ---------------------------------------------------------------------------


class ExpressionField:
    """A scalar function of chart coordinates, differentiable to any order."""

    __slots__ = ("coords", "ast", "_partials")

    def __init__(self, ast: Expr, coords: Sequence[str]):
        self.ast = ast
        self.coords = tuple(coords)
        self._partials: dict[int, ExpressionField] = {}

    # -- evaluation ---------------------------------------------------------

    def __call__(self, point) -> float:
        return self.evaluate(point)

    def evaluate(self, point) -> float:
        point = np.asarray(point, dtype=float)
        out = evaluate(self.ast, [point[i] for i in range(len(self.coords))])
        return float(out)

    def evaluate_batch(self, points: np.ndarray) -> np.ndarray:
        """Evaluate at an (k, m) array of points, returning shape (k,)."""
        points = np.asarray(points, dtype=float)
        if points.ndim == 1:
            points = points[None, :]
        out = evaluate(self.ast, [points[:, i] for i in range(len(self.coords))])
        return np.broadcast_to(np.asarray(out, dtype=float), (points.shape[0],)).copy()

    # -- calculus -----------------------------------------------------------

    def partial(self, axis: int) -> "ExpressionField":
        fld = self._partials.get(axis)
        if fld is None:
            fld = ExpressionField(diff(self.ast, axis), self.coords)
            self._partials[axis] = fld
        return fld

    def derivative(self, multi_index: Sequence[int]) -> "ExpressionField":
        fld = self
        for axis, order in enumerate(multi_index):
            for _ in range(int(order)):
                fld = fld.partial(axis)
        return fld

    def compose(self, inner: Sequence["ExpressionField"]) -> "ExpressionField":
        """Substitute coordinate i by inner[i]; result lives on inner coords."""
        if len(inner) != len(self.coords):
            raise ExpressionError("composition arity mismatch")
        new_coords = inner[0].coords
        for f in inner:
            if f.coords != new_coords:
                raise ExpressionError("inner fields must share a coordinate chart")
        memo: dict[Expr, Expr] = {}

        def walk(node: Expr) -> Expr:
            got = memo.get(node)
            if got is not None:
                return got
            op = node.op
            if op == _NUM:
                out = node
            elif op == _VAR:
                out = inner[node.data[0]].ast
            elif op == _ADD:
                out = add(walk(node.args[0]), walk(node.args[1]))
            elif op == _SUB:
                out = sub(walk(node.args[0]), walk(node.args[1]))
            elif op == _MUL:
                out = mul(walk(node.args[0]), walk(node.args[1]))
            elif op == _DIV:
                out = div(walk(node.args[0]), walk(node.args[1]))
            elif op == _POW:
                out = pow_(walk(node.args[0]), walk(node.args[1]))
            else:
                out = fun(node.data, walk(node.args[0]))
            memo[node] = out
            return out

        return ExpressionField(walk(self.ast), new_coords)

    # -- algebra ------------------------------------------------------------

    def _coerce(self, other) -> Expr:
        if isinstance(other, ExpressionField):
            if other.coords != self.coords:
                raise ExpressionError("fields live on different charts")
            return other.ast
        return num(float(other))

    def __add__(self, other):
        return ExpressionField(add(self.ast, self._coerce(other)), self.coords)

    def __radd__(self, other):
        return ExpressionField(add(self._coerce(other), self.ast), self.coords)

    def __sub__(self, other):
        return ExpressionField(sub(self.ast, self._coerce(other)), self.coords)

    def __rsub__(self, other):
        return ExpressionField(sub(self._coerce(other), self.ast), self.coords)

    def __mul__(self, other):
        return ExpressionField(mul(self.ast, self._coerce(other)), self.coords)

    def __rmul__(self, other):
        return ExpressionField(mul(self._coerce(other), self.ast), self.coords)

    def __truediv__(self, other):
        return ExpressionField(div(self.ast, self._coerce(other)), self.coords)

    def __rtruediv__(self, other):
        return ExpressionField(div(self._coerce(other), self.ast), self.coords)

    def __pow__(self, other):
        return ExpressionField(pow_(self.ast, self._coerce(other)), self.coords)

    def __neg__(self):
        return ExpressionField(mul(num(-1.0), self.ast), self.coords)

    def apply(self, fname: str) -> "ExpressionField":
        return ExpressionField(fun(fname, self.ast), self.coords)

    def is_zero(self) -> bool:
        return _is_num(self.ast, 0.0)

    def to_text(self) -> str:
        return to_text(self.ast)

    def __repr__(self):  # pragma: no cover
        return f"ExpressionField({self.to_text()!r}, coords={self.coords})"


# -- constructors and helpers ------------------------------------------------


def parse_expression(text: str, coords: Sequence[str]) -> ExpressionField:
    """Parse ``text`` over distinct coordinate identifiers ``coords``."""
    if not text or not text.strip():
        raise ParseError("empty expression", 0)
    names = list(coords)
    if len(set(names)) != len(names):
        raise ExpressionError("coordinate names must be distinct")
    return ExpressionField(_Parser(text, names).parse(), names)


def constant(value: float, coords: Sequence[str]) -> ExpressionField:
    return ExpressionField(num(value), coords)


def coordinate_fields(coords: Sequence[str]) -> list[ExpressionField]:
    names = tuple(coords)
    return [ExpressionField(var(i, name), names) for i, name in enumerate(names)]


def eval_deriv(field: ExpressionField, point, multi_index: Sequence[int]) -> float:
    """Exact partial derivative value; total order is capped at four."""
    orders = [int(k) for k in multi_index]
    if len(orders) != len(field.coords):
        raise ExpressionError("multi-index length must match the coordinate count")
    if any(k < 0 for k in orders):
        raise ExpressionError("multi-index entries must be non-negative")
    if sum(orders) > 4:
        raise ExpressionError("derivatives above total order 4 are not part of the contract")
    return field.derivative(orders).evaluate(point)


# -- field matrices -----------------------------------------------------------


def field_det(matrix: Sequence[Sequence[ExpressionField]]) -> ExpressionField:
    """Determinant of a square matrix of fields by Laplace expansion."""
    n = len(matrix)
    if n == 1:
        return matrix[0][0]
    if n == 2:
        return matrix[0][0] * matrix[1][1] - matrix[0][1] * matrix[1][0]
    total = None
    for j in range(n):
        minor = [[matrix[r][c] for c in range(n) if c != j] for r in range(1, n)]
        term = matrix[0][j] * field_det(minor)
        if j % 2 == 1:
            term = -term
        total = term if total is None else total + term
    return total


def field_inverse(matrix: Sequence[Sequence[ExpressionField]]) -> list[list[ExpressionField]]:
    """Inverse via adjugate over determinant (exact, domain-error on singular)."""
    n = len(matrix)
    det = field_det(matrix)
    if n == 1:
        return [[constant(1.0, matrix[0][0].coords) / det]]
    out = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [
                [matrix[r][c] for c in range(n) if c != i]
                for r in range(n)
                if r != j
            ]
            cof = field_det(minor)
            if (i + j) % 2 == 1:
                cof = -cof
            out[i][j] = cof / det
    return out
