"""Scalar expression trees in chart variables.

Every component function in the package (nonlinear connection coefficients,
metric blocks, structure tensors, test fields) is an :class:`Expr`.  Trees are
immutable and hash-consed by structure, so derivatives can be memoized.

Variables are indexed globally: ``0 .. n-1`` are the base coordinates
``x1..xn`` and ``n .. n+m-1`` are the fibre coordinates ``y1..ym``.
"""
from __future__ import annotations

import math
import re
from functools import lru_cache
from typing import Callable

import numpy as np

FUNCTIONS = ("sin", "cos", "sinh", "cosh", "exp", "log", "sqrt")


class ExprError(ValueError):
    """Base class for expression errors."""


class ParseError(ExprError):
    def __init__(self, message: str, position: int, text: str = ""):
        self.position = position
        self.text = text
        super().__init__(f"{message} at position {position}")


class UnknownIdentifierError(ParseError):
    pass


class ArityError(ParseError):
    pass


class DomainError(ExprError, ArithmeticError):
    """Raised when evaluation leaves the domain of an operation."""

    def __init__(self, message: str, subtree: "Expr | None" = None, point=None):
        self.subtree = subtree
        self.point = point
        if subtree is not None:
            message = f"{message} in subtree '{subtree}'"
        super().__init__(message)


# --------------------------------------------------------------------------
# nodes


class Expr:
    __slots__ = ("_hash",)

    def _key(self) -> tuple:
        raise NotImplementedError

    def __hash__(self) -> int:
        try:
            return self._hash
        except AttributeError:
            h = hash(self._key())
            object.__setattr__(self, "_hash", h)
            return h

    def __eq__(self, other) -> bool:
        if self is other:
            return True
        if not isinstance(other, Expr) or hash(self) != hash(other):
            return False
        return self._key() == other._key()

    def __setattr__(self, name, value):
        raise AttributeError("Expr nodes are immutable")

    # arithmetic builds simplified trees
    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return sub(self, as_expr(other))

    def __rsub__(self, other):
        return sub(as_expr(other), self)

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __truediv__(self, other):
        return div(self, as_expr(other))

    def __rtruediv__(self, other):
        return div(as_expr(other), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, k: int):
        return power(self, k)

    def diff(self, var: int) -> "Expr":
        return differentiate(self, var)

    def __str__(self) -> str:
        return to_string(self)

    def __repr__(self) -> str:
        return f"Expr({to_string(self)!r})"


class Const(Expr):
    __slots__ = ("value",)

    def __init__(self, value: float):
        object.__setattr__(self, "value", float(value))

    def _key(self):
        return ("c", self.value)


class Var(Expr):
    __slots__ = ("index", "name")

    def __init__(self, index: int, name: str):
        object.__setattr__(self, "index", int(index))
        object.__setattr__(self, "name", name)

    def _key(self):
        return ("v", self.index, self.name)


class Unary(Expr):
    """Negation (op ``"neg"``) or one of :data:`FUNCTIONS`."""

    __slots__ = ("op", "arg")

    def __init__(self, op: str, arg: Expr):
        object.__setattr__(self, "op", op)
        object.__setattr__(self, "arg", arg)

    def _key(self):
        return ("u", self.op, self.arg)


class Binary(Expr):
    __slots__ = ("op", "left", "right")

    def __init__(self, op: str, left: Expr, right: Expr):
        object.__setattr__(self, "op", op)
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)

    def _key(self):
        return ("b", self.op, self.left, self.right)


class Pow(Expr):
    __slots__ = ("base", "exponent")

    def __init__(self, base: Expr, exponent: int):
        if int(exponent) != exponent or exponent < 0:
            raise ExprError("only non-negative integer exponents are supported")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "exponent", int(exponent))

    def _key(self):
        return ("p", self.base, self.exponent)


ZERO = Const(0.0)
ONE = Const(1.0)


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, (int, float, np.floating, np.integer)):
        return Const(float(value))
    raise TypeError(f"cannot convert {type(value).__name__} to Expr")


def is_const(e, value: float | None = None) -> bool:
    if not isinstance(e, Const):
        return False
    return value is None or e.value == value


# --------------------------------------------------------------------------
# smart constructors (constant folding and elision only)


def add(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    if is_const(a, 0.0):
        return b
    if is_const(b, 0.0):
        return a
    if isinstance(b, Unary) and b.op == "neg":
        return sub(a, b.arg)
    return Binary("add", a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    if is_const(b, 0.0):
        return a
    if is_const(a, 0.0):
        return neg(b)
    if isinstance(b, Unary) and b.op == "neg":
        return add(a, b.arg)
    return Binary("sub", a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    if is_const(a, 0.0) or is_const(b, 0.0):
        return ZERO
    if is_const(a, 1.0):
        return b
    if is_const(b, 1.0):
        return a
    if is_const(a, -1.0):
        return neg(b)
    if is_const(b, -1.0):
        return neg(a)
    return Binary("mul", a, b)


def div(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and isinstance(b, Const) and b.value != 0.0:
        return Const(a.value / b.value)
    if is_const(b, 1.0):
        return a
    if is_const(a, 0.0) and isinstance(b, Const) and b.value != 0.0:
        return ZERO
    return Binary("div", a, b)


def neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Unary) and a.op == "neg":
        return a.arg
    return Unary("neg", a)


def power(a: Expr, k: int) -> Expr:
    if k == 0:
        return ONE
    if k == 1:
        return a
    if isinstance(a, Const):
        return Const(a.value**k)
    return Pow(a, k)


_FOLDABLE = {
    "sin": math.sin, "cos": math.cos, "sinh": math.sinh, "cosh": math.cosh,
    "exp": math.exp, "log": math.log, "sqrt": math.sqrt,
}


def func(name: str, a: Expr) -> Expr:
    if name not in _FOLDABLE:
        raise ExprError(f"unknown function {name!r}")
    if isinstance(a, Const):
        try:
            return Const(_FOLDABLE[name](a.value))
        except (ValueError, OverflowError):
            pass  # keep the node; evaluation reports the domain error
    return Unary(name, a)


def simplify(e: Expr) -> Expr:
    """Rebuild ``e`` bottom-up through the folding constructors."""
    return _simplify(e)


@lru_cache(maxsize=None)
def _simplify(e: Expr) -> Expr:
    if isinstance(e, (Const, Var)):
        return e
    if isinstance(e, Unary):
        a = _simplify(e.arg)
        return neg(a) if e.op == "neg" else func(e.op, a)
    if isinstance(e, Pow):
        return power(_simplify(e.base), e.exponent)
    a, b = _simplify(e.left), _simplify(e.right)
    return {"add": add, "sub": sub, "mul": mul, "div": div}[e.op](a, b)


# --------------------------------------------------------------------------
# differentiation


def differentiate(e: Expr, var: int) -> Expr:
    """Exact symbolic partial derivative with respect to variable ``var``."""
    return _diff(e, int(var))


@lru_cache(maxsize=None)
def _diff(e: Expr, v: int) -> Expr:
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.index == v else ZERO
    if isinstance(e, Pow):
        db = _diff(e.base, v)
        if is_const(db, 0.0):
            return ZERO
        k = e.exponent
        return mul(mul(Const(k), power(e.base, k - 1)), db)
    if isinstance(e, Binary):
        a, b = e.left, e.right
        da, db = _diff(a, v), _diff(b, v)
        if e.op == "add":
            return add(da, db)
        if e.op == "sub":
            return sub(da, db)
        if e.op == "mul":
            return add(mul(da, b), mul(a, db))
        # quotient rule
        num = sub(mul(da, b), mul(a, db))
        if is_const(num, 0.0):
            return ZERO
        return div(num, power(b, 2))
    a = e.arg
    da = _diff(a, v)
    if is_const(da, 0.0):
        return ZERO
    op = e.op
    if op == "neg":
        return neg(da)
    if op == "sin":
        outer = func("cos", a)
    elif op == "cos":
        outer = neg(func("sin", a))
    elif op == "sinh":
        outer = func("cosh", a)
    elif op == "cosh":
        outer = func("sinh", a)
    elif op == "exp":
        outer = e
    elif op == "log":
        return div(da, a)
    elif op == "sqrt":
        return div(da, mul(Const(2.0), e))
    else:  # pragma: no cover
        raise ExprError(op)
    return mul(outer, da)


# --------------------------------------------------------------------------
# printing

_PREC = {"add": 1, "sub": 1, "mul": 2, "div": 2}
_SYM = {"add": " + ", "sub": " - ", "mul": "*", "div": "/"}


def _fmt_number(x: float) -> str:
    if x.is_integer() and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def _prec(e: Expr) -> int:
    if isinstance(e, Binary):
        return _PREC[e.op]
    if isinstance(e, Unary) and e.op == "neg":
        return 3
    if isinstance(e, Const) and e.value < 0:
        return 3
    if isinstance(e, Pow):
        return 4
    return 5


def to_string(e: Expr) -> str:
    """Canonical infix form; parses back to an equal tree."""
    if isinstance(e, Const):
        if e.value < 0 or math.copysign(1.0, e.value) < 0:
            return "-" + _fmt_number(-e.value)
        return _fmt_number(e.value)
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Pow):
        b = to_string(e.base)
        if _prec(e.base) < 5:
            b = f"({b})"
        return f"{b}^{e.exponent}"
    if isinstance(e, Unary):
        a = to_string(e.arg)
        if e.op == "neg":
            return "-" + (f"({a})" if _prec(e.arg) < 3 else a)
        return f"{e.op}({a})"
    p = _PREC[e.op]
    left = to_string(e.left)
    right = to_string(e.right)
    if _prec(e.left) < p:
        left = f"({left})"
    # left-associative: equal precedence on the right needs parentheses
    if _prec(e.right) <= p:
        right = f"({right})"
    return left + _SYM[e.op] + right


# --------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<id>[A-Za-z_]\w*)|(?P<op>[-+*/^(),]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos:].lstrip()[:1]!r}", pos, text)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, names: dict[str, int]):
        self.text = text
        self.names = names
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, val, pos = self.take()
        if val != value or kind != "op":
            found = val or "end of input"
            raise ParseError(f"expected {value!r}, found {found!r}", pos, self.text)

    def parse(self) -> Expr:
        e = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {val!r}", pos, self.text)
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            e = Binary("add" if op == "+" else "sub", e, self.term())
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            e = Binary("mul" if op == "*" else "div", e, self.unary())
        return e

    def unary(self) -> Expr:
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Unary("neg", self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            kind, val, pos = self.take()
            if kind != "num" or not re.fullmatch(r"\d+", val):
                raise ParseError("exponent must be a non-negative integer", pos, self.text)
            return Pow(base, int(val))
        return base

    def atom(self) -> Expr:
        kind, val, pos = self.take()
        if kind == "num":
            return Const(float(val))
        if kind == "id":
            if val in FUNCTIONS:
                if self.peek()[:2] != ("op", "("):
                    raise ArityError(f"function {val!r} requires one argument", pos, self.text)
                self.take()
                arg = self.expr()
                if self.peek()[:2] == ("op", ","):
                    raise ArityError(f"function {val!r} takes exactly one argument", self.peek()[2], self.text)
                self.expect(")")
                return Unary(val, arg)
            if val not in self.names:
                raise UnknownIdentifierError(f"unknown identifier {val!r}", pos, self.text)
            return Var(self.names[val], val)
        if (kind, val) == ("op", "("):
            e = self.expr()
            self.expect(")")
            return e
        raise ParseError(f"unexpected token {val or 'end of input'!r}", pos, self.text)


def variable_names(n: int, m: int) -> list[str]:
    return [f"x{i + 1}" for i in range(n)] + [f"y{a + 1}" for a in range(m)]


def parse(text: str, chart) -> Expr:
    """Parse infix ``text`` over the variables of ``chart``.

    ``chart`` is anything with ``n`` and ``m`` attributes (a :class:`~pacfin.bundle.Chart`).
    """
    names = {name: i for i, name in enumerate(variable_names(chart.n, chart.m))}
    return _Parser(text, names).parse()


def var(chart, name: str) -> Var:
    names = variable_names(chart.n, chart.m)
    if name not in names:
        raise UnknownIdentifierError(f"unknown identifier {name!r}", 0, name)
    return Var(names.index(name), name)


# --------------------------------------------------------------------------
# evaluation

_NP = {
    "sin": "np.sin", "cos": "np.cos", "sinh": "np.sinh", "cosh": "np.cosh",
    "exp": "np.exp", "log": "np.log", "sqrt": "np.sqrt",
}


def _codegen(e: Expr, memo: dict, lines: list) -> str:
    if e in memo:
        return memo[e]
    if isinstance(e, Const):
        return repr(e.value)
    if isinstance(e, Var):
        code = f"U[:, {e.index}]"
        memo[e] = code
        return code
    if isinstance(e, Unary):
        a = _codegen(e.arg, memo, lines)
        rhs = f"-({a})" if e.op == "neg" else f"{_NP[e.op]}({a})"
    elif isinstance(e, Pow):
        a = _codegen(e.base, memo, lines)
        rhs = "*".join([f"({a})"] * e.exponent) if e.exponent <= 4 else f"({a})**{e.exponent}"
    else:
        a = _codegen(e.left, memo, lines)
        b = _codegen(e.right, memo, lines)
        rhs = f"({a}) {_SYM[e.op].strip()} ({b})"
    name = f"t{len(lines)}"
    lines.append(f"    {name} = {rhs}")
    memo[e] = name
    return name


@lru_cache(maxsize=None)
def compile_expr(e: Expr) -> Callable[[np.ndarray], np.ndarray]:
    """Compile ``e`` into a vectorized function of a ``(P, d)`` point array."""
    lines: list[str] = []
    out = _codegen(e, {}, lines)
    src = "def _f(U):\n" + "\n".join(lines) + f"\n    return np.broadcast_to(np.asarray({out}, dtype=float), (U.shape[0],))\n"
    scope = {"np": np}
    exec(compile(src, "<pacfin-expr>", "exec"), scope)
    return scope["_f"]


def evaluate_many(e: Expr, points: np.ndarray) -> np.ndarray:
    """Evaluate at each row of ``points``; raises :class:`DomainError` on failure."""
    U = np.atleast_2d(np.asarray(points, dtype=float))
    f = compile_expr(e)
    try:
        with np.errstate(divide="raise", invalid="raise", over="ignore"):
            return np.array(f(U), dtype=float)
    except FloatingPointError:
        for row in U:
            _locate_domain_error(e, row)
        raise DomainError("floating point domain error", e)


def evaluate(e: Expr, point) -> float:
    """Evaluate at one point given as a flat coordinate vector ``(x..., y...)``
    or an object with ``x`` and ``y`` sequences."""
    if hasattr(point, "x") and hasattr(point, "y"):
        point = list(point.x) + list(point.y)
    return float(evaluate_many(e, np.asarray(point, dtype=float)[None, :])[0])


def _locate_domain_error(e: Expr, u) -> float:
    """Scalar re-evaluation that pinpoints the failing subtree."""
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        return float(u[e.index])
    if isinstance(e, Pow):
        return _locate_domain_error(e.base, u) ** e.exponent
    if isinstance(e, Binary):
        a = _locate_domain_error(e.left, u)
        b = _locate_domain_error(e.right, u)
        if e.op == "add":
            return a + b
        if e.op == "sub":
            return a - b
        if e.op == "mul":
            return a * b
        if b == 0.0:
            raise DomainError("division by zero", e, tuple(u))
        return a / b
    a = _locate_domain_error(e.arg, u)
    if e.op == "neg":
        return -a
    if e.op == "log" and a <= 0.0:
        raise DomainError("log of non-positive value", e, tuple(u))
    if e.op == "sqrt" and a < 0.0:
        raise DomainError("sqrt of negative value", e, tuple(u))
    try:
        return _FOLDABLE[e.op](a)
    except OverflowError:
        return math.inf


def free_variables(e: Expr) -> set[int]:
    if isinstance(e, Const):
        return set()
    if isinstance(e, Var):
        return {e.index}
    if isinstance(e, Unary):
        return free_variables(e.arg)
    if isinstance(e, Pow):
        return free_variables(e.base)
    return free_variables(e.left) | free_variables(e.right)
