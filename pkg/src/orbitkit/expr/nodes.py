"""Expression trees over phase-space variables.

Expressions are immutable trees built from real constants, variables
(referenced by index into a declared variable list), a fixed set of unary
functions (neg, sin, cos, exp, log, sqrt) and binary operators
(add, sub, mul, div, pow).  Power exponents must be constants so that
symbolic differentiation stays closed over the node set.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

UNARY_KINDS = ("neg", "sin", "cos", "exp", "log", "sqrt")
BINARY_KINDS = ("add", "sub", "mul", "div", "pow")


class ExprError(ValueError):
    """Base class for expression-level errors."""


class NonConstantExponentError(ExprError):
    """Raised when a pow node is built with a non-constant exponent."""


class EvalDomainError(ExprError):
    """Raised when evaluation leaves the real domain (log(x<=0), x/0, ...).

    Carries the offending subexpression and, when known, the number of
    degrees of freedom so the message can use q/p variable names.
    """

    def __init__(self, reason: str, subexpr: "Expr", n: int | None = None):
        self.reason = reason
        self.subexpr = subexpr
        self.n = n
        super().__init__(self._message())

    def _message(self) -> str:
        if self.n is not None:
            rendered = to_source(self.subexpr, PhaseVariables(self.n))
        else:
            rendered = repr(self.subexpr)
        return f"{self.reason} in subexpression {rendered}"


@dataclass(frozen=True)
class Expr:
    """Base node type; concrete nodes are Const, Var and Op."""

    __slots__ = ()


@dataclass(frozen=True)
class Const(Expr):
    value: float

    def __post_init__(self):
        object.__setattr__(self, "value", float(self.value))


@dataclass(frozen=True)
class Var(Expr):
    index: int

    def __post_init__(self):
        if self.index < 0:
            raise ExprError(f"variable index must be >= 0, got {self.index}")


@dataclass(frozen=True)
class Op(Expr):
    kind: str
    args: tuple[Expr, ...]

    def __post_init__(self):
        if self.kind in UNARY_KINDS:
            arity = 1
        elif self.kind in BINARY_KINDS:
            arity = 2
        else:
            raise ExprError(f"unknown operator kind {self.kind!r}")
        if len(self.args) != arity:
            raise ExprError(f"{self.kind} expects {arity} argument(s), got {len(self.args)}")
        if self.kind == "pow" and not isinstance(self.args[1], Const):
            raise NonConstantExponentError("pow exponent must be a constant expression")


ZERO = Const(0.0)
ONE = Const(1.0)


# Constructor shorthands keep the calculus code readable.
def add(a: Expr, b: Expr) -> Expr:
    return Op("add", (a, b))


def sub(a: Expr, b: Expr) -> Expr:
    return Op("sub", (a, b))


def mul(a: Expr, b: Expr) -> Expr:
    return Op("mul", (a, b))


def div(a: Expr, b: Expr) -> Expr:
    return Op("div", (a, b))


def pow_(base: Expr, exponent: float | Const) -> Expr:
    if not isinstance(exponent, Const):
        exponent = Const(exponent)
    return Op("pow", (base, exponent))


def neg(a: Expr) -> Expr:
    return Op("neg", (a,))


def sin(a: Expr) -> Expr:
    return Op("sin", (a,))


def cos(a: Expr) -> Expr:
    return Op("cos", (a,))


def exp(a: Expr) -> Expr:
    return Op("exp", (a,))


def log(a: Expr) -> Expr:
    return Op("log", (a,))


def sqrt(a: Expr) -> Expr:
    return Op("sqrt", (a,))


@dataclass(frozen=True)
class PhaseVariables:
    """The canonical variable list q_1..q_n, p_1..p_n for n degrees of freedom.

    Index convention: q_i -> i-1 and p_i -> n+i-1, so a phase point is the
    flat vector (q_1..q_n, p_1..p_n).
    """

    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ExprError(f"need at least one degree of freedom, got n={self.n}")

    @property
    def size(self) -> int:
        return 2 * self.n

    @property
    def names(self) -> tuple[str, ...]:
        qs = tuple(f"q{i + 1}" for i in range(self.n))
        ps = tuple(f"p{i + 1}" for i in range(self.n))
        return qs + ps

    def name_of(self, index: int) -> str:
        if not 0 <= index < self.size:
            raise ExprError(f"variable index {index} out of range for n={self.n}")
        if index < self.n:
            return f"q{index + 1}"
        return f"p{index - self.n + 1}"

    def index_of(self, name: str) -> int:
        kind, digits = name[:1], name[1:]
        if kind in ("q", "p") and digits.isdigit():
            i = int(digits)
            if 1 <= i <= self.n:
                return i - 1 if kind == "q" else self.n + i - 1
        raise KeyError(name)

    def q(self, i: int) -> Var:
        """1-based position variable."""
        return Var(self.index_of(f"q{i}"))

    def p(self, i: int) -> Var:
        """1-based momentum variable."""
        return Var(self.index_of(f"p{i}"))


def free_variables(e: Expr) -> set[int]:
    """Set of variable indices appearing in e."""
    out: set[int] = set()
    stack = [e]
    while stack:
        node = stack.pop()
        if isinstance(node, Var):
            out.add(node.index)
        elif isinstance(node, Op):
            stack.extend(node.args)
    return out


def evaluate(e: Expr, x) -> float:
    """Evaluate e at the phase point x (sequence of 2n floats).

    Raises EvalDomainError for log of a non-positive value, division by
    zero, sqrt of a negative value, fractional powers of negative bases
    and floating overflow; the error names the offending subexpression.
    """
    n = len(x) // 2 if len(x) % 2 == 0 else None

    def rec(node: Expr) -> float:
        match node:
            case Const(value=v):
                return v
            case Var(index=i):
                if i >= len(x):
                    raise ExprError(f"point has {len(x)} coordinates, expression uses index {i}")
                return float(x[i])
            case Op(kind="neg", args=(a,)):
                return -rec(a)
            case Op(kind="sin", args=(a,)):
                return math.sin(rec(a))
            case Op(kind="cos", args=(a,)):
                return math.cos(rec(a))
            case Op(kind="exp", args=(a,)):
                try:
                    return math.exp(rec(a))
                except OverflowError:
                    raise EvalDomainError("overflow in exp", node, n) from None
            case Op(kind="log", args=(a,)):
                va = rec(a)
                if va <= 0.0:
                    raise EvalDomainError(f"log of non-positive value {va!r}", node, n)
                return math.log(va)
            case Op(kind="sqrt", args=(a,)):
                va = rec(a)
                if va < 0.0:
                    raise EvalDomainError(f"sqrt of negative value {va!r}", node, n)
                return math.sqrt(va)
            case Op(kind="add", args=(a, b)):
                return rec(a) + rec(b)
            case Op(kind="sub", args=(a, b)):
                return rec(a) - rec(b)
            case Op(kind="mul", args=(a, b)):
                return rec(a) * rec(b)
            case Op(kind="div", args=(a, b)):
                vb = rec(b)
                if vb == 0.0:
                    raise EvalDomainError("division by zero", node, n)
                return rec(a) / vb
            case Op(kind="pow", args=(a, b)):
                va, vb = rec(a), rec(b)
                try:
                    return math.pow(va, vb)
                except (ValueError, OverflowError) as err:
                    raise EvalDomainError(f"pow domain error ({err})", node, n) from None
        raise ExprError(f"cannot evaluate node {node!r}")

    return rec(e)


# Printing precedence: atoms 5, pow 4, unary minus 3, mul/div 2, add/sub 1.
_PRECEDENCE = {"add": 1, "sub": 1, "mul": 2, "div": 2, "neg": 3, "pow": 4}
_FUNCTIONS = ("sin", "cos", "exp", "log", "sqrt")


def _prec(e: Expr) -> int:
    if isinstance(e, Op) and e.kind in _PRECEDENCE:
        return _PRECEDENCE[e.kind]
    return 5


def to_source(e: Expr, variables: PhaseVariables) -> str:
    """Render e in the input grammar; parse(to_source(e)) reproduces e
    for expressions in simplify-normal form."""

    def wrap(child: Expr, minimum: int) -> str:
        text = rec(child)
        if _prec(child) < minimum:
            return f"({text})"
        return text

    def rec(node: Expr) -> str:
        match node:
            case Const(value=v):
                return repr(v)
            case Var(index=i):
                return variables.name_of(i)
            case Op(kind="neg", args=(a,)):
                return f"-{wrap(a, 3)}"
            case Op(kind=k, args=(a,)) if k in _FUNCTIONS:
                return f"{k}({rec(a)})"
            case Op(kind="add", args=(a, b)):
                return f"{wrap(a, 1)} + {wrap(b, 2)}"
            case Op(kind="sub", args=(a, b)):
                return f"{wrap(a, 1)} - {wrap(b, 2)}"
            case Op(kind="mul", args=(a, b)):
                return f"{wrap(a, 2)}*{wrap(b, 3)}"
            case Op(kind="div", args=(a, b)):
                return f"{wrap(a, 2)}/{wrap(b, 3)}"
            case Op(kind="pow", args=(a, b)):
                base = rec(a)
                if _prec(a) < 5 or (isinstance(a, Const) and a.value < 0):
                    base = f"({base})"
                return f"{base}^{rec(b)}"
        raise ExprError(f"cannot print node {node!r}")

    return rec(e)
