"""Symbolic expressions over phase-space variables: parsing,
differentiation, evaluation and zero testing."""

from .calculus import (
    InconclusiveError,
    ZeroVerdict,
    differentiate,
    is_identically_zero,
    simplify,
    substitute,
)
from .nodes import (
    Const,
    EvalDomainError,
    Expr,
    ExprError,
    NonConstantExponentError,
    Op,
    PhaseVariables,
    Var,
    evaluate,
    free_variables,
    to_source,
)
from .numeric import compile_scalar, compile_stack, eval_array
from .parser import ParseError, UnknownVariableError, parse

__all__ = [
    "Const",
    "EvalDomainError",
    "Expr",
    "ExprError",
    "InconclusiveError",
    "NonConstantExponentError",
    "Op",
    "ParseError",
    "PhaseVariables",
    "UnknownVariableError",
    "Var",
    "ZeroVerdict",
    "compile_scalar",
    "compile_stack",
    "differentiate",
    "eval_array",
    "evaluate",
    "free_variables",
    "is_identically_zero",
    "parse",
    "simplify",
    "substitute",
    "to_source",
]
