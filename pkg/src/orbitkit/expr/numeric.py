"""Fast numeric evaluation of expression trees.

Two paths: compile_scalar / compile_stack generate plain Python
functions (math-module calls, used in tight integration loops), and
eval_array walks the tree once with vectorized numpy operations (used
for grids and batched sampling).  The numpy path maps domain errors to
NaN/Inf instead of raising; callers mask non-finite entries.
"""
from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from .nodes import Const, Expr, ExprError, Op, Var

_NAMESPACE = {
    "sin": math.sin,
    "cos": math.cos,
    "exp": math.exp,
    "log": math.log,
    "sqrt": math.sqrt,
    "pow": math.pow,
}


def _emit(e: Expr) -> str:
    match e:
        case Const(value=v):
            return repr(v)
        case Var(index=i):
            return f"x[{i}]"
        case Op(kind="neg", args=(a,)):
            return f"(-{_emit(a)})"
        case Op(kind="add", args=(a, b)):
            return f"({_emit(a)} + {_emit(b)})"
        case Op(kind="sub", args=(a, b)):
            return f"({_emit(a)} - {_emit(b)})"
        case Op(kind="mul", args=(a, b)):
            return f"({_emit(a)} * {_emit(b)})"
        case Op(kind="div", args=(a, b)):
            return f"({_emit(a)} / {_emit(b)})"
        case Op(kind="pow", args=(a, b)):
            return f"pow({_emit(a)}, {_emit(b)})"
        case Op(kind=k, args=(a,)):
            return f"{k}({_emit(a)})"
    raise ExprError(f"cannot compile node {e!r}")


def compile_scalar(e: Expr) -> Callable[[Sequence[float]], float]:
    """Compile e to a function of one phase point.

    math-module domain failures surface as ValueError / OverflowError /
    ZeroDivisionError at call time.
    """
    source = f"def _f(x):\n    return {_emit(e)}\n"
    namespace = dict(_NAMESPACE)
    exec(source, namespace)  # noqa: S102 - generated from a closed AST node set
    return namespace["_f"]


def compile_stack(exprs: Sequence[Expr]) -> Callable[[Sequence[float]], tuple[float, ...]]:
    """Compile several expressions into one function returning a tuple."""
    body = ", ".join(_emit(e) for e in exprs)
    source = f"def _f(x):\n    return ({body},)\n"
    namespace = dict(_NAMESPACE)
    exec(source, namespace)  # noqa: S102
    return namespace["_f"]


def _eval_rec(e: Expr, x: np.ndarray):
    match e:
        case Const(value=v):
            return v
        case Var(index=i):
            return x[i]
        case Op(kind="neg", args=(a,)):
            return -_eval_rec(a, x)
        case Op(kind="add", args=(a, b)):
            return _eval_rec(a, x) + _eval_rec(b, x)
        case Op(kind="sub", args=(a, b)):
            return _eval_rec(a, x) - _eval_rec(b, x)
        case Op(kind="mul", args=(a, b)):
            return _eval_rec(a, x) * _eval_rec(b, x)
        case Op(kind="div", args=(a, b)):
            return _eval_rec(a, x) / _eval_rec(b, x)
        case Op(kind="pow", args=(a, b)):
            return np.power(_eval_rec(a, x), _eval_rec(b, x))
        case Op(kind="sin", args=(a,)):
            return np.sin(_eval_rec(a, x))
        case Op(kind="cos", args=(a,)):
            return np.cos(_eval_rec(a, x))
        case Op(kind="exp", args=(a,)):
            return np.exp(_eval_rec(a, x))
        case Op(kind="log", args=(a,)):
            return np.log(_eval_rec(a, x))
        case Op(kind="sqrt", args=(a,)):
            return np.sqrt(_eval_rec(a, x))
    raise ExprError(f"cannot evaluate node {e!r}")


def eval_array(e: Expr, x: np.ndarray) -> np.ndarray:
    """Evaluate e over a batch of points.

    x has shape (nvars, N); the result has shape (N,).  Out-of-domain
    entries come back as NaN or Inf.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise ValueError(f"expected point batch of shape (nvars, N), got {x.shape}")
    with np.errstate(all="ignore"):
        out = _eval_rec(e, x)
    if np.ndim(out) == 0:
        return np.full(x.shape[1], float(out))
    return np.asarray(out, dtype=float)
