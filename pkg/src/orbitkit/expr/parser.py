"""Recursive-descent parser for the expression grammar.

Grammar (whitespace insignificant, ^ binds tightest, then unary minus,
then * and /, then + and -):

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?          # exponent must fold to a constant
    atom   := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

NAME is a declared phase variable (q1..qn, p1..pn) or one of the unary
functions sin, cos, exp, log, sqrt.  '^' is right-associative through
the unary production, so x^2^3 is x^(2^3) and x^-2 is x^(-2).
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .nodes import (
    Const,
    Expr,
    Op,
    PhaseVariables,
    Var,
)
from .nodes import NonConstantExponentError as _NonConstantExponent

FUNCTION_NAMES = ("sin", "cos", "exp", "log", "sqrt")


class ParseError(ValueError):
    def __init__(self, message: str, position: int):
        self.position = position
        super().__init__(f"syntax error at position {position}: {message}")


class UnknownVariableError(ParseError):
    def __init__(self, name: str, position: int):
        self.name = name
        ValueError.__init__(self, f"unknown variable {name!r} at position {position}")
        self.position = position


class NonConstantExponentError(ParseError, _NonConstantExponent):
    def __init__(self, message: str, position: int):
        ValueError.__init__(self, f"{message} at position {position}")
        self.position = position


@dataclass(frozen=True)
class _Token:
    kind: str  # "num" | "name" | "op" | "end"
    text: str
    pos: int


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


def tokenize(source: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            stripped = source[pos:].lstrip()
            if not stripped:
                break
            bad_pos = len(source) - len(stripped)
            raise ParseError(f"unexpected character {stripped[0]!r}", bad_pos)
        if m.lastgroup is None:
            break
        tokens.append(_Token(m.lastgroup, m.group(m.lastgroup), m.start(m.lastgroup)))
        pos = m.end()
    tokens.append(_Token("end", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token], variables: PhaseVariables):
        self.tokens = tokens
        self.variables = variables
        self.i = 0

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, text: str) -> None:
        tok = self.peek()
        if tok.kind == "end":
            raise ParseError(f"unexpected end of input, expected {text!r}", tok.pos)
        if tok.kind != "op" or tok.text != text:
            raise ParseError(f"expected {text!r}, found {tok.text!r}", tok.pos)
        self.advance()

    def parse_expr(self) -> Expr:
        node = self.parse_term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.advance().text
            rhs = self.parse_term()
            node = Op("add" if op == "+" else "sub", (node, rhs))
        return node

    def parse_term(self) -> Expr:
        node = self.parse_unary()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.advance().text
            rhs = self.parse_unary()
            node = Op("mul" if op == "*" else "div", (node, rhs))
        return node

    def parse_unary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "op" and tok.text == "-":
            self.advance()
            child = self.parse_unary()
            # fold a negated literal into a negative constant
            if isinstance(child, Const):
                return Const(-child.value)
            return Op("neg", (child,))
        return self.parse_power()

    def parse_power(self) -> Expr:
        base = self.parse_atom()
        tok = self.peek()
        if tok.kind == "op" and tok.text == "^":
            self.advance()
            exp_pos = self.peek().pos
            exponent = self.parse_unary()
            value = _fold_constant(exponent)
            if value is None:
                raise NonConstantExponentError("power exponent must be constant", exp_pos)
            if not math.isfinite(value):
                raise NonConstantExponentError(
                    "power exponent does not evaluate to a finite constant", exp_pos
                )
            return Op("pow", (base, Const(value)))
        return base

    def parse_atom(self) -> Expr:
        tok = self.peek()
        if tok.kind == "end":
            raise ParseError("unexpected end of input", tok.pos)
        if tok.kind == "num":
            self.advance()
            return Const(float(tok.text))
        if tok.kind == "name":
            self.advance()
            follows_paren = self.peek().kind == "op" and self.peek().text == "("
            if tok.text in FUNCTION_NAMES:
                if not follows_paren:
                    raise ParseError(f"expected '(' after function {tok.text!r}", self.peek().pos)
                self.advance()
                arg = self.parse_expr()
                self.expect_op(")")
                return Op(tok.text, (arg,))
            if follows_paren:
                raise ParseError(f"unknown function {tok.text!r}", tok.pos)
            try:
                index = self.variables.index_of(tok.text)
            except KeyError:
                raise UnknownVariableError(tok.text, tok.pos) from None
            return Var(index)
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            node = self.parse_expr()
            self.expect_op(")")
            return node
        raise ParseError(f"unexpected token {tok.text!r}", tok.pos)


def _fold_constant(e: Expr) -> float | None:
    """Evaluate a variable-free subtree to a float, else None."""
    match e:
        case Const(value=v):
            return v
        case Var():
            return None
        case Op(kind=k, args=args):
            vals = [_fold_constant(a) for a in args]
            if any(v is None for v in vals):
                return None
            try:
                match k:
                    case "neg":
                        return -vals[0]
                    case "sin":
                        return math.sin(vals[0])
                    case "cos":
                        return math.cos(vals[0])
                    case "exp":
                        return math.exp(vals[0])
                    case "log":
                        return math.log(vals[0])
                    case "sqrt":
                        return math.sqrt(vals[0])
                    case "add":
                        return vals[0] + vals[1]
                    case "sub":
                        return vals[0] - vals[1]
                    case "mul":
                        return vals[0] * vals[1]
                    case "div":
                        return vals[0] / vals[1]
                    case "pow":
                        return math.pow(vals[0], vals[1])
            except (ValueError, ZeroDivisionError, OverflowError):
                return math.nan
    return None


def parse(source: str, variables: PhaseVariables) -> Expr:
    """Parse source into an expression tree over the given variables.

    Raises ParseError (with position), UnknownVariableError or
    NonConstantExponentError.
    """
    parser = _Parser(tokenize(source), variables)
    node = parser.parse_expr()
    trailing = parser.peek()
    if trailing.kind != "end":
        raise ParseError(f"unexpected trailing input {trailing.text!r}", trailing.pos)
    return node
