"""Expression language for coefficient functions of one variable ``x``.

Grammar (``^`` binds tightest, then unary minus, then ``* /``, then ``+ -``)::

    expr     := term (('+' | '-') term)*
    term     := unary (('*' | '/') unary)*
    unary    := '-' unary | power
    power    := primary ('^' exponent)?
    exponent := '-' exponent | power        # must fold to an integer literal
    primary  := NUMBER | 'x' | 'pi' | 'e' | FUNC '(' expr ')' | '(' expr ')'

Exponents are restricted to integer literals; fractional powers only occur
inside invariant formulas, where the branch is fixed by :func:`jet.rpow`.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from . import jet as jetlib
from .errors import (
    DivisionByZeroConstantTerm,
    DomainError,
    EvalDomainError,
    ExpressionSyntaxError,
    NonIntegerExponent,
)
from .jet import Jet

__all__ = [
    "FUNCTIONS",
    "Const",
    "Var",
    "Neg",
    "BinOp",
    "Pow",
    "Call",
    "Expression",
    "parse",
    "render",
    "eval_jet",
    "const",
    "add",
    "sub",
    "mul",
    "div",
    "neg",
    "power",
    "call",
]

FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt", "sinh", "cosh", "tanh", "abs")
NAMED_CONSTANTS = {"pi": math.pi, "e": math.e}


# -- AST ----------------------------------------------------------------------

@dataclass(frozen=True)
class Const:
    value: float
    name: str | None = None


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Pow:
    base: "Node"
    exponent: int


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Const, Var, Neg, BinOp, Pow, Call]
X = Var()


# -- tokenizer ------------------------------------------------------------------

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
""", re.VERBOSE)


@dataclass(frozen=True)
class _Token:
    kind: str  # 'number', 'name', an operator character, or 'end'
    text: str
    pos: int


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ExpressionSyntaxError(
                f"unexpected character {text[pos]!r}", text, _byte_offset(text, pos),
                ("number", "name", "operator"))
        kind = m.lastgroup
        if kind == "op":
            tokens.append(_Token(m.group(), m.group(), pos))
        elif kind != "ws":
            tokens.append(_Token(kind, m.group(), pos))
        pos = m.end()
    tokens.append(_Token("end", "", len(text)))
    return tokens


def _byte_offset(text, pos):
    return len(text[:pos].encode("utf-8"))


# -- parser ---------------------------------------------------------------------

_PRIMARY_START = ("number", "x", "pi", "e", "function", "(")


class _Parser:
    def __init__(self, text):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def tok(self):
        return self.tokens[self.i]

    def error(self, message, expected, cls=ExpressionSyntaxError, tok=None):
        tok = tok or self.tok
        return cls(message, self.text, _byte_offset(self.text, tok.pos), expected)

    def advance(self):
        t = self.tok
        self.i += 1
        return t

    def expect(self, kind):
        if self.tok.kind != kind:
            raise self.error(f"unexpected {self._describe(self.tok)}", (kind,))
        return self.advance()

    @staticmethod
    def _describe(tok):
        return "end of input" if tok.kind == "end" else f"token {tok.text!r}"

    def parse(self):
        if self.tok.kind == "end":
            raise self.error("empty expression", _PRIMARY_START + ("-",))
        node = self.expr()
        if self.tok.kind != "end":
            raise self.error(f"unexpected {self._describe(self.tok)}",
                             ("+", "-", "*", "/", "^", "end"))
        return node

    def expr(self):
        node = self.term()
        while self.tok.kind in ("+", "-"):
            op = self.advance().kind
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.tok.kind in ("*", "/"):
            op = self.advance().kind
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.tok.kind == "-":
            self.advance()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.primary()
        if self.tok.kind == "^":
            caret = self.advance()
            start = self.tok
            exponent = self.exponent()
            value = _fold_integer(exponent)
            if value is None:
                raise self.error("exponent must be an integer literal", ("integer",),
                                 NonIntegerExponent, start)
            return Pow(base, value)
        return base

    def exponent(self):
        if self.tok.kind == "-":
            self.advance()
            return Neg(self.exponent())
        return self.power()

    def primary(self):
        tok = self.tok
        if tok.kind == "number":
            self.advance()
            return Const(float(tok.text), _IntLiteral if _is_int_literal(tok.text) else None)
        if tok.kind == "name":
            name = tok.text
            if name == "x":
                self.advance()
                return X
            if name in NAMED_CONSTANTS:
                self.advance()
                return Const(NAMED_CONSTANTS[name], name)
            if name in FUNCTIONS:
                self.advance()
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(name, arg)
            raise self.error(f"unknown name {name!r}", _PRIMARY_START)
        if tok.kind == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        raise self.error(f"unexpected {self._describe(tok)}", _PRIMARY_START + ("-",))


# Marker used only while parsing: distinguishes "2" from "2.0" so that exponent
# folding can insist on integer literals.  It never survives into a final tree.
_IntLiteral = "\0int"


def _is_int_literal(text):
    return text.isdigit()


def _fold_integer(node):
    """Fold an exponent subtree made of integer literals, '-' and '^'."""
    if isinstance(node, Const):
        return int(node.value) if node.name == _IntLiteral else None
    if isinstance(node, Neg):
        v = _fold_integer(node.operand)
        return None if v is None else -v
    if isinstance(node, Pow):
        b = _fold_integer(node.base)
        if b is None or node.exponent < 0:
            return None
        return b ** node.exponent
    return None


def _strip_markers(node):
    if isinstance(node, Const):
        return Const(node.value) if node.name == _IntLiteral else node
    if isinstance(node, Var):
        return node
    if isinstance(node, Neg):
        return Neg(_strip_markers(node.operand))
    if isinstance(node, BinOp):
        return BinOp(node.op, _strip_markers(node.left), _strip_markers(node.right))
    if isinstance(node, Pow):
        return Pow(_strip_markers(node.base), node.exponent)
    return Call(node.func, _strip_markers(node.arg))


def parse(text):
    """Parse ``text`` into an :class:`Expression`."""
    if not isinstance(text, str) or not text.strip():
        raise ExpressionSyntaxError("empty expression", text or "", 0, _PRIMARY_START)
    return Expression(_strip_markers(_Parser(text).parse()), text)


# -- rendering ----------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}
_PREC_NEG = 3
_PREC_POW = 4
_PREC_ATOM = 5


def _fmt_number(v):
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def _render(node):
    """Return (text, precedence)."""
    if isinstance(node, Const):
        if node.name:
            return node.name, _PREC_ATOM
        if node.value < 0 or (node.value == 0 and math.copysign(1, node.value) < 0):
            # only reachable for hand-built trees; parse gives Neg(Const)
            return "(" + _fmt_number(node.value) + ")", _PREC_ATOM
        text = _fmt_number(node.value)
        if "e" in text or "inf" in text or "nan" in text:
            if not math.isfinite(node.value):
                raise ValueError("non-finite constant cannot be rendered")
        return text, _PREC_ATOM
    if isinstance(node, Var):
        return "x", _PREC_ATOM
    if isinstance(node, Call):
        return f"{node.func}({_render(node.arg)[0]})", _PREC_ATOM
    if isinstance(node, Neg):
        text, prec = _render(node.operand)
        if prec < _PREC_NEG:
            text = f"({text})"
        return "-" + text, _PREC_NEG
    if isinstance(node, Pow):
        text, prec = _render(node.base)
        # the base of '^' is a primary in the grammar
        if prec < _PREC_ATOM:
            text = f"({text})"
        exp_text = str(node.exponent) if node.exponent >= 0 else f"({node.exponent})"
        return f"{text}^{exp_text}", _PREC_POW
    p = _PREC[node.op]
    lt, lp = _render(node.left)
    rt, rp = _render(node.right)
    if lp < p:
        lt = f"({lt})"
    # left-associative: a right operand of equal precedence needs parentheses
    if rp <= p:
        rt = f"({rt})"
    return f"{lt} {node.op} {rt}", p


def render(node):
    if isinstance(node, Expression):
        node = node.ast
    return _render(node)[0]


# -- smart constructors (light constant folding) ----------------------------------

def const(v):
    v = float(v)
    return Neg(Const(-v)) if v < 0 else Const(v)


def _const_value(node):
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Neg) and isinstance(node.operand, Const):
        return -node.operand.value
    return None


def neg(a):
    v = _const_value(a)
    if v is not None:
        return const(-v)
    if isinstance(a, Neg):
        return a.operand
    return Neg(a)


def add(a, b):
    va, vb = _const_value(a), _const_value(b)
    if va is not None and vb is not None:
        return const(va + vb)
    if va == 0:
        return b
    if vb == 0:
        return a
    if isinstance(b, Neg):
        return BinOp("-", a, b.operand)
    return BinOp("+", a, b)


def sub(a, b):
    va, vb = _const_value(a), _const_value(b)
    if va is not None and vb is not None:
        return const(va - vb)
    if vb == 0:
        return a
    if va == 0:
        return neg(b)
    if isinstance(b, Neg):
        return BinOp("+", a, b.operand)
    return BinOp("-", a, b)


def mul(a, b):
    va, vb = _const_value(a), _const_value(b)
    if va is not None and vb is not None:
        return const(va * vb)
    if va == 0 or vb == 0:
        return Const(0.0)
    if va == 1:
        return b
    if vb == 1:
        return a
    if va == -1:
        return neg(b)
    if vb == -1:
        return neg(a)
    return BinOp("*", a, b)


def div(a, b):
    va, vb = _const_value(a), _const_value(b)
    if vb == 0:
        raise ZeroDivisionError("division by constant zero")
    if va is not None and vb is not None:
        return const(va / vb)
    if va == 0:
        return Const(0.0)
    if vb == 1:
        return a
    return BinOp("/", a, b)


def power(a, n):
    n = int(n)
    if n == 0:
        return Const(1.0)
    if n == 1:
        return a
    va = _const_value(a)
    if va is not None and n > 0:
        return const(va ** n)
    return Pow(a, n)


def call(name, a):
    if name not in FUNCTIONS:
        raise ValueError(f"unknown function {name!r}")
    return Call(name, a)


# -- evaluation -----------------------------------------------------------------

_JET_FUNCS = {
    "sin": jetlib.sin,
    "cos": jetlib.cos,
    "tan": jetlib.tan,
    "exp": jetlib.exp,
    "log": jetlib.log,
    "sqrt": jetlib.sqrt,
    "sinh": jetlib.sinh,
    "cosh": jetlib.cosh,
    "tanh": jetlib.tanh,
    "abs": jetlib.jabs,
}


def _eval_jet(node, x0, order):
    if isinstance(node, Const):
        return Jet.constant(node.value, x0, order)
    if isinstance(node, Var):
        return Jet.variable(x0, order)
    if isinstance(node, Neg):
        return -_eval_jet(node.operand, x0, order)
    if isinstance(node, Pow):
        base = _eval_jet(node.base, x0, order)
        if node.exponent < 0 and not base.batched and base.value == 0:
            raise EvalDomainError("division by zero", render(node))
        return jetlib.ipow(base, node.exponent)
    if isinstance(node, Call):
        arg = _eval_jet(node.arg, x0, order)
        try:
            return _JET_FUNCS[node.func](arg)
        except (DomainError, DivisionByZeroConstantTerm, OverflowError) as exc:
            raise EvalDomainError(str(exc), render(node)) from None
    left = _eval_jet(node.left, x0, order)
    right = _eval_jet(node.right, x0, order)
    if node.op == "+":
        return left + right
    if node.op == "-":
        return left - right
    if node.op == "*":
        return left * right
    if not right.batched and right.value == 0:
        raise EvalDomainError("division by zero", render(node))
    return left / right


def eval_jet(e, x0, order):
    """Jet of ``e`` at ``x0`` to the requested order.

    An array ``x0`` gives a batched jet (NaN columns where undefined).
    """
    if order < 0:
        raise ValueError("order must be non-negative")
    node = e.ast if isinstance(e, Expression) else e
    x0 = float(x0) if np.ndim(x0) == 0 else np.asarray(x0, dtype=float)
    try:
        return _eval_jet(node, x0, int(order))
    except DomainError as exc:
        raise EvalDomainError(str(exc), render(node)) from None


_FLOAT_FUNCS = {
    "sin": math.sin,
    "cos": math.cos,
    "tan": math.tan,
    "exp": math.exp,
    "log": math.log,
    "sqrt": math.sqrt,
    "sinh": math.sinh,
    "cosh": math.cosh,
    "tanh": math.tanh,
    "abs": abs,
}


def _eval_float(node, x):
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        return x
    if isinstance(node, Neg):
        return -_eval_float(node.operand, x)
    if isinstance(node, Pow):
        return _eval_float(node.base, x) ** node.exponent
    if isinstance(node, Call):
        return _FLOAT_FUNCS[node.func](_eval_float(node.arg, x))
    a = _eval_float(node.left, x)
    b = _eval_float(node.right, x)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    return a / b


# -- symbolic helpers (internal) --------------------------------------------------

def _diff(node):
    if isinstance(node, Const):
        return Const(0.0)
    if isinstance(node, Var):
        return Const(1.0)
    if isinstance(node, Neg):
        return neg(_diff(node.operand))
    if isinstance(node, BinOp):
        a, b = node.left, node.right
        da, db = _diff(a), _diff(b)
        if node.op == "+":
            return add(da, db)
        if node.op == "-":
            return sub(da, db)
        if node.op == "*":
            return add(mul(da, b), mul(a, db))
        return div(sub(mul(da, b), mul(a, db)), power(b, 2))
    if isinstance(node, Pow):
        n = node.exponent
        return mul(mul(const(n), power(node.base, n - 1)), _diff(node.base))
    u, du = node.arg, _diff(node.arg)
    f = node.func
    if f == "sin":
        outer = Call("cos", u)
    elif f == "cos":
        outer = neg(Call("sin", u))
    elif f == "tan":
        outer = add(Const(1.0), power(Call("tan", u), 2))
    elif f == "exp":
        outer = Call("exp", u)
    elif f == "log":
        outer = div(Const(1.0), u)
    elif f == "sqrt":
        outer = div(Const(0.5), Call("sqrt", u))
    elif f == "sinh":
        outer = Call("cosh", u)
    elif f == "cosh":
        outer = Call("sinh", u)
    elif f == "tanh":
        outer = sub(Const(1.0), power(Call("tanh", u), 2))
    else:  # abs
        outer = div(u, Call("abs", u))
    return mul(outer, du)


def _substitute(node, repl):
    if isinstance(node, Var):
        return repl
    if isinstance(node, Const):
        return node
    if isinstance(node, Neg):
        return neg(_substitute(node.operand, repl))
    if isinstance(node, Pow):
        return power(_substitute(node.base, repl), node.exponent)
    if isinstance(node, Call):
        return Call(node.func, _substitute(node.arg, repl))
    a = _substitute(node.left, repl)
    b = _substitute(node.right, repl)
    return {"+": add, "-": sub, "*": mul, "/": div}[node.op](a, b)


# -- public wrapper ----------------------------------------------------------------

class Expression:
    """A parsed coefficient function.  Immutable; compares by tree structure."""

    __slots__ = ("ast", "source_text")

    def __init__(self, ast, source_text=None):
        object.__setattr__(self, "ast", ast)
        object.__setattr__(self, "source_text",
                           source_text if source_text is not None else _render(ast)[0])

    def __setattr__(self, name, value):
        raise AttributeError("Expression is immutable")

    @classmethod
    def from_ast(cls, ast):
        return cls(ast)

    @classmethod
    def constant(cls, v):
        return cls(const(v))

    def __eq__(self, other):
        return isinstance(other, Expression) and self.ast == other.ast

    def __hash__(self):
        return hash(self.ast)

    def __repr__(self):
        return f"Expression({self.render()!r})"

    def __str__(self):
        return self.render()

    def render(self):
        return render(self.ast)

    def jet(self, x0, order):
        return eval_jet(self, x0, order)

    def __call__(self, x):
        """Pointwise float evaluation (used by finite-difference oracles)."""
        try:
            return _eval_float(self.ast, float(x))
        except (ValueError, ZeroDivisionError, OverflowError) as exc:
            raise EvalDomainError(str(exc), self.render()) from None

    def diff(self):
        """Symbolic d/dx (internal use)."""
        return Expression(_diff(self.ast))

    def substitute(self, inner):
        """``self(inner(x))``."""
        inner_ast = inner.ast if isinstance(inner, Expression) else inner
        return Expression(_substitute(self.ast, inner_ast))

    def constant_value(self):
        """The value if the tree is a (possibly negated) literal, else None."""
        return _const_value(self.ast)

    # algebra on expressions, with folding
    def _wrap(self, other):
        if isinstance(other, Expression):
            return other.ast
        return const(other)

    def __add__(self, o):
        return Expression(add(self.ast, self._wrap(o)))

    def __radd__(self, o):
        return Expression(add(self._wrap(o), self.ast))

    def __sub__(self, o):
        return Expression(sub(self.ast, self._wrap(o)))

    def __rsub__(self, o):
        return Expression(sub(self._wrap(o), self.ast))

    def __mul__(self, o):
        return Expression(mul(self.ast, self._wrap(o)))

    def __rmul__(self, o):
        return Expression(mul(self._wrap(o), self.ast))

    def __truediv__(self, o):
        return Expression(div(self.ast, self._wrap(o)))

    def __rtruediv__(self, o):
        return Expression(div(self._wrap(o), self.ast))

    def __neg__(self):
        return Expression(neg(self.ast))

    def __pow__(self, n):
        return Expression(power(self.ast, n))
