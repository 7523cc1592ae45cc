"""Tiny expression language for scenario functions.

Grammar (deliberately small so symbolic differentiation stays total):

    expr   := term (('+'|'-') term)*
    term   := factor (('*'|'/') factor)*
    factor := atom ('^' int)?
    atom   := number | 'pi' | var | func '(' expr ')' | '(' expr ')' | '-' atom

Functions: sin, cos, exp.  Exponents are integer literals.  Numbers are
integers or decimals, stored exactly as fractions.  A non-grammar `Const`
node carries exact library numbers (period coefficients) when expressions
are built programmatically; it prints as its literal but is not part of
the parsed surface grammar.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional, Sequence, Union

import numpy as np

from .errors import DomainViolation, ExpressionSyntaxError, UnknownIdentifier
from .numbers import NumberRepr, number_literal

FUNCTIONS = ("sin", "cos", "exp")


@dataclass(frozen=True)
class Num:
    value: Fraction


@dataclass(frozen=True)
class Pi:
    pass


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Const:
    """Opaque exact constant (NumberRepr); derivative zero."""

    text: str
    value: NumberRepr = None

    def __eq__(self, other):
        return isinstance(other, Const) and self.text == other.text

    def __hash__(self):
        return hash(("Const", self.text))


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str  # '+', '-', '*', '/'
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: int


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


Expr = Union[Num, Pi, Var, Const, Neg, BinOp, Pow, Call]

ZERO = Num(Fraction(0))
ONE = Num(Fraction(1))


def const(x: NumberRepr) -> Expr:
    """Wrap an exact library number as an expression constant."""
    f = x.exact_fraction()
    if f is not None:
        return Num(f)
    return Const(number_literal(x), x)


# ---------------------------------------------------------------------------
# lexer / parser

_TOKEN_KINDS = {"+", "-", "*", "/", "^", "(", ")"}


def _tokenize(text: str):
    tokens = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in _TOKEN_KINDS:
            tokens.append((ch, ch, i))
            i += 1
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and text[i + 1].isdigit()):
            j = i
            seen_dot = False
            while j < n and (text[j].isdigit() or (text[j] == "." and not seen_dot)):
                if text[j] == ".":
                    seen_dot = True
                j += 1
            tokens.append(("num", text[i:j], i))
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(("ident", text[i:j], i))
            i = j
            continue
        raise ExpressionSyntaxError(f"unexpected character {ch!r}", i)
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, text: str, variables: Optional[Sequence[str]]):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0
        self.variables = tuple(variables) if variables is not None else None

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind):
        tok = self.advance()
        if tok[0] != kind:
            raise ExpressionSyntaxError(
                f"expected {kind!r}, found {tok[1]!r}", tok[2])
        return tok

    def parse(self) -> Expr:
        e = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ExpressionSyntaxError(f"trailing input {tok[1]!r}", tok[2])
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek()[0] in ("+", "-"):
            op = self.advance()[0]
            e = BinOp(op, e, self.term())
        return e

    def term(self) -> Expr:
        e = self.factor()
        while self.peek()[0] in ("*", "/"):
            op = self.advance()[0]
            e = BinOp(op, e, self.factor())
        return e

    def factor(self) -> Expr:
        e = self.atom()
        if self.peek()[0] == "^":
            self.advance()
            e = Pow(e, self._int_literal())
        return e

    def _int_literal(self) -> int:
        sign = 1
        tok = self.peek()
        if tok[0] == "-":
            self.advance()
            sign = -1
            tok = self.peek()
        if tok[0] != "num" or "." in tok[1]:
            raise ExpressionSyntaxError(
                "exponent must be an integer literal", tok[2])
        self.advance()
        return sign * int(tok[1])

    def atom(self) -> Expr:
        kind, value, offset = self.advance()
        if kind == "num":
            return Num(Fraction(value))
        if kind == "-":
            return Neg(self.atom())
        if kind == "(":
            e = self.expr()
            self.expect(")")
            return e
        if kind == "ident":
            if value == "pi":
                return Pi()
            if value in FUNCTIONS:
                self.expect("(")
                e = self.expr()
                self.expect(")")
                return Call(value, e)
            if self.variables is None or value in self.variables:
                return Var(value)
            raise UnknownIdentifier(
                f"unknown identifier {value!r} (declared variables: "
                f"{', '.join(self.variables)})"
            )
        raise ExpressionSyntaxError(f"unexpected token {value!r}", offset)


def parse(text: str, variables: Optional[Sequence[str]] = None) -> Expr:
    """Parse `text`; when `variables` is given, anything else is rejected."""
    if not text or not text.strip():
        raise ExpressionSyntaxError("empty expression", 0)
    return _Parser(text, variables).parse()


# ---------------------------------------------------------------------------
# printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "pow": 4, "atom": 5}


def _print(e: Expr) -> tuple[str, int]:
    if isinstance(e, Num):
        v = e.value
        if v < 0:
            s, _ = _print(Neg(Num(-v)))
            return s, _PREC["neg"]
        if v.denominator == 1:
            return str(v.numerator), _PREC["atom"]
        return f"{v.numerator}/{v.denominator}", _PREC["/"]
    if isinstance(e, Pi):
        return "pi", _PREC["atom"]
    if isinstance(e, Var):
        return e.name, _PREC["atom"]
    if isinstance(e, Const):
        return f"({e.text})", _PREC["atom"]
    if isinstance(e, Neg):
        s, p = _print(e.arg)
        if p < _PREC["neg"]:
            s = f"({s})"
        return f"-{s}", _PREC["neg"]
    if isinstance(e, BinOp):
        prec = _PREC[e.op]
        ls, lp = _print(e.left)
        rs, rp = _print(e.right)
        if lp < prec:
            ls = f"({ls})"
        # -, / are left-associative: parenthesize an equal-precedence rhs
        if rp < prec or (rp == prec and e.op in ("-", "/")):
            rs = f"({rs})"
        return f"{ls} {e.op} {rs}", prec
    if isinstance(e, Pow):
        bs, bp = _print(e.base)
        if bp < _PREC["atom"]:
            bs = f"({bs})"
        return f"{bs}^{e.exponent}", _PREC["pow"]
    if isinstance(e, Call):
        s, _ = _print(e.arg)
        return f"{e.func}({s})", _PREC["atom"]
    raise TypeError(f"not an expression: {e!r}")


def to_str(e: Expr) -> str:
    return _print(e)[0]


# ---------------------------------------------------------------------------
# normalization: constant folding plus local identities

def normalize(e: Expr) -> Expr:
    if isinstance(e, (Num, Pi, Var, Const)):
        return e
    if isinstance(e, Neg):
        a = normalize(e.arg)
        if isinstance(a, Num):
            return Num(-a.value)
        if isinstance(a, Neg):
            return a.arg
        return Neg(a)
    if isinstance(e, Pow):
        b = normalize(e.base)
        if e.exponent == 0:
            return ONE
        if e.exponent == 1:
            return b
        if isinstance(b, Num) and (e.exponent >= 0 or b.value != 0):
            return Num(b.value ** e.exponent)
        return Pow(b, e.exponent)
    if isinstance(e, Call):
        a = normalize(e.arg)
        if isinstance(a, Num) and a.value == 0:
            return {"sin": ZERO, "cos": ONE, "exp": ONE}[e.func]
        return Call(e.func, a)
    if isinstance(e, BinOp):
        left, right = normalize(e.left), normalize(e.right)
        ln = left.value if isinstance(left, Num) else None
        rn = right.value if isinstance(right, Num) else None
        if e.op == "+":
            if ln is not None and rn is not None:
                return Num(ln + rn)
            if ln == 0:
                return right
            if rn == 0:
                return left
        elif e.op == "-":
            if left == right:
                return ZERO
            if ln is not None and rn is not None:
                return Num(ln - rn)
            if rn == 0:
                return left
            if ln == 0:
                return normalize(Neg(right))
        elif e.op == "*":
            if ln is not None and rn is not None:
                return Num(ln * rn)
            if ln == 0 or rn == 0:
                return ZERO
            if ln == 1:
                return right
            if rn == 1:
                return left
        elif e.op == "/":
            if rn == 0:
                raise DomainViolation("constant division by zero")
            if ln is not None and rn is not None:
                return Num(ln / rn)
            if ln == 0:
                return ZERO
            if rn == 1:
                return left
        return BinOp(e.op, left, right)
    raise TypeError(f"not an expression: {e!r}")


# ---------------------------------------------------------------------------
# differentiation (exact, closed over the grammar)

def differentiate(e: Expr, var: str) -> Expr:
    d = _diff(e, var)
    return normalize(d)


def _diff(e: Expr, var: str) -> Expr:
    if isinstance(e, (Num, Pi, Const)):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.name == var else ZERO
    if isinstance(e, Neg):
        return Neg(_diff(e.arg, var))
    if isinstance(e, BinOp):
        du, dv = _diff(e.left, var), _diff(e.right, var)
        u, v = e.left, e.right
        if e.op in ("+", "-"):
            return BinOp(e.op, du, dv)
        if e.op == "*":
            return BinOp("+", BinOp("*", du, v), BinOp("*", u, dv))
        # quotient rule
        num = BinOp("-", BinOp("*", du, v), BinOp("*", u, dv))
        return BinOp("/", num, Pow(v, 2))
    if isinstance(e, Pow):
        n = e.exponent
        if n == 0:
            return ZERO
        inner = _diff(e.base, var)
        return BinOp("*", BinOp("*", Num(Fraction(n)), Pow(e.base, n - 1)), inner)
    if isinstance(e, Call):
        inner = _diff(e.arg, var)
        if e.func == "sin":
            outer = Call("cos", e.arg)
        elif e.func == "cos":
            outer = Neg(Call("sin", e.arg))
        else:
            outer = Call("exp", e.arg)
        return BinOp("*", outer, inner)
    raise TypeError(f"not an expression: {e!r}")


# ---------------------------------------------------------------------------
# evaluation

class _NumpyBackend:
    sin = staticmethod(np.sin)
    cos = staticmethod(np.cos)
    exp = staticmethod(np.exp)
    pi = math.pi

    @staticmethod
    def from_fraction(f: Fraction):
        return float(f)

    @staticmethod
    def from_number(x: NumberRepr):
        return float(x)


NUMPY_BACKEND = _NumpyBackend()


def evaluate(e: Expr, env: Mapping[str, object], backend=NUMPY_BACKEND):
    """Evaluate at a point (scalars or numpy arrays in `env`).

    Division blow-ups and overflow surface as DomainViolation.  A custom
    backend (e.g. mpmath) may be supplied for high-precision reference
    evaluation; it must provide sin/cos/exp/pi and fraction conversion.
    """
    val = _eval(e, env, backend)
    if backend is NUMPY_BACKEND:
        ok = np.all(np.isfinite(val))
        if not ok:
            raise DomainViolation("non-finite value in evaluation")
    return val


def _eval(e: Expr, env, backend):
    if isinstance(e, Num):
        return backend.from_fraction(e.value)
    if isinstance(e, Pi):
        return backend.pi
    if isinstance(e, Var):
        try:
            return env[e.name]
        except KeyError:
            raise UnknownIdentifier(f"variable {e.name!r} not in environment")
    if isinstance(e, Const):
        return backend.from_number(e.value)
    if isinstance(e, Neg):
        return -_eval(e.arg, env, backend)
    if isinstance(e, BinOp):
        left = _eval(e.left, env, backend)
        right = _eval(e.right, env, backend)
        if e.op == "+":
            return left + right
        if e.op == "-":
            return left - right
        if e.op == "*":
            return left * right
        try:
            with np.errstate(divide="ignore", invalid="ignore"):
                return left / right
        except ZeroDivisionError:
            raise DomainViolation("division by zero") from None
    if isinstance(e, Pow):
        base = _eval(e.base, env, backend)
        try:
            with np.errstate(divide="ignore", invalid="ignore"):
                return base ** e.exponent
        except ZeroDivisionError:
            raise DomainViolation("zero base with negative exponent") from None
    if isinstance(e, Call):
        return getattr(backend, e.func)(_eval(e.arg, env, backend))
    raise TypeError(f"not an expression: {e!r}")


def variables_of(e: Expr) -> set[str]:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Neg):
        return variables_of(e.arg)
    if isinstance(e, BinOp):
        return variables_of(e.left) | variables_of(e.right)
    if isinstance(e, Pow):
        return variables_of(e.base)
    if isinstance(e, Call):
        return variables_of(e.arg)
    return set()


def substitute(e: Expr, mapping: Mapping[str, Expr]) -> Expr:
    """Replace variables by expressions (used to restrict to paths)."""
    if isinstance(e, Var):
        return mapping.get(e.name, e)
    if isinstance(e, Neg):
        return Neg(substitute(e.arg, mapping))
    if isinstance(e, BinOp):
        return BinOp(e.op, substitute(e.left, mapping),
                     substitute(e.right, mapping))
    if isinstance(e, Pow):
        return Pow(substitute(e.base, mapping), e.exponent)
    if isinstance(e, Call):
        return Call(e.func, substitute(e.arg, mapping))
    return e
