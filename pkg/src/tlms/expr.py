"""A small DSL for univariate analytic expressions.

Grammar (usual precedence, ``^`` binds tighter than unary minus)::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := "-" unary | "+" unary | power
    power  := atom ("^" exponent)?
    exponent := ["-"] INT | "(" ["-"] INT ")"
    atom   := NUMBER | NAME "(" expr ")" | NAME | "(" expr ")"

The free variable may be written ``u``, ``v`` or ``s``; ``pi`` and ``e``
are constants.  Implicit multiplication (``2u``) is a syntax error.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from .jets import (
    DEFAULT_ORDER,
    KERNELS,
    Jet,
    JetError,
    common_order,
    jet_add,
    jet_compose,
    jet_div,
    jet_mul,
    jet_pow,
    jet_sub,
)

VARIABLES = ("u", "v", "s")
CONSTANTS = {"pi": math.pi, "e": math.e}


class ParseError(ValueError):
    def __init__(self, message: str, offset: int, expected: frozenset = frozenset()):
        super().__init__(message)
        self.offset = offset
        self.expected = expected

    def __str__(self) -> str:
        msg = f"{self.args[0]} at offset {self.offset}"
        if self.expected:
            msg += f" (expected one of: {', '.join(sorted(self.expected))})"
        return msg


class ExprSyntaxError(ParseError):
    pass


class UnknownFunctionError(ParseError):
    pass


class NonIntegerExponentError(ParseError):
    pass


# --- AST ------------------------------------------------------------------

@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Neg:
    child: "Expr"


@dataclass(frozen=True)
class Add:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Sub:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Mul:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Div:
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: int


@dataclass(frozen=True)
class Call:
    name: str
    arg: "Expr"


@dataclass(frozen=True)
class PreferredQuotient:
    """One of two algebraically equal quotients, picked per evaluation point.

    Not part of the grammar: it is built when W-data is recovered from
    null curves, where either formula may be 0/0 at a zero of the
    weight.  The quotient whose denominator has the lower vanishing
    order (then the larger leading coefficient) wins.
    """

    num_a: "Expr"
    den_a: "Expr"
    num_b: "Expr"
    den_b: "Expr"


Expr = Union[Const, Var, Neg, Add, Sub, Mul, Div, Pow, Call, PreferredQuotient]


# --- tokenizer / parser ---------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos,
                                  frozenset({"number", "name", "operator"}))
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start))
        pos = m.end()
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, val, pos = self.peek()
        if val != value or kind != "op":
            raise ExprSyntaxError(f"unexpected {val or 'end of input'!r}", pos, frozenset({value}))
        self.take()

    def parse(self) -> Expr:
        e = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {val!r}", pos,
                                  frozenset({"+", "-", "*", "/", "^", "end of input"}))
        return e

    def expr(self) -> Expr:
        left = self.term()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.take()
                right = self.term()
                left = Add(left, right) if val == "+" else Sub(left, right)
            else:
                return left

    def term(self) -> Expr:
        left = self.unary()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "*/":
                self.take()
                right = self.unary()
                left = Mul(left, right) if val == "*" else Div(left, right)
            else:
                return left

    def unary(self) -> Expr:
        kind, val, _ = self.peek()
        if kind == "op" and val == "-":
            self.take()
            return Neg(self.unary())
        if kind == "op" and val == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        kind, val, _ = self.peek()
        if kind == "op" and val == "^":
            self.take()
            return Pow(base, self.exponent())
        return base

    def exponent(self) -> int:
        _, _, start = self.peek()
        paren = False
        if self.peek()[:2] == ("op", "("):
            self.take()
            paren = True
        sign = 1
        if self.peek()[:2] == ("op", "-"):
            self.take()
            sign = -1
        kind, val, pos = self.take()
        if kind != "num" or not re.fullmatch(r"\d+", val):
            raise NonIntegerExponentError(f"exponent must be an integer literal, got {val!r}",
                                          pos, frozenset({"integer"}))
        if paren:
            self.expect(")")
        if self.peek()[:2] == ("op", "^"):
            raise NonIntegerExponentError("chained exponents are not integer literals",
                                          self.peek()[2], frozenset({"integer"}))
        return sign * int(val)

    def atom(self) -> Expr:
        kind, val, pos = self.take()
        if kind == "num":
            return Const(float(val))
        if kind == "name":
            if self.peek()[:2] == ("op", "("):
                if val not in KERNELS:
                    raise UnknownFunctionError(f"unknown function {val!r}", pos, frozenset(KERNELS))
                self.take()
                arg = self.expr()
                self.expect(")")
                return Call(val, arg)
            if val in VARIABLES:
                return Var()
            if val in CONSTANTS:
                return Const(CONSTANTS[val])
            if val in KERNELS:
                raise ExprSyntaxError(f"function {val!r} needs an argument", self.peek()[2],
                                      frozenset({"("}))
            raise ExprSyntaxError(f"unknown name {val!r}", pos,
                                  frozenset(VARIABLES) | frozenset(CONSTANTS))
        if kind == "op" and val == "(":
            e = self.expr()
            self.expect(")")
            return e
        raise ExprSyntaxError(f"unexpected {val or 'end of input'!r}", pos,
                              frozenset({"number", "name", "(", "-"}))


def parse(text: str) -> Expr:
    """Parse DSL text into an expression tree."""
    return _Parser(text).parse()


def as_expr(e) -> Expr:
    if isinstance(e, str):
        return parse(e)
    if isinstance(e, (int, float)):
        return Const(float(e))
    return e


# --- printing -------------------------------------------------------------

def _num(x: float) -> str:
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def to_text(e: Expr, var: str = "u") -> str:
    """Fully parenthesised text that reparses to an equal tree."""
    if isinstance(e, Const):
        return _num(e.value) if e.value >= 0 else f"(-{_num(-e.value)})"
    if isinstance(e, Var):
        return var
    if isinstance(e, Neg):
        return f"(-{to_text(e.child, var)})"
    if isinstance(e, (Add, Sub, Mul, Div)):
        op = {Add: "+", Sub: "-", Mul: "*", Div: "/"}[type(e)]
        return f"({to_text(e.left, var)} {op} {to_text(e.right, var)})"
    if isinstance(e, Pow):
        ex = str(e.exponent) if e.exponent >= 0 else f"(-{-e.exponent})"
        return f"({to_text(e.base, var)}^{ex})"
    if isinstance(e, Call):
        return f"{e.name}({to_text(e.arg, var)})"
    if isinstance(e, PreferredQuotient):
        return f"({to_text(e.num_a, var)} / {to_text(e.den_a, var)})"
    raise TypeError(f"not an expression node: {e!r}")


# --- evaluation -----------------------------------------------------------

def _annotate(exc: JetError, node: Expr) -> JetError:
    if exc.subtree is None:
        exc.subtree = to_text(node)
    return exc


def _leading(j: Jet) -> tuple[int, float]:
    z = j.leading_zeros()
    if z == len(j.coeffs):
        return z, 0.0
    return z, abs(j.coeffs[z])


def eval_on(e: Expr, x: Jet) -> Jet:
    """Compose the expression with an inner jet ``x`` (the free variable)."""
    try:
        if isinstance(e, Const):
            return Jet.constant(e.value, x.base, x.order)
        if isinstance(e, Var):
            return x
        if isinstance(e, Neg):
            return -eval_on(e.child, x)
        if isinstance(e, (Add, Sub, Mul, Div)):
            a, b = common_order(eval_on(e.left, x), eval_on(e.right, x))
            if isinstance(e, Add):
                return jet_add(a, b)
            if isinstance(e, Sub):
                return jet_sub(a, b)
            if isinstance(e, Mul):
                return jet_mul(a, b)
            return jet_div(a, b)
        if isinstance(e, Pow):
            return jet_pow(eval_on(e.base, x), e.exponent)
        if isinstance(e, Call):
            return jet_compose(e.name, eval_on(e.arg, x))
        if isinstance(e, PreferredQuotient):
            na, da = common_order(eval_on(e.num_a, x), eval_on(e.den_a, x))
            nb, db = common_order(eval_on(e.num_b, x), eval_on(e.den_b, x))
            za, ma = _leading(da)
            zb, mb = _leading(db)
            if (zb, -mb) < (za, -ma):
                return jet_div(nb, db)
            return jet_div(na, da)
    except JetError as exc:
        raise _annotate(exc, e)
    raise TypeError(f"not an expression node: {e!r}")


_JET_CACHE: dict[tuple, tuple] = {}


def eval_jet(e: Expr, x0: float, order: int = DEFAULT_ORDER) -> Jet:
    """Taylor jet of the expression at ``x0`` (memoised; jets are immutable)."""
    key = (id(e), float(x0), order)
    hit = _JET_CACHE.get(key)
    if hit is not None and hit[0] is e:
        return hit[1]
    j = eval_on(e, Jet.variable(x0, order))
    if len(_JET_CACHE) > 50000:
        _JET_CACHE.clear()
    _JET_CACHE[key] = (e, j)
    return j


def eval_value(e: Expr, x0: float) -> float:
    """Value at ``x0``; a few orders of headroom let removable 0/0 points resolve."""
    return eval_jet(e, x0, 3).value


_NP_KERNELS = {
    "sin": np.sin, "cos": np.cos, "tan": np.tan, "sinh": np.sinh,
    "cosh": np.cosh, "tanh": np.tanh, "exp": np.exp, "log": np.log,
    "sqrt": np.sqrt, "asinh": np.arcsinh, "atan": np.arctan,
}


def eval_array(e: Expr, x) -> np.ndarray:
    """Vectorised value evaluation; invalid points come back as nan/inf."""
    x = np.asarray(x, dtype=float)
    with np.errstate(all="ignore"):
        out = np.asarray(compile_array(e)(x), dtype=float)
    if out.shape != x.shape:
        out = np.broadcast_to(out, x.shape).copy()
    return out


_COMPILED: dict[int, tuple] = {}


def compile_array(e: Expr):
    """Translate the tree once into a numpy lambda; cached per node object."""
    hit = _COMPILED.get(id(e))
    if hit is not None and hit[0] is e:
        return hit[1]
    consts: list = []
    src = _source(e, consts)
    ns = {"np": np, "_k": _NP_KERNELS, "_c": tuple(np.float64(c) for c in consts)}
    fn = eval(f"lambda x: {src}", ns)
    if len(_COMPILED) > 4096:
        _COMPILED.clear()
    _COMPILED[id(e)] = (e, fn)
    return fn


def _source(e: Expr, consts: list) -> str:
    if isinstance(e, Const):
        consts.append(e.value)
        return f"_c[{len(consts) - 1}]"
    if isinstance(e, Var):
        return "x"
    if isinstance(e, Neg):
        return f"(-{_source(e.child, consts)})"
    ops = {Add: "+", Sub: "-", Mul: "*", Div: "/"}
    if type(e) in ops:
        return f"({_source(e.left, consts)} {ops[type(e)]} {_source(e.right, consts)})"
    if isinstance(e, Pow):
        return f"({_source(e.base, consts)} ** {float(e.exponent)!r})"
    if isinstance(e, Call):
        return f"_k[{e.name!r}]({_source(e.arg, consts)})"
    if isinstance(e, PreferredQuotient):
        na, da, nb, db = (_source(t, consts) for t in (e.num_a, e.den_a, e.num_b, e.den_b))
        return (f"(lambda na, da, nb, db: np.where(np.abs(db) > np.abs(da), nb / db, na / da))"
                f"({na}, {da}, {nb}, {db})")
    raise TypeError(f"not an expression node: {e!r}")


# --- structural differentiation ---------------------------------------------
# Only constant folding is done; there is no general simplifier.

ZERO = Const(0.0)
ONE = Const(1.0)


def _is(e: Expr, c: float) -> bool:
    return isinstance(e, Const) and e.value == c


def _add(a: Expr, b: Expr) -> Expr:
    if _is(a, 0.0):
        return b
    if _is(b, 0.0):
        return a
    return Add(a, b)


def _sub(a: Expr, b: Expr) -> Expr:
    if _is(b, 0.0):
        return a
    if _is(a, 0.0):
        return _neg(b)
    return Sub(a, b)


def _neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.child
    return Neg(a)


def _mul(a: Expr, b: Expr) -> Expr:
    if _is(a, 0.0) or _is(b, 0.0):
        return ZERO
    if _is(a, 1.0):
        return b
    if _is(b, 1.0):
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    return Mul(a, b)


def _div(a: Expr, b: Expr) -> Expr:
    if _is(a, 0.0):
        return ZERO
    if _is(b, 1.0):
        return a
    return Div(a, b)


def differentiate(e: Expr) -> Expr:
    """Derivative expression with respect to the free variable."""
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        return ONE
    if isinstance(e, Neg):
        return _neg(differentiate(e.child))
    if isinstance(e, Add):
        return _add(differentiate(e.left), differentiate(e.right))
    if isinstance(e, Sub):
        return _sub(differentiate(e.left), differentiate(e.right))
    if isinstance(e, Mul):
        return _add(_mul(differentiate(e.left), e.right), _mul(e.left, differentiate(e.right)))
    if isinstance(e, Div):
        da, db = differentiate(e.left), differentiate(e.right)
        if _is(db, 0.0):
            return _div(da, e.right)
        return _div(_sub(_mul(da, e.right), _mul(e.left, db)), Pow(e.right, 2))
    if isinstance(e, Pow):
        n = e.exponent
        if n == 0:
            return ZERO
        inner = differentiate(e.base)
        lowered = e.base if n == 2 else Pow(e.base, n - 1)
        return _mul(_mul(Const(float(n)), lowered), inner)
    if isinstance(e, Call):
        a = e.arg
        da = differentiate(a)
        name = e.name
        if name == "sin":
            outer = Call("cos", a)
        elif name == "cos":
            outer = Neg(Call("sin", a))
        elif name == "tan":
            outer = Div(ONE, Pow(Call("cos", a), 2))
        elif name == "sinh":
            outer = Call("cosh", a)
        elif name == "cosh":
            outer = Call("sinh", a)
        elif name == "tanh":
            outer = Div(ONE, Pow(Call("cosh", a), 2))
        elif name == "exp":
            outer = e
        elif name == "log":
            return _div(da, a)
        elif name == "sqrt":
            return _div(da, Mul(Const(2.0), e))
        elif name == "asinh":
            outer = Div(ONE, Call("sqrt", Add(ONE, Pow(a, 2))))
        elif name == "atan":
            outer = Div(ONE, Add(ONE, Pow(a, 2)))
        else:
            raise ValueError(f"no derivative rule for {name!r}")
        return _mul(outer, da)
    if isinstance(e, PreferredQuotient):
        def q(n, d):
            return _sub(_mul(differentiate(n), d), _mul(n, differentiate(d)))
        return PreferredQuotient(q(e.num_a, e.den_a), Pow(e.den_a, 2),
                                 q(e.num_b, e.den_b), Pow(e.den_b, 2))
    raise TypeError(f"not an expression node: {e!r}")


def scaled(e: Expr, factor: float) -> Expr:
    """``factor * e`` without nesting constant factors."""
    if factor == 1.0:
        return e
    if factor == -1.0:
        return _neg(e)
    if isinstance(e, Mul) and isinstance(e.left, Const):
        return _mul(Const(e.left.value * factor), e.right)
    return Mul(Const(factor), e)
