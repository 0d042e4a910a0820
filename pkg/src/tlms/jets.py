"""Truncated Taylor series ("jets") of univariate functions.

A :class:`Jet` stores the Taylor coefficients ``c_0 .. c_K`` of a smooth
function at a base point, so the k-th derivative there is ``k! * c_k``.
Arithmetic is exact up to truncation order; kernels (sin, exp, ...) are
composed with recurrences rather than by numerical differentiation.
"""

from __future__ import annotations

import math
from typing import Sequence

DEFAULT_ORDER = 8
ZERO_RTOL = 1e-13
ZERO_WINDOW = 2

KERNELS = (
    "sin", "cos", "tan", "sinh", "cosh", "tanh",
    "exp", "log", "sqrt", "asinh", "atan",
)


class JetError(ArithmeticError):
    """Base class for jet arithmetic failures.

    ``subtree`` is filled in by the expression evaluator with the
    sub-expression that raised, when there is one.
    """

    def __init__(self, message: str):
        super().__init__(message)
        self.subtree = None

    def __str__(self) -> str:
        msg = super().__str__()
        if self.subtree is not None:
            return f"{msg} (in subexpression {self.subtree})"
        return msg


class JetUsageError(JetError, ValueError):
    pass


class DivisionByZeroJetError(JetError, ZeroDivisionError):
    pass


class InsufficientOrderError(JetError):
    pass


class JetPoleError(InsufficientOrderError):
    """Quotient has a genuine pole: the denominator vanishes to higher order."""


class JetDomainError(JetError, ValueError):
    pass


class Jet:
    """Immutable truncated Taylor series at ``base``.

    ``depth`` counts orders consumed by division cancellation so far, so
    callers can tell an under-resolved quotient from a fresh jet.
    """

    __slots__ = ("base", "coeffs", "depth")

    def __init__(self, base: float, coeffs: Sequence[float], depth: int = 0):
        cs = tuple(map(float, coeffs))
        if not cs:
            raise JetUsageError("a jet needs at least one coefficient")
        if not all(map(math.isfinite, cs)):
            bad = next(c for c in cs if not math.isfinite(c))
            raise JetDomainError(f"non-finite jet coefficient {bad!r}")
        object.__setattr__(self, "base", float(base))
        object.__setattr__(self, "coeffs", cs)
        object.__setattr__(self, "depth", int(depth))

    def __setattr__(self, name, value):
        raise AttributeError("Jet is immutable")

    @classmethod
    def constant(cls, value: float, base: float = 0.0, order: int = DEFAULT_ORDER) -> "Jet":
        return cls(base, [value] + [0.0] * order)

    @classmethod
    def variable(cls, base: float, order: int = DEFAULT_ORDER, scale: float = 1.0) -> "Jet":
        """Jet of ``x -> base + scale*(x - base)``, i.e. the identity when scale=1."""
        if order == 0:
            return cls(base, [base])
        return cls(base, [base, scale] + [0.0] * (order - 1))

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @property
    def value(self) -> float:
        return self.coeffs[0]

    def derivative(self, k: int) -> float:
        return jet_derive(self, k)

    def deriv(self) -> "Jet":
        """Jet of the derivative function (one order lower)."""
        if self.order == 0:
            raise InsufficientOrderError("cannot differentiate an order-0 jet")
        cs = self.coeffs
        return Jet(self.base, [k * cs[k] for k in range(1, len(cs))], self.depth + 1)

    def integrate(self, c0: float) -> "Jet":
        """Antiderivative jet with constant term ``c0`` (one order higher)."""
        cs = self.coeffs
        return Jet(self.base, [c0] + [cs[k] / (k + 1) for k in range(len(cs))], self.depth)

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise InsufficientOrderError(f"cannot raise jet order {self.order} to {order}")
        if order == self.order:
            return self
        extra = self.order - order
        return Jet(self.base, self.coeffs[: order + 1], self.depth + extra)

    def leading_zeros(self, rtol: float = ZERO_RTOL, window: int = ZERO_WINDOW) -> int:
        """Number of leading coefficients negligible against their neighbours.

        Coefficient ``k`` counts as zero when it is below ``rtol`` times the
        largest of coefficients ``0..k+window``.  A global maximum would be
        dominated by the fast-growing tail of a series near a pole.
        """
        cs = self.coeffs
        n = 0
        for k, c in enumerate(cs):
            if abs(c) > rtol * max(abs(x) for x in cs[:k + window + 1]):
                break
            n += 1
        return n

    def __call__(self, x: float) -> float:
        """Evaluate the truncated polynomial at ``x`` (Horner)."""
        h = x - self.base
        acc = 0.0
        for c in reversed(self.coeffs):
            acc = acc * h + c
        return acc

    # operator sugar; scalars are promoted to constant jets
    def _lift(self, other) -> "Jet":
        if isinstance(other, Jet):
            return other
        if isinstance(other, (int, float)):
            return Jet(self.base, [float(other)] + [0.0] * self.order, self.depth)
        return NotImplemented

    def __add__(self, other):
        o = self._lift(other)
        return NotImplemented if o is NotImplemented else jet_add(self, o)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._lift(other)
        return NotImplemented if o is NotImplemented else jet_sub(self, o)

    def __rsub__(self, other):
        o = self._lift(other)
        return NotImplemented if o is NotImplemented else jet_sub(o, self)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return Jet(self.base, [c * other for c in self.coeffs], self.depth)
        o = self._lift(other)
        return NotImplemented if o is NotImplemented else jet_mul(self, o)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, float)):
            if other == 0:
                raise DivisionByZeroJetError("division of a jet by scalar zero")
            return Jet(self.base, [c / other for c in self.coeffs], self.depth)
        o = self._lift(other)
        return NotImplemented if o is NotImplemented else jet_div(self, o)

    def __rtruediv__(self, other):
        o = self._lift(other)
        return NotImplemented if o is NotImplemented else jet_div(o, self)

    def __neg__(self):
        return Jet(self.base, [-c for c in self.coeffs], self.depth)

    def __pow__(self, n):
        return jet_pow(self, n)

    def __eq__(self, other):
        if not isinstance(other, Jet):
            return NotImplemented
        return self.base == other.base and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.base, self.coeffs))

    def __repr__(self) -> str:
        body = ", ".join(f"{c:.6g}" for c in self.coeffs)
        return f"Jet(base={self.base:g}, [{body}], depth={self.depth})"


def _check_pair(a: Jet, b: Jet) -> None:
    if a.base != b.base:
        raise JetUsageError(f"jet bases differ: {a.base} vs {b.base}")
    if len(a.coeffs) != len(b.coeffs):
        raise JetUsageError(f"jet orders differ: {a.order} vs {b.order}")


def common_order(*jets: Jet) -> tuple[Jet, ...]:
    """Truncate jets to their smallest order so they can be combined."""
    k = min(j.order for j in jets)
    return tuple(j.truncate(k) for j in jets)


def jet_add(a: Jet, b: Jet) -> Jet:
    _check_pair(a, b)
    return Jet(a.base, [x + y for x, y in zip(a.coeffs, b.coeffs)], max(a.depth, b.depth))


def jet_sub(a: Jet, b: Jet) -> Jet:
    _check_pair(a, b)
    return Jet(a.base, [x - y for x, y in zip(a.coeffs, b.coeffs)], max(a.depth, b.depth))


def _cauchy(a: Sequence[float], b: Sequence[float], n: int) -> list[float]:
    out = [0.0] * n
    for i in range(n):
        ai = a[i]
        if ai == 0.0:
            continue
        for j in range(n - i):
            out[i + j] += ai * b[j]
    return out


def jet_mul(a: Jet, b: Jet) -> Jet:
    _check_pair(a, b)
    return Jet(a.base, _cauchy(a.coeffs, b.coeffs, len(a.coeffs)), max(a.depth, b.depth))


def _series_div(a: Sequence[float], b: Sequence[float], n: int) -> list[float]:
    q = [0.0] * n
    b0 = b[0]
    for k in range(n):
        s = a[k]
        for j in range(1, k + 1):
            s -= b[j] * q[k - j]
        q[k] = s / b0
    return q


def jet_div(a: Jet, b: Jet) -> Jet:
    """Quotient jet, cancelling common leading zeros of numerator and denominator.

    The result loses one order per cancelled zero; ``depth`` records it.
    """
    _check_pair(a, b)
    zb = b.leading_zeros()
    if zb == len(b.coeffs):
        raise DivisionByZeroJetError("denominator jet vanishes through its full order")
    if zb:
        za = a.leading_zeros()
        if za < zb:
            raise JetPoleError(
                f"quotient has a pole: numerator vanishes to order {za}, "
                f"denominator to order {zb}"
            )
        n = len(a.coeffs) - zb
        q = _series_div(a.coeffs[zb:], b.coeffs[zb:], n)
        return Jet(a.base, q, max(a.depth, b.depth) + zb)
    n = len(a.coeffs)
    return Jet(a.base, _series_div(a.coeffs, b.coeffs, n), max(a.depth, b.depth))


def jet_pow(a: Jet, n: int) -> Jet:
    if not isinstance(n, int) or isinstance(n, bool):
        raise JetUsageError(f"jet powers take integer exponents, got {n!r}")
    if n < 0:
        one = Jet.constant(1.0, a.base, a.order)
        return jet_div(one, jet_pow(a, -n))
    result = Jet.constant(1.0, a.base, a.order)
    sq = a
    while n:
        if n & 1:
            result = jet_mul(result, sq)
        n >>= 1
        if n:
            sq = jet_mul(sq, sq)
    return Jet(a.base, result.coeffs, a.depth)


def jet_derive(a: Jet, k: int) -> float:
    """Exact k-th derivative at the base point: ``k! * c_k``."""
    if k < 0:
        raise JetUsageError("derivative order must be non-negative")
    if k > a.order:
        raise InsufficientOrderError(f"derivative of order {k} requested from an order-{a.order} jet")
    return math.factorial(k) * a.coeffs[k]


# --- kernel recurrences ---------------------------------------------------
# For f = h(a) with a known, the coefficients of f follow from k*f_k =
# sum_j j*a_j * (h'(a))_{k-j}; sin/cos and sinh/cosh are solved in pairs.

def _exp(a: Sequence[float], n: int) -> list[float]:
    e = [0.0] * n
    e[0] = math.exp(a[0])
    for k in range(1, n):
        s = 0.0
        for j in range(1, k + 1):
            s += j * a[j] * e[k - j]
        e[k] = s / k
    return e


def _sincos(a: Sequence[float], n: int, hyperbolic: bool) -> tuple[list[float], list[float]]:
    s = [0.0] * n
    c = [0.0] * n
    if hyperbolic:
        s[0], c[0] = math.sinh(a[0]), math.cosh(a[0])
    else:
        s[0], c[0] = math.sin(a[0]), math.cos(a[0])
    sign = 1.0 if hyperbolic else -1.0
    for k in range(1, n):
        ss = 0.0
        cc = 0.0
        for j in range(1, k + 1):
            ja = j * a[j]
            ss += ja * c[k - j]
            cc += ja * s[k - j]
        s[k] = ss / k
        c[k] = sign * cc / k
    return s, c


def _log(a: Sequence[float], n: int) -> list[float]:
    if a[0] <= 0.0:
        raise JetDomainError(f"log of non-positive value {a[0]!r}")
    out = [0.0] * n
    out[0] = math.log(a[0])
    for k in range(1, n):
        s = a[k]
        for j in range(1, k):
            s -= j * out[j] * a[k - j] / k
        out[k] = s / a[0]
    return out


def _sqrt(a: Sequence[float], n: int) -> list[float]:
    if a[0] <= 0.0:
        raise JetDomainError(f"sqrt is not analytic at {a[0]!r}")
    r = [0.0] * n
    r[0] = math.sqrt(a[0])
    for k in range(1, n):
        s = a[k]
        for j in range(1, k):
            s -= r[j] * r[k - j]
        r[k] = s / (2.0 * r[0])
    return r


def _by_derivative(inner: Jet, value: float, dfactor: Jet) -> Jet:
    # f(a) with f'(a) = dfactor: integrate dfactor * a'
    if inner.order == 0:
        return Jet(inner.base, [value], inner.depth)
    da = inner.deriv()
    g = jet_mul(da, dfactor.truncate(da.order))
    return Jet(inner.base, g.integrate(value).coeffs, inner.depth)


def jet_compose(outer: str, inner: Jet) -> Jet:
    """Taylor coefficients of ``outer(inner(x))`` to the order of ``inner``."""
    a = inner.coeffs
    n = len(a)
    base = inner.base
    if outer == "exp":
        return Jet(base, _exp(a, n), inner.depth)
    if outer in ("sin", "cos"):
        s, c = _sincos(a, n, hyperbolic=False)
        return Jet(base, s if outer == "sin" else c, inner.depth)
    if outer in ("sinh", "cosh"):
        s, c = _sincos(a, n, hyperbolic=True)
        return Jet(base, s if outer == "sinh" else c, inner.depth)
    if outer == "tan":
        s, c = _sincos(a, n, hyperbolic=False)
        if c[0] == 0.0:
            raise JetDomainError(f"tan has a pole at {a[0]!r}")
        return Jet(base, _series_div(s, c, n), inner.depth)
    if outer == "tanh":
        s, c = _sincos(a, n, hyperbolic=True)
        return Jet(base, _series_div(s, c, n), inner.depth)
    if outer == "log":
        return Jet(base, _log(a, n), inner.depth)
    if outer == "sqrt":
        return Jet(base, _sqrt(a, n), inner.depth)
    if outer == "atan":
        one = Jet.constant(1.0, base, inner.order)
        d = jet_div(one, one + jet_mul(inner, inner))
        return _by_derivative(inner, math.atan(a[0]), d)
    if outer == "asinh":
        one = Jet.constant(1.0, base, inner.order)
        root = Jet(base, _sqrt((one + jet_mul(inner, inner)).coeffs, n))
        return _by_derivative(inner, math.asinh(a[0]), jet_div(one, root))
    raise JetUsageError(f"unsupported kernel {outer!r}")
