"""Worked examples and generators used as executable fixtures."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .expr import parse
from .surface import NullCurvePair, WData, conjugate, from_null_curves

TWO_PI = 2.0 * math.pi
QUARTERS = tuple((1 + 2 * k) * math.pi / 4 for k in range(4))


@dataclass(frozen=True)
class Expected:
    point: tuple
    verdict: str
    provenance: str  # PAPER, DERIVED or TRIVIAL


@dataclass
class Fixture:
    name: str
    wdata: WData
    expected: list
    domain: tuple = ((-1.0, 1.0), (-1.0, 1.0))
    grid: tuple = (64, 64)
    notes: str = ""
    curves: NullCurvePair | None = None

    def __post_init__(self):
        for e in self.expected:
            if e.provenance not in ("PAPER", "DERIVED", "TRIVIAL"):
                raise ValueError(f"bad provenance tag {e.provenance!r}")


def _w(g1, g2, w1, w2, **kw) -> WData:
    return WData(parse(g1), parse(g2), parse(w1), parse(w2), **kw)


def enneper() -> Fixture:
    curves = NullCurvePair(("-u - u^3/3", "u - u^3/3", "u^2"),
                           ("v + v^3/3", "v - v^3/3", "v^2"))
    w = from_null_curves(curves)
    return Fixture("enneper", w, [
        Expected((1.0, -1.0), "Swallowtail", "DERIVED"),
        Expected((-1.0, 1.0), "Swallowtail", "DERIVED"),
        Expected((2.0, -0.5), "CuspidalEdge", "DERIVED"),
    ], ((0.5, 2.0), (-2.0, -0.5)), (64, 64),
        "singular set uv = -1; swallowtails at u = +-1", curves)


def enneper_conjugate() -> Fixture:
    """Conjugation swaps the sum and difference patterns: cross caps at u = +-1."""
    e = enneper()
    return Fixture("enneper_conjugate", conjugate(e.wdata), [
        Expected((1.0, -1.0), "CuspidalCrossCap", "DERIVED"),
        Expected((2.0, -0.5), "CuspidalEdge", "DERIVED"),
    ], e.domain, e.grid, "conjugate of the Enneper surface")


_PHI = "asinh(1/2)"
_MU = "((1 + sqrt(5))/2)"


def butterfly_pair() -> tuple[Fixture, Fixture]:
    den = f"(sin(v) - cosh({_PHI}) - cos(v)*sinh({_PHI}))"
    w = _w("-cos(u)/(1 + sin(u))",
           f"(sinh({_PHI}) + cos(v)*cosh({_PHI}))/{den}",
           f"-({_MU}/2)*(1 + sin(u))",
           f"{den}/(2*{_MU})")
    dom = ((-1.0, 1.0), (-1.0, 1.0))
    f = Fixture("butterfly", w, [Expected((0.0, 0.0), "CuspidalButterfly", "PAPER")], dom, (64, 64),
                "nested sum 2, |diff| = 4/mu at the origin")
    c = Fixture("butterfly_conjugate", conjugate(w),
                [Expected((0.0, 0.0), "CuspidalS1Plus", "PAPER")], dom, (64, 64))
    return f, c


def kksy_curve() -> tuple:
    return ("sin(2*s)/2", "sin(s)/2 + sin(3*s)/6", "cos(s)/2 - cos(3*s)/6")


def kksy_torus() -> Fixture:
    g = kksy_curve()
    curves = NullCurvePair(g, g)
    f0 = (0.0, 0.0, 1.0 / 3.0)
    w = _w("sin(u)/(cos(u) - 1)", "-sin(v)/(cos(v) + 1)",
           "cos(2*u)*(cos(u) - 1)/2", "cos(2*v)*(cos(v) + 1)/2", f0=f0, curves=curves)
    exp = []
    for a in QUARTERS:
        for b in QUARTERS:
            if a == b:
                exp.append(Expected((a, b), "Unclassified", "PAPER"))
            else:
                exp.append(Expected((a, b), "D4Plus", "PAPER"))
    return Fixture("kksy", w, exp, ((0.0, TWO_PI), (0.0, TWO_PI)), (256, 256),
                   "fold diagonal u = v; twelve D4+ off the diagonal", curves)


def intro_torus() -> Fixture:
    vel = ("cos(2*s)", "cos(3*s)*cos(2*s)", "sin(3*s)*cos(2*s)")
    curves = NullCurvePair(vel, vel, derivative=True)
    w = from_null_curves(curves)
    exp = [Expected((a, b), "D4Plus", "DERIVED") for a in QUARTERS for b in QUARTERS if a != b]
    return Fixture("intro_torus", w, exp, ((0.0, TWO_PI), (0.0, TWO_PI)), (128, 128),
                   "positions by quadrature of the velocity", curves)


def cusp_generator(k: int, alt: bool = False) -> Fixture:
    if int(k) != k or k < 1:
        raise ValueError(f"k must be a positive integer, got {k!r}")
    k = int(k)
    verdict = {1: "CuspidalEdge", 2: "Cusp25Edge"}.get(k, f"CandidateHigherCusp({k})")
    g2 = "v" if k == 1 else f"v^{2 * k - 1}"
    w = _w("u" if alt else "0", g2, "1", "v")
    return Fixture(f"cusp_k{k}" + ("_alt" if alt else ""), w,
                   [Expected((0.0, 0.0), verdict, "DERIVED")], notes="(2,2k+1) generator")


def beaks_fixture() -> Fixture:
    return Fixture("beaks", _w("exp(u)", "exp(v)", "1", "v"),
                   [Expected((0.0, 0.0), "CuspidalBeaks", "DERIVED")])


def d4_fixture() -> Fixture:
    return Fixture("d4", _w("u", "v", "u", "v"), [Expected((0.0, 0.0), "D4Plus", "DERIVED")])


def flat() -> Fixture:
    return Fixture("flat", _w("0", "0", "1", "1"), [])


def all_fixtures() -> list[Fixture]:
    bf, bc = butterfly_pair()
    return [enneper(), enneper_conjugate(), bf, bc, kksy_torus(), intro_torus(),
            cusp_generator(1), cusp_generator(2), cusp_generator(3), cusp_generator(2, alt=True),
            beaks_fixture(), d4_fixture(), flat()]


# --- fuzzing corpus -------------------------------------------------------

def _poly_text(coeffs, var: str, digits: int | None = 6) -> str:
    terms = []
    for i, c in enumerate(coeffs):
        if c == 0.0:
            continue
        c = float(c) if digits is None else round(float(c), digits)
        if i == 0:
            terms.append(f"({c!r})")
        elif i == 1:
            terms.append(f"({c!r})*{var}")
        else:
            terms.append(f"({c!r})*{var}^{i}")
    return " + ".join(terms) if terms else "0"


def _random_function(rng: np.random.Generator, var: str, positive: bool = False) -> str:
    if rng.random() < 0.6:
        deg = int(rng.integers(1, 5))
        cs = rng.normal(size=deg + 1)
        if positive:
            cs[0] = abs(cs[0]) + 1.0 + np.abs(cs[1:]).sum()
        return _poly_text(cs, var)
    a, b, c = (round(float(x), 6) for x in rng.normal(size=3))
    f1, f2 = (round(float(x), 6) for x in rng.uniform(0.5, 2.5, size=2))
    if positive:
        a = abs(a) + abs(b) + abs(c) + 1.0
    return f"({a!r}) + ({b!r})*sin({f1!r}*{var}) + ({c!r})*cos({f2!r}*{var})"


def _engineered_s1(rng: np.random.Generator) -> WData:
    """W-data with the S1 pattern at the origin: varphi1 = varphi2, phi1 = -phi2."""
    a = float(rng.choice([-1, 1]) * rng.uniform(0.5, 2.0))
    g1c = [a, float(rng.choice([-1, 1]) * rng.uniform(0.5, 2.0)), float(rng.normal()), float(rng.normal())]
    w1c = [float(rng.choice([-1, 1]) * rng.uniform(0.5, 2.0)), float(rng.normal()), float(rng.normal())]
    g2c = [1.0 / a, float(rng.choice([-1, 1]) * rng.uniform(0.5, 2.0)), float(rng.normal()), float(rng.normal())]
    g1 = np.polynomial.Polynomial(g1c)
    w1 = np.polynomial.Polynomial(w1c)
    # varphi1 and phi1 at 0 by exact polynomial arithmetic
    G, Gp, Gpp = g1(0.0), g1.deriv()(0.0), g1.deriv(2)(0.0)
    W, Wp = w1(0.0), w1.deriv()(0.0)
    varphi1 = Gp / (G * G * W)
    dvarphi1 = (Gpp * G * G * W - Gp * (2 * G * Gp * W + G * G * Wp)) / (G * G * W) ** 2
    phi1 = G / Gp * dvarphi1
    H, Hp, Hpp = g2c[0], g2c[1], 2.0 * g2c[2]
    w0 = Hp / (H * H * varphi1)
    # phi2 = (H/Hp) * (Hpp H^2 w0 - Hp (2 H Hp w0 + H^2 c)) / (H^2 w0)^2 is affine in c
    k0 = H / Hp * (Hpp * H * H * w0 - 2.0 * H * Hp * Hp * w0) / (H * H * w0) ** 2
    k1 = H / Hp * (-Hp * H * H) / (H * H * w0) ** 2
    c = (-phi1 - k0) / k1
    w2c = [w0, c, float(rng.normal())]
    texts = [_poly_text(c, x, None) for c, x in ((g1c, "u"), (g2c, "v"), (w1c, "u"), (w2c, "v"))]
    return WData(*(parse(t) for t in texts))


@dataclass
class FuzzCase:
    index: int
    kind: str
    wdata: WData
    domain: tuple = ((-1.0, 1.0), (-1.0, 1.0))
    special: list = field(default_factory=list)


def fuzz_case(seed: int, index: int) -> FuzzCase:
    rng = np.random.default_rng([seed, index])
    r = rng.random()
    if r < 0.1:
        return FuzzCase(index, "s1", _engineered_s1(rng), special=[(0.0, 0.0)])
    if r < 0.2:
        return FuzzCase(index, "butterfly", conjugate(_engineered_s1(rng)), special=[(0.0, 0.0)])
    g1 = _random_function(rng, "u")
    g2 = _random_function(rng, "v")
    w1 = _random_function(rng, "u", positive=rng.random() < 0.4)
    w2 = _random_function(rng, "v", positive=rng.random() < 0.4)
    return FuzzCase(index, "random", WData(parse(g1), parse(g2), parse(w1), parse(w2)))


def fuzz_corpus(seed: int, count: int) -> list[FuzzCase]:
    return [fuzz_case(seed, i) for i in range(count)]
