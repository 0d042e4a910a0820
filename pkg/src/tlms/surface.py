"""Generalized timelike minimal surfaces from real Weierstrass data.

Coordinates of Minkowski 3-space are ordered ``(t, x, y)`` with metric
``-dt^2 + dx^2 + dy^2``.  A surface is

    f(u, v) = 1/2 int_{u0}^u (-1-g1^2, 1-g1^2, 2 g1) w1 du
            + 1/2 int_{v0}^v ( 1+g2^2, 1-g2^2, -2 g2) w2 dv + f0

with ``g1, w1`` functions of ``u`` and ``g2, w2`` functions of ``v``.
Positions are integrated numerically; everything the classifier needs
comes from jets of the four data functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np
from scipy.integrate import quad_vec

from .expr import (
    Add,
    Const,
    Expr,
    Mul,
    Neg,
    PreferredQuotient,
    Pow,
    Sub,
    as_expr,
    differentiate,
    eval_array,
    eval_jet,
    scaled,
    to_text,
)
from .jets import DEFAULT_ORDER, Jet, JetError, JetPoleError, common_order

QUAD_EPSABS = 1e-10
QUAD_LIMIT = 2 ** 15
NULL_RTOL = 1e-9


class FinitenessError(ValueError):
    """g1 or g2 is not finite at a visited point."""


class NullityError(ValueError):
    pass


class QuadratureError(ArithmeticError):
    def __init__(self, message: str, achieved: float):
        super().__init__(message)
        self.achieved = achieved


def lorentz_inner(a, b) -> float:
    return -a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


@dataclass(frozen=True)
class NullCurvePair:
    """Generating curves ``phi(u)``, ``psi(v)`` with ``f = (phi + psi)/2``.

    With ``derivative=True`` the components are the velocities
    ``phi'``, ``psi'`` and positions are obtained by quadrature.
    """

    phi: tuple
    psi: tuple
    derivative: bool = False
    base: tuple = (0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "phi", tuple(as_expr(c) for c in self.phi))
        object.__setattr__(self, "psi", tuple(as_expr(c) for c in self.psi))
        if len(self.phi) != 3 or len(self.psi) != 3:
            raise ValueError("null curves need three components each")
        object.__setattr__(self, "base", tuple(float(b) for b in self.base))

    def velocities(self) -> tuple[tuple, tuple]:
        if self.derivative:
            return self.phi, self.psi
        return (tuple(differentiate(c) for c in self.phi),
                tuple(differentiate(c) for c in self.psi))

    def scaled(self, phi_factor: float, psi_factor: float) -> "NullCurvePair":
        return replace(self,
                       phi=tuple(scaled(c, phi_factor) for c in self.phi),
                       psi=tuple(scaled(c, psi_factor) for c in self.psi))


@dataclass(frozen=True)
class WData:
    g1: Expr
    g2: Expr
    w1: Expr
    w2: Expr
    base: tuple = (0.0, 0.0)
    f0: tuple = (0.0, 0.0, 0.0)
    # generating curves, when known; used for exact/smooth positions only
    curves: NullCurvePair | None = field(default=None, compare=False)

    def __post_init__(self):
        for name in ("g1", "g2", "w1", "w2"):
            object.__setattr__(self, name, as_expr(getattr(self, name)))
        object.__setattr__(self, "base", tuple(float(b) for b in self.base))
        object.__setattr__(self, "f0", tuple(float(c) for c in self.f0))

    def texts(self) -> dict[str, str]:
        return {"g1": to_text(self.g1, "u"), "g2": to_text(self.g2, "v"),
                "w1": to_text(self.w1, "u"), "w2": to_text(self.w2, "v")}


@dataclass(frozen=True)
class FramePoint:
    f: tuple | None
    fu: tuple
    fv: tuple
    n: tuple
    lam: float


@dataclass
class NullCheckReport:
    max_residual: float
    max_speed_sq: float
    worst_at: float
    passed: bool


@dataclass(frozen=True)
class PointJets:
    """Jets of the four data functions at (u, v)."""

    g1: Jet
    g2: Jet
    w1: Jet
    w2: Jet


def point_jets(w: WData, u: float, v: float, order: int = DEFAULT_ORDER) -> PointJets:
    try:
        g1 = eval_jet(w.g1, u, order)
        g2 = eval_jet(w.g2, v, order)
    except JetPoleError as exc:
        raise FinitenessError(f"g is not finite at (u, v) = ({u}, {v}): {exc}") from exc
    return PointJets(g1, g2, eval_jet(w.w1, u, order), eval_jet(w.w2, v, order))


def _value(e: Expr, x: float) -> float:
    # a few orders of headroom so 0/0 quotients still resolve
    return eval_jet(e, x, 3).value


def _g_values(w: WData, u: float, v: float) -> tuple[float, float]:
    try:
        return _value(w.g1, u), _value(w.g2, v)
    except JetPoleError as exc:
        raise FinitenessError(f"g is not finite at (u, v) = ({u}, {v}): {exc}") from exc


# --- null curves ----------------------------------------------------------

def check_null(curve: Sequence, interval: tuple[float, float], samples: int = 200,
               derivative: bool = False) -> NullCheckReport:
    """Largest ``|<c', c'>|`` over ``samples`` points, against the speed scale."""
    if samples < 2:
        raise ValueError("need at least two samples")
    comps = [as_expr(c) for c in curve]
    vel = comps if derivative else [differentiate(c) for c in comps]
    s = np.linspace(interval[0], interval[1], samples)
    d = np.array([eval_array(c, s) for c in vel])
    res = np.abs(-d[0] ** 2 + d[1] ** 2 + d[2] ** 2)
    speed = float(np.max(np.sum(d * d, axis=0)))
    i = int(np.argmax(res))
    worst = float(res[i])
    return NullCheckReport(worst, speed, float(s[i]), worst <= NULL_RTOL * max(speed, 1e-300))


def from_null_curves(p: NullCurvePair, check_interval: tuple[float, float] | None = None) -> WData:
    """Recover W-data from a null-curve pair.

    ``w1 = (phi1' - phi0')/2``, ``g1 = phi2'/(2 w1)`` (or the equivalent
    ``-(phi0' + phi1')/phi2'``), ``w2 = (psi0' + psi1')/2``,
    ``g2 = -psi2'/(2 w2)`` (or ``-(psi0' - psi1')/psi2'``).
    """
    if check_interval is not None:
        for name, c in (("phi", p.phi), ("psi", p.psi)):
            rep = check_null(c, check_interval, 400, p.derivative)
            if not rep.passed:
                raise NullityError(f"{name} is not null: residual {rep.max_residual:.3g} "
                                   f"at {rep.worst_at:.6g}")
    (a0, a1, a2), (b0, b1, b2) = p.velocities()
    half = Const(0.5)
    w1 = Mul(half, Sub(a1, a0))
    w2 = Mul(half, Add(b0, b1))
    g1 = PreferredQuotient(a2, Sub(a1, a0), Neg(Add(a0, a1)), a2)
    g2 = PreferredQuotient(Neg(b2), Add(b0, b1), Neg(Sub(b0, b1)), b2)
    u0, v0 = p.base
    if p.derivative:
        f0 = (0.0, 0.0, 0.0)
    else:
        f0 = tuple(0.5 * (_value(a, u0) + _value(b, v0)) for a, b in zip(p.phi, p.psi))
    return WData(g1, g2, w1, w2, (u0, v0), f0, curves=p)


def to_null_curves(w: WData) -> NullCurvePair:
    """Velocity-form curves ``phi' = w1 (-1-g1^2, 1-g1^2, 2 g1)``, ``psi'`` likewise."""
    g1sq, g2sq = Pow(w.g1, 2), Pow(w.g2, 2)
    one = Const(1.0)
    phi = (Mul(w.w1, Sub(Neg(one), g1sq)), Mul(w.w1, Sub(one, g1sq)),
           Mul(w.w1, Mul(Const(2.0), w.g1)))
    psi = (Mul(w.w2, Add(one, g2sq)), Mul(w.w2, Sub(one, g2sq)),
           Mul(w.w2, Mul(Const(-2.0), w.g2)))
    return NullCurvePair(phi, psi, derivative=True, base=w.base)


# --- transforms -----------------------------------------------------------

def conjugate(w: WData) -> WData:
    """Anti-isometric conjugate surface: ``w2 -> -w2``."""
    curves = w.curves.scaled(1.0, -1.0) if w.curves is not None else None
    return replace(w, w2=scaled(w.w2, -1.0), curves=curves)


def associate(w: WData, theta: float) -> WData:
    """Associated-family member ``(g1, g2, e^theta w1, e^-theta w2)``."""
    if theta == 0.0:
        return w
    k = math.exp(theta)
    curves = w.curves.scaled(k, 1.0 / k) if w.curves is not None else None
    return replace(w, w1=scaled(w.w1, k), w2=scaled(w.w2, 1.0 / k), curves=curves)


# --- frames ---------------------------------------------------------------

def c1_vec(g):
    return (-1.0 - g * g, 1.0 - g * g, 2.0 * g)


def c2_vec(g):
    return (1.0 + g * g, 1.0 - g * g, -2.0 * g)


def normal_vec(g1, g2):
    """Euclidean unit normal and its unnormalised length ``|n|_E``."""
    m = math.sqrt((1.0 - g1 * g2) ** 2 + 2.0 * (g1 + g2) ** 2)
    return (((g1 + g2) / m, (g2 - g1) / m, (1.0 + g1 * g2) / m), m)


def area_density_factored(w: WData, u: float, v: float) -> tuple[float, float, float, float]:
    """``(Lambda, 1 - g1 g2, w1, w2)`` whose product is the signed area density."""
    g1, g2 = _g_values(w, u, v)
    lam_big = -0.5 * math.sqrt((1.0 - g1 * g2) ** 2 + 2.0 * (g1 + g2) ** 2)
    return lam_big, 1.0 - g1 * g2, _value(w.w1, u), _value(w.w2, v)


def det3(a, b, c) -> float:
    return (a[0] * (b[1] * c[2] - b[2] * c[1])
            - a[1] * (b[0] * c[2] - b[2] * c[0])
            + a[2] * (b[0] * c[1] - b[1] * c[0]))


def eval_frame(w: WData, u: float, v: float, with_position: bool = True) -> FramePoint:
    g1, g2 = _g_values(w, u, v)
    w1, w2 = _value(w.w1, u), _value(w.w2, v)
    fu = tuple(0.5 * w1 * c for c in c1_vec(g1))
    fv = tuple(0.5 * w2 * c for c in c2_vec(g2))
    n, _ = normal_vec(g1, g2)
    f = eval_position(w, u, v) if with_position else None
    return FramePoint(f, fu, fv, n, det3(fu, fv, n))


def frame_grid(w: WData, us, vs) -> dict[str, np.ndarray]:
    """Vectorised frame quantities on the tensor grid ``us x vs`` (u varies along axis 0)."""
    uu, vv = np.meshgrid(np.asarray(us, float), np.asarray(vs, float), indexing="ij")
    g1 = eval_array(w.g1, uu)
    g2 = eval_array(w.g2, vv)
    w1 = eval_array(w.w1, uu)
    w2 = eval_array(w.w2, vv)
    with np.errstate(all="ignore"):  # poles of g show up as nan
        fu = 0.5 * w1 * np.array(c1_vec(g1))
        fv = 0.5 * w2 * np.array(c2_vec(g2))
        m = np.sqrt((1 - g1 * g2) ** 2 + 2 * (g1 + g2) ** 2)
        n = np.array([(g1 + g2) / m, (g2 - g1) / m, (1 + g1 * g2) / m])
        lam = np.einsum("i...,i...->...", np.cross(fu, fv, axis=0), n)
        lam_factored = -0.5 * m * (1 - g1 * g2) * w1 * w2
    return {"u": uu, "v": vv, "g1": g1, "g2": g2, "w1": w1, "w2": w2,
            "fu": fu, "fv": fv, "n": n, "lam": lam, "lam_factored": lam_factored}


def hopf(w: WData, u: float, v: float) -> tuple[float, float]:
    """Hopf coefficients ``Q = w1 (g1)_u`` and ``R = -w2 (g2)_v``."""
    j = point_jets(w, u, v, 3)
    return j.w1.value * j.g1.derivative(1), -j.w2.value * j.g2.derivative(1)


# --- positions ------------------------------------------------------------

RECENTER_G = 1e3  # beyond this |g| the float route loses digits near a cancelled pole
RECENTER_ORDER = 12


def _recentred(gexpr, wexpr, c_fn, x: float) -> np.ndarray:
    """Integrand at ``x`` from its Taylor series about a nearby, well-conditioned point.

    Near a pole of g cancelled by a zero of omega the float evaluation
    degrades (and ends in 0 * inf); the product itself is smooth there.
    """
    h = 1e-4 * max(1.0, abs(x))
    g = xc = None
    for _ in range(20):
        for xc in (x + h, x - h):
            try:
                g = eval_jet(gexpr, xc, RECENTER_ORDER)
            except JetError:
                continue
            if abs(g.value) <= RECENTER_G:
                break
        else:
            h *= 2.0
            continue
        break
    if g is None:
        raise FinitenessError(f"no well-conditioned expansion point near {x}")
    wj = eval_jet(wexpr, xc, RECENTER_ORDER)
    g, wj = common_order(g, wj)
    return np.array([(0.5 * wj * comp)(x) for comp in c_fn(g)])


def _wdata_integrand(gexpr, wexpr, c_fn):
    def fn(x):
        g = eval_array(gexpr, x)
        wv = eval_array(wexpr, x)
        with np.errstate(all="ignore"):
            out = 0.5 * wv * np.array(c_fn(g))
            bad = ~np.all(np.isfinite(out), axis=0) | ((np.abs(g) > RECENTER_G) & (np.abs(wv * g) < 1.0))
        if np.any(bad):
            if out.ndim == 1:
                return _recentred(gexpr, wexpr, c_fn, float(x))
            for i in np.nonzero(bad)[0]:
                out[:, i] = _recentred(gexpr, wexpr, c_fn, float(x[i]))
        return out
    return fn


def _integrand_u(w: WData):
    if w.curves is not None:
        vel = w.curves.velocities()[0]
        return lambda x: 0.5 * np.array([eval_array(c, x) for c in vel])
    return _wdata_integrand(w.g1, w.w1, c1_vec)


def _integrand_v(w: WData):
    if w.curves is not None:
        vel = w.curves.velocities()[1]
        return lambda x: 0.5 * np.array([eval_array(c, x) for c in vel])
    return _wdata_integrand(w.g2, w.w2, c2_vec)


def _integrate(fn, a: float, b: float) -> np.ndarray:
    if a == b:
        return np.zeros(3)
    res, err, info = quad_vec(lambda x: fn(np.array(x)), a, b, epsabs=QUAD_EPSABS,
                              epsrel=0.0, limit=QUAD_LIMIT, full_output=True)
    if not info.success or not np.all(np.isfinite(res)):
        raise QuadratureError(f"quadrature on [{a}, {b}] did not converge "
                              f"(achieved {err:.3g})", float(err))
    return res


def _closed_form(w: WData) -> bool:
    return w.curves is not None and not w.curves.derivative


def _half_curve(exprs, x, x0) -> np.ndarray:
    return 0.5 * np.array([_value(c, x) - _value(c, x0) for c in exprs])


def eval_position(w: WData, u: float, v: float) -> tuple:
    """``f(u, v)``; closed form when generating curves are known as positions."""
    u0, v0 = w.base
    if _closed_form(w):
        pu = _half_curve(w.curves.phi, u, u0)
        pv = _half_curve(w.curves.psi, v, v0)
    else:
        pu = _integrate(_integrand_u(w), u0, u)
        pv = _integrate(_integrand_v(w), v0, v)
    return tuple(float(c) for c in pu + pv + np.asarray(w.f0))


def _cumulative(fn, x0: float, xs: np.ndarray) -> np.ndarray:
    # integrate outward from x0 so every node costs one short integral
    xs = np.asarray(xs, float)
    out = np.zeros((len(xs), 3))
    order = np.argsort(xs)
    xs_sorted = xs[order]
    k = int(np.searchsorted(xs_sorted, x0))
    acc = np.zeros(3)
    prev = x0
    for i in range(k, len(xs_sorted)):
        acc = acc + _integrate(fn, prev, xs_sorted[i])
        prev = xs_sorted[i]
        out[order[i]] = acc
    acc = np.zeros(3)
    prev = x0
    for i in range(k - 1, -1, -1):
        acc = acc + _integrate(fn, prev, xs_sorted[i])
        prev = xs_sorted[i]
        out[order[i]] = acc
    return out


def position_grid(w: WData, us, vs) -> np.ndarray:
    """Positions on ``us x vs``, shape ``(len(us), len(vs), 3)``."""
    u0, v0 = w.base
    us = np.asarray(us, float)
    vs = np.asarray(vs, float)
    if _closed_form(w):
        pu = np.array([_half_curve(w.curves.phi, x, u0) for x in us])
        pv = np.array([_half_curve(w.curves.psi, x, v0) for x in vs])
    else:
        pu = _cumulative(_integrand_u(w), u0, us)
        pv = _cumulative(_integrand_v(w), v0, vs)
    return pu[:, None, :] + pv[None, :, :] + np.asarray(w.f0)


# --- export ---------------------------------------------------------------

def write_obj(path, w: WData, us, vs, polylines: Iterable[Sequence[tuple]] = ()) -> int:
    """Triangulated OBJ of the parameter grid; returns the vertex count.

    Vertices are written as ``x y t`` (time last).  Each polyline is a
    list of ``(u, v)`` parameter points, emitted as an ``l`` element.
    """
    pts = position_grid(w, us, vs)
    nu, nv = pts.shape[:2]
    lines = ["# generalized timelike minimal surface",
             "# vertex order: x y t (Minkowski time coordinate last)",
             f"# grid {nu} x {nv}", "o surface"]
    for i in range(nu):
        for j in range(nv):
            t, x, y = pts[i, j]
            lines.append(f"v {x:.10g} {y:.10g} {t:.10g}")

    def vid(i, j):
        return i * nv + j + 1

    for i in range(nu - 1):
        for j in range(nv - 1):
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            lines.append(f"f {a} {b} {c}")
            lines.append(f"f {a} {c} {d}")
    count = nu * nv
    for k, poly in enumerate(polylines):
        poly = list(poly)
        if len(poly) < 2:
            continue
        lines.append(f"o singular_{k}")
        start = count + 1
        for (u, v) in poly:
            t, x, y = eval_position(w, u, v)
            lines.append(f"v {x:.10g} {y:.10g} {t:.10g}")
        count += len(poly)
        lines.append("l " + " ".join(str(start + i) for i in range(len(poly))))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return nu * nv


def write_frame_csv(path, w: WData, us, vs) -> None:
    grid = frame_grid(w, us, vs)
    cols = ["u", "v", "fu_t", "fu_x", "fu_y", "fv_t", "fv_x", "fv_y",
            "n_t", "n_x", "n_y", "lambda"]
    rows = [grid["u"].ravel(), grid["v"].ravel()]
    rows += [grid["fu"][k].ravel() for k in range(3)]
    rows += [grid["fv"][k].ravel() for k in range(3)]
    rows += [grid["n"][k].ravel() for k in range(3)]
    rows.append(grid["lam"].ravel())
    np.savetxt(path, np.column_stack(rows), delimiter=",", header=",".join(cols), comments="")
