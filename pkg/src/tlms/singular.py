"""Locating and structurally analysing singular points.

The singular set is ``{g1 g2 = 1} U {w1 w2 = 0}``.  Because ``w1`` depends on
``u`` only (and ``w2`` on ``v``), the second part is a union of coordinate
lines; the first is traced with a predictor-corrector on
``G(u, v) = g1(u) g2(v) - 1``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .expr import Div, Mul, Pow, compile_array, differentiate, eval_array, eval_jet
from .jets import DEFAULT_ORDER, InsufficientOrderError, Jet, JetError, common_order, jet_compose
from .surface import FinitenessError, PointJets, WData, point_jets

STRUCT_TOL = 1e-10
ROOT_TOL = 1e-12
MERGE_TOL = 1e-7
TOUCH_TOL = 1e-7  # relative size of a tangential zero of sum or diff
TOUCH_SCREEN = 0.05  # vertices must already be this close before refining
G_MAX = 1e8


class NotSingularError(ValueError):
    pass


def is_zero(value: float, scale: float = 1.0, tol: float = STRUCT_TOL) -> bool:
    return abs(value) <= tol * max(1.0, scale)


# --- structural types -----------------------------------------------------

@dataclass
class SingularPoint:
    uv: tuple
    kinds: frozenset
    rank: int
    is_front: bool
    is_degenerate: bool
    margins: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"u": self.uv[0], "v": self.uv[1], "kinds": sorted(self.kinds),
                "rank": self.rank, "front": self.is_front,
                "degenerate": self.is_degenerate, "margins": dict(self.margins),
                "flags": list(self.flags)}


@dataclass
class SingularCurveSample:
    t: float
    point: tuple
    gamma_prime: tuple
    eta: tuple


@dataclass
class Root:
    value: float
    tangential: bool = False
    low_confidence: bool = False


@dataclass
class WZeroLines:
    u_roots: list
    v_roots: list
    excluded: list = field(default_factory=list)


@dataclass
class GCurve:
    points: list
    closed: bool = False
    end_reasons: tuple = ("", "")
    degenerate_ends: list = field(default_factory=list)


# --- helpers on jets --------------------------------------------------------

def line_jet(x0: float, dx: float, order: int) -> Jet:
    """Jet in ``t`` of ``x0 + dx*t``."""
    if order == 0:
        return Jet(0.0, [x0])
    return Jet(0.0, [x0, dx] + [0.0] * (order - 1))


def _along(e, x0: float, dx: float, order: int) -> Jet:
    """Jet in t of ``e(x0 + dx t)``, rescaled from the cached jet at ``x0``."""
    j = eval_jet(e, x0, order)
    return Jet(0.0, [c * dx ** k for k, c in enumerate(j.coeffs)], j.depth)


def lambda_jet(w: WData, u: float, v: float, du: float, dv: float, order: int = 2) -> Jet:
    """Signed area density along the line ``(u + du t, v + dv t)``."""
    # extra order absorbs 0/0 cancellations inside g
    g1, g2, w1, w2 = common_order(_along(w.g1, u, du, order + 3), _along(w.g2, v, dv, order + 3),
                                  _along(w.w1, u, du, order + 3), _along(w.w2, v, dv, order + 3))
    if g1.order < order:
        raise InsufficientOrderError(f"area density jet resolved only to order {g1.order}")
    g1, g2, w1, w2 = (j.truncate(order) for j in (g1, g2, w1, w2))
    one_minus = 1.0 - g1 * g2
    s = g1 + g2
    big = jet_compose("sqrt", one_minus * one_minus + 2.0 * s * s) * -0.5
    return big * one_minus * w1 * w2


def lambda_gradient(w: WData, u: float, v: float) -> tuple[float, float]:
    lu = lambda_jet(w, u, v, 1.0, 0.0, 1).coeffs[1]
    lv = lambda_jet(w, u, v, 0.0, 1.0, 1).coeffs[1]
    return lu, lv


def lambda_hessian(w: WData, u: float, v: float) -> np.ndarray:
    """Hessian of the area density; the mixed term comes from the diagonal direction."""
    luu = 2.0 * lambda_jet(w, u, v, 1.0, 0.0).coeffs[2]
    lvv = 2.0 * lambda_jet(w, u, v, 0.0, 1.0).coeffs[2]
    ldd = 2.0 * lambda_jet(w, u, v, 1.0, 1.0).coeffs[2]
    luv = 0.5 * (ldd - luu - lvv)
    return np.array([[luu, luv], [luv, lvv]])


def normal_derivatives(g1: float, g2: float, g1u: float, g2v: float):
    """``n_u`` and ``n_v`` of the Euclidean unit normal by the chain rule."""
    N = np.array([g1 + g2, g2 - g1, 1.0 + g1 * g2])
    m = math.sqrt((1.0 - g1 * g2) ** 2 + 2.0 * (g1 + g2) ** 2)
    dm1 = (-g2 * (1.0 - g1 * g2) + 2.0 * (g1 + g2)) / m
    dm2 = (-g1 * (1.0 - g1 * g2) + 2.0 * (g1 + g2)) / m
    dN1 = np.array([1.0, -1.0, g2])
    dN2 = np.array([1.0, 1.0, g1])
    nu = g1u * (dN1 / m - N * dm1 / m ** 2)
    nv = g2v * (dN2 / m - N * dm2 / m ** 2)
    return nu, nv


def g_eta(g1: float, g2: float, w1: float, w2: float) -> tuple[float, float]:
    """Null direction at a g-singular point."""
    return 1.0 / (g1 * w1), 1.0 / (g2 * w2)


def g_gamma_prime(g1: float, g2: float, g1u: float, g2v: float) -> tuple[float, float]:
    """Singular direction along ``g1 g2 = 1``."""
    return g2v / g2, -g1u / g1


# --- omega lines ----------------------------------------------------------

def _g_finite(gexpr, x: float) -> bool:
    try:
        val = eval_jet(gexpr, x, 3).value
    except JetError:
        return False
    return abs(val) <= G_MAX


def _polish(wexpr, x: float, lo: float, hi: float, tangential: bool) -> float:
    # Newton on w (simple root) or on w' (tangential root), kept in the bracket
    for _ in range(50):
        j = eval_jet(wexpr, x, 2)
        if tangential:
            f, df = j.derivative(1), j.derivative(2)
        else:
            f, df = j.value, j.derivative(1)
        if df == 0.0:
            break
        step = f / df
        xn = x - step
        if not lo <= xn <= hi:
            break
        x = xn
        if abs(step) <= 1e-16 * max(1.0, abs(x)):
            break
    return x


def _roots_1d(wexpr, gexpr, lo: float, hi: float, n: int, excluded: list, axis: str) -> list:
    xs = np.linspace(lo, hi, n)
    ys = eval_array(wexpr, xs)
    scale = float(np.nanmax(np.abs(ys))) if np.any(np.isfinite(ys)) else 1.0
    found: list[Root] = []

    def add(x: float, tangential: bool, low: bool):
        x = min(max(x, lo), hi)
        if any(abs(x - r.value) <= MERGE_TOL for r in found):
            return
        if any(abs(x - e[1]) <= MERGE_TOL and e[0] == axis for e in excluded):
            return
        try:
            val = eval_jet(wexpr, x, 0).value
        except JetError:
            return
        if abs(val) > ROOT_TOL * max(1.0, scale):
            return
        if not _g_finite(gexpr, x):
            excluded.append((axis, x, "g not finite"))
            return
        found.append(Root(x, tangential, low))

    for i in range(n):
        y = ys[i]
        if y == 0.0:
            j = eval_jet(wexpr, xs[i], 2) if math.isfinite(y) else None
            tang = j is not None and is_zero(j.derivative(1), scale, 1e-8)
            add(_polish(wexpr, xs[i], lo, hi, tang), tang, tang)
    for i in range(n - 1):
        a, b = ys[i], ys[i + 1]
        if not (math.isfinite(a) and math.isfinite(b)) or a == 0.0 or b == 0.0:
            continue
        if a * b < 0:
            def fn(x):
                return float(eval_array(wexpr, np.array([x]))[0])
            x = brentq(fn, xs[i], xs[i + 1], xtol=1e-15, rtol=1e-15)
            add(_polish(wexpr, x, xs[i], xs[i + 1], False), False, False)
    # tangential zeros: small local minima of |w| without a sign change
    ay = np.abs(ys)
    small = 1e-3 * scale
    for i in range(1, n - 1):
        if not (ay[i] <= ay[i - 1] and ay[i] <= ay[i + 1] and ay[i] < small and ys[i] != 0.0):
            continue
        if ys[i - 1] * ys[i + 1] < 0:
            continue

        def absw(x):
            return float(abs(eval_array(wexpr, np.array([x]))[0]))
        res = minimize_scalar(absw, bounds=(xs[i - 1], xs[i + 1]), method="bounded",
                              options={"xatol": 1e-12})
        x = _polish(wexpr, float(res.x), xs[i - 1], xs[i + 1], True)
        add(x, True, True)
    return sorted(found, key=lambda r: r.value)


def find_w_zero_lines(w: WData, interval_u, interval_v, scan: int = 2048) -> WZeroLines:
    """Zeros of ``w1`` in ``u`` and of ``w2`` in ``v`` where ``g`` stays finite."""
    excluded: list = []
    ur = _roots_1d(w.w1, w.g1, float(interval_u[0]), float(interval_u[1]), scan, excluded, "u")
    vr = _roots_1d(w.w2, w.g2, float(interval_v[0]), float(interval_v[1]), scan, excluded, "v")
    return WZeroLines(ur, vr, excluded)


# --- g-curve tracing ------------------------------------------------------

class _GFunc:
    def __init__(self, w: WData):
        self.g1, self.g2 = w.g1, w.g2
        self.d1, self.d2 = differentiate(w.g1), differentiate(w.g2)

        self._fns = [compile_array(e) for e in (self.g1, self.g2, self.d1, self.d2)]

    def eval(self, u: float, v: float):
        f1, f2, fd1, fd2 = self._fns
        a, b = np.float64(u), np.float64(v)
        with np.errstate(all="ignore"):
            g1, g2 = float(f1(a)), float(f2(b))
            d1, d2 = float(fd1(a)), float(fd2(b))
        return g1 * g2 - 1.0, d1 * g2, g1 * d2

    def grid(self, us, vs):
        g1 = eval_array(self.g1, us)
        g2 = eval_array(self.g2, vs)
        with np.errstate(all="ignore"):
            return g1[:, None] * g2[None, :] - 1.0


def _correct(gf: _GFunc, u: float, v: float, tol: float = 1e-13):
    for _ in range(30):
        G, Gu, Gv = gf.eval(u, v)
        if not math.isfinite(G):
            return None
        if abs(G) <= tol:
            return u, v
        n2 = Gu * Gu + Gv * Gv
        if n2 == 0.0 or not math.isfinite(n2):
            return None
        u -= G * Gu / n2
        v -= G * Gv / n2
    G, _, _ = gf.eval(u, v)
    return (u, v) if abs(G) <= STRUCT_TOL else None


def _inside(p, box) -> bool:
    return box[0] <= p[0] <= box[1] and box[2] <= p[1] <= box[3]


def _land_on_boundary(gf: _GFunc, p, q, box):
    """Intersect the curve with the box edge crossed by the step ``p -> q``."""
    (u0, v0), (u1, v1) = p, q
    t_hit, edge = 1.0, None
    for idx, (lo, hi) in enumerate(((box[0], box[1]), (box[2], box[3]))):
        a, b = (u0, u1) if idx == 0 else (v0, v1)
        for bound in (lo, hi):
            if (b - bound) * (a - bound) < 0 or b == bound:
                t = (bound - a) / (b - a)
                if t < t_hit:
                    t_hit, edge = t, (idx, bound)
    if edge is None:
        return None
    idx, bound = edge
    u = u0 + t_hit * (u1 - u0)
    v = v0 + t_hit * (v1 - v0)
    for _ in range(40):
        G, Gu, Gv = gf.eval(u, v)
        if not math.isfinite(G):
            return None
        d = Gv if idx == 0 else Gu
        if d == 0.0:
            return None
        if idx == 0:
            u, v = bound, v - G / d
        else:
            u, v = u - G / d, bound
        if abs(G) <= 1e-13:
            break
    G, _, _ = gf.eval(u, v)
    if abs(G) > STRUCT_TOL or not _inside((u, v), box):
        return None
    return (u, v)


def _march(gf: _GFunc, seed, direction: float, step: float, max_steps: int, box):
    pts = []
    p = seed
    prev_t = None
    reason = "max_steps"
    degenerate = None
    for _ in range(max_steps):
        G, Gu, Gv = gf.eval(*p)
        gn = math.hypot(Gu, Gv)
        scale = max(1.0, abs(Gu), abs(Gv))
        if not math.isfinite(gn) or gn < 1e-8 * scale:
            reason, degenerate = "gradient_collapse", p
            break
        t = np.array([-Gv, Gu]) / gn
        if prev_t is None:
            t = t * direction
        elif t @ prev_t < 0:
            t = -t
        h = step
        nxt = None
        while h >= step * 1e-3:
            q = (p[0] + h * t[0], p[1] + h * t[1])
            if not _inside(q, box):
                landed = _land_on_boundary(gf, p, q, box)
                if landed is not None:
                    pts.append(landed)
                reason = "boundary"
                return pts, reason, degenerate
            c = _correct(gf, *q)
            if c is not None and math.dist(c, p) <= 2.0 * h:
                nxt = c
                break
            h *= 0.5
        if nxt is None:
            reason = "corrector_failed"
            break
        if len(pts) > 3 and math.dist(nxt, seed) < 0.75 * step:
            reason = "closed"
            break
        pts.append(nxt)
        prev_t = np.array([nxt[0] - p[0], nxt[1] - p[1]])
        prev_t /= np.linalg.norm(prev_t)
        p = nxt
    return pts, reason, degenerate


def trace_g_curve(w: WData, seed, step: float, max_steps: int = 2000, box=None) -> GCurve:
    """Polyline on ``g1 g2 = 1`` through ``seed`` (both directions)."""
    gf = _GFunc(w)
    G, Gu, Gv = gf.eval(*seed)
    if not abs(G) <= STRUCT_TOL:
        raise ValueError(f"seed {seed} is not on g1 g2 = 1 (residual {G:.3g})")
    if math.hypot(Gu, Gv) < 1e-8 * max(1.0, abs(Gu), abs(Gv)):
        raise ValueError(f"gradient of g1 g2 vanishes at seed {seed}")
    if box is None:
        box = (-math.inf, math.inf, -math.inf, math.inf)
    seed = tuple(float(c) for c in seed)
    fwd, r1, d1 = _march(gf, seed, 1.0, step, max_steps, box)
    if r1 == "closed":
        return GCurve([seed] + fwd + [seed], True, (r1, r1), [])
    bwd, r2, d2 = _march(gf, seed, -1.0, step, max_steps, box)
    pts = list(reversed(bwd)) + [seed] + fwd
    return GCurve(pts, False, (r2, r1), [d for d in (d2, d1) if d is not None])


# --- point analysis -------------------------------------------------------

def analyze_point(w: WData, p, order: int = DEFAULT_ORDER) -> SingularPoint:
    u, v = float(p[0]), float(p[1])
    j = point_jets(w, u, v, order)
    return analyze_jets(w, (u, v), j)


def analyze_jets(w: WData, uv, j: PointJets) -> SingularPoint:
    u, v = uv
    g1, g2, w1, w2 = j.g1.value, j.g2.value, j.w1.value, j.w2.value
    if not (abs(g1) <= G_MAX and abs(g2) <= G_MAX):
        raise FinitenessError(f"g is not finite at {uv}")
    g1u, g2v = j.g1.derivative(1), j.g2.derivative(1)
    w1u, w2v = j.w1.derivative(1), j.w2.derivative(1)
    G = g1 * g2 - 1.0
    m = {"g1": g1, "g2": g2, "g1g2_minus_1": G, "w1": w1, "w2": w2,
         "g1_u": g1u, "g2_v": g2v, "w1_u": w1u, "w2_v": w2v}
    kinds = set()
    if is_zero(G, abs(g1 * g2)):
        kinds.add("G")
    if is_zero(w1):
        kinds.add("W1")
    if is_zero(w2):
        kinds.add("W2")
    if not kinds:
        raise NotSingularError(f"({u}, {v}) is not singular: g1 g2 - 1 = {G:.3g}, "
                               f"w1 = {w1:.3g}, w2 = {w2:.3g}")
    flags = []
    if {"W1", "W2"} <= kinds:
        rank = 0
        front = (not is_zero(G, abs(g1 * g2))) and not is_zero(g1u * g2v, max(abs(g1u), abs(g2v)))
        degenerate = True
        m["front_margin"] = min(abs(G), abs(g1u * g2v))
    elif "W1" in kinds or "W2" in kinds:
        rank = 1
        if "W2" in kinds:
            gd, wd = g2v, w2v
        else:
            gd, wd = g1u, w1u
        front = not is_zero(gd)
        degenerate = is_zero(wd) or "G" in kinds
        m["front_margin"] = abs(gd)
        m["nondegeneracy_margin"] = min(abs(wd), abs(G))
        if is_zero(wd):
            flags.append("tangential_w_zero")
    else:
        rank = 1
        lu, lv = lambda_gradient(w, u, v)
        m["lambda_u"], m["lambda_v"] = lu, lv
        lam_scale = abs(-0.5 * math.sqrt(2.0 * (g1 + g2) ** 2) * w1 * w2)
        degenerate = is_zero(math.hypot(lu, lv), lam_scale)
        m["nondegeneracy_margin"] = math.hypot(lu, lv)
        nu, nv = normal_derivatives(g1, g2, g1u, g2v)
        eu, ev = g_eta(g1, g2, w1, w2)
        dn_eta = nu * eu + nv * ev
        m["dn_eta"] = float(np.linalg.norm(dn_eta))
        front = not is_zero(m["dn_eta"], max(np.linalg.norm(nu) * abs(eu), np.linalg.norm(nv) * abs(ev)))
        m["front_margin"] = m["dn_eta"]
    return SingularPoint((u, v), frozenset(kinds), rank, bool(front), bool(degenerate), m, flags)


def singular_curve_samples(w: WData, curve: GCurve) -> list[SingularCurveSample]:
    out = []
    for i, (u, v) in enumerate(curve.points):
        j = point_jets(w, u, v, 2)
        g1, g2 = j.g1.value, j.g2.value
        gp = g_gamma_prime(g1, g2, j.g1.derivative(1), j.g2.derivative(1))
        eta = g_eta(g1, g2, j.w1.value, j.w2.value)
        out.append(SingularCurveSample(float(i), (u, v), gp, eta))
    return out


# --- scan -----------------------------------------------------------------

@dataclass
class ScanResult:
    points: list
    curves: list
    lines: WZeroLines
    skipped: list = field(default_factory=list)


def _vphi_arrays(w: WData):
    """Vectorised (sum, diff, D, D_plus, scale) of the G-point quantities."""
    d1, d2 = differentiate(w.g1), differentiate(w.g2)
    vp1 = Div(d1, Mul(Pow(w.g1, 2), w.w1))
    vp2 = Div(d2, Mul(Pow(w.g2, 2), w.w2))
    ph1 = Mul(Div(w.g1, d1), differentiate(vp1))
    ph2 = Mul(Div(w.g2, d2), differentiate(vp2))

    def fn(pts, which=None):
        pts = np.asarray(pts, float)
        u, v = pts[:, 0], pts[:, 1]
        with np.errstate(all="ignore"):
            if which is not None and which < 2:
                a, b = eval_array(vp1, u), eval_array(vp2, v)
                return a + b if which == 0 else a - b
            if which is not None:
                p1, p2 = eval_array(ph1, u), eval_array(ph2, v)
                return p1 - p2 if which == 2 else p1 + p2
            a, b = eval_array(vp1, u), eval_array(vp2, v)
            p1, p2 = eval_array(ph1, u), eval_array(ph2, v)
        return a + b, a - b, p1 - p2, p1 + p2, np.abs(a) + np.abs(b)
    return fn


def _refine_on_curve(gf: _GFunc, fn, which: int, p, q):
    """Root of fn along the segment p-q, each trial point projected onto G = 0."""
    def at(s):
        x = (p[0] + s * (q[0] - p[0]), p[1] + s * (q[1] - p[1]))
        c = _correct(gf, *x)
        if c is None:
            raise _OffCurve
        return c, fn([c], which)[0]
    try:
        (_, fl), (_, fh) = at(0.0), at(1.0)
        if not (fl * fh < 0):
            return None
        s = brentq(lambda t: at(t)[1], 0.0, 1.0, xtol=1e-15, rtol=1e-15)
        return at(s)[0]
    except (_OffCurve, ValueError):
        return None


class _OffCurve(Exception):
    pass


def _g_on_line(w: WData, gf: _GFunc, axis: str, x: float, lo: float, hi: float, n: int):
    """Points on the coordinate line where g1 g2 = 1."""
    ts = np.linspace(lo, hi, n)
    if axis == "u":
        vals = gf.grid(np.array([x]), ts)[0]
    else:
        vals = gf.grid(ts, np.array([x]))[:, 0]
    out = []

    def G(t):
        return gf.eval(x, t)[0] if axis == "u" else gf.eval(t, x)[0]
    for i in range(n - 1):
        a, b = vals[i], vals[i + 1]
        if not (np.isfinite(a) and np.isfinite(b)):
            continue
        if a == 0.0:
            t = ts[i]
        elif a * b < 0:
            t = brentq(G, ts[i], ts[i + 1], xtol=1e-15, rtol=1e-15)
        else:
            continue
        if abs(G(t)) <= STRUCT_TOL:
            out.append((x, t) if axis == "u" else (t, x))
    if np.isfinite(vals[-1]) and vals[-1] == 0.0:
        out.append((x, ts[-1]) if axis == "u" else (ts[-1], x))
    return out


def singular_scan(w: WData, domain, grid=(128, 128), line_samples: int = 33,
                  curve_samples: int = 64, root_scan: int = 2048) -> ScanResult:
    """Locate singular points: omega lines, traced g-curves, special points, intersections."""
    (ulo, uhi), (vlo, vhi) = domain
    nu, nv = grid
    if nu < 2 or nv < 2:
        raise ValueError("grid must be at least 2 x 2")
    box = (ulo, uhi, vlo, vhi)
    lines = find_w_zero_lines(w, (ulo, uhi), (vlo, vhi), root_scan)
    candidates: list[tuple] = []

    # omega lines, sampled along their length
    for r in lines.u_roots:
        candidates += [(r.value, t) for t in np.linspace(vlo, vhi, line_samples)]
    for r in lines.v_roots:
        candidates += [(t, r.value) for t in np.linspace(ulo, uhi, line_samples)]
    for ru in lines.u_roots:
        for rv in lines.v_roots:
            candidates.append((ru.value, rv.value))

    # g-curves from sign changes of G on grid edges
    gf = _GFunc(w)
    us = np.linspace(ulo, uhi, nu)
    vs = np.linspace(vlo, vhi, nv)
    Gg = gf.grid(us, vs)
    step = 0.5 * min((uhi - ulo) / (nu - 1), (vhi - vlo) / (nv - 1))
    seeds = []
    with np.errstate(invalid="ignore"):
        fin = np.isfinite(Gg)
        su = fin[:-1, :] & fin[1:, :] & (Gg[:-1, :] * Gg[1:, :] <= 0)
        sv = fin[:, :-1] & fin[:, 1:] & (Gg[:, :-1] * Gg[:, 1:] <= 0)
    for i, jj in zip(*np.nonzero(su)):
        seeds.append(((us[i], vs[jj]), (us[i + 1], vs[jj])))
    for i, jj in zip(*np.nonzero(sv)):
        seeds.append(((us[i], vs[jj]), (us[i], vs[jj + 1])))
    curves: list[GCurve] = []
    covered = np.zeros((nu, nv), dtype=bool)
    cell_u = (uhi - ulo) / (nu - 1)
    cell_v = (vhi - vlo) / (nv - 1)

    def mark(poly):
        for (a, b) in poly:
            i = int(round((a - ulo) / cell_u))
            jj = int(round((b - vlo) / cell_v))
            covered[max(i - 1, 0):i + 2, max(jj - 1, 0):jj + 2] = True

    for (a, b) in seeds:
        ia = int(round((a[0] - ulo) / cell_u))
        ja = int(round((a[1] - vlo) / cell_v))
        if covered[ia, ja]:
            continue
        if a[0] == b[0]:
            fn1 = lambda t: gf.eval(a[0], t)[0]
            lo, hi = a[1], b[1]
        else:
            fn1 = lambda t: gf.eval(t, a[1])[0]
            lo, hi = a[0], b[0]
        f_lo, f_hi = fn1(lo), fn1(hi)
        if f_lo == 0.0:
            t = lo
        elif f_hi == 0.0:
            t = hi
        else:
            t = brentq(fn1, lo, hi, xtol=1e-15, rtol=1e-15)
        s = (a[0], t) if a[0] == b[0] else (t, a[1])
        c = _correct(gf, *s)
        if c is None or not _inside(c, box):
            continue  # sign change through a pole of g
        try:
            curve = trace_g_curve(w, c, step, max_steps=20 * (nu + nv), box=box)
        except ValueError:
            continue
        curves.append(curve)
        mark(curve.points)

    vphi = _vphi_arrays(w)
    for curve in curves:
        pts = curve.points
        k = max(1, int(math.ceil(len(pts) / curve_samples)))
        candidates += pts[::k]
        candidates += [tuple(d) for d in curve.degenerate_ends]
        if len(pts) >= 2:
            vals = vphi(pts)
            for which in range(4):
                arr = vals[which]
                for i in range(len(pts) - 1):
                    if np.isfinite(arr[i]) and np.isfinite(arr[i + 1]) and arr[i] * arr[i + 1] < 0:
                        if which >= 2 and not (min(abs(vals[which - 2][i]), abs(vals[which - 2][i + 1]))
                                               <= TOUCH_SCREEN * vals[4][i]):
                            continue
                        sp = _refine_on_curve(gf, vphi, which, pts[i], pts[i + 1])
                        if sp is None:
                            continue
                        if which >= 2:
                            # sum (diff) is stationary along the curve where D (D_plus)
                            # vanishes; keep the point only if it touches zero there
                            at = vphi([sp])
                            if not abs(at[which - 2][0]) <= TOUCH_TOL * at[4][0]:
                                continue
                        candidates.append(sp)

    # g-curves crossing omega lines
    for r in lines.u_roots:
        candidates += _g_on_line(w, gf, "u", r.value, vlo, vhi, max(nv, 64))
    for r in lines.v_roots:
        candidates += _g_on_line(w, gf, "v", r.value, ulo, uhi, max(nu, 64))

    # dedupe; intersections and special points were appended after plain samples,
    # so prefer later entries when merging
    unique: list[tuple] = []
    for c in reversed(candidates):
        c = (float(c[0]), float(c[1]))
        if not _inside(c, box):
            continue
        if any(abs(c[0] - q[0]) <= MERGE_TOL and abs(c[1] - q[1]) <= MERGE_TOL for q in unique):
            continue
        unique.append(c)
    unique.reverse()
    points = []
    skipped = []
    for c in unique:
        try:
            points.append(analyze_point(w, c))
        except (FinitenessError, NotSingularError, JetError) as exc:
            skipped.append((c, str(exc)))
    return ScanResult(points, curves, lines, skipped)


# --- export ---------------------------------------------------------------

def write_points_csv(path, points: list) -> None:
    keys = sorted({k for p in points for k in p.margins})
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["u", "v", "kinds", "rank", "front", "degenerate"] + keys)
        for p in points:
            wr.writerow([repr(p.uv[0]), repr(p.uv[1]), "+".join(sorted(p.kinds)), p.rank,
                         int(p.is_front), int(p.is_degenerate)]
                        + [repr(p.margins.get(k, "")) if k in p.margins else "" for k in keys])


def write_curves_csv(path, scan: ScanResult, domain) -> None:
    """Polylines as rows ``curve_id, kind, index, u, v``."""
    (ulo, uhi), (vlo, vhi) = domain
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["curve", "kind", "index", "u", "v"])
        cid = 0
        for c in scan.curves:
            for i, (u, v) in enumerate(c.points):
                wr.writerow([cid, "g", i, repr(u), repr(v)])
            cid += 1
        for r in scan.lines.u_roots:
            wr.writerow([cid, "w1", 0, repr(r.value), repr(vlo)])
            wr.writerow([cid, "w1", 1, repr(r.value), repr(vhi)])
            cid += 1
        for r in scan.lines.v_roots:
            wr.writerow([cid, "w2", 0, repr(ulo), repr(r.value)])
            wr.writerow([cid, "w2", 1, repr(uhi), repr(r.value)])
            cid += 1
