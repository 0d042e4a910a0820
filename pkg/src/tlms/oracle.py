"""Intrinsic front-theory criteria, evaluated from the surface itself.

This path never looks at the W-data shortcut quantities.  It works with the
singular curve (a Taylor solution of its defining ODE), the null vector
field, the unit normal and iterated directional derivatives of ``f``, then
applies the generic criteria for fronts and frontals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .classify import Classification, CriterionTrace, Verdict, decide
from .expr import differentiate, eval_jet, eval_on
from .jets import Jet, JetError, common_order, jet_compose
from .singular import SingularPoint, analyze_point, lambda_gradient, lambda_hessian
from .surface import WData

ORDER = 6


# --- vector jets ----------------------------------------------------------

def _const(x: float, order: int) -> Jet:
    return Jet(0.0, [x] + [0.0] * order)


def _vscale(vec, s):
    return tuple(c * s for c in vec)


def _vadd(a, b):
    return tuple(x + y for x, y in zip(a, b))


def _vat(vec) -> np.ndarray:
    return np.array([c.value for c in vec])


def _det_jet(a, b, c) -> Jet:
    return (a[0] * (b[1] * c[2] - b[2] * c[1])
            - a[1] * (b[0] * c[2] - b[2] * c[0])
            + a[2] * (b[0] * c[1] - b[1] * c[0]))


def _coeff_norms(vec) -> list[float]:
    n = min(c.order for c in vec) + 1
    return [math.sqrt(sum(c.coeffs[k] ** 2 for c in vec)) for k in range(n)]


def _triple_scale(a, b, c, k: int) -> float:
    """Upper bound for the k-th derivative of det(a, b, c) from coefficient norms."""
    na, nb, nc = _coeff_norms(a), _coeff_norms(b), _coeff_norms(c)
    s = 0.0
    for i in range(k + 1):
        for j in range(k + 1 - i):
            s += na[i] * nb[j] * nc[k - i - j]
    return math.factorial(k) * s


def _c1(g):
    return (-1.0 - g * g, 1.0 - g * g, 2.0 * g)


def _c2(g):
    return (1.0 + g * g, 1.0 - g * g, -2.0 * g)


def _sqrt(x):
    return jet_compose("sqrt", x) if isinstance(x, Jet) else math.sqrt(x)


def normal_and_derivatives(g1, g2, g1u, g2v):
    """Unit normal and its partials, written out in closed form.

    Works on floats or on jets sharing one order.
    """
    m2 = (1.0 - g1 * g2) * (1.0 - g1 * g2) + 2.0 * (g1 + g2) * (g1 + g2)
    m = _sqrt(m2)
    m3 = m * m2
    n = ((g1 + g2) / m, (g2 - g1) / m, (1.0 + g1 * g2) / m)
    nu = (g1u * (1.0 + g2 * g2) * (1.0 - g1 * g2) / m3,
          g1u * (-1.0 - 3.0 * g1 * g2 - 3.0 * g2 * g2 - g1 * g2 * g2 * g2) / m3,
          g1u * 2.0 * (g2 * g2 * g2 - g1) / m3)
    nv = (g2v * (1.0 + g1 * g1) * (1.0 - g1 * g2) / m3,
          g2v * (1.0 + 3.0 * g1 * g2 + 3.0 * g1 * g1 + g1 * g1 * g1 * g2) / m3,
          g2v * 2.0 * (g1 * g1 * g1 - g2) / m3)
    return n, nu, nv


# --- singular curve and delta / psi ---------------------------------------

@dataclass
class CurveJets:
    U: Jet
    V: Jet
    Up: Jet
    Vp: Jet
    speed: float = 1.0  # constant factor on the velocity field


def curve_jets(w: WData, sp: SingularPoint, order: int = ORDER) -> CurveJets:
    """Taylor expansion of the singular curve through ``sp``.

    On g-curves the parameter is scaled to at most unit speed at ``sp``;
    near a pole of g the raw field is fast and its Taylor coefficients
    grow too quickly for relative zero tests.
    """
    u0, v0 = sp.uv
    if sp.kinds == frozenset({"G"}):
        d1, d2 = differentiate(w.g1), differentiate(w.g2)
        j1, j2 = eval_jet(w.g1, u0, 3), eval_jet(w.g2, v0, 3)
        h = 1.0 / max(1.0, math.hypot(j2.derivative(1) / j2.value, j1.derivative(1) / j1.value))
        U, V = _const(u0, order), _const(v0, order)
        for _ in range(order + 2):
            Up = eval_on(d2, V) / eval_on(w.g2, V) * h
            Vp = -(eval_on(d1, U) / eval_on(w.g1, U)) * h
            U = Up.integrate(u0).truncate(order)
            V = Vp.integrate(v0).truncate(order)
        Up = eval_on(d2, V) / eval_on(w.g2, V) * h
        Vp = -(eval_on(d1, U) / eval_on(w.g1, U)) * h
        return CurveJets(U, V, Up, Vp, h)
    t = Jet(0.0, [0.0, 1.0] + [0.0] * (order - 1))
    if "W2" in sp.kinds:
        return CurveJets(t + u0, _const(v0, order), _const(1.0, order), _const(0.0, order))
    return CurveJets(_const(u0, order), t + v0, _const(0.0, order), _const(1.0, order))


@dataclass
class DeltaPsi:
    delta: Jet
    psi: Jet
    delta_closed: Jet | None
    psi_closed: Jet | None
    delta_scales: list
    psi_scales: list
    dn_eta: np.ndarray
    dn_eta_scale: float
    df_gamma: np.ndarray
    agreement: float


def delta_psi_jets(w: WData, sp: SingularPoint, order: int = ORDER) -> DeltaPsi:
    if sp.is_degenerate or sp.rank != 1:
        raise ValueError("delta/psi are defined at non-degenerate rank-one points")
    c = curve_jets(w, sp, order)
    d1, d2 = differentiate(w.g1), differentiate(w.g2)
    G1, G2 = eval_on(w.g1, c.U), eval_on(w.g2, c.V)
    G1u, G2v = eval_on(d1, c.U), eval_on(d2, c.V)
    W1, W2 = eval_on(w.w1, c.U), eval_on(w.w2, c.V)
    G1, G2, G1u, G2v, W1, W2, Up, Vp = common_order(G1, G2, G1u, G2v, W1, W2, c.Up, c.Vp)
    k = G1.order
    if sp.kinds == frozenset({"G"}):
        Eu, Ev = 1.0 / (G1 * W1), 1.0 / (G2 * W2)
    elif "W2" in sp.kinds:
        Eu, Ev = _const(0.0, k), _const(1.0, k)
    else:
        Eu, Ev = _const(1.0, k), _const(0.0, k)
    t1, t2 = Up * Ev, Vp * Eu
    delta = t1 - t2
    n1, n2 = _coeff_norms((t1,)), _coeff_norms((t2,))
    delta_scales = [math.factorial(i) * (n1[i] + n2[i]) for i in range(len(n1))]
    fu = _vscale(_c1(G1), W1 * 0.5)
    fv = _vscale(_c2(G2), W2 * 0.5)
    n, nu, nv = normal_and_derivatives(G1, G2, G1u, G2v)
    dfg = _vadd(_vscale(fu, Up), _vscale(fv, Vp))
    dne = _vadd(_vscale(nu, Eu), _vscale(nv, Ev))
    psi = _det_jet(dfg, n, dne)
    psi_scales = [_triple_scale(dfg, n, dne, i) for i in range(psi.order + 1)]
    dn_scale = float(np.linalg.norm(_vat(nu)) * abs(Eu.value) + np.linalg.norm(_vat(nv)) * abs(Ev.value))
    delta_closed = psi_closed = None
    agreement = 0.0
    if sp.kinds == frozenset({"G"}):
        vp1 = G1u / (G1 * G1 * W1)
        vp2 = G2v / (G2 * G2 * W2)
        # delta and psi are linear in the velocity, hence the speed factor
        delta_closed = (vp1 + vp2) * c.speed
        psi_closed = W1 * W2 * (vp1 + vp2) * (vp1 - vp2) * (-0.5 * c.speed)
        for a, b, sc in ((delta, delta_closed, delta_scales), (psi, psi_closed, psi_scales)):
            for i in range(min(3, a.order + 1)):
                err = abs(a.derivative(i) - b.derivative(i)) / max(1.0, sc[i])
                agreement = max(agreement, err)
    return DeltaPsi(delta, psi, delta_closed, psi_closed, delta_scales, psi_scales,
                    _vat(dne), dn_scale, _vat(dfg), agreement)


# --- S1 constants ---------------------------------------------------------

@dataclass
class S1Constants:
    A: float
    B: float
    hypotheses: dict = field(default_factory=dict)

    @property
    def AB(self) -> float:
        return self.A * self.B


def _eta_powers(gexpr, wexpr, x0: float, c_fn, kmax: int = 5, order: int = 9):
    """Values and first derivatives of P_k = (a d/dx)^(k-1) (a F') at x0, a = 1/(g w)."""
    G = eval_jet(gexpr, x0, order)
    Wj = eval_jet(wexpr, x0, order)
    a = 1.0 / (G * Wj)
    Fp = _vscale(c_fn(G), Wj * 0.5)
    P = tuple(a * comp for comp in Fp)
    vals, ders = [], []
    for _ in range(kmax):
        vals.append(_vat(P))
        ders.append(np.array([comp.derivative(1) for comp in P]))
        dP = tuple(comp.deriv() for comp in P)
        aa = a.truncate(dP[0].order)
        P = tuple(aa * comp for comp in dP)
    return vals, ders


def s1_constants(w: WData, sp: SingularPoint, dp: DeltaPsi | None = None) -> S1Constants:
    """A = psi''(0) and B = 3 det(xi f, eta^2 f, eta^5 f) with det(xi, eta) > 0."""
    if sp.kinds != frozenset({"G"}):
        raise ValueError("S1 constants are defined at pure g-points")
    if dp is None:
        dp = delta_psi_jets(w, sp)
    u0, v0 = sp.uv
    sign = 1.0 if dp.delta.value > 0 else -1.0
    A = sign * dp.psi.derivative(2)
    Pv, Pd = _eta_powers(w.g1, w.w1, u0, _c1)
    Qv, Qd = _eta_powers(w.g2, w.w2, v0, _c2)
    eta = [sign ** (k + 1) * (Pv[k] + Qv[k]) for k in range(5)]
    xi_f = dp.df_gamma
    c = curve_jets(w, sp, 2)
    xi_eta3 = sign ** 3 * (c.Up.value * Pd[2] + c.Vp.value * Qd[2])
    B = 3.0 * float(np.linalg.det(np.array([xi_f, eta[1], eta[4]])))
    n2 = np.linalg.norm(eta[1])
    hyp = {
        "eta3_residual": float(np.linalg.norm(eta[2]) / max(1.0, n2)),
        "xi_eta2_independence": float(np.linalg.norm(np.cross(xi_f, eta[1]))),
        "xi_eta3_parallel_residual": float(np.linalg.norm(np.cross(xi_eta3, eta[1]))
                                           / max(1.0, n2 * np.linalg.norm(xi_eta3))),
    }
    return S1Constants(A, B, hyp)


# --- (2,5)-cuspidal edge --------------------------------------------------

@dataclass
class HKSResult:
    a: float
    b: float
    C: float
    determinant: float
    closed_form: float
    parallel_residual: float
    scale: float


def hks_25_check(w: WData, sp: SingularPoint, order: int = 9) -> HKSResult:
    """Evaluate det(xi f, e^2 f, 3 e^5 f - 10 C e^4 f) with the special null field e."""
    if sp.rank != 1 or len(sp.kinds) != 1 or "G" in sp.kinds:
        raise ValueError("the (2,5) check applies to one-sided rank-one w-points")
    u0, v0 = sp.uv
    J = {name: eval_jet(e, x, order) for name, e, x in
         (("g1", w.g1, u0), ("g2", w.g2, v0), ("w1", w.w1, u0), ("w2", w.w2, v0))}
    fu = _vscale(_c1(J["g1"]), J["w1"] * 0.5)
    fv = _vscale(_c2(J["g2"]), J["w2"] * 0.5)
    if "W2" in sp.kinds:
        Fx, Fy = fu, fv          # x: along the singular curve, y: null direction
        gy, wy, gx, wx = J["g2"], J["w2"], J["g1"], J["w1"]
    else:
        Fx, Fy = fv, fu
        gy, wy, gx, wx = J["g1"], J["w1"], J["g2"], J["w2"]

    def d(vec, k):
        return np.array([c.derivative(k) for c in vec])

    xf = d(Fx, 0)
    a = -float(xf @ d(Fy, 1)) / float(xf @ xf)
    b = -float(xf @ d(Fy, 2)) / (2.0 * float(xf @ xf))
    alpha = Jet(0.0, [0.0, a, b] + [0.0] * (order - 2))
    # e^k f = sum_j coef[j](s) d_x^j f + d_y^k f, s = y - y0
    coef = {1: alpha}
    values = {}
    for k in range(1, 6):
        vec = d(Fy, k - 1)
        for j, cj in coef.items():
            vec = vec + cj.value * d(Fx, j - 1)
        values[k] = vec
        new: dict[int, Jet] = {}
        for j, cj in coef.items():
            dj = cj.deriv()
            al = alpha.truncate(dj.order)
            cj_t = cj.truncate(dj.order)
            new[j + 1] = new[j + 1] + al * cj_t if j + 1 in new else al * cj_t
            new[j] = new[j] + dj if j in new else dj
        coef = new
    e2, e3, e4, e5 = values[2], values[3], values[4], values[5]
    C = float(e3 @ e2) / float(e2 @ e2)
    resid = float(np.linalg.norm(e3 - C * e2)) / max(1.0, float(np.linalg.norm(e2)))
    last = 3.0 * e5 - 10.0 * C * e4
    det = float(np.linalg.det(np.array([xf, e2, last])))
    scale = float(np.linalg.norm(xf) * np.linalg.norm(e2)
                  * (3.0 * np.linalg.norm(e5) + 10.0 * abs(C) * np.linalg.norm(e4)))
    num, den = common_order(gy.deriv().deriv(), wy.deriv())
    q = (num / den).derivative(1)
    closed = 6.0 * wx.value * wy.derivative(1) ** 3 * (1.0 - gx.value * gy.value) ** 2 * q
    return HKSResult(a, b, C, det, closed, resid, scale)


# --- Hessian of lambda ----------------------------------------------------

@dataclass
class HessianResult:
    hessian: np.ndarray
    hess_det: float
    eta_eta_lambda: float | None
    gradient: tuple


def hessian_check(w: WData, sp: SingularPoint) -> HessianResult:
    u, v = sp.uv
    H = lambda_hessian(w, u, v)
    det = float(np.linalg.det(H)) if np.all(np.isfinite(H)) else math.nan
    # at rank-one points the kernel of df is the coordinate direction whose omega vanishes
    ee = None
    if sp.rank == 1 and "W2" in sp.kinds:
        ee = float(H[1, 1])
    elif sp.rank == 1 and "W1" in sp.kinds:
        ee = float(H[0, 0])
    return HessianResult(H, det, ee, lambda_gradient(w, u, v))


# --- verdicts -------------------------------------------------------------

def _unc(tr, reason):
    return Classification(Verdict.Unclassified, tr, None, [reason])


def _border(tr):
    return _unc(tr, "borderline: " + ", ".join(tr.borderline))


def _front_at_w_point(sp: SingularPoint, tr: CriterionTrace) -> bool | None:
    m = sp.margins
    _, nu, nv = normal_and_derivatives(m["g1"], m["g2"], m["g1_u"], m["g2_v"])
    vec = np.array(nv if "W2" in sp.kinds else nu)
    return decide(tr, "oracle_dn_kernel", float(np.linalg.norm(vec)))


def _g_point_verdict(w: WData, sp: SingularPoint, tr: CriterionTrace) -> Classification:
    dp = delta_psi_jets(w, sp)
    tr.values["oracle_closed_form_agreement"] = dp.agreement
    front = decide(tr, "oracle_dn_eta", float(np.linalg.norm(dp.dn_eta)), dp.dn_eta_scale)
    if front is None:
        return _border(tr)
    ds = dp.delta_scales
    d0 = decide(tr, "oracle_delta", dp.delta.value, ds[0])
    if d0 is None:
        return _border(tr)
    if front:
        if d0:
            return Classification(Verdict.CuspidalEdge, tr)
        d1 = decide(tr, "oracle_delta1", dp.delta.derivative(1), ds[1])
        if d1 is None:
            return _border(tr)
        if d1:
            return Classification(Verdict.Swallowtail, tr)
        d2 = decide(tr, "oracle_delta2", dp.delta.derivative(2), ds[2])
        if d2 is None:
            return _border(tr)
        if d2:
            return Classification(Verdict.CuspidalButterfly, tr)
        return _unc(tr, "delta vanishes to second order")
    if not d0:
        return _unc(tr, "non-front with delta(0) = 0")
    ps = dp.psi_scales
    p0 = decide(tr, "oracle_psi", dp.psi.value, ps[0])
    if p0 is None or p0:
        return _unc(tr, "non-front with psi(0) != 0")
    p1 = decide(tr, "oracle_psi1", dp.psi.derivative(1), ps[1])
    if p1 is None:
        return _border(tr)
    if p1:
        return Classification(Verdict.CuspidalCrossCap, tr)
    s1 = s1_constants(w, sp, dp)
    tr.values.update(oracle_A=s1.A, oracle_B=s1.B, AB_oracle=s1.AB)
    tr.values.update({f"oracle_{k}": v for k, v in s1.hypotheses.items()})
    a_nz = decide(tr, "oracle_A", s1.A, ps[2])
    if a_nz is None:
        return _border(tr)
    if not a_nz:
        return _unc(tr, "psi vanishes to second order")
    if s1.hypotheses["eta3_residual"] > 1e-6 or s1.hypotheses["xi_eta3_parallel_residual"] > 1e-6:
        return _unc(tr, "S1 determinant hypotheses fail")
    if s1.AB > 0:
        return Classification(Verdict.CuspidalS1Plus, tr)
    return _unc(tr, "AB <= 0 (sign violation)")


def _w_point_verdict(w: WData, sp: SingularPoint, tr: CriterionTrace) -> Classification:
    front = _front_at_w_point(sp, tr)
    if front is None:
        return _border(tr)
    if front:
        dp = delta_psi_jets(w, sp)
        d0 = decide(tr, "oracle_delta", dp.delta.value, 1.0)
        if d0:
            return Classification(Verdict.CuspidalEdge, tr)
        return _unc(tr, "null direction tangent to the singular curve")
    h = hks_25_check(w, sp)
    tr.values.update(oracle_hks_det=h.determinant, oracle_hks_closed=h.closed_form,
                     oracle_hks_C=h.C, oracle_hks_a=h.a, oracle_hks_b=h.b,
                     oracle_hks_parallel=h.parallel_residual)
    nz = decide(tr, "oracle_hks_det", h.determinant, h.scale)
    if nz is None:
        return _border(tr)
    if nz:
        return Classification(Verdict.Cusp25Edge, tr)
    return Classification(Verdict.CandidateHigherCusp, tr, None, ["not (2,5); order not certified"])


def _degenerate_verdict(w: WData, sp: SingularPoint, tr: CriterionTrace) -> Classification:
    h = hessian_check(w, sp)
    luu, luv, lvv = h.hessian[0, 0], h.hessian[0, 1], h.hessian[1, 1]
    hs = max(abs(luu), abs(luv), abs(lvv)) ** 2
    tr.values.update(hess_det_oracle=h.hess_det, hess_scale=hs,
                     oracle_lambda_u=h.gradient[0], oracle_lambda_v=h.gradient[1])
    m = sp.margins
    _, nu, nv = normal_and_derivatives(m["g1"], m["g2"], m["g1_u"], m["g2_v"])
    if sp.rank == 0:
        front = decide(tr, "oracle_nu_cross_nv", float(np.linalg.norm(np.cross(nu, nv))))
        if front is None:
            return _border(tr)
        if not front:
            return _unc(tr, "not a front")
        neg = decide(tr, "oracle_hess_det", h.hess_det, hs)
        if neg is None:
            return _border(tr)
        if neg and h.hess_det < 0:
            return Classification(Verdict.D4Plus, tr)
        return _unc(tr, "Hessian determinant not negative")
    if len(sp.kinds & {"W1", "W2"}) != 1:
        return _unc(tr, "degenerate point without a single vanishing omega")
    front = _front_at_w_point(sp, tr)
    if front is None:
        return _border(tr)
    if not front:
        return _unc(tr, "not a front")
    tr.values["eta_eta_lambda_oracle"] = h.eta_eta_lambda
    ee = decide(tr, "oracle_eta_eta_lambda", h.eta_eta_lambda, math.sqrt(hs))
    neg = decide(tr, "oracle_hess_det", h.hess_det, hs)
    if ee is None or neg is None:
        return _border(tr)
    if ee and neg and h.hess_det < 0:
        return Classification(Verdict.CuspidalBeaks, tr)
    return _unc(tr, "beaks conditions fail")


def oracle_classify(w: WData, sp: SingularPoint) -> Classification:
    tr = CriterionTrace(dict(sp.margins))
    try:
        if sp.rank == 0 or sp.is_degenerate:
            c = _degenerate_verdict(w, sp, tr)
        elif sp.kinds == frozenset({"G"}):
            c = _g_point_verdict(w, sp, tr)
        else:
            c = _w_point_verdict(w, sp, tr)
    except (JetError, ValueError, ZeroDivisionError) as exc:
        c = _unc(tr, f"oracle failure: {exc}")
    c.point = sp
    return c


def oracle_at(w: WData, p) -> Classification:
    return oracle_classify(w, analyze_point(w, p))


def _same(a: Classification, b: Classification) -> bool:
    return a.verdict is b.verdict


def crosscheck(w: WData, results: list) -> dict:
    """Compare W-data verdicts with oracle verdicts; copies oracle values into the traces."""
    rows = []
    agree = disagree = borderline = 0
    for c in results:
        o = oracle_classify(w, c.point)
        for key in ("AB_oracle", "hess_det_oracle", "hess_scale"):
            if key in o.trace:
                c.trace.values[key] = o.trace[key]
        border = bool(c.trace.borderline or o.trace.borderline)
        ok = _same(c, o)
        if border:
            borderline += 1
        elif ok:
            agree += 1
        else:
            disagree += 1
        rows.append({"u": c.point.uv[0], "v": c.point.uv[1], "verdict_wdata": c.label,
                     "verdict_oracle": o.verdict.value, "agree": ok, "borderline": border,
                     "reasons_wdata": list(c.reasons), "reasons_oracle": list(o.reasons)})
    return {"points": rows, "agree": agree, "disagree": disagree, "borderline": borderline}
