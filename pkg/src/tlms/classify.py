"""W-data criteria engine: closed-form conditions on ``(g1, g2, w1, w2)``.

Every decision goes through a two-threshold test: a quantity is zero when
``|q| <= 1e-9 * scale``, nonzero when ``|q| >= 1e-6 * scale`` and borderline
in between.  Borderline decisions end in ``Unclassified``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from .expr import eval_jet
from .jets import DEFAULT_ORDER, Jet, JetError, common_order
from .singular import NotSingularError, SingularPoint, analyze_point
from .surface import WData, associate, conjugate

ZERO_TOL = 1e-9
NONZERO_TOL = 1e-6


class Verdict(enum.Enum):
    CuspidalEdge = "CuspidalEdge"
    Swallowtail = "Swallowtail"
    CuspidalCrossCap = "CuspidalCrossCap"
    CuspidalButterfly = "CuspidalButterfly"
    CuspidalS1Plus = "CuspidalS1Plus"
    Cusp25Edge = "Cusp25Edge"
    CuspidalBeaks = "CuspidalBeaks"
    D4Plus = "D4Plus"
    CandidateHigherCusp = "CandidateHigherCusp"
    Unclassified = "Unclassified"


class ClassifyUsageError(ValueError):
    pass


@dataclass
class CriterionTrace:
    values: dict = field(default_factory=dict)
    borderline: list = field(default_factory=list)

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        return self.values.get(key, default)

    def __contains__(self, key):
        return key in self.values


@dataclass
class Classification:
    verdict: Verdict
    trace: CriterionTrace
    point: SingularPoint | None = None
    reasons: list = field(default_factory=list)
    cusp_k: int | None = None

    @property
    def label(self) -> str:
        if self.verdict is Verdict.CandidateHigherCusp:
            return f"CandidateHigherCusp({self.cusp_k})"
        return self.verdict.value


def decide(trace: CriterionTrace, name: str, q: float, scale: float = 1.0) -> bool | None:
    """True if nonzero, False if zero, None if borderline; records the value."""
    trace.values[name] = q
    s = max(1.0, abs(scale))
    if not math.isfinite(q):
        trace.borderline.append(name)
        return None
    if abs(q) <= ZERO_TOL * s:
        return False
    if abs(q) >= NONZERO_TOL * s:
        return True
    trace.borderline.append(name)
    return None


def _unclassified(trace, sp, reason) -> Classification:
    return Classification(Verdict.Unclassified, trace, sp, [reason])


def _trace_from(sp: SingularPoint) -> CriterionTrace:
    return CriterionTrace(dict(sp.margins))


# --- minface quantities ---------------------------------------------------

@dataclass
class MinfaceQuantities:
    varphi: tuple
    phi: tuple
    Phi: tuple
    unresolved: list = field(default_factory=list)


def _side(g: Jet, w: Jet):
    """varphi, phi, Phi on one side from jets of g and w."""
    dg = g.deriv()
    g_, w_ = common_order(g, w)
    vp = dg / common_order(g_ * g_ * w_, dg)[0]
    ratio = common_order(g, dg)
    ratio = ratio[0] / ratio[1]
    a, b = common_order(ratio, vp.deriv())
    ph = a * b
    a, b = common_order(ratio, ph.deriv())
    Ph = a * b
    return vp.value, ph.value, Ph.value


def minface_quantities(w: WData, p, order: int = DEFAULT_ORDER) -> MinfaceQuantities:
    u, v = float(p[0]), float(p[1])
    out = []
    unresolved = []
    for idx, (ge, we, x) in enumerate(((w.g1, w.w1, u), (w.g2, w.w2, v)), start=1):
        try:
            out.append(_side(eval_jet(ge, x, order), eval_jet(we, x, order)))
        except JetError as exc:
            unresolved.append(f"side {idx}: {exc}")
            out.append((math.nan, math.nan, math.nan))
    (a1, b1, c1), (a2, b2, c2) = out
    return MinfaceQuantities((a1, a2), (b1, b2), (c1, c2), unresolved)


# --- branch classifiers ---------------------------------------------------

def classify_g_point(w: WData, sp: SingularPoint, order: int = DEFAULT_ORDER) -> Classification:
    if sp.kinds != frozenset({"G"}) or sp.rank != 1 or sp.is_degenerate:
        raise ClassifyUsageError(f"classify_g_point needs a non-degenerate pure g-point, got {sp.kinds}")
    tr = _trace_from(sp)
    q = minface_quantities(w, sp.uv, order)
    (v1, v2), (p1, p2), (P1, P2) = q.varphi, q.phi, q.Phi
    tr.values.update(varphi1=v1, varphi2=v2, phi1=p1, phi2=p2, Phi1=P1, Phi2=P2)
    if not (math.isfinite(v1) and math.isfinite(v2)):
        return _unclassified(tr, sp, "varphi unresolved: " + "; ".join(q.unresolved))
    s1 = max(abs(v1), abs(v2))
    s2 = max(abs(p1), abs(p2))
    s3 = max(abs(P1), abs(P2))
    diff = decide(tr, "diff", v1 - v2, s1)
    sm = decide(tr, "sum", v1 + v2, s1)
    if diff is None or sm is None:
        return _unclassified(tr, sp, "borderline: " + ", ".join(tr.borderline))
    if diff and sm:
        return Classification(Verdict.CuspidalEdge, tr, sp)
    if not diff and not sm:
        return _unclassified(tr, sp, "sum and diff both vanish")
    if not (math.isfinite(p1) and math.isfinite(p2)):
        return _unclassified(tr, sp, "phi unresolved: " + "; ".join(q.unresolved))
    if diff:
        D = decide(tr, "D", p1 - p2, s2)
        tr.values["Dprime"] = P1 + P2
        if D is None:
            return _unclassified(tr, sp, "borderline: D")
        if D:
            return Classification(Verdict.Swallowtail, tr, sp)
        ns = decide(tr, "nested_sum", P1 + P2, s3)
        if ns is None:
            return _unclassified(tr, sp, "borderline: nested_sum")
        if ns:
            return Classification(Verdict.CuspidalButterfly, tr, sp)
        return _unclassified(tr, sp, "D and nested_sum vanish")
    Dp = decide(tr, "D_plus", p1 + p2, s2)
    tr.values["Dprime"] = P1 - P2
    if Dp is None:
        return _unclassified(tr, sp, "borderline: D_plus")
    if Dp:
        return Classification(Verdict.CuspidalCrossCap, tr, sp)
    nd = decide(tr, "nested_diff", P1 - P2, s3)
    j1 = eval_jet(w.g1, sp.uv[0], 2)
    j2 = eval_jet(w.g2, sp.uv[1], 2)
    g1u, g2v = j1.derivative(1), j2.derivative(1)
    w1, w2 = sp.margins["w1"], sp.margins["w2"]
    A = -0.5 * w1 * w2 * g1u ** 2 * g2v ** 2 * (v1 + v2) * (P1 - P2)
    B = -48.0 * w1 * w2 * v1 ** 5 * (P1 - P2)
    tr.values.update(A=A, B=B, AB_product=A * B)
    if nd is None:
        return _unclassified(tr, sp, "borderline: nested_diff")
    if nd:
        return Classification(Verdict.CuspidalS1Plus, tr, sp)
    return _unclassified(tr, sp, "D_plus and nested_diff vanish")


def _w_side(w: WData, sp: SingularPoint):
    """Jets for the side whose omega vanishes: (g, w, g_other, w_other, x, name)."""
    u, v = sp.uv
    if "W2" in sp.kinds:
        return w.g2, w.w2, w.g1, w.w1, v, u, "2"
    return w.g1, w.w1, w.g2, w.w2, u, v, "1"


def classify_w_rank1(w: WData, sp: SingularPoint, order: int = DEFAULT_ORDER) -> Classification:
    if sp.rank != 1 or "G" in sp.kinds or len(sp.kinds) != 1 or sp.is_degenerate:
        raise ClassifyUsageError(f"classify_w_rank1 needs a non-degenerate one-sided w-point, got {sp.kinds}")
    tr = _trace_from(sp)
    ge, we, _, _, x, _, side = _w_side(w, sp)
    gj = eval_jet(ge, x, order)
    wj = eval_jet(we, x, order)
    dg = gj.derivative(1)
    front = decide(tr, f"g{side}_prime", dg, abs(gj.value))
    if front is None:
        return _unclassified(tr, sp, "borderline: front condition")
    if front:
        return Classification(Verdict.CuspidalEdge, tr, sp)
    try:
        a, b = common_order(gj.deriv().deriv(), wj.deriv())
        q = (a / b).derivative(1)
    except JetError as exc:
        return _unclassified(tr, sp, f"cusp25 quantity unresolved: {exc}")
    nz = decide(tr, "cusp25_quantity", q, max(abs(gj.derivative(2)), abs(gj.derivative(3))))
    if nz is None:
        return _unclassified(tr, sp, "borderline: cusp25_quantity")
    if nz:
        return Classification(Verdict.Cusp25Edge, tr, sp)
    dj = gj.deriv()
    r = dj.leading_zeros(1e-10)
    tr.values["g_prime_vanishing_order"] = r
    if r > dj.order:
        return _unclassified(tr, sp, "g' vanishes to the full jet order")
    if r % 2:
        return _unclassified(tr, sp, f"g' vanishes to odd order {r}")
    return Classification(Verdict.CandidateHigherCusp, tr, sp, ["unverified beyond (2,5)"], r // 2 + 1)


def _big_lambda(g1: float, g2: float) -> float:
    return -0.5 * math.sqrt((1.0 - g1 * g2) ** 2 + 2.0 * (g1 + g2) ** 2)


def classify_beaks(w: WData, sp: SingularPoint) -> Classification:
    if sp.rank != 1 or "G" not in sp.kinds or not ({"W1", "W2"} & sp.kinds):
        raise ClassifyUsageError(f"classify_beaks needs a rank-1 point in both singular sets, got {sp.kinds}")
    tr = _trace_from(sp)
    m = sp.margins
    g1, g2 = m["g1"], m["g2"]
    if "W2" in sp.kinds:
        w_other, w_d, g_d, g_o = m["w1"], m["w2_v"], m["g2_v"], m["g1_u"]
        g_here, g_there = g2, g1
    else:
        w_other, w_d, g_d, g_o = m["w2"], m["w1_u"], m["g1_u"], m["g2_v"]
        g_here, g_there = g1, g2
    lam = _big_lambda(g1, g2)
    checks = [
        decide(tr, "w_other", w_other, 1.0),
        decide(tr, "w_prime", w_d, 1.0),
        decide(tr, "g_prime_product", g_o * g_d, max(abs(g_o), abs(g_d))),
    ]
    tr.values["g1g2_minus_1"] = m["g1g2_minus_1"]
    lam_mixed = -lam * g_o * g_here * w_other * w_d
    tr.values["lambda_mixed"] = lam_mixed
    tr.values["eta_eta_lambda"] = -2.0 * lam * g_there * g_d * w_other * w_d
    tr.values["hess_det"] = -lam_mixed ** 2
    if any(c is None for c in checks):
        return _unclassified(tr, sp, "borderline: " + ", ".join(tr.borderline))
    failed = [n for n, c in zip(("w_other", "w_prime", "g_prime_product"), checks) if not c]
    if failed:
        return _unclassified(tr, sp, "beaks conditions fail: " + ", ".join(failed))
    return Classification(Verdict.CuspidalBeaks, tr, sp)


def classify_rank0(w: WData, sp: SingularPoint) -> Classification:
    if sp.rank != 0:
        raise ClassifyUsageError("classify_rank0 needs a rank-zero point")
    tr = _trace_from(sp)
    m = sp.margins
    g1, g2 = m["g1"], m["g2"]
    G = m["g1g2_minus_1"]
    checks = [
        decide(tr, "g1g2_minus_1", G, abs(g1 * g2)),
        decide(tr, "g_prime_product", m["g1_u"] * m["g2_v"], max(abs(m["g1_u"]), abs(m["g2_v"]))),
        decide(tr, "w_prime_product", m["w1_u"] * m["w2_v"], max(abs(m["w1_u"]), abs(m["w2_v"]))),
    ]
    lt = _big_lambda(g1, g2) * (1.0 - g1 * g2)
    tr.values["hess_det"] = -(lt * m["w1_u"] * m["w2_v"]) ** 2
    if any(c is None for c in checks):
        return _unclassified(tr, sp, "borderline: " + ", ".join(tr.borderline))
    failed = [n for n, c in zip(("g1g2_minus_1", "g_prime_product", "w_prime_product"), checks) if not c]
    if failed:
        return _unclassified(tr, sp, "D4 conditions fail: " + ", ".join(failed))
    return Classification(Verdict.D4Plus, tr, sp)


def classify_point(w: WData, sp: SingularPoint, order: int = DEFAULT_ORDER) -> Classification:
    """Route an analysed point to the matching criterion."""
    if sp.rank == 0:
        return classify_rank0(w, sp)
    if "G" in sp.kinds and ({"W1", "W2"} & sp.kinds):
        return classify_beaks(w, sp)
    if sp.kinds == frozenset({"G"}):
        if sp.is_degenerate:
            return _unclassified(_trace_from(sp), sp, "degenerate g-point")
        return classify_g_point(w, sp, order)
    if sp.is_degenerate:
        return _unclassified(_trace_from(sp), sp, "degenerate w-point outside the beaks pattern")
    return classify_w_rank1(w, sp, order)


def classify(w: WData, p, order: int = DEFAULT_ORDER) -> Classification:
    sp = analyze_point(w, p, order)
    return classify_point(w, sp, order)


# --- audit and reports ----------------------------------------------------

def nonexistence_audit(w: WData, results: list) -> dict:
    """Check the sign identities wherever they were evaluated.

    ``results`` holds Classifications; oracle values stored in their traces
    (``AB_oracle``, ``hess_det_oracle``) are audited as well.
    """
    s1, hess, violations = 0, 0, []
    for c in results:
        tr = c.trace
        for key in ("AB_product", "AB_oracle"):
            if key in tr:
                s1 += 1
                if not tr[key] > 0:
                    violations.append({"uv": c.point.uv if c.point else None, "check": key, "value": tr[key]})
        for key in ("hess_det", "hess_det_oracle"):
            if key in tr:
                hess += 1
                scale = max(1.0, abs(tr.get("hess_scale", 1.0)))
                if tr[key] > ZERO_TOL * scale:
                    violations.append({"uv": c.point.uv if c.point else None, "check": key, "value": tr[key]})
    return {"s1_checks": s1, "hessian_checks": hess, "violations": violations}


def transform_verdicts(w: WData, p, thetas=(-1.0, 0.3, 1.0)) -> dict:
    out = {}
    try:
        out["conjugate"] = classify(conjugate(w), p).label
    except (NotSingularError, JetError, ValueError) as exc:
        out["conjugate"] = f"error: {exc}"
    for th in thetas:
        try:
            out[f"associate_{th:g}"] = classify(associate(w, th), p).label
        except (NotSingularError, JetError, ValueError) as exc:
            out[f"associate_{th:g}"] = f"error: {exc}"
    return out


def _clean(x):
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def classification_record(c: Classification, transforms: dict | None = None) -> dict:
    sp = c.point
    rec = {
        "u": sp.uv[0] if sp else None,
        "v": sp.uv[1] if sp else None,
        "kinds": sorted(sp.kinds) if sp else [],
        "rank": sp.rank if sp else None,
        "verdict": c.label,
        "reasons": list(c.reasons),
        "margins": {k: _clean(float(v)) for k, v in c.trace.values.items()},
    }
    if transforms is not None:
        rec["transforms"] = transforms
    return rec
