import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tlms import classify as cl
from tlms.classify import (ClassifyUsageError, CriterionTrace, Verdict, classification_record,
                           classify, classify_beaks, classify_g_point, classify_point,
                           classify_rank0, decide, minface_quantities, nonexistence_audit,
                           transform_verdicts)
from tlms.expr import parse
from tlms.fixtures import all_fixtures, beaks_fixture, butterfly_pair, d4_fixture, fuzz_case
from tlms.singular import analyze_point, singular_scan
from tlms.surface import WData

MU = (1 + math.sqrt(5)) / 2


def _w(g1, g2, w1, w2):
    return WData(parse(g1), parse(g2), parse(w1), parse(w2))


def _expected_cases():
    return [(f.name, f.wdata, e.point, e.verdict) for f in all_fixtures() for e in f.expected]


@pytest.mark.parametrize("name, w, p, verdict", _expected_cases())
def test_fixture_verdicts(name, w, p, verdict):
    assert classify(w, p).label == verdict


def test_decide_two_thresholds():
    tr = CriterionTrace()
    assert decide(tr, "a", 0.5) is True
    assert decide(tr, "b", 1e-12) is False
    assert decide(tr, "c", 1e-7) is None
    assert decide(tr, "d", math.nan) is None
    assert tr.borderline == ["c", "d"]
    assert decide(tr, "e", 1e-7, scale=1e3) is False
    assert tr["a"] == 0.5


def test_thresholds_are_read_at_call_time(monkeypatch):
    monkeypatch.setattr(cl, "ZERO_TOL", 1e-6)
    assert decide(CriterionTrace(), "x", 1e-7) is False


def test_butterfly_values():
    bf, bc = butterfly_pair()
    c = classify(bf.wdata, (0.0, 0.0))
    assert c.verdict is Verdict.CuspidalButterfly
    assert c.trace["nested_sum"] == pytest.approx(2.0, abs=1e-8)
    assert abs(c.trace["diff"]) == pytest.approx(4.0 / MU, abs=1e-8)
    s = classify(bc.wdata, (0.0, 0.0))
    assert s.verdict is Verdict.CuspidalS1Plus
    assert s.trace["AB_product"] > 0


def test_minface_quantities_enneper():
    # g1 = u, w1 = 1: varphi1 = 1/u^2, phi1 = u * (-2/u^3) = -2/u^2, Phi1 = 4/u^2
    q = minface_quantities(_w("u", "-v", "1", "1"), (0.5, -2.0))
    assert q.varphi[0] == pytest.approx(4.0)
    assert q.phi[0] == pytest.approx(-8.0)
    assert q.Phi[0] == pytest.approx(16.0)
    # g2 = -v: varphi2 = -1/v^2
    assert q.varphi[1] == pytest.approx(-0.25)


def test_beaks_trace():
    f = beaks_fixture()
    c = classify(f.wdata, (0.0, 0.0))
    assert c.verdict is Verdict.CuspidalBeaks
    assert c.trace["hess_det"] < 0
    assert c.trace["eta_eta_lambda"] != 0.0


def test_d4_hessian_negative():
    c = classify(d4_fixture().wdata, (0.0, 0.0))
    assert c.verdict is Verdict.D4Plus and c.trace["hess_det"] < 0


def test_rank0_on_g_curve_is_unclassified():
    # w1 = w2 = 0 where g1 g2 = 1 as well
    c = classify(_w("1 + u", "1 + v", "u", "v"), (0.0, 0.0))
    assert c.verdict is Verdict.Unclassified
    assert "g1g2_minus_1" in c.reasons[0]


def test_branch_guards():
    w = d4_fixture().wdata
    sp = analyze_point(w, (0.0, 0.0))
    with pytest.raises(ClassifyUsageError):
        classify_g_point(w, sp)
    with pytest.raises(ClassifyUsageError):
        classify_beaks(w, sp)
    with pytest.raises(ClassifyUsageError):
        classify_rank0(w, analyze_point(_w("u", "-v", "1", "1"), (1.0, -1.0)))


def test_sum_and_diff_both_zero():
    # varphi1 = varphi2 = 0 needs g1' = g2' = 0 on the curve
    c = classify(_w("1 + u^2", "1 + v^2", "1", "1"), (0.0, 0.0))
    assert c.verdict is Verdict.Unclassified


def test_borderline_is_unclassified(monkeypatch):
    bf, _ = butterfly_pair()
    monkeypatch.setattr(cl, "NONZERO_TOL", 10.0)
    c = classify(bf.wdata, (0.0, 0.0))
    assert c.verdict is Verdict.Unclassified and c.reasons[0].startswith("borderline")


def test_record_is_json_clean():
    c = classify(d4_fixture().wdata, (0.0, 0.0))
    rec = classification_record(c, {"conjugate": "D4Plus"})
    assert rec["verdict"] == "D4Plus" and rec["kinds"] == ["W1", "W2"]
    assert all(v is None or math.isfinite(v) for v in rec["margins"].values())


def test_transform_verdicts_d4():
    out = transform_verdicts(d4_fixture().wdata, (0.0, 0.0))
    assert set(out.values()) == {"D4Plus"}


def test_audit_flags_sign_violations():
    c = classify(d4_fixture().wdata, (0.0, 0.0))
    assert nonexistence_audit(None, [c])["violations"] == []
    c.trace.values["hess_det"] = 1.0
    c.trace.values["AB_product"] = -1.0
    rep = nonexistence_audit(None, [c])
    assert {v["check"] for v in rep["violations"]} == {"hess_det", "AB_product"}


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_routing_is_total_on_fuzz_points(index):
    """Every analysed point gets exactly one verdict and never a forbidden one."""
    case = fuzz_case(17, index)
    scan = singular_scan(case.wdata, case.domain, (12, 12), 5, 6, 512)
    for sp in scan.points:
        c = classify_point(case.wdata, sp)
        assert isinstance(c.verdict, Verdict)
        if c.verdict is Verdict.CuspidalS1Plus:
            assert c.trace["AB_product"] > 0
        if "hess_det" in c.trace:
            assert c.trace["hess_det"] <= 0
