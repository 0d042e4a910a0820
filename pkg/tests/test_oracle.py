import math

import numpy as np
import pytest

from tlms.classify import Verdict, classify, classify_point
from tlms.expr import parse
from tlms.fixtures import (all_fixtures, beaks_fixture, butterfly_pair, cusp_generator,
                           d4_fixture, enneper, fuzz_case)
from tlms.oracle import (crosscheck, curve_jets, delta_psi_jets, hessian_check, hks_25_check,
                         oracle_at, s1_constants)
from tlms.singular import analyze_point, lambda_hessian, singular_scan
from tlms.surface import WData, eval_frame


def _w(g1, g2, w1, w2):
    return WData(parse(g1), parse(g2), parse(w1), parse(w2))


def test_curve_jets_stay_on_the_curve():
    w = enneper().wdata
    sp = analyze_point(w, (1.3, -1 / 1.3))
    c = curve_jets(w, sp, 6)
    for t in (-1e-2, 0.0, 1e-2):
        u, v = c.U(t), c.V(t)
        assert abs(u * v + 1.0) <= 1e-10


@pytest.mark.parametrize("p", [(1.0, -1.0), (1.3, -1 / 1.3), (0.6, -1 / 0.6)])
def test_delta_psi_routes_agree(p):
    w = enneper().wdata
    dp = delta_psi_jets(w, analyze_point(w, p))
    assert dp.agreement <= 1e-8


def test_delta_psi_on_fuzz_g_points():
    checked = 0
    for i in range(30):
        case = fuzz_case(5, i)
        for sp in singular_scan(case.wdata, case.domain, (16, 16), 5, 4).points:
            if sp.kinds == frozenset({"G"}) and not sp.is_degenerate:
                assert delta_psi_jets(case.wdata, sp).agreement <= 1e-6
                checked += 1
    assert checked > 20


def test_psi_sign_is_independent_route():
    # psi(0) = det(df(gamma'), n, dn(eta)) versus the frame at the point
    w = enneper().wdata
    sp = analyze_point(w, (1.5, -1 / 1.5))
    dp = delta_psi_jets(w, sp)
    fp = eval_frame(w, *sp.uv, with_position=False)
    n = np.array(fp.n)
    assert abs(float(n @ dp.df_gamma)) <= 1e-12 * np.linalg.norm(dp.df_gamma)


def test_s1_constants_positive_on_conjugate_butterfly():
    _, bc = butterfly_pair()
    sp = analyze_point(bc.wdata, (0.0, 0.0))
    s1 = s1_constants(bc.wdata, sp)
    assert s1.AB > 0
    assert s1.hypotheses["eta3_residual"] <= 1e-8
    assert s1.hypotheses["xi_eta3_parallel_residual"] <= 1e-8
    with pytest.raises(ValueError):
        s1_constants(d4_fixture().wdata, analyze_point(d4_fixture().wdata, (0.0, 0.0)))


@pytest.mark.parametrize("k, det", [(2, 36.0), (3, 0.0)])
def test_hks_determinant(k, det):
    f = cusp_generator(k)
    h = hks_25_check(f.wdata, analyze_point(f.wdata, (0.0, 0.0)))
    assert h.determinant == pytest.approx(det, abs=1e-8)
    assert h.closed_form == pytest.approx(det, abs=1e-8)
    assert h.parallel_residual <= 1e-12


def test_hks_closed_form_on_general_data():
    w = _w("1 + u + u^2", "v^3 + v^4/2", "2 - u", "v*(1 + v)")
    h = hks_25_check(w, analyze_point(w, (0.0, 0.0)))
    assert h.determinant == pytest.approx(h.closed_form, rel=1e-9)


def test_hessian_check_matches_engine():
    for f in (d4_fixture(), beaks_fixture()):
        sp = analyze_point(f.wdata, (0.0, 0.0))
        h = hessian_check(f.wdata, sp)
        c = classify(f.wdata, (0.0, 0.0))
        assert h.hess_det < 0
        assert h.hess_det == pytest.approx(c.trace["hess_det"], rel=1e-9)
        assert np.allclose(h.hessian, lambda_hessian(f.wdata, 0.0, 0.0))


@pytest.mark.parametrize("f", all_fixtures(), ids=lambda f: f.name)
def test_oracle_agrees_on_fixture_points(f):
    results = [classify(f.wdata, e.point) for e in f.expected]
    cc = crosscheck(f.wdata, results)
    assert all(row["agree"] for row in cc["points"])


def test_oracle_never_emits_forbidden_types():
    bf, bc = butterfly_pair()
    assert oracle_at(bf.wdata, (0.0, 0.0)).verdict is Verdict.CuspidalButterfly
    assert oracle_at(bc.wdata, (0.0, 0.0)).verdict is Verdict.CuspidalS1Plus
    assert not any(v.name.endswith("Minus") or "Lips" in v.name for v in Verdict)


def test_crosscheck_copies_oracle_values():
    _, bc = butterfly_pair()
    c = classify_point(bc.wdata, analyze_point(bc.wdata, (0.0, 0.0)))
    crosscheck(bc.wdata, [c])
    assert c.trace["AB_oracle"] > 0
    assert math.isfinite(c.trace["AB_product"])
