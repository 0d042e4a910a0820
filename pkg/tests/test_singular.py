import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tlms.expr import parse
from tlms.fixtures import butterfly_pair, d4_fixture, enneper, kksy_torus
from tlms.singular import (NotSingularError, analyze_point, find_w_zero_lines, is_zero,
                           lambda_gradient, lambda_hessian, lambda_jet, singular_curve_samples,
                           singular_scan, trace_g_curve, write_curves_csv, write_points_csv)
from tlms.surface import WData, eval_frame


def _w(g1, g2, w1, w2):
    return WData(parse(g1), parse(g2), parse(w1), parse(w2))


def _lam(w, u, v):
    return eval_frame(w, u, v, with_position=False).lam


def test_enneper_curve_is_the_hyperbola():
    f = enneper()
    scan = singular_scan(f.wdata, f.domain, (48, 48))
    assert len(scan.curves) == 1
    c = scan.curves[0]
    assert not c.closed and c.end_reasons == ("boundary", "boundary")
    assert max(abs(u * v + 1.0) for u, v in c.points) <= 1e-8
    us = [u for u, _ in c.points]
    assert min(us) == pytest.approx(0.5, abs=1e-9) and max(us) == pytest.approx(2.0, abs=1e-9)


def test_closed_curve_is_reported_closed():
    # g1 g2 = 1 on the circle u^2 + v^2 = 1 via g1 = exp(u^2), g2 = exp(v^2 - 1)
    w = _w("exp(u^2)", "exp(v^2 - 1)", "1", "1")
    c = trace_g_curve(w, (1.0, 0.0), 0.02, box=(-2, 2, -2, 2))
    assert c.closed
    assert max(abs(u * u + v * v - 1.0) for u, v in c.points) <= 1e-10


def test_trace_rejects_bad_seeds():
    w = enneper().wdata
    with pytest.raises(ValueError, match="not on"):
        trace_g_curve(w, (1.0, 1.0), 0.01)
    with pytest.raises(ValueError, match="gradient"):
        trace_g_curve(_w("1 + u^2", "1", "1", "1"), (0.0, 0.0), 0.01)


def test_kksy_omega_lines():
    f = kksy_torus()
    lines = find_w_zero_lines(f.wdata, *f.domain)
    quarters = [(1 + 2 * k) * math.pi / 4 for k in range(4)]
    assert [r.value for r in lines.u_roots] == pytest.approx(quarters, abs=1e-12)
    assert [r.value for r in lines.v_roots] == pytest.approx(quarters, abs=1e-12)
    # cos(u) - 1 vanishes at u = 0 but g1 has a pole there: excluded, not a line
    assert not any(abs(r.value) < 1e-6 for r in lines.u_roots)


def test_tangential_omega_root_is_found():
    w = _w("u", "v", "(u - 0.3)^2", "1")
    lines = find_w_zero_lines(w, (-1, 1), (-1, 1), 256)
    assert len(lines.u_roots) == 1
    r = lines.u_roots[0]
    assert r.tangential and r.value == pytest.approx(0.3, abs=1e-6)


def test_analyze_point_kinds():
    f = d4_fixture()
    sp = analyze_point(f.wdata, (0.0, 0.0))
    assert sp.kinds == frozenset({"W1", "W2"}) and sp.rank == 0 and sp.is_degenerate
    w = enneper().wdata
    sp = analyze_point(w, (1.0, -1.0))
    assert sp.kinds == frozenset({"G"}) and sp.rank == 1 and sp.is_front and not sp.is_degenerate
    sp = analyze_point(_w("u", "v", "1", "v"), (0.5, 0.0))
    assert sp.kinds == frozenset({"W2"}) and sp.is_front


def test_not_singular():
    with pytest.raises(NotSingularError, match="not singular"):
        analyze_point(enneper().wdata, (0.0, 0.0))


def test_gradient_and_hessian_against_differences():
    w = _w("u + u^3/5", "2*v - v^2", "1 + u^2", "cos(v)")
    u, v, h = 0.4, -0.3, 1e-4
    lu, lv = lambda_gradient(w, u, v)
    assert lu == pytest.approx((_lam(w, u + h, v) - _lam(w, u - h, v)) / (2 * h), rel=1e-7)
    assert lv == pytest.approx((_lam(w, u, v + h) - _lam(w, u, v - h)) / (2 * h), rel=1e-7)
    H = lambda_hessian(w, u, v)
    h = 1e-3
    fd_uv = (_lam(w, u + h, v + h) - _lam(w, u + h, v - h)
             - _lam(w, u - h, v + h) + _lam(w, u - h, v - h)) / (4 * h * h)
    fd_uu = (_lam(w, u + h, v) - 2 * _lam(w, u, v) + _lam(w, u - h, v)) / (h * h)
    assert H[0, 1] == pytest.approx(fd_uv, rel=1e-5)
    assert H[0, 0] == pytest.approx(fd_uu, rel=1e-5)


@settings(max_examples=30, deadline=None)
@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(-2, 2), st.floats(-2, 2))
def test_lambda_jet_value_matches_frame(u, v, du, dv):
    w = _w("u + u^3/5", "2*v - v^2", "1 + u^2", "cos(v)")
    assert lambda_jet(w, u, v, du, dv).value == pytest.approx(_lam(w, u, v), rel=1e-12, abs=1e-14)


def test_is_zero_is_scale_relative():
    assert is_zero(1e-11) and not is_zero(1e-9)
    assert is_zero(1e-6, scale=1e5)


def test_butterfly_scan_finds_the_tangential_zero():
    bf, bc = butterfly_pair()
    for f in (bf, bc):
        scan = singular_scan(f.wdata, f.domain, f.grid)
        assert any(math.hypot(*p.uv) <= 1e-9 for p in scan.points), f.name


def test_kksy_scan_contains_all_quarter_points():
    f = kksy_torus()
    scan = singular_scan(f.wdata, f.domain, f.grid)
    for e in f.expected:
        assert any(np.allclose(p.uv, e.point, atol=1e-9) for p in scan.points)
    ranks = {p.rank for p in scan.points}
    assert ranks == {0, 1}


def test_curve_samples_are_tangent_to_the_curve():
    w = enneper().wdata
    c = trace_g_curve(w, (1.0, -1.0), 0.05, max_steps=5, box=(0.5, 2, -2, -0.5))
    samples = singular_curve_samples(w, c)
    assert len(samples) == len(c.points)
    for s in samples:
        u, v = s.point
        # tangent of uv = -1 is proportional to (u, -v)
        gp = np.array(s.gamma_prime)
        assert abs(gp[0] * (-v) - gp[1] * u) <= 1e-9 * np.linalg.norm(gp) * math.hypot(u, v)


def test_csv_writers(tmp_path):
    f = enneper()
    scan = singular_scan(f.wdata, f.domain, (16, 16), curve_samples=8)
    write_points_csv(tmp_path / "p.csv", scan.points)
    write_curves_csv(tmp_path / "c.csv", scan, f.domain)
    rows = (tmp_path / "p.csv").read_text().splitlines()
    assert rows[0].startswith("u,v,kinds,rank") and len(rows) == len(scan.points) + 1
    rows = (tmp_path / "c.csv").read_text().splitlines()
    assert rows[0] == "curve,kind,index,u,v"
    assert len(rows) == 1 + sum(len(c.points) for c in scan.curves)


def test_scan_rejects_tiny_grid():
    with pytest.raises(ValueError):
        singular_scan(enneper().wdata, ((0.5, 2), (-2, -0.5)), (1, 5))
