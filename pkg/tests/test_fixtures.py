import math

import pytest

from tlms.classify import classify
from tlms.fixtures import (Expected, Fixture, all_fixtures, cusp_generator, fuzz_case, fuzz_corpus,
                           kksy_torus)
from tlms.singular import analyze_point
from tlms.surface import WData, check_null, eval_position


def test_names_are_unique_and_tagged():
    fx = all_fixtures()
    assert len({f.name for f in fx}) == len(fx)
    for f in fx:
        assert all(e.provenance in ("PAPER", "DERIVED", "TRIVIAL") for e in f.expected)


def test_bad_provenance_rejected():
    with pytest.raises(ValueError):
        Fixture("x", kksy_torus().wdata, [Expected((0, 0), "D4Plus", "GUESS")])


@pytest.mark.parametrize("f", all_fixtures(), ids=lambda f: f.name)
def test_expected_points_are_singular(f):
    for e in f.expected:
        analyze_point(f.wdata, e.point)


def test_cusp_generator_validates_k():
    for bad in (0, -1, 1.5):
        with pytest.raises(ValueError):
            cusp_generator(bad)
    assert cusp_generator(4).expected[0].verdict == "CandidateHigherCusp(4)"


def test_kksy_generating_curve_is_null():
    f = kksy_torus()
    assert check_null(f.curves.phi, (0.0, 2 * math.pi)).passed


def test_kksy_positions_close_up_and_start_at_f0():
    w = kksy_torus().wdata
    assert eval_position(w, 0.0, 0.0) == pytest.approx((0.0, 0.0, 1.0 / 3.0), abs=1e-12)
    bare = WData(w.g1, w.g2, w.w1, w.w2, w.base, w.f0)
    a = eval_position(bare, 0.3, 2 * math.pi - 0.2)
    b = eval_position(bare, 0.3, -0.2)
    assert a == pytest.approx(b, abs=1e-8)


def test_fuzz_is_deterministic():
    a = [c.wdata.texts() for c in fuzz_corpus(3, 20)]
    b = [fuzz_case(3, i).wdata.texts() for i in range(20)]
    assert a == b
    assert fuzz_case(3, 0).wdata.texts() != fuzz_case(4, 0).wdata.texts()


def test_engineered_cases_hit_their_pattern():
    kinds = set()
    for i in range(200):
        c = fuzz_case(9, i)
        if c.kind == "random":
            continue
        kinds.add(c.kind)
        verdict = classify(c.wdata, c.special[0]).label
        want = "CuspidalS1Plus" if c.kind == "s1" else "CuspidalButterfly"
        assert verdict == want, (i, verdict)
    assert kinds == {"s1", "butterfly"}
