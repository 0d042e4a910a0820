"""End-to-end acceptance criteria, one test per criterion."""

import json
import math
import time

import numpy as np
import pytest

from oracles import jet_vs_mpmath
from tlms.audit import FORBIDDEN, run_fuzz
from tlms.classify import Verdict, classify, classify_point, transform_verdicts
from tlms.fixtures import QUARTERS, all_fixtures, butterfly_pair, cusp_generator, enneper, kksy_torus
from tlms.oracle import crosscheck, hessian_check, hks_25_check, oracle_at, s1_constants
from tlms.singular import analyze_point, singular_scan
from tlms.surface import WData, eval_position, frame_grid

FUZZ_SEED = 1
MU = (1 + math.sqrt(5)) / 2


@pytest.fixture(scope="module")
def fixture_scans():
    out = {}
    for f in all_fixtures():
        scan = singular_scan(f.wdata, f.domain, f.grid)
        pts = list(scan.points) + [analyze_point(f.wdata, e.point) for e in f.expected]
        out[f.name] = (f, [classify_point(f.wdata, sp) for sp in pts])
    return out


def test_criterion_1_enneper(criterion):
    t0 = time.perf_counter()
    f = enneper()
    scan = singular_scan(f.wdata, ((0.5, 2.0), (-2.0, -0.5)), f.grid)
    residual = max(abs(u * v + 1.0) for c in scan.curves for u, v in c.points)
    labels = []
    for k in range(41):
        u = 2.0 ** ((k - 20) / 20)
        labels.append(classify(f.wdata, (u, -1.0 / u)).label)
    sw_scan = [p.uv for p in scan.points
               if classify_point(f.wdata, p).verdict is Verdict.Swallowtail]
    dt = time.perf_counter() - t0
    ok = (len(scan.curves) == 1 and residual <= 1e-8
          and set(labels) <= {"CuspidalEdge", "Swallowtail"}
          and [k for k, lab in enumerate(labels) if lab == "Swallowtail"] == [20]
          and len(sw_scan) == 1 and math.dist(sw_scan[0], (1.0, -1.0)) <= 1e-12
          and dt < 5.0)
    criterion(1, ok, f"curves={len(scan.curves)} max|uv+1|={residual:.1e} "
                     f"SW at k={[k for k, lab in enumerate(labels) if lab == 'Swallowtail']} "
                     f"scan SW={sw_scan} t={dt:.2f}s")
    assert ok


def test_criterion_2_butterfly_pair(criterion):
    t0 = time.perf_counter()
    bf, bc = butterfly_pair()
    c = classify(bf.wdata, (0.0, 0.0))
    s = classify(bc.wdata, (0.0, 0.0))
    ob = oracle_at(bf.wdata, (0.0, 0.0))
    os_ = oracle_at(bc.wdata, (0.0, 0.0))
    ab = s1_constants(bc.wdata, analyze_point(bc.wdata, (0.0, 0.0))).AB
    dt = time.perf_counter() - t0
    ns, diff = c.trace["nested_sum"], abs(c.trace["diff"])
    ok = (c.verdict is Verdict.CuspidalButterfly and abs(ns - 2.0) <= 1e-8
          and abs(diff - 4.0 / MU) <= 1e-8 and s.verdict is Verdict.CuspidalS1Plus
          and ob.verdict is c.verdict and os_.verdict is s.verdict
          and ab > 0 and s.trace["AB_product"] > 0 and dt < 1.0)
    criterion(2, ok, f"nested_sum={ns!r} |diff|-4/mu={diff - 4 / MU:.1e} conj={s.label} "
                     f"oracle=({ob.label}, {os_.label}) AB={ab:.4g} t={dt:.2f}s")
    assert ok


def test_criterion_3_kksy(criterion):
    t0 = time.perf_counter()
    f = kksy_torus()
    w = f.wdata
    scan = singular_scan(w, f.domain, f.grid)
    results = [classify_point(w, sp) for sp in scan.points]
    d4 = [c for c in results if c.verdict is Verdict.D4Plus]
    off = [(a, b) for a in QUARTERS for b in QUARTERS if a != b]
    diag = [(a, a) for a in QUARTERS]
    matched = all(any(math.dist(c.point.uv, p) <= 1e-9 for p in off) for c in d4)
    covered = all(any(math.dist(c.point.uv, p) <= 1e-9 for c in d4) for p in off)
    diag_d4 = sum(1 for p in diag if classify(w, p).verdict is Verdict.D4Plus)
    diag_d4 += sum(1 for c in d4 if any(math.dist(c.point.uv, p) <= 1e-6 for p in diag))
    hess = [max(c.trace["hess_det"], hessian_check(w, c.point).hess_det) for c in d4]
    # folded symmetry through the quadrature route (the closed form is symmetric by construction)
    bare = WData(w.g1, w.g2, w.w1, w.w2, w.base, w.f0)
    rng = np.random.default_rng(3)
    sym = 0.0
    for u, v in rng.uniform(0.0, 2 * math.pi, size=(100, 2)):
        sym = max(sym, float(np.max(np.abs(np.subtract(eval_position(bare, u, v),
                                                       eval_position(bare, v, u))))))
    dt = time.perf_counter() - t0
    ok = (len(d4) == 12 and matched and covered and diag_d4 == 0
          and all(h < 0 for h in hess) and sym <= 1e-9 and dt < 10.0)
    criterion(3, ok, f"D4Plus={len(d4)} on-diagonal D4={diag_d4} max hess det={max(hess):.3g} "
                     f"symmetry={sym:.1e} t={dt:.2f}s")
    assert ok


def test_criterion_4_cusp_family(criterion):
    vals = {}
    for k in (1, 2, 3):
        f = cusp_generator(k)
        c = classify(f.wdata, (0.0, 0.0))
        vals[k] = (c.label, c.trace.get("cusp25_quantity"))
    f2 = cusp_generator(2)
    hks = hks_25_check(f2.wdata, analyze_point(f2.wdata, (0.0, 0.0))).determinant
    ok = (vals[1][0] == "CuspidalEdge"
          and vals[2][0] == "Cusp25Edge" and abs(vals[2][1] - 6.0) <= 1e-10
          and abs(hks - 36.0) <= 1e-8
          and vals[3][0] == "CandidateHigherCusp(3)" and abs(vals[3][1]) <= 1e-10)
    criterion(4, ok, f"k=1 {vals[1][0]}; k=2 {vals[2][0]} q={vals[2][1]!r} HKS={hks!r}; "
                     f"k=3 {vals[3][0]} q={vals[3][1]!r}")
    assert ok


def test_criterion_5_duality_and_invariance(criterion, fixture_scans):
    checked, exceptions = 0, []
    swap = {"CuspidalButterfly": "CuspidalS1Plus", "CuspidalS1Plus": "CuspidalButterfly"}
    for name, (f, results) in fixture_scans.items():
        seen = set()
        for c in results:
            if c.label not in ("Cusp25Edge", "D4Plus") and c.label not in swap:
                continue
            key = (round(c.point.uv[0], 9), round(c.point.uv[1], 9))
            if key in seen:
                continue
            seen.add(key)
            tv = transform_verdicts(f.wdata, c.point.uv)
            checked += 1
            if c.label in swap:
                if tv["conjugate"] != swap[c.label]:
                    exceptions.append((name, key, "conjugate", tv["conjugate"]))
            else:
                for k, lab in tv.items():
                    if lab != c.label:
                        exceptions.append((name, key, k, lab))
    ok = checked > 0 and not exceptions
    criterion(5, ok, f"points={checked} exceptions={len(exceptions)} {exceptions[:3]}")
    assert ok


def test_criterion_6_nonexistence_fuzzing(criterion):
    rep = run_fuzz(FUZZ_SEED, 1000, with_oracle=False)
    forbidden = sum(rep.verdicts.get(k, 0) for k in FORBIDDEN)
    ok = (rep.cases == 1000 and forbidden == 0 and not rep.violations
          and rep.s1_checks > 0 and rep.hessian_checks > 0 and rep.seconds < 60.0)
    criterion(6, ok, f"cases={rep.cases} points={rep.points} S1 checks={rep.s1_checks} "
                     f"Hessian checks={rep.hessian_checks} violations={len(rep.violations)} "
                     f"t={rep.seconds:.1f}s")
    assert ok


def test_criterion_7_numerical_foundations(criterion):
    jet_err = jet_vs_mpmath(100)
    worst = {"lam": 0.0, "norm": 0.0, "orth": 0.0}
    for f in all_fixtures():
        (a, b), (c, d) = f.domain
        fg = frame_grid(f.wdata, np.linspace(a, b, 50), np.linspace(c, d, 50))
        ok_pts = np.isfinite(fg["lam"]) & np.isfinite(fg["lam_factored"])
        fu, fv, n = fg["fu"], fg["fv"], fg["n"]
        scale = np.maximum(1.0, np.linalg.norm(fu, axis=0) * np.linalg.norm(fv, axis=0))
        worst["lam"] = max(worst["lam"], float(np.max((np.abs(fg["lam"] - fg["lam_factored"])
                                                       / scale)[ok_pts])))
        worst["norm"] = max(worst["norm"], float(np.max(np.abs(np.linalg.norm(n, axis=0) - 1)[ok_pts])))
        for t in (fu, fv):
            dot = np.abs(np.einsum("i...,i...->...", t, n)) / np.maximum(1.0, np.linalg.norm(t, axis=0))
            worst["orth"] = max(worst["orth"], float(np.max(dot[ok_pts])))
    h, mixed = 1e-3, 0.0
    for f in (kksy_torus(), enneper()):
        w = f.wdata
        bare = WData(w.g1, w.g2, w.w1, w.w2, w.base, w.f0)
        for ww in (w, bare):
            for u, v in [(0.7, -1.9), (1.6, -0.8)]:
                p = [np.array(eval_position(ww, u + s * h, v + t * h)) for s in (-1, 1) for t in (-1, 1)]
                m = np.linalg.norm((p[3] - p[2] - p[1] + p[0]) / (4 * h * h))
                mixed = max(mixed, m / max(1.0, float(np.linalg.norm(p[0]))))
    ok = (jet_err <= 1e-6 and worst["lam"] <= 1e-10 and worst["norm"] <= 1e-10
          and worst["orth"] <= 1e-10 and mixed <= 1e-6)
    criterion(7, ok, f"jets={jet_err:.1e} lambda={worst['lam']:.1e} |n|-1={worst['norm']:.1e} "
                     f"orth={worst['orth']:.1e} f_uv={mixed:.1e}")
    assert ok


def test_criterion_8_engine_agreement(criterion, fixture_scans, tmp_path_factory):
    fixture_bad = []
    for name, (f, results) in fixture_scans.items():
        for row in crosscheck(f.wdata, results)["points"]:
            if not row["agree"]:
                fixture_bad.append((name, row["u"], row["v"]))
    rep = run_fuzz(FUZZ_SEED, 1000, with_oracle=True)
    decided = rep.agree + rep.disagree
    rate = rep.agree / decided if decided else 0.0
    dump = tmp_path_factory.mktemp("audit") / "disagreements.json"
    dump.write_text(json.dumps(rep.disagreements, indent=2, allow_nan=False))
    ok = not fixture_bad and rate >= 0.99 and len(rep.disagreements) == rep.disagree
    criterion(8, ok, f"fixture mismatches={len(fixture_bad)} fuzz agree={rep.agree} "
                     f"disagree={rep.disagree} borderline={rep.borderline} rate={rate:.4%} "
                     f"dump={dump}")
    assert ok
