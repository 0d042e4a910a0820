"""Seeded nonexistence fuzzing over random W-data."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

from .classify import Verdict, classify_point, nonexistence_audit
from .fixtures import fuzz_corpus
from .jets import JetError
from .oracle import crosscheck
from .singular import NotSingularError, analyze_point, singular_scan
from .surface import FinitenessError

FUZZ_GRID = (24, 24)
FUZZ_LINE_SAMPLES = 9
FUZZ_CURVE_SAMPLES = 12

FORBIDDEN = {"CuspidalS1Minus", "CuspidalLips", "D4Minus"}


@dataclass
class FuzzReport:
    cases: int = 0
    points: int = 0
    verdicts: dict = field(default_factory=dict)
    s1_checks: int = 0
    hessian_checks: int = 0
    violations: list = field(default_factory=list)
    agree: int = 0
    disagree: int = 0
    borderline: int = 0
    disagreements: list = field(default_factory=list)
    skipped: int = 0
    seconds: float = 0.0

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def run_fuzz(seed: int, count: int, with_oracle: bool = True) -> FuzzReport:
    t0 = time.perf_counter()
    rep = FuzzReport()
    for case in fuzz_corpus(seed, count):
        rep.cases += 1
        w = case.wdata
        scan = singular_scan(w, case.domain, FUZZ_GRID, FUZZ_LINE_SAMPLES, FUZZ_CURVE_SAMPLES)
        points = list(scan.points)
        for p in case.special:
            try:
                points.append(analyze_point(w, p))
            except (NotSingularError, FinitenessError, JetError):
                rep.skipped += 1
        rep.skipped += len(scan.skipped)
        results = []
        for sp in points:
            try:
                results.append(classify_point(w, sp))
            except (JetError, ValueError):
                rep.skipped += 1
        rep.points += len(results)
        for c in results:
            rep.verdicts[c.verdict.value] = rep.verdicts.get(c.verdict.value, 0) + 1
            assert c.verdict.value not in FORBIDDEN and isinstance(c.verdict, Verdict)
        if with_oracle:
            cc = crosscheck(w, results)
            rep.agree += cc["agree"]
            rep.disagree += cc["disagree"]
            rep.borderline += cc["borderline"]
            for row in cc["points"]:
                if not row["agree"] and not row["borderline"]:
                    rep.disagreements.append({"case": case.index, "kind": case.kind, **row,
                                              "wdata": w.texts()})
        audit = nonexistence_audit(w, results)
        rep.s1_checks += audit["s1_checks"]
        rep.hessian_checks += audit["hessian_checks"]
        for v in audit["violations"]:
            rep.violations.append({"case": case.index, **v})
    rep.seconds = time.perf_counter() - t0
    return rep
