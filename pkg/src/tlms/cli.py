"""Command line entry point.

Exit codes: 0 success, 1 audit violations, 2 usage or parse error,
3 point is not singular, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import specfile
from .audit import run_fuzz
from .classify import classification_record, classify_point
from .fixtures import all_fixtures
from .jets import JetError
from .oracle import crosscheck
from .singular import NotSingularError, analyze_point, singular_scan, write_curves_csv
from .surface import FinitenessError, QuadratureError, write_obj

EXIT_USAGE, EXIT_NOT_SINGULAR, EXIT_NUMERIC = 2, 3, 4


class _Fail(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _point(text: str) -> tuple[float, float]:
    try:
        u, v = (float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected u,v but got {text!r}")
    return u, v


def _dump(obj, path=None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _scan_kwargs(spec) -> dict:
    o = spec.options
    return {"line_samples": int(o.get("line_samples", 33)),
            "curve_samples": int(o.get("curve_samples", 64)),
            "root_scan": int(o.get("root_scan", 2048))}


def _with_oracle(w, results: list) -> tuple[list, dict]:
    cc = crosscheck(w, results)
    recs = []
    for c, row in zip(results, cc["points"]):
        r = classification_record(c)
        r["oracle"] = {"verdict": row["verdict_oracle"], "agree": row["agree"],
                       "borderline": row["borderline"], "reasons": row["reasons_oracle"]}
        recs.append(r)
    summary = {k: cc[k] for k in ("agree", "disagree", "borderline")}
    return recs, summary


def cmd_classify(args) -> int:
    spec = specfile.load(args.spec)
    w = spec.wdata
    with specfile.tolerances(spec.options):
        try:
            sp = analyze_point(w, args.at, spec.order)
        except NotSingularError as exc:
            raise _Fail(EXIT_NOT_SINGULAR, str(exc))
        c = classify_point(w, sp, spec.order)
        recs, summary = _with_oracle(w, [c])
    out = recs[0]
    out["crosscheck"] = summary
    _dump(out, args.out)
    return 0


def cmd_scan(args) -> int:
    spec = specfile.load(args.spec)
    w = spec.wdata
    with specfile.tolerances(spec.options):
        scan = singular_scan(w, spec.domain, spec.grid, **_scan_kwargs(spec))
        results = [classify_point(w, sp, spec.order) for sp in scan.points]
        recs, summary = _with_oracle(w, results)
    counts: dict = {}
    for r in recs:
        counts[r["verdict"]] = counts.get(r["verdict"], 0) + 1
    report = {
        "domain": {"u": list(spec.domain[0]), "v": list(spec.domain[1]), "grid": list(spec.grid)},
        "w_zero_lines": {"u": [r.value for r in scan.lines.u_roots],
                         "v": [r.value for r in scan.lines.v_roots],
                         "excluded": [list(e) for e in scan.lines.excluded]},
        "curves": [{"points": len(c.points), "closed": c.closed, "end_reasons": list(c.end_reasons)}
                   for c in scan.curves],
        "points": recs,
        "counts": counts,
        "crosscheck": summary,
        "skipped": [{"u": c[0], "v": c[1], "error": msg} for c, msg in scan.skipped],
    }
    _dump(report, args.out)
    if args.csv:
        write_curves_csv(args.csv, scan, spec.domain)
    return 0


def cmd_transform(args) -> int:
    spec = specfile.load(args.spec)
    out = specfile.transformed(spec, conj=args.conjugate, theta=args.associate)
    text = specfile.dumps(out)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_mesh(args) -> int:
    spec = specfile.load(args.spec)
    w = spec.wdata
    (ulo, uhi), (vlo, vhi) = spec.domain
    us = np.linspace(ulo, uhi, spec.grid[0])
    vs = np.linspace(vlo, vhi, spec.grid[1])
    polylines = []
    if args.singular_overlay:
        with specfile.tolerances(spec.options):
            scan = singular_scan(w, spec.domain, spec.grid, **_scan_kwargs(spec))
        polylines += [c.points for c in scan.curves]
        polylines += [[(r.value, v) for v in vs] for r in scan.lines.u_roots]
        polylines += [[(u, r.value) for u in us] for r in scan.lines.v_roots]
    n = write_obj(args.out, w, us, vs, polylines)
    sys.stderr.write(f"wrote {n} surface vertices to {args.out}\n")
    return 0


def cmd_fixtures(args) -> int:
    fixtures = all_fixtures()
    if args.name:
        fixtures = [f for f in fixtures if f.name in args.name]
        missing = set(args.name) - {f.name for f in fixtures}
        if missing:
            raise _Fail(EXIT_USAGE, f"unknown fixtures: {', '.join(sorted(missing))}")
    if args.out_dir is None:
        for f in fixtures:
            sys.stdout.write(f"{f.name}\n")
        return 0
    os.makedirs(args.out_dir, exist_ok=True)
    for f in fixtures:
        spec = specfile.from_wdata(f.wdata, f.domain, f.grid)
        specfile.save(os.path.join(args.out_dir, f"{f.name}.toml"), spec)
    return 0


def cmd_audit(args) -> int:
    rep = run_fuzz(args.seed, args.count, with_oracle=args.oracle).to_dict()
    rep.pop("seconds")  # keep the output deterministic
    if args.dump:
        _dump(rep["disagreements"], args.dump)
    rep["disagreements"] = len(rep["disagreements"])
    _dump(rep, args.out)
    return 1 if rep["violations"] else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tlms", description=(
        "Singularities of generalized timelike minimal surfaces in Minkowski 3-space."))
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("classify", help="classify one singular point (use --at=u,v for negative u)")
    c.add_argument("spec")
    c.add_argument("--at", type=_point, required=True, metavar="U,V")
    c.add_argument("--out")
    c.set_defaults(fn=cmd_classify)

    s = sub.add_parser("scan", help="locate and classify all singular points in the domain")
    s.add_argument("spec")
    s.add_argument("--out", help="JSON report (default stdout)")
    s.add_argument("--csv", help="CSV polylines of the singular curves and omega lines")
    s.set_defaults(fn=cmd_scan)

    t = sub.add_parser("transform", help="write the conjugate or an associate spec")
    t.add_argument("spec")
    g = t.add_mutually_exclusive_group(required=True)
    g.add_argument("--conjugate", action="store_true")
    g.add_argument("--associate", type=float, metavar="THETA")
    t.add_argument("--out")
    t.set_defaults(fn=cmd_transform)

    m = sub.add_parser("mesh", help="export an OBJ mesh (vertex order x y t)")
    m.add_argument("spec")
    m.add_argument("--out", required=True)
    m.add_argument("--singular-overlay", action="store_true")
    m.set_defaults(fn=cmd_mesh)

    f = sub.add_parser("fixtures", help="list built-in fixtures or write them as spec files")
    f.add_argument("--out-dir")
    f.add_argument("--name", action="append")
    f.set_defaults(fn=cmd_fixtures)

    a = sub.add_parser("audit", help="seeded nonexistence fuzzing")
    a.add_argument("--seed", type=int, required=True)
    a.add_argument("--count", type=int, default=1000)
    a.add_argument("--oracle", action="store_true", help="also cross-check against the oracle")
    a.add_argument("--dump", help="write oracle disagreements here as JSON")
    a.add_argument("--out")
    a.set_defaults(fn=cmd_audit)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except _Fail as exc:
        sys.stderr.write(f"error: {exc}\n")
        return exc.code
    except specfile.SpecError as exc:
        sys.stderr.write(f"parse error: {exc}\n")
        return EXIT_USAGE
    except OSError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except NotSingularError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_NOT_SINGULAR
    except (JetError, FinitenessError, QuadratureError, ArithmeticError, ValueError) as exc:
        sys.stderr.write(f"numeric failure: {exc}\n")
        return EXIT_NUMERIC
