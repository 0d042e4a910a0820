"""Surface spec files: a small TOML schema around the expression DSL.

A spec holds exactly one of

    [wdata]        g1, g2, w1, w2 (strings), base = [u0, v0], f0 = [t, x, y]
    [nullcurves]   phi, psi (three strings each), derivative = bool, base

plus an optional ``[domain]`` (``u``, ``v`` ranges and ``grid``) and
``[options]`` (jet ``order``, scan sampling and the classification
tolerances ``zero_tol`` / ``nonzero_tol``).
"""

from __future__ import annotations

import contextlib
import math
from dataclasses import dataclass, field

import tomli
import tomli_w

from . import classify as _classify
from .expr import ParseError, PreferredQuotient, parse, to_text
from .jets import DEFAULT_ORDER
from .surface import NullCurvePair, WData, from_null_curves

DEFAULT_DOMAIN = ((-1.0, 1.0), (-1.0, 1.0))
DEFAULT_GRID = (64, 64)
OPTION_KEYS = {"order", "line_samples", "curve_samples", "root_scan", "zero_tol", "nonzero_tol"}


class SpecError(ValueError):
    """Malformed spec; ``where`` names the offending key and offset if known."""

    def __init__(self, message: str, where: str = ""):
        super().__init__(f"{where}: {message}" if where else message)
        self.where = where


@dataclass
class SurfaceSpec:
    wdata: WData
    kind: str  # "wdata" or "nullcurves"
    texts: dict
    domain: tuple = DEFAULT_DOMAIN
    grid: tuple = DEFAULT_GRID
    options: dict = field(default_factory=dict)

    @property
    def order(self) -> int:
        return int(self.options.get("order", DEFAULT_ORDER))


def _expr(text, where: str):
    if not isinstance(text, str):
        raise SpecError(f"expected a quoted expression, got {text!r}", where)
    try:
        return parse(text)
    except ParseError as exc:
        raise SpecError(str(exc), f"{where} (offset {exc.offset})") from exc


def _pair(value, where: str, n: int = 2) -> tuple:
    if not isinstance(value, list) or len(value) != n:
        raise SpecError(f"expected a list of {n} numbers", where)
    try:
        out = tuple(float(x) for x in value)
    except (TypeError, ValueError) as exc:
        raise SpecError(f"expected numbers, got {value!r}", where) from exc
    if not all(math.isfinite(x) for x in out):
        raise SpecError("values must be finite", where)
    return out


def _range(value, where: str) -> tuple:
    lo, hi = _pair(value, where)
    if not lo < hi:
        raise SpecError(f"empty range [{lo}, {hi}]", where)
    return lo, hi


def from_dict(data: dict) -> SurfaceSpec:
    has_w, has_n = "wdata" in data, "nullcurves" in data
    if has_w == has_n:
        raise SpecError("exactly one of [wdata] or [nullcurves] is required")
    unknown = set(data) - {"wdata", "nullcurves", "domain", "options"}
    if unknown:
        raise SpecError(f"unknown sections {sorted(unknown)}")
    if has_w:
        b = data["wdata"]
        texts = {}
        exprs = {}
        for k in ("g1", "g2", "w1", "w2"):
            if k not in b:
                raise SpecError("missing key", f"wdata.{k}")
            texts[k] = b[k]
            exprs[k] = _expr(b[k], f"wdata.{k}")
        base = _pair(b.get("base", [0.0, 0.0]), "wdata.base")
        f0 = _pair(b.get("f0", [0.0, 0.0, 0.0]), "wdata.f0", 3)
        w = WData(exprs["g1"], exprs["g2"], exprs["w1"], exprs["w2"], base, f0)
        kind = "wdata"
    else:
        b = data["nullcurves"]
        texts = {}
        comps = {}
        for k in ("phi", "psi"):
            v = b.get(k)
            if not isinstance(v, list) or len(v) != 3:
                raise SpecError("expected three expressions", f"nullcurves.{k}")
            texts[k] = list(v)
            comps[k] = tuple(_expr(t, f"nullcurves.{k}[{i}]") for i, t in enumerate(v))
        deriv = bool(b.get("derivative", False))
        texts["derivative"] = deriv
        base = _pair(b.get("base", [0.0, 0.0]), "nullcurves.base")
        w = from_null_curves(NullCurvePair(comps["phi"], comps["psi"], deriv, base))
        kind = "nullcurves"
    d = data.get("domain", {})
    domain = (_range(d.get("u", list(DEFAULT_DOMAIN[0])), "domain.u"),
              _range(d.get("v", list(DEFAULT_DOMAIN[1])), "domain.v"))
    grid = d.get("grid", list(DEFAULT_GRID))
    if (not isinstance(grid, list) or len(grid) != 2
            or not all(isinstance(g, int) and g >= 2 for g in grid)):
        raise SpecError("expected two integers >= 2", "domain.grid")
    opts = dict(data.get("options", {}))
    bad = set(opts) - OPTION_KEYS
    if bad:
        raise SpecError(f"unknown options {sorted(bad)}", "options")
    return SurfaceSpec(w, kind, texts, domain, tuple(grid), opts)


def loads(text: str) -> SurfaceSpec:
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise SpecError(str(exc), "toml") from exc
    return from_dict(data)


def load(path) -> SurfaceSpec:
    with open(path, "rb") as fh:
        raw = fh.read()
    return loads(raw.decode("utf-8"))


def to_dict(spec: SurfaceSpec) -> dict:
    out: dict = {}
    if spec.kind == "wdata":
        block = {k: spec.texts[k] for k in ("g1", "g2", "w1", "w2")}
        block["base"] = list(spec.wdata.base)
        block["f0"] = list(spec.wdata.f0)
        out["wdata"] = block
    else:
        out["nullcurves"] = {"phi": list(spec.texts["phi"]), "psi": list(spec.texts["psi"]),
                             "derivative": bool(spec.texts["derivative"]),
                             "base": list(spec.wdata.base)}
    out["domain"] = {"u": list(spec.domain[0]), "v": list(spec.domain[1]), "grid": list(spec.grid)}
    if spec.options:
        out["options"] = dict(spec.options)
    return out


def dumps(spec: SurfaceSpec) -> str:
    return tomli_w.dumps(to_dict(spec))


def save(path, spec: SurfaceSpec) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(spec))


def from_wdata(w: WData, domain=DEFAULT_DOMAIN, grid=DEFAULT_GRID, options=None) -> SurfaceSpec:
    """Spec for in-memory W-data.

    W-data derived from null curves (g stored as a two-branch quotient) is
    written as a [nullcurves] block so the 0/0 resolution survives a round trip.
    """
    if w.curves is not None and isinstance(w.g1, PreferredQuotient):
        c = w.curves
        texts = {"phi": [to_text(e, "u") for e in c.phi], "psi": [to_text(e, "v") for e in c.psi],
                 "derivative": c.derivative}
        return SurfaceSpec(w, "nullcurves", texts, tuple(domain), tuple(grid), dict(options or {}))
    return SurfaceSpec(w, "wdata", w.texts(), tuple(domain), tuple(grid), dict(options or {}))


def _wrap(text: str, factor: float) -> str:
    if factor == 1.0:
        return text
    return f"({factor!r})*({text})"


def transformed(spec: SurfaceSpec, conj: bool = False, theta: float | None = None) -> SurfaceSpec:
    """Conjugate and/or associate by wrapping the w (or curve) strings in a scalar factor.

    The spec keeps its block type; ``theta = 0`` leaves the text unchanged.
    """
    k1 = k2 = 1.0
    if conj:
        k2 = -k2
    if theta is not None and theta != 0.0:
        k1 *= math.exp(theta)
        k2 *= math.exp(-theta)
    data = to_dict(spec)
    if spec.kind == "wdata":
        data["wdata"]["w1"] = _wrap(data["wdata"]["w1"], k1)
        data["wdata"]["w2"] = _wrap(data["wdata"]["w2"], k2)
    else:
        nc = data["nullcurves"]
        nc["phi"] = [_wrap(t, k1) for t in nc["phi"]]
        nc["psi"] = [_wrap(t, k2) for t in nc["psi"]]
    return from_dict(data)


@contextlib.contextmanager
def tolerances(options: dict):
    """Temporarily apply ``zero_tol`` / ``nonzero_tol`` overrides."""
    old = (_classify.ZERO_TOL, _classify.NONZERO_TOL)
    try:
        _classify.ZERO_TOL = float(options.get("zero_tol", old[0]))
        _classify.NONZERO_TOL = float(options.get("nonzero_tol", old[1]))
        if not 0.0 < _classify.ZERO_TOL <= _classify.NONZERO_TOL:
            raise SpecError("need 0 < zero_tol <= nonzero_tol", "options")
        yield
    finally:
        _classify.ZERO_TOL, _classify.NONZERO_TOL = old
