"""TOML run configs: parsing with located errors, and serialization back to text.

A config looks like::

    command = "warped-check"
    seed = 0

    [metric]
    kind = "warped"
    warp = "2 + cos(theta)"

    [metric.base]
    kind = "riemannian"
    coords = [{name = "theta", lo = 0.0, hi = 6.283185307179586, periodic = true}]
    g = [["1"]]

    [metric.fiber]
    kind = "randers"
    coords = [{name = "u1"}, {name = "u2"}]
    a = [["1", "0"], ["0", "1"]]
    b = ["0.3", "0"]
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, fields, replace

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib
import tomli_w

from .errors import DimensionMismatch, ParseError, UnknownSymbol
from .expr import Expr, parse, to_string
from .metrics import (Chart, Coord, MetricSpec, MinkowskiNorm, Randers, Riemannian, WarpedProduct,
                      y_names)

COMMANDS = ("curvature", "warped-check", "volume", "geodesic", "audit", "validate")
FORMATS = ("text", "structured")
TOP_KEYS = {"command", "seed", "samples", "grid", "budget", "out", "format", "tolerances", "metric", "params"}
PARAM_KEYS = {
    "curvature": {"flag_u"},
    "warped-check": {"lam", "mu", "require_riemannian_base"},
    "volume": {"form", "method", "orders", "points", "warp_bounds", "mc_rel_tol"},
    "geodesic": {"x0", "v0", "t_end", "step"},
    "audit": {"mode", "lambda_claim", "lam", "mu"},
    "validate": set(),
}
METRIC_KEYS = {
    "riemannian": {"kind", "coords", "g"},
    "randers": {"kind", "coords", "a", "b"},
    "minkowski": {"kind", "coords", "norm"},
    "warped": {"kind", "warp", "base", "fiber"},
}
COORD_KEYS = {"name", "lo", "hi", "periodic"}


@dataclass(frozen=True)
class Tolerances:
    tol_id: float = 1e-6
    tol_d: float = 1e-7
    tol_sym: float = 1e-10
    tol_h: float = 1e-10
    zero: float = 1e-8
    drift: float = 1e-6


@dataclass
class RunConfig:
    command: str
    metric: MetricSpec
    seed: int = 0
    samples: int = 50
    grid: int = 64
    budget: int = 100_000
    tolerances: Tolerances = field(default_factory=Tolerances)
    params: dict = field(default_factory=dict)
    out: str | None = None
    format: str = "text"


# -- locating keys in the source text -------------------------------------------------

_HEADER = re.compile(r"^\s*\[\s*([^\]]+?)\s*\]\s*(#.*)?$")
_KEY = re.compile(r"^\s*([A-Za-z0-9_\-\"\.]+)\s*=")


def _locate(text: str, path: tuple) -> tuple[int | None, int | None]:
    """(line, column) of the key at ``path`` (1-based), best effort."""
    table: tuple = ()
    fallback = (None, None)
    for lineno, line in enumerate(text.splitlines(), 1):
        m = _HEADER.match(line)
        if m:
            table = tuple(p.strip().strip('"') for p in m.group(1).split("."))
            if table == tuple(path):
                fallback = (lineno, line.index("[") + 1)
            continue
        m = _KEY.match(line)
        if m:
            key = tuple(p.strip('"') for p in m.group(1).split("."))
            if table + key == tuple(path):
                return lineno, m.start(1) + 1
    return fallback


def _locate_value(text: str, path: tuple, needle: str) -> tuple[int | None, int | None]:
    """Position just inside the quoted occurrence of ``needle`` at or after the key."""
    line, col = _locate(text, path)
    if line is None:
        return None, None
    lines = text.splitlines()
    for i in range(line - 1, len(lines)):
        for q in ('"', "'"):
            j = lines[i].find(q + needle + q)
            if j >= 0:
                return i + 1, j + 2
    return line, col


class _Collector:
    def __init__(self, text: str):
        self.text = text
        self.errors: list = []
        self.kinds: list = []

    def add(self, path, msg, kind=ParseError):
        line, col = _locate(self.text, tuple(path))
        self.errors.append((line, col, f"{'.'.join(map(str, path))}: {msg}"))
        self.kinds.append(kind)

    def add_expr(self, path, src, exc: ParseError):
        line, col = _locate_value(self.text, tuple(path), src)
        for eline, ecol, msg in exc.errors:
            c = col + ecol - 1 if (col is not None and ecol is not None) else col
            self.errors.append((line, c, f"{'.'.join(map(str, path))}: {msg} in {src!r}"))
            self.kinds.append(type(exc))

    def raise_if_any(self):
        if self.errors:
            cls = self.kinds[0] if self.kinds[0] in (UnknownSymbol, DimensionMismatch) else ParseError
            raise cls(self.errors)


# -- metric tables ------------------------------------------------------------------------

def _chart(col: _Collector, path, coords) -> Chart | None:
    if not isinstance(coords, list) or not coords:
        col.add(path + ("coords",), "expected a non-empty list of coordinate tables")
        return None
    out = []
    for i, c in enumerate(coords):
        if isinstance(c, str):
            c = {"name": c}
        if not isinstance(c, dict) or "name" not in c:
            col.add(path + ("coords",), f"entry {i} needs a 'name'")
            return None
        extra = set(c) - COORD_KEYS
        if extra:
            col.add(path + ("coords",), f"unknown coordinate field(s) {sorted(extra)}")
        out.append(Coord(str(c["name"]), float(c.get("lo", -1.0)), float(c.get("hi", 1.0)),
                         bool(c.get("periodic", False))))
    return Chart(tuple(out))


def _expr(col: _Collector, path, src, allowed) -> Expr | None:
    try:
        return parse(src, allowed)
    except ParseError as exc:
        col.add_expr(path, str(src), exc)
        return None


def _matrix(col, path, rows, names):
    n = len(names)
    if not isinstance(rows, list) or len(rows) != n or any(not isinstance(r, list) or len(r) != n for r in rows):
        col.add(path, f"metric matrix must be {n}x{n}", DimensionMismatch)
        return None
    out = tuple(tuple(_expr(col, path, e, set(names)) for e in r) for r in rows)
    return None if any(e is None for r in out for e in r) else out


def _metric(col: _Collector, path: tuple, table) -> MetricSpec | None:
    if not isinstance(table, dict):
        col.add(path, "expected a table")
        return None
    kind = table.get("kind")
    if kind not in METRIC_KEYS:
        col.add(path + ("kind",), f"unknown metric kind {kind!r}; expected one of {sorted(METRIC_KEYS)}")
        return None
    for k in sorted(set(table) - METRIC_KEYS[kind]):
        col.add(path + (k,), f"unknown field '{k}' for a {kind} metric")
    missing = sorted(METRIC_KEYS[kind] - set(table) - {"kind"})
    for k in missing:
        col.add(path, f"missing field '{k}'")
    if missing:
        return None
    if kind == "warped":
        base = _metric(col, path + ("base",), table["base"])
        fiber = _metric(col, path + ("fiber",), table["fiber"])
        if base is None or fiber is None:
            return None
        clash = set(base.chart.names) & set(fiber.chart.names)
        if clash:
            col.add(path + ("fiber",), f"coordinate names used twice: {sorted(clash)}", DimensionMismatch)
            return None
        warp = _expr(col, path + ("warp",), table["warp"], set(base.chart.names))
        return None if warp is None else WarpedProduct(base, fiber, warp)
    chart = _chart(col, path, table["coords"])
    if chart is None:
        return None
    if kind == "riemannian":
        g = _matrix(col, path + ("g",), table["g"], chart.names)
        return None if g is None else Riemannian(chart, g)
    if kind == "randers":
        a = _matrix(col, path + ("a",), table["a"], chart.names)
        b = table["b"]
        if not isinstance(b, list) or len(b) != chart.dim:
            col.add(path + ("b",), f"Randers b needs {chart.dim} components", DimensionMismatch)
            return None
        bs = tuple(_expr(col, path + ("b",), e, set(chart.names)) for e in b)
        if a is None or any(e is None for e in bs):
            return None
        return Randers(Riemannian(chart, a), bs)
    norm = _expr(col, path + ("norm",), table["norm"], set(y_names(chart.dim)))
    return None if norm is None else MinkowskiNorm(chart, norm)


def _coords_out(chart: Chart) -> list:
    return [{"name": c.name, "lo": c.lo, "hi": c.hi, "periodic": c.periodic} for c in chart.coords]


def metric_to_dict(spec: MetricSpec) -> dict:
    if isinstance(spec, WarpedProduct):
        return {"kind": "warped", "warp": to_string(spec.warp),
                "base": metric_to_dict(spec.base), "fiber": metric_to_dict(spec.fiber)}
    if isinstance(spec, Riemannian):
        return {"kind": "riemannian", "coords": _coords_out(spec.chart),
                "g": [[to_string(e) for e in r] for r in spec.g]}
    if isinstance(spec, Randers):
        return {"kind": "randers", "coords": _coords_out(spec.chart),
                "a": [[to_string(e) for e in r] for r in spec.alpha.g], "b": [to_string(e) for e in spec.b]}
    if isinstance(spec, MinkowskiNorm):
        return {"kind": "minkowski", "coords": _coords_out(spec.chart), "norm": to_string(spec.norm)}
    raise TypeError(f"cannot serialize {type(spec).__name__}")


def metric_from_dict(table: dict, text: str = "") -> MetricSpec:
    col = _Collector(text)
    spec = _metric(col, ("metric",), table)
    col.raise_if_any()
    return spec


# -- run config ---------------------------------------------------------------------------

def _int(col, key, v, lo=0):
    if isinstance(v, bool) or not isinstance(v, int) or v < lo:
        col.add((key,), f"expected an integer >= {lo}, got {v!r}")
        return None
    return v


def parse_config(text: str) -> RunConfig:
    """Parse TOML text into a validated RunConfig, or raise ParseError with locations."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        line = getattr(exc, "lineno", None)
        colno = getattr(exc, "colno", None)
        msg = getattr(exc, "msg", str(exc))
        raise ParseError([(line, colno, msg)]) from None
    col = _Collector(text)
    for k in sorted(set(doc) - TOP_KEYS):
        col.add((k,), f"unknown field '{k}'")
    command = doc.get("command")
    if command not in COMMANDS:
        col.add(("command",), f"unknown command {command!r}; expected one of {list(COMMANDS)}")
    kw = {}
    for key, lo in (("seed", 0), ("samples", 1), ("grid", 2), ("budget", 1)):
        if key in doc:
            v = _int(col, key, doc[key], lo)
            if v is not None:
                kw[key] = v
    if "format" in doc:
        if doc["format"] not in FORMATS:
            col.add(("format",), f"format must be one of {list(FORMATS)}")
        else:
            kw["format"] = doc["format"]
    if "out" in doc:
        kw["out"] = str(doc["out"])
    tol = doc.get("tolerances", {})
    names = {f.name for f in fields(Tolerances)}
    for k in sorted(set(tol) - names):
        col.add(("tolerances", k), f"unknown tolerance '{k}'")
    kw["tolerances"] = Tolerances(**{k: float(v) for k, v in tol.items() if k in names})
    params = doc.get("params", {})
    if command in PARAM_KEYS:
        for k in sorted(set(params) - PARAM_KEYS[command]):
            col.add(("params", k), f"unknown parameter '{k}' for command {command!r}")
    if "metric" not in doc:
        col.add(("metric",), "missing [metric] table")
        metric = None
    else:
        metric = _metric(col, ("metric",), doc["metric"])
    col.raise_if_any()
    return RunConfig(command=command, metric=metric, params=dict(params), **kw)


def config_to_dict(cfg: RunConfig) -> dict:
    d = {"command": cfg.command, "seed": cfg.seed, "samples": cfg.samples, "grid": cfg.grid,
         "budget": cfg.budget, "format": cfg.format}
    if cfg.out is not None:
        d["out"] = cfg.out
    d["tolerances"] = {f.name: getattr(cfg.tolerances, f.name) for f in fields(Tolerances)}
    if cfg.params:
        d["params"] = dict(cfg.params)
    d["metric"] = metric_to_dict(cfg.metric)
    return d


def serialize_config(cfg: RunConfig) -> str:
    return tomli_w.dumps(config_to_dict(cfg))


def with_overrides(cfg: RunConfig, **kw) -> RunConfig:
    return replace(cfg, **{k: v for k, v in kw.items() if v is not None})
