"""``finslercurv <command> --config <file>``: run a config and write a report.

Exit status: 0 when every check passes, 1 when a tolerance check fails (the
first failing check is named on stderr), 2 for config errors, 3 for engine
errors raised while running.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__, audit, geodesics, volume, warped
from .config import COMMANDS, FORMATS, RunConfig, metric_to_dict, parse_config, with_overrides
from .curvature import curvature_report
from .errors import FinslerError, ParseError
from .metrics import Randers, Riemannian, WarpedProduct, check_metric

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_ENGINE = 0, 1, 2, 3


def _clean(v):
    """Convert numpy scalars/arrays to plain JSON values; non-finite floats become strings."""
    if isinstance(v, dict):
        return {str(k): _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, np.ndarray):
        return _clean(v.tolist())
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer, int)):
        return int(v)
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else repr(v)
    return v


class Checks:
    """Ordered list of named tolerance checks."""

    def __init__(self):
        self.items = []

    def add(self, name, value, limit, tag=None, op="<"):
        value = None if value is None else float(value)
        if value is None:
            ok = True
        elif op == "<":
            ok = value < limit
        else:
            ok = value > limit
        self.items.append({"name": name, "tag": tag, "value": value, "limit": limit, "op": op, "ok": bool(ok)})

    def flag(self, name, ok, tag=None, detail=None):
        self.items.append({"name": name, "tag": tag, "ok": bool(ok), "detail": detail})

    @property
    def first_failure(self):
        return next((c for c in self.items if not c["ok"]), None)


# -- commands ---------------------------------------------------------------------------

def _cmd_validate(cfg: RunConfig, checks: Checks) -> dict:
    rep = check_metric(cfg.metric, cfg.samples, cfg.seed, tol_h=cfg.tolerances.tol_h)
    kinds = sorted(rep.kinds())
    checks.flag("metric-valid", rep.ok, "def2.1", ", ".join(kinds) or None)
    return {"n_samples": rep.n_samples, "failure_kinds": kinds, "n_failures": len(rep.failures),
            "failures": [list(f) for f in rep.failures[:20]],
            "max_homogeneity_error": rep.max_homogeneity_error, "min_eigenvalue": rep.min_eigenvalue}


def _cmd_curvature(cfg: RunConfig, checks: Checks) -> dict:
    spec = cfg.metric
    samples = spec.random_samples(cfg.samples, cfg.seed)
    u = cfg.params.get("flag_u")
    reps = curvature_report(spec, samples, None if u is None else np.asarray(u, dtype=float))
    rows = [{"x": r.sample.x, "y": r.sample.y, "ricci": r.ricci, "flag": r.flag,
             "lambda_fit": r.einstein_lambda_fit, "einstein_residual": r.einstein_residual,
             "berwald_norm": r.berwald_norm, "E_norm": r.E_norm} for r in reps]
    # Euler: Ric_ij y^i y^j = Ric for the 2-homogeneous Ric
    euler_err = max(abs(r.sample.y @ r.ricci_tensor @ r.sample.y - r.ricci) / max(1.0, abs(r.ricci)) for r in reps)
    out = {
        "tags": {"ricci": "2.6", "einstein": "2.8", "berwald": "2.12", "spray": "1.2", "riemann": "2.2.10"},
        "einstein_lambda_mean": float(np.mean([r.einstein_lambda_fit for r in reps])),
        "einstein_residual_max": float(max(r.einstein_residual for r in reps)),
        "berwald_norm_max": float(max(r.berwald_norm for r in reps)),
        "E_norm_max": float(max(r.E_norm for r in reps)),
        "samples": rows,
    }
    checks.add("ricci-euler", euler_err, 1e-8, "2.6")
    if isinstance(spec, Riemannian):
        checks.add("riemannian-is-berwald", out["berwald_norm_max"], cfg.tolerances.zero, "2.12")
    return out


def _laplacian_table(w, pts):
    rows = []
    for p in pts:
        lap = warped.warp_laplacian(w, p)
        rows.append({"x1": p, "f": warped.warp_value(w, p), "laplacian_neg_trace": lap, "div_grad": -lap,
                     "grad_norm_sq": warped.warp_grad_norm_sq(w, p)})
    return rows


def _cmd_warped(cfg: RunConfig, checks: Checks) -> dict:
    w = cfg.metric
    if not isinstance(w, WarpedProduct):
        raise FinslerError("warped-check needs a warped metric")
    tol = cfg.tolerances
    warped.assemble(w, require_riemannian_base=cfg.params.get("require_riemannian_base", True))
    res = warped.identity_suite(w, cfg.samples, cfg.seed, cfg.params.get("lam"), cfg.params.get("mu"), tol.tol_id)
    tags = {"res_f2": "f2", "res_f3": "f3", "res_f4": "f4", "res_f8": "f8", "res_f9": "f9", "res_f10": "f10",
            "res_scal_14": "1.4", "res_scal_15": "1.5", "res_scal_16": "1.6", "spray_residual": "coeff"}
    residuals = {}
    for key, tag in tags.items():
        v = getattr(res, key)
        residuals[tag] = v
        if v is not None:
            checks.add(key, v, tol.zero if tag == "f3" else tol.tol_id, tag)
    for fam, v in res.berwald_component_residuals.items():
        residuals[fam] = v
        checks.add(f"berwald-{fam}", v, tol.tol_id * 0.1, fam)
    for fam in ("eq6", "eq7", "eq8"):
        checks.add(f"berwald-{fam}-vanishes", res.berwald_family_max[fam], tol.zero, fam)
    ch = w.base.chart
    pts = [ch.lo + (ch.hi - ch.lo) * t for t in (0.0, 0.25, 0.5)]
    out = {
        "residuals": residuals,
        "berwald_family_max": res.berwald_family_max,
        "einstein": res.einstein, "lambda_fit": res.lambda_fit, "einstein_residual": res.einstein_residual,
        "mu_fit": res.mu_fit,
        "is_berwald": all(v < tol.zero for v in res.berwald_family_max.values()),
    }
    if isinstance(w.base, Riemannian):
        out["laplacian"] = {"convention": "laplacian = -tr Hess f; div_grad = +tr Hess f",
                            "points": _laplacian_table(w, pts)}
        if res.lambda_fit is not None:
            out["mu_from_warp"] = [warped.compute_mu(w, res.lambda_fit, p) for p in pts]
    return out


def _cmd_volume(cfg: RunConfig, checks: Checks) -> dict:
    spec = cfg.metric
    p = cfg.params
    form = p.get("form", "HT")
    method = p.get("method", "quadrature")
    out = {"form": form, "tag": "2.02" if form == "HT" else "maxmin"}
    kw = {}
    if form == "HT" and "mc_rel_tol" in p:
        kw["mc_rel_tol"] = float(p["mc_rel_tol"])
    pts = p.get("points")
    if pts:
        dens = []
        for x in pts:
            if form == "HT":
                est = volume.density_ht(spec, np.asarray(x, float), budget=cfg.budget, seed=cfg.seed, **kw)
                dens.append({"x": x, "value": est.value, "std_error": est.std_error})
            else:
                dens.append({"x": x, "value": volume.density(spec, np.asarray(x, float), form)})
        out["densities"] = dens
    if isinstance(spec, Randers):
        x0 = spec.chart.lo + 0.5 * (spec.chart.hi - spec.chart.lo)
        bn = spec.b_norm(x0)
        out["randers_closed_form"] = {"b_norm": bn, "HT": volume.ht_randers_closed_form(bn, spec.dim),
                                      "BH": volume.bh_randers_closed_form(bn, spec.dim)}
    est = volume.total_volume(spec, form=form, budget=cfg.budget, seed=cfg.seed,
                              orders=p.get("orders"), method=method, **kw)
    out["total"] = {"value": est.value, "std_error": est.std_error, "method": est.method}
    bounds = p.get("warp_bounds")
    if bounds is not None:
        if not isinstance(spec, WarpedProduct):
            raise FinslerError("warp_bounds only apply to warped metrics")
        a, b = map(float, bounds)
        vb = volume.total_volume(spec.base, form=form, budget=cfg.budget, seed=cfg.seed + 1)
        vf = volume.total_volume(spec.fiber, form=form, budget=cfg.budget, seed=cfg.seed + 2)
        vb_ = volume.warped_volume_bound(spec, a, b, vb, vf, form, total=est, grid=cfg.grid)
        out["warped_bound"] = {"a": a, "b": b, "bound": vb_.bound, "holds": vb_.holds,
                               "vol_base": vb.value, "vol_fiber": vf.value,
                               "tag": "thm3.2" if form == "HT" else "thm3.3"}
        checks.flag("warped-volume-bound", vb_.holds, out["warped_bound"]["tag"])
    return out


def _cmd_geodesic(cfg: RunConfig, checks: Checks) -> dict:
    spec = cfg.metric
    p = cfg.params
    ch = spec.chart
    x0 = np.asarray(p.get("x0", ch.lo + 0.5 * (ch.hi - ch.lo)), float)
    v0 = np.asarray(p.get("v0", np.eye(spec.dim)[0]), float)
    t_end = float(p.get("t_end", 10.0))
    step = float(p.get("step", 1e-3))
    traj = geodesics.integrate(spec, spec.sample(x0, v0), t_end, step)
    checks.add("speed-drift", traj.speed_drift, cfg.tolerances.drift, "2.2a")
    stride = max(1, (len(traj.ts) - 1) // 10)
    return {"tag": "2.2a", "t_end": t_end, "step": traj.step, "n_steps": len(traj.ts) - 1,
            "speed_drift": traj.speed_drift, "x_end": traj.xs[-1], "v_end": traj.vs[-1],
            "trace": [{"t": t, "x": x} for t, x in zip(traj.ts[::stride], traj.xs[::stride])]}


def _cmd_audit(cfg: RunConfig, checks: Checks) -> dict:
    w = cfg.metric
    if not isinstance(w, WarpedProduct):
        raise FinslerError("audit needs a warped metric")
    p = cfg.params
    mode = p.get("mode", "triviality")
    if mode == "triviality":
        rep = audit.triviality_audit(w, float(p.get("lambda_claim", 0.0)), cfg.grid, cfg.samples, cfg.seed,
                                     cfg.tolerances.tol_id)
        out = {"mode": mode, "tag": "thm5.4", "report": rep.to_dict()}
    elif mode == "positivity":
        rep = audit.positivity_audit(w, cfg.grid, p.get("lam"), p.get("mu"), cfg.samples, cfg.seed,
                                     cfg.tolerances.tol_id)
        out = {"mode": mode, "tag": "thm6.1", "report": rep.to_dict()}
    elif mode == "conditions":
        lam = p.get("lam", p.get("lambda_claim"))
        if lam is None or "mu" not in p:
            raise FinslerError("conditions mode needs params lam and mu")
        cond = audit.condition_suite_63(w, lam, p["mu"], cfg.grid, seed=cfg.seed)
        out = {"mode": mode, "tag": "thm6.3", "conditions": cond}
        checks.flag("engine-consistent", True, "thm6.3")
        return out
    else:
        raise FinslerError(f"unknown audit mode {mode!r}")
    checks.flag("engine-consistent", not rep.contradiction, out["tag"],
                "; ".join(rep.notes) if rep.contradiction else None)
    return out


HANDLERS = {"validate": _cmd_validate, "curvature": _cmd_curvature, "warped-check": _cmd_warped,
            "volume": _cmd_volume, "geodesic": _cmd_geodesic, "audit": _cmd_audit}


# -- orchestration ------------------------------------------------------------------------

def build_report(cfg: RunConfig) -> tuple[dict, int, str | None]:
    """Run the command; return (report, exit status, first failure message)."""
    checks = Checks()
    t0 = time.perf_counter()
    error = None
    try:
        result = HANDLERS[cfg.command](cfg, checks)
    except FinslerError as exc:
        result = None
        error = {"type": type(exc).__name__, "message": str(exc)}
    wall = time.perf_counter() - t0
    report = {
        "tool": "finslercurv", "version": __version__, "command": cfg.command, "seed": cfg.seed,
        "samples": cfg.samples, "grid": cfg.grid, "budget": cfg.budget,
        "tolerances": asdict(cfg.tolerances),
        "metric": metric_to_dict(cfg.metric), "params": cfg.params,
        "result": result, "checks": checks.items, "error": error,
    }
    if error is not None:
        status, msg = EXIT_ENGINE, f"{error['type']}: {error['message']}"
    elif checks.first_failure is not None:
        c = checks.first_failure
        status = EXIT_CHECK
        msg = f"check '{c['name']}' failed" + (f" [{c['tag']}]" if c.get("tag") else "")
        if c.get("value") is not None:
            msg += f": {c['value']:.3e} vs limit {c['limit']:.1e}"
        if c.get("detail"):
            msg += f" ({c['detail']})"
    else:
        status, msg = EXIT_OK, None
    report["status"] = {"exit": status, "first_failure": msg}
    report["timing"] = {"wall_clock_s": wall}
    return _clean(report), status, msg


def structured(report: dict) -> str:
    return json.dumps(report, indent=2, ensure_ascii=False) + "\n"


def strip_timing(text: str) -> str:
    """Structured report text without its wall-clock block (for reproducibility checks)."""
    doc = json.loads(text)
    doc.pop("timing", None)
    return structured(doc)


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def render_text(report: dict) -> str:
    lines = [f"finslercurv {report['version']}  command={report['command']}  seed={report['seed']}",
             f"metric: {report['metric']['kind']}"]
    res = report.get("result") or {}
    if report["command"] == "warped-check" and res:
        lines.append("identity residuals:")
        for tag, v in res["residuals"].items():
            lines.append(f"  [{tag}] {_fmt(v) if v is not None else 'n/a (metric not Einstein)'}")
        lines.append("berwald family max |entry|:")
        for k, v in res["berwald_family_max"].items():
            lines.append(f"  [{k}] {_fmt(v)}")
        lines.append(f"einstein={res['einstein']} lambda_fit={_fmt(res['lambda_fit'])} mu_fit={_fmt(res['mu_fit'])}")
        lap = res.get("laplacian")
        if lap:
            lines.append("warp Laplacian, both sign conventions:")
            for row in lap["points"]:
                lines.append(f"  x1={[round(v, 6) for v in row['x1']]}  f={_fmt(row['f'])}  "
                             f"-tr Hess f = {_fmt(row['laplacian_neg_trace'])}  "
                             f"div grad f = {_fmt(row['div_grad'])}")
    elif report["command"] == "audit" and res:
        if "report" in res:
            r = res["report"]
            lines.append(f"[{res['tag']}] verdict: {r['verdict']}  contradiction: {r['contradiction']}")
            lines.append(f"  lambda={_fmt(r['lambda_fit'])} residual={_fmt(r['lambda_residual'])} "
                         f"f_variation={_fmt(r['f_variation'])}")
            s = r["subharmonicity"]
            lines.append(f"  -tr Hess f in [{_fmt(s['min_laplacian'])}, {_fmt(s['max_laplacian'])}]  "
                         f"div grad f in [{_fmt(s['min_div_grad'])}, {_fmt(s['max_div_grad'])}]  ({s['sign']})")
            for n in r["notes"]:
                lines.append(f"  note: {n}")
        for k, c in (res.get("conditions") or {}).items():
            lines.append(f"  ({k}) {c['status']}" + (f"  implies {c['implied']}: {c['sign_check']}"
                                                      if "implied" in c and "sign_check" in c else ""))
    else:
        for k, v in res.items():
            if k in ("samples", "trace", "failures"):
                continue
            lines.append(f"{k}: {_fmt(v) if not isinstance(v, (dict, list)) else json.dumps(v)}")
    if report.get("error"):
        lines.append(f"error: {report['error']['type']}: {report['error']['message']}")
    lines.append("checks:")
    for c in report["checks"]:
        mark = "ok  " if c["ok"] else "FAIL"
        val = f" {_fmt(c['value'])} {c['op']} {_fmt(c['limit'])}" if c.get("value") is not None else ""
        tag = f" [{c['tag']}]" if c.get("tag") else ""
        lines.append(f"  {mark} {c['name']}{tag}{val}")
    lines.append(f"exit: {report['status']['exit']}  wall: {report['timing']['wall_clock_s']:.2f}s")
    return "\n".join(lines) + "\n"


def run(cfg: RunConfig) -> int:
    report, status, msg = build_report(cfg)
    text = structured(report) if cfg.format == "structured" else render_text(report)
    if cfg.out:
        Path(cfg.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if msg:
        print(f"finslercurv: {msg}", file=sys.stderr)
    return status


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="finslercurv", description="Finsler curvature and volume engine")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, type=Path)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--budget", type=int)
    ap.add_argument("--out")
    ap.add_argument("--format", choices=FORMATS)
    args = ap.parse_args(argv)
    try:
        cfg = parse_config(args.config.read_text(encoding="utf-8"))
    except OSError as exc:
        print(f"finslercurv: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ParseError as exc:
        for line, col, msg in exc.errors:
            loc = f"{args.config}:{line}:{col}: " if line is not None else f"{args.config}: "
            print(f"{loc}{msg}", file=sys.stderr)
        return EXIT_CONFIG
    cfg = with_overrides(cfg, command=args.command, seed=args.seed, budget=args.budget,
                         out=args.out, format=args.format)
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
