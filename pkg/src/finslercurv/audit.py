"""Triviality and positivity audits for Einstein warped products.

Verdicts are tolerance-qualified findings, never proofs.  The warp Laplacian
follows ``laplacian(f) = -tr Hess f`` throughout; ``subharmonic`` means
``laplacian(f) >= 0`` in that convention.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import jax
import jax.numpy as jnp
import numpy as np

from .curvature import einstein_fit, kernels, ricci_and_g_batch
from .metrics import WarpedProduct
from .warped import _calculus, _require_riemannian

CONSISTENT = "consistent-with-trivial"
VIOLATED = "einstein-violated"
INCONCLUSIVE = "inconclusive"
HOLDS, FAILS, NA = "holds", "fails", "not-applicable"
CONVENTION = "laplacian(f) = -tr_g Hess f"


@dataclass
class AuditReport:
    kind: str
    lambda_fit: float
    lambda_residual: float
    mu_fit: float | None
    mu_residual: float | None
    f_variation: float
    f_min: float
    f_max: float
    subharmonicity: dict
    conditions: dict = field(default_factory=dict)
    verdict: str = INCONCLUSIVE
    contradiction: bool = False
    notes: list = field(default_factory=list)
    hessian_min_eig: float | None = None
    triv_tol: float = 0.0
    tol_id: float = 1e-6

    def to_dict(self) -> dict:
        return asdict(self)


def base_grid(w: WarpedProduct, grid: int = 64) -> np.ndarray:
    """Deterministic lattice over the base chart box (periodic axes exclude the endpoint)."""
    ch = w.base.chart
    axes = [np.linspace(c.lo, c.hi, grid, endpoint=not c.periodic) for c in ch.coords]
    return np.array(np.meshgrid(*axes, indexing="ij")).reshape(ch.dim, -1).T


def _warp_grid(w, pts):
    calc = _calculus(w)
    P = jnp.asarray(pts)
    f = np.asarray(calc["f_b"](P))
    lap = np.asarray(calc["laplacian_b"](P))
    gn = np.asarray(calc["grad_norm_sq_b"](P))
    H = np.asarray(calc["hess_b"](P))
    gb = np.asarray(jax.vmap(w.base.matrix)(P))
    # eigenvalues of the Hessian relative to the base metric
    L = np.linalg.cholesky(gb)
    Linv = np.linalg.inv(L)
    eig = np.linalg.eigvalsh(Linv @ H @ np.swapaxes(Linv, -1, -2))
    return f, lap, gn, float(eig.min())


def _sign_summary(lap, tol) -> dict:
    lo, hi = float(lap.min()), float(lap.max())
    if hi <= tol and lo >= -tol:
        sign = "zero"
    elif lo >= -tol:
        sign = "subharmonic"
    elif hi <= tol:
        sign = "superharmonic"
    else:
        sign = "mixed"
    return {"min_laplacian": lo, "max_laplacian": hi, "sign": sign, "convention": CONVENTION,
            "min_div_grad": -hi, "max_div_grad": -lo}


def _samples_with_grid(w, pts, n_samples, seed):
    """Seeded random samples plus the base lattice paired with random fiber data."""
    rand = w.random_samples(n_samples, seed)
    rng = np.random.default_rng(seed + 1)
    fch = w.fiber.chart
    x2 = fch.lo + (fch.hi - fch.lo) * rng.random((len(pts), w.n2))
    ys = w.random_vectors(rng, len(pts))
    lattice = [w.sample(np.concatenate([p, q]), y) for p, q, y in zip(pts, x2, ys)]
    return rand + lattice


def _residual_against(w, samples, lam):
    X = np.array([s.x for s in samples])
    Y = np.array([s.y for s in samples])
    rics, gs = ricci_and_g_batch(w, X, Y)
    res = np.max(np.abs(rics - lam * gs), axis=(1, 2)) / np.max(np.abs(gs), axis=(1, 2))
    i = int(np.argmax(res))
    return float(res[i]), samples[i]


def _verdict(f_variation, triv_tol, residual, tol_id):
    if residual >= tol_id:
        return VIOLATED
    if f_variation < triv_tol:
        return CONSISTENT
    return INCONCLUSIVE


def _fit_lambda(w, n_samples, seed):
    fit = einstein_fit(w, w.random_samples(n_samples, seed))
    return float(np.mean(fit.lambdas)), fit.max_residual


def _fit_mu(w, n_samples, seed):
    fit = einstein_fit(w.fiber, w.fiber.random_samples(n_samples, seed + 2))
    return fit


def triviality_audit(w: WarpedProduct, lambda_claim: float, grid: int = 64, n_samples: int = 50,
                     seed: int = 0, tol_id: float = 1e-6) -> AuditReport:
    """Test an Einstein claim with lambda <= 0 on a compact base against the warp's variation.

    A nonconstant warp can not carry such an Einstein metric, so a nonconstant
    ``f`` together with a residual below ``tol_id`` is reported as a
    contradiction (it would point at an engine defect).
    """
    _require_riemannian(w)
    if lambda_claim > 0:
        raise ValueError("triviality_audit needs lambda_claim <= 0")
    pts = base_grid(w, grid)
    f, lap, gn, hmin = _warp_grid(w, pts)
    f_var = float(f.max() - f.min())
    triv_tol = 1e-6 * float(f.max())
    samples = _samples_with_grid(w, pts, n_samples, seed)
    residual, worst = _residual_against(w, samples, float(lambda_claim))
    fiber_fit = _fit_mu(w, n_samples, seed)
    rep = AuditReport(
        kind="triviality", lambda_fit=float(lambda_claim), lambda_residual=residual,
        mu_fit=float(np.mean(fiber_fit.lambdas)), mu_residual=fiber_fit.max_residual,
        f_variation=f_var, f_min=float(f.min()), f_max=float(f.max()),
        subharmonicity=_sign_summary(lap, 1e-9 * max(1.0, float(np.abs(lap).max()))),
        hessian_min_eig=hmin, triv_tol=triv_tol, tol_id=tol_id)
    rep.verdict = _verdict(f_var, triv_tol, residual, tol_id)
    rep.notes.append(f"worst Einstein residual at x={[round(float(v), 6) for v in worst.x]}")
    if f_var >= triv_tol and residual < tol_id:
        rep.contradiction = True
        rep.notes.append("nonconstant warp with Einstein residual below tol_id under lambda <= 0")
    return rep


def positivity_audit(w: WarpedProduct, grid: int = 64, lam=None, mu=None, n_samples: int = 50,
                     seed: int = 0, tol_id: float = 1e-6) -> AuditReport:
    """Sign test for lambda > 0: a nonpositive fiber constant forces laplacian(f) >= lambda f > 0."""
    _require_riemannian(w)
    pts = base_grid(w, grid)
    f, lap, gn, hmin = _warp_grid(w, pts)
    f_var = float(f.max() - f.min())
    triv_tol = 1e-6 * float(f.max())
    if lam is None:
        lam_v, _ = _fit_lambda(w, n_samples, seed)
    else:
        lam_v = float(lam)
    samples = _samples_with_grid(w, pts, n_samples, seed)
    residual, _ = _residual_against(w, samples, lam_v)
    fiber_fit = _fit_mu(w, n_samples, seed)
    mu_vals = fiber_fit.lambdas if mu is None else np.array([float(mu)])
    rep = AuditReport(
        kind="positivity", lambda_fit=lam_v, lambda_residual=residual,
        mu_fit=float(np.mean(mu_vals)), mu_residual=fiber_fit.max_residual if mu is None else None,
        f_variation=f_var, f_min=float(f.min()), f_max=float(f.max()),
        subharmonicity=_sign_summary(lap, 1e-9 * max(1.0, float(np.abs(lap).max()))),
        hessian_min_eig=hmin, triv_tol=triv_tol, tol_id=tol_id)
    rep.verdict = _verdict(f_var, triv_tol, residual, tol_id)
    if not lam_v > 0:
        rep.conditions["positive_lambda_branch"] = {"status": NA, "reason": f"lambda = {lam_v:.6g} <= 0"}
        return rep
    if not np.min(mu_vals) <= 0:
        rep.conditions["positive_lambda_branch"] = {"status": NA, "reason": "fiber constant mu > 0"}
        return rep
    required = lam_v * f
    bad = np.nonzero(lap < required - 1e-9 * max(1.0, float(np.abs(required).max())))[0]
    entry = {"status": HOLDS, "implied": "laplacian(f) >= lambda f > 0 (subharmonic)",
             "mu_min": float(np.min(mu_vals)), "violations": int(bad.size)}
    if bad.size:
        entry["witness"] = [float(v) for v in pts[bad[0]]]
        rep.notes.append("subharmonicity required by mu <= 0 is violated on the base grid")
        if f_var >= triv_tol:
            rep.notes.append("compact base: a nonconstant subharmonic warp contradicts the maximum principle")
            rep.contradiction = residual < tol_id
    rep.conditions["positive_lambda_branch"] = entry
    return rep


def _scal_base(w, pts):
    kb = kernels(w.base)
    P = jnp.asarray(pts)
    Y = jnp.tile(jnp.eye(w.n1)[0], (len(pts), 1))
    R = np.asarray(kb.batch("ricci_tensor")(P, Y))
    g = np.asarray(kb.batch("g")(P, Y))
    return np.einsum("kij,kij->k", np.linalg.inv(g), R)


_IMPLIED = {"a": ">=", "b": "<=", "c": ">=", "d": ">=", "e": ">="}


def condition_suite_63(w: WarpedProduct, lam, mu, grid: int = 64, n_fiber: int = 8, seed: int = 0,
                       tol: float = 1e-9) -> dict:
    """Evaluate the scalar-curvature conditions (a)-(f) on the base lattice.

    ``lam`` is a number; ``mu`` a number or a callable of x2 evaluated on
    ``n_fiber`` seeded fiber points.  For each condition that holds, the
    implied sign of the warp Laplacian is compared with the computed one.
    """
    _require_riemannian(w)
    n1, n2 = w.n1, w.n2
    pts = base_grid(w, grid)
    f, lap, gn, _ = _warp_grid(w, pts)
    rng = np.random.default_rng(seed)
    fch = w.fiber.chart
    x2s = fch.lo + (fch.hi - fch.lo) * rng.random((n_fiber, n2))
    mus = np.array([mu(x2) if callable(mu) else float(mu) for x2 in x2s])
    lam = float(lam)
    s1 = _scal_base(w, pts)[:, None]           # (grid, 1)
    s2 = (n2 * mus)[None, :]                    # (1, fiber)
    sM = (n1 + n2) * lam
    fg = f[:, None]
    scale = max(1.0, float(np.abs(s1).max()), float(np.abs(s2).max()), abs(sM))
    slack = tol * scale

    def verdict(mask):
        ok = bool(np.all(mask))
        wit = None
        if not ok:
            i, j = np.unravel_index(np.argmin(mask), mask.shape)
            wit = {"x1": [float(v) for v in pts[i]], "x2": [float(v) for v in x2s[j]]}
        return (HOLDS if ok else FAILS), wit

    out = {}
    # (a): some fiber point whose threshold is below |grad f| at every base point
    if n2 < 2:
        out["a"] = {"status": NA, "reason": "needs n2 >= 2"}
    else:
        thr = np.sqrt(np.maximum(n2 * mus, 0.0) / (n2 * (n2 - 1)))
        good = np.sqrt(gn)[:, None] >= thr[None, :] - slack
        cols = np.all(good, axis=0)
        out["a"] = {"status": HOLDS if cols.any() else FAILS,
                    "witness": {"x2": [float(v) for v in x2s[int(np.argmax(cols))]]} if cols.any() else None}
    st, wit = verdict(np.broadcast_to(sM <= s1 + slack, (len(pts), n_fiber)))
    out["b"] = {"status": st, "witness": wit}
    if sM == 0:
        out["c"] = {"status": NA, "reason": "Scal_M = 0"}
    else:
        st, wit = verdict((sM - s2 >= s1 - slack) & (s2 / sM >= n2 / (n1 + n2) - tol))
        out["c"] = {"status": st, "witness": wit}
    st, wit = verdict(sM - s2 / fg**2 >= s1 - slack)
    out["d"] = {"status": st, "witness": wit}
    st, wit = verdict(np.broadcast_to(s1 <= slack, (len(pts), n_fiber)))
    out["e"] = {"status": st, "witness": wit}
    st, wit = verdict(s1 >= n1 * s2 / (n2 * fg**2) - slack)
    out["f"] = {"status": st, "witness": wit}

    lap_tol = 1e-9 * max(1.0, float(np.abs(lap).max()))
    grad_tol = 1e-9 * max(1.0, float(np.sqrt(gn).max()))
    for key, entry in out.items():
        if entry["status"] != HOLDS:
            continue
        if key == "f":
            rel = ">=" if n1 > n2 else "<=" if n1 < n2 else "grad=0"
        else:
            rel = _IMPLIED[key]
        if rel == "grad=0":
            bad = np.nonzero(np.sqrt(gn) > grad_tol)[0]
            entry["implied"] = "|grad f| = 0 (f constant)"
        elif rel == ">=":
            bad = np.nonzero(lap < -lap_tol)[0]
            entry["implied"] = "laplacian(f) >= 0"
        else:
            bad = np.nonzero(lap > lap_tol)[0]
            entry["implied"] = "laplacian(f) <= 0"
        entry["sign_check"] = "consistent" if bad.size == 0 else "violated"
        if bad.size:
            entry["sign_witness"] = [float(v) for v in pts[bad[0]]]
        entry["constancy_implied"] = True
    return out


def soundness_check(w: WarpedProduct, lam: float, mu: float, grid: int = 32, n_samples: int = 30,
                    seed: int = 0) -> list[AuditReport]:
    """Run every applicable audit; used for the constant-warp anchor cases."""
    reports = [positivity_audit(w, grid, lam, mu, n_samples, seed)]
    if lam <= 0:
        reports.append(triviality_audit(w, lam, grid, n_samples, seed))
    return reports


__all__ = ["AuditReport", "triviality_audit", "positivity_audit", "condition_suite_63", "base_grid",
           "soundness_check", "CONSISTENT", "VIOLATED", "INCONCLUSIVE"]
