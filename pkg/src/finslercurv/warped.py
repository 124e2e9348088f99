"""Closed forms for Finsler warped products M1 x_f M2 and their brute-force certification.

Sign convention for the Laplacian on the base: ``laplacian(f) = -tr_g Hess f``
(so ``laplacian(f) = -f''`` on a flat line).  Every closed form below uses it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import jax
import jax.numpy as jnp
import numpy as np

from .curvature import kernels
from .errors import NonpositiveWarp, NonRiemannianBase
from .metrics import MetricSpec, Riemannian, TangentSample, WarpedProduct

WarpedSpec = WarpedProduct
jfwd = jax.jacfwd

FAMILIES = ("eq11", "eq2", "eq3", "eq4", "eq5", "eq6", "eq7", "eq8")


def _require_riemannian(w: WarpedProduct) -> None:
    if not isinstance(w.base, Riemannian):
        raise NonRiemannianBase(f"base is {w.base.kind}, this relation needs a Riemannian base")


def assemble(w: WarpedProduct, grid: int = 16, require_riemannian_base: bool = True) -> MetricSpec:
    """Validate a warped spec and return it as a MetricSpec.

    ``F^2 = F1^2 + f^2 F2^2`` is evaluated lazily by ``WarpedProduct.F2``; here
    the base kind is checked and ``f > 0`` is verified on a lattice of the base box.
    """
    if require_riemannian_base:
        _require_riemannian(w)
    ch = w.base.chart
    axes = [np.linspace(c.lo, c.hi, grid, endpoint=not c.periodic) for c in ch.coords]
    pts = np.array(np.meshgrid(*axes, indexing="ij")).reshape(ch.dim, -1).T
    fv = np.asarray(jax.vmap(w.f)(jnp.asarray(pts)))
    if not np.all(fv > 0):
        i = int(np.argmin(fv))
        raise NonpositiveWarp(f"f = {fv[i]:.6g} <= 0 at x1={list(pts[i])}")
    return w


# -- warp calculus on the base ------------------------------------------------------

@lru_cache(maxsize=64)
def _calculus(w: WarpedProduct):
    _require_riemannian(w)
    base: Riemannian = w.base
    f = w.f
    df = jfwd(f)
    d2f = jfwd(df)
    dg = jfwd(base.matrix)  # [l, j, i] = d_i g_lj

    def christoffel(x1):
        g = base.matrix(x1)
        d = dg(x1)
        low = 0.5 * (jnp.einsum("lji->lij", d) + jnp.einsum("lij->lij", d) - jnp.einsum("ijl->lij", d))
        return jnp.einsum("kl,lij->kij", jnp.linalg.inv(g), low)

    def hess(x1):
        return d2f(x1) - jnp.einsum("kij,k->ij", christoffel(x1), df(x1))

    def laplacian(x1):
        return -jnp.einsum("ij,ij->", jnp.linalg.inv(base.matrix(x1)), hess(x1))

    def grad_norm_sq(x1):
        d = df(x1)
        return d @ jnp.linalg.solve(base.matrix(x1), d)

    return {
        "f": jax.jit(f), "df": jax.jit(df), "hess": jax.jit(hess), "christoffel": jax.jit(christoffel),
        "laplacian": jax.jit(laplacian), "grad_norm_sq": jax.jit(grad_norm_sq),
        "laplacian_b": jax.jit(jax.vmap(laplacian)), "f_b": jax.jit(jax.vmap(f)),
        "grad_norm_sq_b": jax.jit(jax.vmap(grad_norm_sq)), "hess_b": jax.jit(jax.vmap(hess)),
    }


def warp_value(w, x1) -> float:
    return float(w.f(jnp.asarray(x1, dtype=jnp.float64)))


def warp_gradient(w, x1) -> np.ndarray:
    return np.asarray(_calculus(w)["df"](jnp.asarray(x1, dtype=jnp.float64)))


def warp_hessian(w, x1) -> np.ndarray:
    """Covariant Hessian H^f_ij = d_i d_j f - Gamma^k_ij d_k f."""
    return np.asarray(_calculus(w)["hess"](jnp.asarray(x1, dtype=jnp.float64)))


def warp_laplacian(w, x1) -> float:
    """-tr_g H^f (positive where f is locally maximal)."""
    return float(_calculus(w)["laplacian"](jnp.asarray(x1, dtype=jnp.float64)))


def warp_grad_norm_sq(w, x1) -> float:
    return float(_calculus(w)["grad_norm_sq"](jnp.asarray(x1, dtype=jnp.float64)))


def _value(v, x):
    return float(v(x)) if callable(v) else float(v)


# -- spray and Berwald components -----------------------------------------------------

def _split(w, s: TangentSample):
    x = jnp.asarray(s.x, dtype=jnp.float64)
    y = jnp.asarray(s.y, dtype=jnp.float64)
    return x[: w.n1], y[: w.n1], x[w.n1:], y[w.n1:]


@lru_cache(maxsize=64)
def _closed_spray(w: WarpedProduct):
    kb, kf = kernels(w.base), kernels(w.fiber)
    f = w.f
    df2 = jfwd(lambda x1: f(x1) ** 2)

    def G(x, y):
        x1, x2 = x[: w.n1], x[w.n1:]
        y1, y2 = y[: w.n1], y[w.n1:]
        d = df2(x1)
        Gi = kb._G(x1, y1) - 0.25 * jnp.linalg.solve(kb._g(x1, y1), d) * w.fiber.F2(x2, y2)
        Ga = kf._G(x2, y2) + 0.5 / f(x1) ** 2 * (y1 @ d) * y2
        return Gi, Ga

    return jax.jit(G)


def warped_spray(w: WarpedProduct, sample: TangentSample):
    """(G^i, G^alpha) of the warped metric from base/fiber sprays and the warp."""
    Gi, Ga = _closed_spray(w)(jnp.asarray(sample.x), jnp.asarray(sample.y))
    return np.asarray(Gi), np.asarray(Ga)


@lru_cache(maxsize=64)
def _closed_berwald(w: WarpedProduct):
    kb, kf = kernels(w.base), kernels(w.fiber)
    n1, n2 = w.n1, w.n2
    f = w.f
    df2 = jfwd(lambda x1: f(x1) ** 2)
    ginv = lambda x1, y1: jnp.linalg.inv(kb._g(x1, y1))  # noqa: E731
    d1 = jfwd(ginv, argnums=1)
    d2 = jfwd(d1, argnums=1)
    d3 = jfwd(d2, argnums=1)
    Bb = jfwd(jfwd(jfwd(kb._G, argnums=1), argnums=1), argnums=1)
    Bf = jfwd(jfwd(jfwd(kf._G, argnums=1), argnums=1), argnums=1)
    F2f = w.fiber.F2
    dF = jfwd(F2f, argnums=1)
    ddF = jfwd(dF, argnums=1)
    dddF = jfwd(ddF, argnums=1)

    def fam(x, y):
        x1, x2 = x[:n1], x[n1:]
        y1, y2 = y[:n1], y[n1:]
        d = df2(x1)
        F2v = F2f(x2, y2)
        z = jnp.zeros
        return {
            "eq11": Bb(x1, y1) - 0.25 * jnp.einsum("ihjkl,h->ijkl", d3(x1, y1), d) * F2v,
            "eq2": Bf(x2, y2),
            "eq3": -0.25 * jnp.einsum("ihjk,h,a->ijka", d2(x1, y1), d, dF(x2, y2)),
            "eq4": -0.25 * jnp.einsum("ihj,h,ab->ijab", d1(x1, y1), d, ddF(x2, y2)),
            "eq5": -0.25 * jnp.einsum("ih,h,abc->iabc", ginv(x1, y1), d, dddF(x2, y2)),
            "eq6": z((n2, n1, n1, n1)),
            "eq7": z((n2, n1, n1, n2)),
            "eq8": z((n2, n1, n2, n2)),
        }

    return jax.jit(fam)


def berwald_slices(B: np.ndarray, n1: int) -> dict:
    """Cut a full Berwald tensor B[a,b,c,d] into the warped component families."""
    b, f = slice(0, n1), slice(n1, None)
    return {
        "eq11": B[b, b, b, b], "eq2": B[f, f, f, f], "eq3": B[b, b, b, f], "eq4": B[b, b, f, f],
        "eq5": B[b, f, f, f], "eq6": B[f, b, b, b], "eq7": B[f, b, b, f], "eq8": B[f, b, f, f],
    }


def warped_berwald_components(w: WarpedProduct, sample: TangentSample) -> dict:
    out = _closed_berwald(w)(jnp.asarray(sample.x), jnp.asarray(sample.y))
    return {k: np.asarray(v) for k, v in out.items()}


# -- Ricci blocks and Einstein relations --------------------------------------------------

@dataclass
class RicciBlocks:
    ij: np.ndarray
    i_alpha: np.ndarray
    alpha_beta: np.ndarray
    sample: TangentSample

    def full(self) -> np.ndarray:
        return np.block([[self.ij, self.i_alpha], [self.i_alpha.T, self.alpha_beta]])


@lru_cache(maxsize=64)
def _closed_ricci(w: WarpedProduct):
    calc = _calculus(w)
    kb, kf = kernels(w.base), kernels(w.fiber)
    n1, n2 = w.n1, w.n2
    f = w.f
    df = jfwd(f)
    hess = calc["hess"]
    lap = calc["laplacian"]
    gn2 = calc["grad_norm_sq"]
    ric_b = kb.ricci_tensor
    ric_f = kf.ricci_tensor
    Bf = jfwd(jfwd(jfwd(kf._G, argnums=1), argnums=1), argnums=1)

    def blocks(x, y):
        x1, x2 = x[:n1], x[n1:]
        y1, y2 = y[:n1], y[n1:]
        fv = f(x1)
        rij = ric_b(x1, y1) - n2 / fv * hess(x1)
        trace_B = jnp.einsum("cabc->ab", Bf(x2, y2))
        rab = (ric_f(x2, y2) + (y1 @ df(x1)) / fv * trace_B
               - (-fv * lap(x1) + (n2 - 1) * gn2(x1)) * kf._g(x2, y2))
        return rij, jnp.zeros((n1, n2)), rab

    return jax.jit(blocks)


def ricci_blocks(w: WarpedProduct, samples) -> list[RicciBlocks]:
    """Closed-form Ric_ij, Ric_i_alpha (= 0) and Ric_alpha_beta at each sample."""
    fn = _closed_ricci(w)
    out = []
    for s in samples:
        a, b, c = fn(jnp.asarray(s.x), jnp.asarray(s.y))
        out.append(RicciBlocks(np.asarray(a), np.asarray(b), np.asarray(c), s))
    return out


def compute_mu(w: WarpedProduct, lam, x1) -> float:
    """mu = lambda f^2 - f laplacian(f) + (n2 - 1) |grad f|^2 at x1."""
    x1 = np.asarray(x1, dtype=float)
    fv = warp_value(w, x1)
    return _value(lam, x1) * fv**2 - fv * warp_laplacian(w, x1) + (w.n2 - 1) * warp_grad_norm_sq(w, x1)


def _scalars(w, s):
    """(Scal_M1 at x1, Scal_M2 at (x2, y2)) computed from base and fiber alone."""
    x1, y1, x2, y2 = _split(w, s)
    kb, kf = kernels(w.base), kernels(w.fiber)
    s1 = float(jnp.einsum("ij,ij->", jnp.linalg.inv(kb.g(x1, y1)), kb.ricci_tensor(x1, y1)))
    s2 = float(jnp.einsum("ij,ij->", jnp.linalg.inv(kf.g(x2, y2)), kf.ricci_tensor(x2, y2)))
    return s1, s2


def scalar_relations(w: WarpedProduct, lam, mu, samples):
    """Max residuals of the three scalar-curvature relations over ``samples``.

    ``lam`` may be a number or a callable of the full point x; ``mu`` a number
    or a callable of x2.
    """
    _require_riemannian(w)
    n1, n2 = w.n1, w.n2
    r14 = r15 = r16 = 0.0
    for s in samples:
        x1 = s.x[:n1]
        x2 = s.x[n1:]
        lv = _value(lam, s.x)
        mv = _value(mu, x2)
        s1, s2 = _scalars(w, s)
        fv, lap, gn = warp_value(w, x1), warp_laplacian(w, x1), warp_grad_norm_sq(w, x1)
        r14 = max(r14, abs(s1 - (n1 * lv - n2 * lap / fv)))
        r15 = max(r15, abs(s2 - n2 * mv))
        rhs16 = n2 * (n2 - 1) * gn / fv**2 - 2 * n2 * lap / fv + (n1 + n2) * lv
        r16 = max(r16, abs(s1 + s2 / fv**2 - rhs16))
    return r14, r15, r16


@dataclass
class WarpedIdentityResiduals:
    res_f2: float | None = None
    res_f3: float | None = None
    res_f4: float | None = None
    res_f8: float | None = None
    res_f9: float | None = None
    res_f10: float | None = None
    res_scal_14: float | None = None
    res_scal_15: float | None = None
    res_scal_16: float | None = None
    spray_residual: float | None = None
    berwald_component_residuals: dict = field(default_factory=dict)
    berwald_family_max: dict = field(default_factory=dict)
    einstein: bool = False
    lambda_fit: float | None = None
    einstein_residual: float | None = None
    mu_fit: float | None = None
    n_samples: int = 0
    seed: int = 0

    def residuals(self) -> dict:
        """Every residual that was computed (None entries dropped)."""
        out = {k: getattr(self, k) for k in ("res_f2", "res_f3", "res_f4", "res_f8", "res_f9", "res_f10",
                                             "res_scal_14", "res_scal_15", "res_scal_16", "spray_residual")}
        out.update({f"berwald_{k}": v for k, v in self.berwald_component_residuals.items()})
        return {k: v for k, v in out.items() if v is not None}


def identity_suite(w: WarpedProduct, n_samples: int = 50, seed: int = 0, lam=None, mu=None,
                   tol_id: float = 1e-6) -> WarpedIdentityResiduals:
    """Certify every closed form against the assembled metric on random samples.

    The Einstein-form relations are evaluated only when the assembled metric is
    Einstein on the batch (or ``lam`` is supplied); otherwise they stay None.
    """
    samples = w.random_samples(n_samples, seed)
    X = jnp.asarray(np.array([s.x for s in samples]))
    Y = jnp.asarray(np.array([s.y for s in samples]))
    kw = kernels(w)
    out = WarpedIdentityResiduals(n_samples=n_samples, seed=seed)
    n1 = w.n1

    # spray
    Gi, Ga = jax.vmap(_closed_spray(w))(X, Y)
    G_bf = np.asarray(kw.batch("spray")(X, Y))
    out.spray_residual = float(np.max(np.abs(np.hstack([np.asarray(Gi), np.asarray(Ga)]) - G_bf)))

    # Berwald families
    fam = jax.vmap(_closed_berwald(w))(X, Y)
    B_bf = np.asarray(kw.batch("berwald")(X, Y))
    slices = berwald_slices(np.moveaxis(B_bf, 0, -1), n1)
    for k in FAMILIES:
        closed = np.moveaxis(np.asarray(fam[k]), 0, -1)
        out.berwald_component_residuals[k] = float(np.max(np.abs(closed - slices[k]), initial=0.0))
        out.berwald_family_max[k] = float(np.max(np.abs(slices[k]), initial=0.0))

    if not isinstance(w.base, Riemannian):
        return out

    # Ricci blocks
    rij, _, rab = jax.vmap(_closed_ricci(w))(X, Y)
    R_bf = np.asarray(kw.batch("ricci_tensor")(X, Y))
    g_bf = np.asarray(kw.batch("g")(X, Y))
    out.res_f2 = float(np.max(np.abs(np.asarray(rij) - R_bf[:, :n1, :n1])))
    out.res_f3 = float(np.max(np.abs(R_bf[:, :n1, n1:])))
    out.res_f4 = float(np.max(np.abs(np.asarray(rab) - R_bf[:, n1:, n1:])))

    # Einstein relations
    lam_s = np.sum(R_bf * g_bf, axis=(1, 2)) / np.sum(g_bf * g_bf, axis=(1, 2))
    if lam is not None:
        lam_s = np.array([_value(lam, s.x) for s in samples])
    ein_res = np.max(np.abs(R_bf - lam_s[:, None, None] * g_bf), axis=(1, 2)) / np.max(np.abs(g_bf), axis=(1, 2))
    out.einstein_residual = float(np.max(ein_res))
    out.lambda_fit = float(np.mean(lam_s))
    out.einstein = bool(out.einstein_residual < tol_id)
    if not out.einstein and lam is None:
        return out

    calc = _calculus(w)
    X1 = X[:, :n1]
    fv = np.asarray(calc["f_b"](X1))
    lap = np.asarray(calc["laplacian_b"](X1))
    gn = np.asarray(calc["grad_norm_sq_b"](X1))
    H = np.asarray(calc["hess_b"](X1))
    kb, kf = kernels(w.base), kernels(w.fiber)
    Rb = np.asarray(kb.batch("ricci_tensor")(X1, Y[:, :n1]))
    gb = np.asarray(kb.batch("g")(X1, Y[:, :n1]))
    Rf = np.asarray(kf.batch("ricci_tensor")(X[:, n1:], Y[:, n1:]))
    gf = np.asarray(kf.batch("g")(X[:, n1:], Y[:, n1:]))
    n2 = w.n2
    out.res_f8 = float(np.max(np.abs(Rb - lam_s[:, None, None] * gb - (n2 / fv)[:, None, None] * H)))
    mu_from_warp = lam_s * fv**2 - fv * lap + (n2 - 1) * gn
    mu_fiber = np.sum(Rf * gf, axis=(1, 2)) / np.sum(gf * gf, axis=(1, 2))
    if mu is not None:
        mu_fiber = np.array([_value(mu, s.x[n1:]) for s in samples])
    out.mu_fit = float(np.mean(mu_fiber))
    out.res_f9 = float(np.max(np.abs(Rf - mu_fiber[:, None, None] * gf)))
    out.res_f10 = float(np.max(np.abs(mu_fiber - mu_from_warp)))
    lam_by_x = {tuple(s.x): l for s, l in zip(samples, lam_s)}
    mu_by_x2 = {tuple(s.x[n1:]): m for s, m in zip(samples, mu_fiber)}
    out.res_scal_14, out.res_scal_15, out.res_scal_16 = scalar_relations(
        w, lambda x: lam_by_x[tuple(x)], lambda x2: mu_by_x2[tuple(x2)], samples)
    return out
