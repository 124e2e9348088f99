"""Holmes-Thompson, max/min and (Randers) Busemann-Hausdorff volumes."""

from __future__ import annotations

from dataclasses import dataclass, field
from math import gamma, pi
from typing import NamedTuple

import jax.numpy as jnp
import numpy as np
from scipy.stats import qmc

from .curvature import kernels
from .errors import DomainError, IntegrationBudgetExceeded, WarpBoundViolated
from .metrics import MetricSpec, Randers, Riemannian, WarpedProduct

FORMS = ("HT", "max", "min", "BH-randers")
BATCH = 100_000


def ball_volume(n: int, r: float = 1.0) -> float:
    return pi ** (n / 2) / gamma(n / 2 + 1) * r**n


@dataclass
class VolumeEstimate:
    value: float
    std_error: float
    method: dict = field(default_factory=dict)
    form: str = "HT"


# -- batched pointwise evaluation -----------------------------------------------

def _F_batch(spec, X, Y) -> np.ndarray:
    return np.asarray(kernels(spec).batch("F")(jnp.asarray(X), jnp.asarray(Y)))


def _det_batch(spec, X, Y) -> np.ndarray:
    return np.linalg.det(np.asarray(kernels(spec).batch("g")(jnp.asarray(X), jnp.asarray(Y))))


def _tile(x, m):
    return np.broadcast_to(np.asarray(x, dtype=float), (m, len(x))).copy()


def sphere_directions(n: int, m: int, seed: int = 0) -> np.ndarray:
    """``m`` scrambled-Sobol points mapped to the unit sphere in R^n."""
    if n == 1:
        return np.array([[1.0], [-1.0]])
    if n == 2:
        t = (np.arange(m) + np.random.default_rng(seed).random()) * 2 * pi / m
        return np.column_stack([np.cos(t), np.sin(t)])
    u = qmc.Sobol(n, seed=seed).random_base2(int(np.ceil(np.log2(m))))[:m]
    z = np.sqrt(2.0) * _erfinv(2 * np.clip(u, 1e-12, 1 - 1e-12) - 1)
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def _erfinv(v):
    from scipy.special import erfinv

    return erfinv(v)


def sphere_quadrature(n: int, m: int = 64):
    """Nodes and weights integrating smooth functions over S^{n-1}.

    n = 2 uses the (spectrally accurate) trapezoid rule in the angle; n >= 3
    uses hyperspherical angles with Gauss-Legendre in each polar angle.
    """
    if n == 1:
        return np.array([[1.0], [-1.0]]), np.array([1.0, 1.0])
    t = np.arange(2 * m) * pi / m
    if n == 2:
        return np.column_stack([np.cos(t), np.sin(t)]), np.full(2 * m, pi / m)
    gl_x, gl_w = np.polynomial.legendre.leggauss(m)
    phi = 0.5 * pi * (gl_x + 1)
    wphi = 0.5 * pi * gl_w
    grids = np.meshgrid(*([phi] * (n - 2) + [t]), indexing="ij")
    wgrids = np.meshgrid(*([wphi] * (n - 2) + [np.full(2 * m, pi / m)]), indexing="ij")
    angles = [g.ravel() for g in grids]
    w = np.prod([g.ravel() for g in wgrids], axis=0)
    dirs = np.empty((w.size, n))
    sin_prod = np.ones(w.size)
    for k in range(n - 2):
        dirs[:, k] = sin_prod * np.cos(angles[k])
        w = w * np.sin(angles[k]) ** (n - 2 - k)
        sin_prod = sin_prod * np.sin(angles[k])
    dirs[:, n - 2] = sin_prod * np.cos(angles[n - 2])
    dirs[:, n - 1] = sin_prod * np.sin(angles[n - 2])
    return dirs, w


def radial_extent(spec: MetricSpec, x, n_dirs: int = 4096, seed: int = 0) -> float:
    """Largest Euclidean radius of the indicatrix {F(x, .) = 1}, sampled."""
    d = sphere_directions(spec.dim, n_dirs, seed)
    Fv = _F_batch(spec, _tile(x, len(d)), d)
    if np.any(Fv <= 0):
        raise DomainError("F is not positive on the unit sphere; {F<1} is unbounded")
    return float(np.max(1.0 / Fv))


# -- densities ------------------------------------------------------------------

def _mc_ball(spec, x, budget, seed, weight):
    """MC over the bounding box of {F(x,.) < 1}; returns (mean, std) of box-scaled integrand."""
    n = spec.dim
    R = 1.05 * radial_extent(spec, x)
    rng = np.random.default_rng(seed)
    box = (2 * R) ** n
    sums = []
    sq = []
    done = 0
    while done < budget:
        m = min(BATCH, budget - done)
        Y = rng.uniform(-R, R, (m, n))
        X = _tile(x, m)
        inside = _F_batch(spec, X, Y) < 1.0
        vals = np.zeros(m)
        if np.any(inside):
            vals[inside] = weight(X[inside], Y[inside])
        sums.append(vals.sum())
        sq.append((vals**2).sum())
        done += m
    mean = np.sum(sums) / budget
    var = max(np.sum(sq) / budget - mean**2, 0.0)
    return box * mean, box * np.sqrt(var / budget)


def indicatrix_volume_mc(spec: MetricSpec, x, budget: int = BATCH, seed: int = 0) -> VolumeEstimate:
    """Euclidean volume of {y : F(x, y) < 1} by rejection sampling."""
    val, se = _mc_ball(spec, x, int(budget), seed, lambda X, Y: np.ones(len(Y)))
    return VolumeEstimate(val, se, {"kind": "MC", "n_points": int(budget), "seed": seed}, "indicatrix")


def density_ht(spec: MetricSpec, x, budget: int = BATCH, seed: int = 0, method: str = "mc",
               mc_rel_tol: float = 0.05, quad_order: int = 64) -> VolumeEstimate:
    """sigma_HT(x) = (1/Vol B^n) * integral over {F < 1} of det g dy."""
    n = spec.dim
    vb = ball_volume(n)
    if method == "polar":
        # det g is 0-homogeneous: integral = (1/n) * sum over sphere of det g * F^-n
        dirs, w = sphere_quadrature(n, quad_order)
        X = _tile(x, len(dirs))
        val = float(np.sum(w * _det_batch(spec, X, dirs) * _F_batch(spec, X, dirs) ** (-n)) / (n * vb))
        return VolumeEstimate(val, 0.0, {"kind": "polar-quadrature", "order": quad_order}, "HT")
    if method != "mc":
        raise ValueError(f"unknown method {method!r}")
    val, se = _mc_ball(spec, x, int(budget), seed, lambda X, Y: _det_batch(spec, X, Y))
    est = VolumeEstimate(val / vb, se / vb, {"kind": "MC", "n_points": int(budget), "seed": seed}, "HT")
    if not est.value > 0 or est.std_error / est.value > mc_rel_tol:
        raise IntegrationBudgetExceeded(
            f"HT density relative error {est.std_error / max(est.value, 1e-300):.3e} > {mc_rel_tol}")
    return est


def _sqrt_det_dirs(spec, x, dirs):
    return np.sqrt(np.abs(_det_batch(spec, _tile(x, len(dirs)), dirs)))


def _orthonormal_tangents(d):
    """(m, n-1, n) orthonormal bases of the tangent spaces at unit vectors d."""
    m, n = d.shape
    out = np.empty((m, n - 1, n))
    for i in range(m):
        q, _ = np.linalg.qr(np.column_stack([d[i], np.eye(n)]))
        out[i] = q[:, 1:n].T
    return out


def density_extremal(spec: MetricSpec, x, which: str = "max", n_dirs: int = 4096,
                     n_refine: int = 8, seed: int = 0, sweeps: int = 4) -> float:
    """max/min of sqrt(det g(x, y)) over the indicatrix.

    sqrt(det g) is 0-homogeneous in y, so the search runs over unit directions:
    quasi-random candidates, then golden-section line searches along great
    circles through the best few.
    """
    if which not in ("max", "min"):
        raise ValueError("which must be 'max' or 'min'")
    sign = 1.0 if which == "max" else -1.0
    n = spec.dim
    d = sphere_directions(n, n_dirs, seed)
    vals = _sqrt_det_dirs(spec, x, d)
    if n == 1:
        return float(np.max(vals) if which == "max" else np.min(vals))
    if np.ptp(vals) <= 1e-9 * np.max(vals):
        # direction-independent det g (Riemannian, or a product of Riemannian factors):
        # nothing to refine beyond the sampled spread
        return float(np.max(vals) if which == "max" else np.min(vals))
    order = np.argsort(-sign * vals)[:n_refine]
    best = d[order]
    best_val = sign * vals[order]
    width = 2 * pi / np.sqrt(n_dirs) if n == 2 else 4.0 / n_dirs ** (1 / (n - 1))
    invphi = (np.sqrt(5) - 1) / 2
    for _ in range(sweeps):
        tang = _orthonormal_tangents(best)
        for k in range(n - 1):
            e = tang[:, k, :]

            def obj(t):
                y = np.cos(t)[:, None] * best + np.sin(t)[:, None] * e
                return sign * _sqrt_det_dirs(spec, x, y)

            a = np.full(len(best), -width)
            b = np.full(len(best), width)
            c = b - invphi * (b - a)
            dd = a + invphi * (b - a)
            fc, fd = obj(c), obj(dd)
            for _ in range(60):
                left = fc > fd  # maximise sign * value
                b = np.where(left, dd, b)
                a = np.where(left, a, c)
                c_new = b - invphi * (b - a)
                d_new = a + invphi * (b - a)
                c, dd = c_new, d_new
                fc, fd = obj(c), obj(dd)
            t = 0.5 * (a + b)
            cand = np.cos(t)[:, None] * best + np.sin(t)[:, None] * e
            cv = obj(t)
            better = cv > best_val
            best = np.where(better[:, None], cand, best)
            best_val = np.where(better, cv, best_val)
            best /= np.linalg.norm(best, axis=1, keepdims=True)
        width *= 0.5
    return float(sign * np.max(best_val))


def bh_randers_closed_form(b_norm: float, n: int) -> float:
    """sigma_BH / sqrt(det a) for a Randers norm with |b|_alpha = b_norm.

    {alpha + beta < 1} is an ellipsoid of volume Vol(B^n) (1 - |b|^2)^{-(n+1)/2}.
    """
    if not 0.0 <= b_norm < 1.0:
        raise DomainError(f"b_norm must lie in [0, 1), got {b_norm}")
    return (1.0 - b_norm**2) ** ((n + 1) / 2)


def ht_randers_closed_form(b_norm: float, n: int) -> float:
    """sigma_HT / sqrt(det a) for a Randers norm: identically 1 for |b| < 1."""
    if not 0.0 <= b_norm < 1.0:
        raise DomainError(f"b_norm must lie in [0, 1), got {b_norm}")
    return 1.0


def density(spec: MetricSpec, x, form: str = "HT", **kw) -> float:
    """Volume density sigma(x) of the requested form as a plain number."""
    x = np.asarray(x, dtype=float)
    if form == "HT":
        return density_ht(spec, x, **kw).value
    if form in ("max", "min"):
        return density_extremal(spec, x, form, **{k: v for k, v in kw.items() if k in ("n_dirs", "n_refine", "seed")})
    if form == "BH-randers":
        if not isinstance(spec, Randers):
            raise ValueError("the Busemann-Hausdorff closed form is only available for Randers specs")
        a = np.asarray(spec.alpha.matrix(jnp.asarray(x)))
        return bh_randers_closed_form(spec.b_norm(x), spec.dim) * float(np.sqrt(np.linalg.det(a)))
    raise ValueError(f"unknown volume form {form!r}")


# -- total volumes ----------------------------------------------------------------

def _axis_rule(lo, hi, periodic, m):
    if periodic:
        return lo + (hi - lo) * np.arange(m) / m, np.full(m, (hi - lo) / m)
    xg, wg = np.polynomial.legendre.leggauss(m)
    return 0.5 * (hi - lo) * (xg + 1) + lo, 0.5 * (hi - lo) * wg


def total_volume(spec: MetricSpec, domain=None, form: str = "HT", budget: int = BATCH,
                 seed: int = 0, orders=None, method: str = "quadrature", **density_kw) -> VolumeEstimate:
    """Integrate a density over a chart box.

    ``domain`` is ``(lo, hi)`` (defaults to the chart box; periodic axes use the
    trapezoid rule, the rest Gauss-Legendre).  ``method="mc-joint"`` (HT only)
    samples (x, y) jointly and integrates det g over {F <= 1}.
    """
    n = spec.dim
    lo, hi = (spec.chart.lo, spec.chart.hi) if domain is None else map(np.asarray, domain)
    periodic = spec.chart.periodic
    if method == "mc-joint":
        if form != "HT":
            raise ValueError("mc-joint integrates the Holmes-Thompson form only")
        return _ht_joint(spec, lo, hi, int(budget), seed)
    orders = np.broadcast_to(8 if orders is None else orders, (n,))
    rules = [_axis_rule(lo[i], hi[i], periodic[i], int(orders[i])) for i in range(n)]
    nodes = np.array(np.meshgrid(*[r[0] for r in rules], indexing="ij")).reshape(n, -1).T
    weights = np.prod(np.array(np.meshgrid(*[r[1] for r in rules], indexing="ij")).reshape(n, -1), axis=0)
    vals = np.empty(len(nodes))
    errs = np.zeros(len(nodes))
    for i, x in enumerate(nodes):
        if form == "HT":
            est = density_ht(spec, x, budget=budget, seed=seed + i, **density_kw)
            vals[i], errs[i] = est.value, est.std_error
        else:
            vals[i] = density(spec, x, form, **density_kw)
    value = float(np.sum(weights * vals))
    se = float(np.sqrt(np.sum((weights * errs) ** 2)))
    return VolumeEstimate(value, se, {"kind": "product-quadrature", "orders": [int(o) for o in orders],
                                      "budget": int(budget)}, form)


def _ht_joint(spec, lo, hi, budget, seed):
    n = spec.dim
    rng = np.random.default_rng(seed)
    probe = lo + (hi - lo) * rng.random((16, n))
    R = 1.2 * max(radial_extent(spec, p, 1024, seed) for p in probe)
    vol_x = float(np.prod(hi - lo))
    box = vol_x * (2 * R) ** n
    s = s2 = 0.0
    done = 0
    while done < budget:
        m = min(BATCH, budget - done)
        X = lo + (hi - lo) * rng.random((m, n))
        Y = rng.uniform(-R, R, (m, n))
        vals = np.zeros(m)
        inside = _F_batch(spec, X, Y) <= 1.0
        if np.any(inside):
            vals[inside] = _det_batch(spec, X[inside], Y[inside])
        s += vals.sum()
        s2 += (vals**2).sum()
        done += m
    mean = s / budget
    se = np.sqrt(max(s2 / budget - mean**2, 0.0) / budget)
    vb = ball_volume(n)
    return VolumeEstimate(box * mean / vb, box * se / vb,
                          {"kind": "MC-joint", "n_points": budget, "seed": seed, "radius": R}, "HT")


class VolumeBound(NamedTuple):
    bound: float
    holds: bool
    total: VolumeEstimate


def warped_volume_bound(w: WarpedProduct, a: float, b: float, vol_base: VolumeEstimate,
                        vol_fiber: VolumeEstimate, form: str = "HT", budget: int = 1_000_000,
                        seed: int = 0, grid: int = 64, total: VolumeEstimate | None = None,
                        **total_kw) -> VolumeBound:
    """Product bound on the warped volume given a <= f <= b.

    HT:      Vol(M) <= b^{2 n2} Vol(B^{n1}) Vol(B^{n2}(1/a)) / Vol(B^n) * Vol(M1) Vol(M2)
    max/min: Vol(M) <= b^{n2} Vol(M1) Vol(M2)
    """
    if not (0 < a <= b):
        raise ValueError("need 0 < a <= b")
    ch = w.base.chart
    axes = [np.linspace(c.lo, c.hi, grid, endpoint=not c.periodic) for c in ch.coords]
    pts = np.array(np.meshgrid(*axes, indexing="ij")).reshape(ch.dim, -1).T
    import jax

    fv = np.asarray(jax.vmap(w.f)(jnp.asarray(pts)))
    if fv.min() < a - 1e-12 or fv.max() > b + 1e-12:
        raise WarpBoundViolated(f"sampled f in [{fv.min():.6g}, {fv.max():.6g}] exits [{a}, {b}]")
    n1, n2 = w.n1, w.n2
    V1, V2 = vol_base.value, vol_fiber.value
    if form == "HT":
        factor = b ** (2 * n2) * ball_volume(n1) * ball_volume(n2, 1.0 / a) / ball_volume(n1 + n2)
    elif form in ("max", "min"):
        factor = b**n2
    else:
        raise ValueError(f"no warped bound for form {form!r}")
    bound = factor * V1 * V2
    bound_se = factor * np.hypot(vol_base.std_error * V2, vol_fiber.std_error * V1)
    if total is None:
        if form == "HT":
            total_kw.setdefault("method", "mc-joint")
        total = total_volume(w, form=form, budget=budget, seed=seed, **total_kw)
    holds = bool(total.value - 3 * total.std_error <= bound + 3 * bound_se)
    return VolumeBound(float(bound), holds, total)


def riemannian_density(spec: Riemannian, x) -> float:
    return float(np.sqrt(np.linalg.det(np.asarray(spec.matrix(jnp.asarray(x, dtype=jnp.float64))))))
