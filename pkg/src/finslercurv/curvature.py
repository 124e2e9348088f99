"""Spray, Riemann/flag/Ricci curvature, Berwald and E curvature, S-curvature.

All tensors are derived from ``spec.F2`` by forward-mode differentiation:

    G^i   = 1/4 g^{il} ([F^2]_{x^k y^l} y^k - [F^2]_{x^l})
    R^i_k = 2 G^i_{;x^k} - y^j G^i_{;x^j y^k} + 2 G^j G^i_{;y^j y^k} - G^i_{;y^j} G^j_{;y^k}
    B^i_{jkl} = G^i_{;y^j y^k y^l},   E_ij = 1/2 B^m_{ijm}

Geodesics then solve ``x'' + 2 G(x, x') = 0``.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass
from functools import cached_property, lru_cache

import jax
import jax.numpy as jnp
import numpy as np

from . import diffcore
from .errors import DegenerateFlag
from .metrics import MetricSpec, TangentSample

jfwd = jax.jacfwd


def spray_fn(F2):
    g_fn = diffcore.hessian_y_fn(F2)
    dF2_dx = jfwd(F2, argnums=0)
    mixed = jfwd(jfwd(F2, argnums=1), argnums=0)  # [l, k] = d^2 F2 / dy^l dx^k

    def G(x, y):
        rhs = mixed(x, y) @ y - dF2_dx(x, y)
        return 0.25 * jnp.linalg.solve(g_fn(x, y), rhs)

    return G


def riemann_fn(G):
    dG_dx = jfwd(G, argnums=0)
    dG_dy = jfwd(G, argnums=1)
    d2G_dydx = jfwd(dG_dy, argnums=0)  # [i, k, j] = d^2 G^i / dy^k dx^j
    d2G_dydy = jfwd(dG_dy, argnums=1)  # [i, j, k]

    def R(x, y):
        Gy = dG_dy(x, y)
        return (2.0 * dG_dx(x, y)
                - jnp.einsum("ikj,j->ik", d2G_dydx(x, y), y)
                + 2.0 * jnp.einsum("j,ijk->ik", G(x, y), d2G_dydy(x, y))
                - Gy @ Gy)

    return R


class Kernels:
    """Compiled pointwise kernels for one metric spec (built lazily)."""

    def __init__(self, spec: MetricSpec):
        self.spec = spec
        self._F2 = spec.F2
        self._g = diffcore.hessian_y_fn(spec.F2)
        self._G = spray_fn(spec.F2)
        self._R = riemann_fn(self._G)

    def _ricci(self, x, y):
        return jnp.trace(self._R(x, y))

    @cached_property
    def F(self):
        return jax.jit(self.spec.F)

    @cached_property
    def F2(self):
        return jax.jit(self._F2)

    @cached_property
    def g(self):
        return jax.jit(self._g)

    @cached_property
    def spray(self):
        return jax.jit(self._G)

    @cached_property
    def dG_dy(self):
        return jax.jit(jfwd(self._G, argnums=1))

    @cached_property
    def riemann(self):
        return jax.jit(self._R)

    @cached_property
    def ricci(self):
        return jax.jit(self._ricci)

    @cached_property
    def ricci_tensor(self):
        h = jfwd(jfwd(self._ricci, argnums=1), argnums=1)

        def rt(x, y):
            m = 0.5 * h(x, y)
            return 0.5 * (m + m.T)

        return jax.jit(rt)

    @cached_property
    def berwald(self):
        return jax.jit(jfwd(jfwd(jfwd(self._G, argnums=1), argnums=1), argnums=1))

    @cached_property
    def e_curvature(self):
        B = jfwd(jfwd(jfwd(self._G, argnums=1), argnums=1), argnums=1)

        def E(x, y):
            m = 0.5 * jnp.einsum("mijm->ij", B(x, y))
            return 0.5 * (m + m.T)

        return jax.jit(E)

    def batch(self, name: str):
        """vmapped version of a kernel over leading sample axes of (X, Y)."""
        cache = self.__dict__.setdefault("_batched", {})
        if name not in cache:
            fn = getattr(self, name)
            cache[name] = jax.jit(jax.vmap(fn))
        return cache[name]


@lru_cache(maxsize=128)
def kernels(spec: MetricSpec) -> Kernels:
    return Kernels(spec)


def _xy(sample: TangentSample):
    diffcore.check_slit(sample.y)
    return jnp.asarray(sample.x, dtype=jnp.float64), jnp.asarray(sample.y, dtype=jnp.float64)


def _np(val, what):
    return diffcore.check_finite(np.asarray(val), what)


@dataclass(frozen=True)
class SprayData:
    G: np.ndarray
    dG_dy: np.ndarray
    sample: TangentSample


def spray(spec: MetricSpec, sample: TangentSample) -> SprayData:
    k = kernels(spec)
    x, y = _xy(sample)
    return SprayData(_np(k.spray(x, y), "spray"), _np(k.dG_dy(x, y), "spray derivative"), sample)


def riemann_curvature(spec: MetricSpec, sample: TangentSample) -> np.ndarray:
    x, y = _xy(sample)
    return _np(kernels(spec).riemann(x, y), "Riemann curvature")


def ricci(spec: MetricSpec, sample: TangentSample) -> float:
    x, y = _xy(sample)
    return float(_np(kernels(spec).ricci(x, y), "Ricci curvature"))


def ricci_tensor(spec: MetricSpec, sample: TangentSample) -> np.ndarray:
    x, y = _xy(sample)
    return _np(kernels(spec).ricci_tensor(x, y), "Ricci tensor")


def berwald_curvature(spec: MetricSpec, sample: TangentSample) -> np.ndarray:
    x, y = _xy(sample)
    return _np(kernels(spec).berwald(x, y), "Berwald curvature")


def e_curvature(spec: MetricSpec, sample: TangentSample) -> np.ndarray:
    x, y = _xy(sample)
    return _np(kernels(spec).e_curvature(x, y), "E curvature")


def flag_curvature(spec: MetricSpec, sample: TangentSample, u, degeneracy: float = 1e-12) -> float:
    """K(P, y) for the flag P = span{y, u} with flagpole y."""
    x, y = _xy(sample)
    k = kernels(spec)
    u = np.asarray(u, dtype=float)
    g = np.asarray(k.g(x, y))
    yv = np.asarray(y)
    gyy, guu, gyu = yv @ g @ yv, u @ g @ u, yv @ g @ u
    denom = gyy * guu - gyu**2
    if not denom > degeneracy * gyy * guu:
        raise DegenerateFlag("flag vector u is parallel to the flagpole y")
    R = np.asarray(k.riemann(x, y))
    return float(_np((R @ u) @ g @ u / denom, "flag curvature"))


@dataclass
class EinsteinFit:
    """Per-base-point least-squares fit of Ric_ij = lambda g_ij."""

    points: list[np.ndarray]
    lambdas: np.ndarray
    residuals: np.ndarray  # max |Ric_ij - lambda g_ij| / max |g_ij| over the y-batch

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residuals)) if len(self.residuals) else 0.0


def _fit_group(rics, gs):
    rics = np.asarray(rics)
    gs = np.asarray(gs)
    lam = float(np.sum(rics * gs) / np.sum(gs * gs))
    res = max(float(np.max(np.abs(r - lam * g)) / np.max(np.abs(g))) for r, g in zip(rics, gs))
    return lam, res


def ricci_and_g_batch(spec: MetricSpec, X, Y):
    k = kernels(spec)
    X = jnp.asarray(X, dtype=jnp.float64)
    Y = jnp.asarray(Y, dtype=jnp.float64)
    return np.asarray(k.batch("ricci_tensor")(X, Y)), np.asarray(k.batch("g")(X, Y))


def einstein_fit(spec: MetricSpec, samples, lam=None) -> EinsteinFit:
    """Fit lambda(x) per distinct base point of ``samples``.

    With ``lam`` given (a number) the residual is measured against it instead of
    the fitted value, and ``lambdas`` echoes it.
    """
    groups: "OrderedDict[tuple, list[int]]" = OrderedDict()
    for i, s in enumerate(samples):
        diffcore.check_slit(s.y)
        groups.setdefault(tuple(np.round(s.x, 12)), []).append(i)
    X = np.array([s.x for s in samples])
    Y = np.array([s.y for s in samples])
    rics, gs = ricci_and_g_batch(spec, X, Y)
    diffcore.check_finite(rics, "Ricci tensor")
    points, lams, ress = [], [], []
    for key, idx in groups.items():
        if lam is None:
            l, r = _fit_group(rics[idx], gs[idx])
        else:
            l = float(lam)
            r = max(float(np.max(np.abs(rics[i] - l * gs[i])) / np.max(np.abs(gs[i]))) for i in idx)
        points.append(np.array(key))
        lams.append(l)
        ress.append(r)
    return EinsteinFit(points, np.array(lams), np.array(ress))


def direction_batch(spec: MetricSpec, x, n_dirs: int, seed: int = 0) -> list[TangentSample]:
    rng = np.random.default_rng(seed)
    ys = spec.random_vectors(rng, n_dirs)
    return [spec.sample(x, y) for y in ys]


@dataclass
class CurvatureReport:
    ricci: float
    ricci_tensor: np.ndarray
    flag: float | None
    einstein_lambda_fit: float
    einstein_residual: float
    berwald_norm: float
    E_norm: float
    sample: TangentSample


def curvature_report(spec: MetricSpec, samples, flag_u=None) -> list[CurvatureReport]:
    """Full curvature stack at each sample, lambda fitted per base point."""
    fit = einstein_fit(spec, samples)
    lam_at = {tuple(np.round(p, 12)): (l, r) for p, l, r in zip(fit.points, fit.lambdas, fit.residuals)}
    out = []
    for s in samples:
        B = berwald_curvature(spec, s)
        E = e_curvature(spec, s)
        flag = None
        if flag_u is not None:
            try:
                flag = flag_curvature(spec, s, flag_u)
            except DegenerateFlag:
                flag = None
        lam, res = lam_at[tuple(np.round(s.x, 12))]
        out.append(CurvatureReport(
            ricci=ricci(spec, s), ricci_tensor=ricci_tensor(spec, s), flag=flag,
            einstein_lambda_fit=lam, einstein_residual=res,
            berwald_norm=float(np.max(np.abs(B))), E_norm=float(np.max(np.abs(E))), sample=s))
    return out


# -- distortion and S-curvature -------------------------------------------------

def distortion(spec: MetricSpec, sample: TangentSample, volume_form: str = "HT", **density_kw) -> float:
    """tau = ln(sqrt(det g) / sigma(x)) for the chosen volume form."""
    from .volume import density

    x, y = _xy(sample)
    det = float(np.linalg.det(np.asarray(kernels(spec).g(x, y))))
    sigma = density(spec, np.asarray(sample.x), volume_form, **density_kw)
    return float(np.log(np.sqrt(det) / sigma))


def s_curvature(spec: MetricSpec, sample: TangentSample, volume_form: str = "HT",
                h: float = 1e-4, ode_step: float | None = None, **density_kw) -> float:
    """Derivative of the distortion along the geodesic through ``sample``.

    Fourth-order central difference in t with step ``h``.  The HT density is
    taken from deterministic polar quadrature so that it is smooth in x.
    """
    from .geodesics import integrate

    if volume_form == "HT":
        density_kw.setdefault("method", "polar")
    ode_step = h / 4 if ode_step is None else ode_step
    taus = {}
    for m in (-2, -1, 1, 2):
        traj = integrate(spec, sample, m * h, ode_step)
        s = spec.sample(traj.xs[-1], traj.vs[-1])
        taus[m] = distortion(spec, s, volume_form, **density_kw)
    return (taus[-2] - 8 * taus[-1] + 8 * taus[1] - taus[2]) / (12 * h)
