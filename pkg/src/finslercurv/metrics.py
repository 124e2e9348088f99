"""Finsler metric specifications and the fundamental tensor.

A spec is an immutable description built from expression trees.  ``F2(x, y)``
is written with ``jax.numpy`` so that every curvature quantity can be
obtained by differentiating it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import jax.numpy as jnp
import numpy as np

from . import diffcore
from .errors import DimensionMismatch, DomainError, NonpositiveWarp, NotPositiveDefinite
from .expr import Expr, parse


@dataclass(frozen=True)
class Coord:
    name: str
    lo: float = -1.0
    hi: float = 1.0
    periodic: bool = False

    @property
    def period(self) -> float | None:
        return self.hi - self.lo if self.periodic else None


@dataclass(frozen=True)
class Chart:
    coords: tuple[Coord, ...]

    @property
    def dim(self) -> int:
        return len(self.coords)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.coords)

    @property
    def lo(self) -> np.ndarray:
        return np.array([c.lo for c in self.coords], dtype=float)

    @property
    def hi(self) -> np.ndarray:
        return np.array([c.hi for c in self.coords], dtype=float)

    @property
    def periodic(self) -> np.ndarray:
        return np.array([c.periodic for c in self.coords], dtype=bool)

    def reduce(self, x):
        """Wrap periodic coordinates into ``[lo, lo + period)``."""
        x = np.array(x, dtype=float)
        for i, c in enumerate(self.coords):
            if c.periodic:
                x[..., i] = c.lo + np.mod(x[..., i] - c.lo, c.hi - c.lo)
        return x

    def env(self, x) -> dict:
        return {c.name: x[i] for i, c in enumerate(self.coords)}

    def __add__(self, other: "Chart") -> "Chart":
        clash = set(self.names) & set(other.names)
        if clash:
            raise DimensionMismatch(f"coordinate names used twice: {sorted(clash)}")
        return Chart(self.coords + other.coords)


def make_chart(names, lo=-1.0, hi=1.0, periodic=False) -> Chart:
    names = list(names)
    n = len(names)
    lo = np.broadcast_to(lo, (n,))
    hi = np.broadcast_to(hi, (n,))
    periodic = np.broadcast_to(periodic, (n,))
    return Chart(tuple(Coord(str(a), float(b), float(c), bool(d))
                       for a, b, c, d in zip(names, lo, hi, periodic)))


@dataclass(frozen=True)
class ChartPoint:
    coords: np.ndarray
    chart: Chart | None = None

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=float)
        if self.chart is not None:
            c = self.chart.reduce(c)
        object.__setattr__(self, "coords", c)


@dataclass(frozen=True)
class TangentSample:
    point: ChartPoint
    vector: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vector, dtype=float)
        if v.shape != self.point.coords.shape:
            raise DimensionMismatch(
                f"vector dim {v.shape} does not match point dim {self.point.coords.shape}")
        object.__setattr__(self, "vector", v)

    @property
    def x(self) -> np.ndarray:
        return self.point.coords

    @property
    def y(self) -> np.ndarray:
        return self.vector


def tangent(x, y, chart: Chart | None = None) -> TangentSample:
    return TangentSample(ChartPoint(np.asarray(x, dtype=float), chart), np.asarray(y, dtype=float))


class MetricSpec:
    """Common interface of all metric kinds."""

    chart: Chart
    kind: str = "abstract"

    @property
    def dim(self) -> int:
        return self.chart.dim

    def F2(self, x, y):
        raise NotImplementedError

    def F(self, x, y):
        return jnp.sqrt(self.F2(x, y))

    def check_point(self, x) -> None:
        """Raise DomainError if the metric is invalid at ``x``."""

    def sample(self, x, y) -> TangentSample:
        return tangent(x, y, self.chart)

    def random_samples(self, n: int, seed: int = 0) -> list[TangentSample]:
        rng = np.random.default_rng(seed)
        xs = self.chart.lo + (self.chart.hi - self.chart.lo) * rng.random((n, self.dim))
        ys = self.random_vectors(rng, n)
        return [self.sample(x, y) for x, y in zip(xs, ys)]

    def random_vectors(self, rng, n: int) -> np.ndarray:
        y = rng.standard_normal((n, self.dim))
        return y / np.linalg.norm(y, axis=1, keepdims=True) * rng.uniform(0.5, 2.0, (n, 1))


def _matrix_entries(g, names) -> tuple[tuple[Expr, ...], ...]:
    rows = tuple(tuple(parse(e, set(names)) for e in row) for row in g)
    n = len(names)
    if len(rows) != n or any(len(r) != n for r in rows):
        raise DimensionMismatch(f"metric matrix must be {n}x{n}")
    return rows


@dataclass(frozen=True)
class Riemannian(MetricSpec):
    chart: Chart
    g: tuple[tuple[Expr, ...], ...]
    kind: str = field(default="riemannian", init=False)

    @classmethod
    def build(cls, chart: Chart, g) -> "Riemannian":
        return cls(chart, _matrix_entries(g, chart.names))

    def matrix(self, x):
        env = self.chart.env(x)
        m = jnp.stack([jnp.stack([jnp.asarray(e.eval(env), dtype=jnp.float64) * jnp.ones(())
                                  for e in row]) for row in self.g])
        return 0.5 * (m + m.T)

    def F2(self, x, y):
        return y @ self.matrix(x) @ y


@dataclass(frozen=True)
class Randers(MetricSpec):
    """F = sqrt(a(y, y)) + b(y) with a Riemannian ``alpha`` and covector ``b``."""

    alpha: Riemannian
    b: tuple[Expr, ...]
    kind: str = field(default="randers", init=False)

    @classmethod
    def build(cls, alpha: Riemannian, b) -> "Randers":
        b = tuple(parse(e, set(alpha.chart.names)) for e in b)
        if len(b) != alpha.dim:
            raise DimensionMismatch(f"Randers b has {len(b)} components, need {alpha.dim}")
        return cls(alpha, b)

    @property
    def chart(self) -> Chart:
        return self.alpha.chart

    def covector(self, x):
        env = self.chart.env(x)
        return jnp.stack([jnp.asarray(e.eval(env), dtype=jnp.float64) * jnp.ones(()) for e in self.b])

    def b_norm(self, x) -> float:
        a = np.asarray(self.alpha.matrix(jnp.asarray(x, dtype=jnp.float64)))
        b = np.asarray(self.covector(jnp.asarray(x, dtype=jnp.float64)))
        return float(np.sqrt(b @ np.linalg.solve(a, b)))

    def F(self, x, y):
        return jnp.sqrt(y @ self.alpha.matrix(x) @ y) + self.covector(x) @ y

    def F2(self, x, y):
        return self.F(x, y) ** 2

    def check_point(self, x) -> None:
        bn = self.b_norm(x)
        if not bn < 1.0:
            raise DomainError(f"Randers |b|_alpha = {bn:.6g} >= 1 at x={list(np.asarray(x))}")


@dataclass(frozen=True)
class MinkowskiNorm(MetricSpec):
    """x-independent norm given as an expression in ``y1..yn``."""

    chart: Chart
    norm: Expr
    kind: str = field(default="minkowski", init=False)

    @classmethod
    def build(cls, chart: Chart, norm) -> "MinkowskiNorm":
        return cls(chart, parse(norm, set(y_names(chart.dim))))

    def F(self, x, y):
        env = {f"y{i + 1}": y[i] for i in range(self.dim)}
        return jnp.asarray(self.norm.eval(env), dtype=jnp.float64)

    def F2(self, x, y):
        return self.F(x, y) ** 2


def y_names(n: int) -> list[str]:
    return [f"y{i + 1}" for i in range(n)]


@dataclass(frozen=True)
class WarpedProduct(MetricSpec):
    """F^2 = F1^2(x1, y1) + f(x1)^2 F2^2(x2, y2)."""

    base: MetricSpec
    fiber: MetricSpec
    warp: Expr
    kind: str = field(default="warped", init=False)

    @classmethod
    def build(cls, base: MetricSpec, fiber: MetricSpec, warp) -> "WarpedProduct":
        _ = base.chart + fiber.chart  # name clash check
        return cls(base, fiber, parse(warp, set(base.chart.names)))

    @cached_property
    def chart(self) -> Chart:
        return self.base.chart + self.fiber.chart

    @property
    def n1(self) -> int:
        return self.base.dim

    @property
    def n2(self) -> int:
        return self.fiber.dim

    def split(self, v):
        return v[..., : self.n1], v[..., self.n1:]

    def f(self, x1):
        return jnp.asarray(self.warp.eval(self.base.chart.env(x1)), dtype=jnp.float64) * jnp.ones(())

    def F2(self, x, y):
        x1, x2 = self.split(x)
        y1, y2 = self.split(y)
        return self.base.F2(x1, y1) + self.f(x1) ** 2 * self.fiber.F2(x2, y2)

    def check_point(self, x) -> None:
        x1, x2 = self.split(np.asarray(x, dtype=float))
        fv = float(self.f(jnp.asarray(x1)))
        if not fv > 0:
            raise NonpositiveWarp(f"warp f = {fv:.6g} <= 0 at x1={list(x1)}")
        self.base.check_point(x1)
        self.fiber.check_point(x2)

    def random_vectors(self, rng, n):
        return np.hstack([self.base.random_vectors(rng, n), self.fiber.random_vectors(rng, n)])


@dataclass(frozen=True)
class FundamentalTensor:
    g: np.ndarray
    g_inv: np.ndarray
    det_g: float
    sample: TangentSample


def eval_F(spec: MetricSpec, sample: TangentSample) -> float:
    diffcore.check_slit(sample.y)
    spec.check_point(sample.x)
    val = float(spec.F(jnp.asarray(sample.x), jnp.asarray(sample.y)))
    return diffcore.check_finite(val, "F")


def fundamental_tensor(spec: MetricSpec, sample: TangentSample) -> FundamentalTensor:
    from .curvature import kernels

    diffcore.check_slit(sample.y)
    g = np.asarray(kernels(spec).g(jnp.asarray(sample.x), jnp.asarray(sample.y)))
    diffcore.check_finite(g, "fundamental tensor")
    eig = np.linalg.eigvalsh(g)
    if not eig[0] > 0:
        raise NotPositiveDefinite(eig[0], sample.x, sample.y)
    g_inv = np.linalg.inv(g)
    return FundamentalTensor(g, g_inv, float(np.linalg.det(g)), sample)


@dataclass
class ValidationReport:
    n_samples: int
    seed: int
    failures: list = field(default_factory=list)  # (sample index, error kind, message)
    max_homogeneity_error: float = 0.0
    min_eigenvalue: float = float("inf")

    @property
    def ok(self) -> bool:
        return not self.failures

    def kinds(self) -> set[str]:
        return {k for _, k, _ in self.failures}


def check_metric(spec: MetricSpec, n_samples: int, seed: int = 0,
                 lambdas=(0.5, 2.0, 7.0), tol_h: float = 1e-10) -> ValidationReport:
    """Sample (x, y) pairs and test homogeneity, positivity and finiteness."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    from .curvature import kernels

    k = kernels(spec)
    report = ValidationReport(n_samples, seed)
    for idx, s in enumerate(spec.random_samples(n_samples, seed)):
        x, y = jnp.asarray(s.x), jnp.asarray(s.y)
        try:
            spec.check_point(s.x)
        except (DomainError, NonpositiveWarp) as exc:
            report.failures.append((idx, type(exc).__name__, str(exc)))
        Fv = float(k.F(x, y))
        if not np.isfinite(Fv):
            report.failures.append((idx, "NonFinite", "F is not finite"))
            continue
        for lam in lambdas:
            err = abs(float(k.F(x, lam * y)) - lam * Fv) / max(abs(lam * Fv), 1e-300)
            report.max_homogeneity_error = max(report.max_homogeneity_error, err)
            if err > tol_h:
                report.failures.append((idx, "Homogeneity", f"F(x,{lam}y) != {lam}F(x,y), rel err {err:.2e}"))
        g = np.asarray(k.g(x, y))
        if not np.all(np.isfinite(g)):
            report.failures.append((idx, "NonFinite", "fundamental tensor is not finite"))
            continue
        eig = np.linalg.eigvalsh(g)
        report.min_eigenvalue = min(report.min_eigenvalue, float(eig[0]))
        if not eig[0] > 0:
            report.failures.append((idx, "NotPositiveDefinite", str(NotPositiveDefinite(eig[0], s.x, s.y))))
    return report
