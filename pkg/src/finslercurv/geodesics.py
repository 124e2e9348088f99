"""Fixed-step RK4 integration of the geodesic equation x'' + 2 G(x, x') = 0."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import jax
import jax.numpy as jnp
import numpy as np

from . import diffcore
from .curvature import spray_fn
from .errors import BlowUp
from .metrics import MetricSpec, TangentSample

BLOWUP_FACTOR = 1e6


@dataclass
class GeodesicTrajectory:
    ts: np.ndarray
    xs: np.ndarray
    vs: np.ndarray
    speed_drift: float
    step: float
    method: str = "rk4"

    @property
    def samples(self):
        return list(zip(self.ts, self.xs, self.vs))


@lru_cache(maxsize=64)
def _stepper(spec: MetricSpec):
    G = spray_fn(spec.F2)
    lo = jnp.asarray(spec.chart.lo)
    period = jnp.asarray(spec.chart.hi - spec.chart.lo)
    periodic = jnp.asarray(spec.chart.periodic)

    def rhs(x, v):
        return v, -2.0 * G(x, v)

    def step(state, h):
        x, v = state
        k1x, k1v = rhs(x, v)
        k2x, k2v = rhs(x + 0.5 * h * k1x, v + 0.5 * h * k1v)
        k3x, k3v = rhs(x + 0.5 * h * k2x, v + 0.5 * h * k2v)
        k4x, k4v = rhs(x + h * k3x, v + h * k3v)
        x = x + h / 6.0 * (k1x + 2 * k2x + 2 * k3x + k4x)
        v = v + h / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
        x = jnp.where(periodic, lo + jnp.mod(x - lo, period), x)
        return (x, v), (x, v)

    @jax.jit
    def run(x0, v0, hs):
        _, (xs, vs) = jax.lax.scan(step, (x0, v0), hs)
        return xs, vs

    return run


def integrate(spec: MetricSpec, start: TangentSample, t_end: float, step: float) -> GeodesicTrajectory:
    """Integrate from ``start`` to time ``t_end`` (negative runs backwards).

    The step is shrunk slightly so that an integer number of steps lands on
    ``t_end`` exactly.
    """
    if not step > 0:
        raise ValueError("step must be positive")
    diffcore.check_slit(start.y)
    n = max(1, int(np.ceil(abs(t_end) / step - 1e-9)))
    h = t_end / n
    run = _stepper(spec)
    x0 = jnp.asarray(start.x, dtype=jnp.float64)
    v0 = jnp.asarray(start.y, dtype=jnp.float64)
    xs, vs = run(x0, v0, jnp.full((n,), h))
    xs = np.vstack([np.asarray(start.x)[None], np.asarray(xs)])
    vs = np.vstack([np.asarray(start.y)[None], np.asarray(vs)])
    speed0 = np.linalg.norm(vs[0])
    speeds = np.linalg.norm(vs, axis=1)
    if not np.all(np.isfinite(xs)) or not np.all(np.isfinite(vs)) or np.max(speeds) > BLOWUP_FACTOR * speed0:
        raise BlowUp("geodesic left the valid domain (velocity blow-up or non-finite state)")
    ts = np.linspace(0.0, t_end, n + 1)
    Fb = np.asarray(jax.vmap(spec.F)(jnp.asarray(xs), jnp.asarray(vs)))
    drift = float(np.max(np.abs(Fb - Fb[0])) / Fb[0])
    return GeodesicTrajectory(ts, xs, vs, drift, abs(h))


def ode_residual(spec: MetricSpec, traj: GeodesicTrajectory) -> float:
    """max |x'' + 2G(x, x')| with x'' from a 4th-order difference of stored velocities."""
    from .curvature import kernels

    h = traj.ts[1] - traj.ts[0]
    v = traj.vs
    acc = (v[:-4] - 8 * v[1:-3] + 8 * v[3:-1] - v[4:]) / (12 * h)
    G = np.asarray(kernels(spec).batch("spray")(jnp.asarray(traj.xs[2:-2]), jnp.asarray(v[2:-2])))
    return float(np.max(np.abs(acc + 2 * G)))
