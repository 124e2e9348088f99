"""Mixed partial derivatives in chart (x) and tangent (y) coordinates.

Everything is nested forward-mode differentiation (``jax.jacfwd``), so results
are exact up to roundoff at any order; the engine never needs more than four
derivatives in a single request, higher totals are reached by nesting the
curvature formulas themselves.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import jax
import jax.numpy as jnp
import numpy as np

from .errors import NonFinite, OrderTooHigh, SlitViolation

MAX_ORDER = 4


@dataclass(frozen=True)
class DiffConfig:
    y_floor_rel: float = 1e-6
    y_reference: float = 1.0
    tol_d: float = 1e-7
    tol_sym: float = 1e-10

    @property
    def y_floor(self) -> float:
        return self.y_floor_rel * self.y_reference


DEFAULT = DiffConfig()


@dataclass
class DerivRequest:
    """Derivative request.

    ``orders`` holds ``(block, index, repetition)`` triples, block is ``"x"`` or
    ``"y"``; ``index=None`` keeps the whole gradient axis for that block.
    Axes appear in the result in the order the triples are listed.
    """

    target: Callable
    orders: Sequence[tuple[str, int | None, int]]
    basepoint: tuple = field(default_factory=tuple)


def check_slit(y, config: DiffConfig = DEFAULT) -> None:
    norm = float(np.linalg.norm(np.asarray(y, dtype=float)))
    if not norm > config.y_floor:
        raise SlitViolation(f"|y| = {norm:.3e} <= y_floor = {config.y_floor:.3e}")


def check_finite(value, what: str = "value"):
    arr = np.asarray(value)
    if not np.all(np.isfinite(arr)):
        raise NonFinite(f"{what} is not finite")
    return value


def _derive(fn: Callable, block: str, index: int | None) -> Callable:
    argnum = {"x": 0, "y": 1}[block]
    jac = jax.jacfwd(fn, argnums=argnum)
    if index is None:
        return jac
    return lambda x, y: jac(x, y)[..., index]


def partial(req: DerivRequest, config: DiffConfig = DEFAULT) -> np.ndarray:
    total = sum(rep for _, _, rep in req.orders)
    if total > MAX_ORDER:
        raise OrderTooHigh(f"total order {total} exceeds {MAX_ORDER}")
    x, y = (jnp.asarray(v, dtype=jnp.float64) for v in req.basepoint)
    check_slit(y, config)
    fn = req.target
    for block, index, rep in req.orders:
        if block not in ("x", "y"):
            raise ValueError(f"unknown variable block {block!r}")
        for _ in range(rep):
            fn = _derive(fn, block, index)
    out = np.asarray(fn(x, y))
    return check_finite(out, "derivative")


def hessian_y_fn(F2: Callable) -> Callable:
    """Traceable ``(x, y) -> 1/2 d^2 F2 / dy dy`` (symmetrised)."""
    h = jax.jacfwd(jax.jacfwd(F2, argnums=1), argnums=1)

    def g(x, y):
        m = 0.5 * h(x, y)
        return 0.5 * (m + m.T)

    return g


def hessian_y(F2: Callable, sample, config: DiffConfig = DEFAULT) -> np.ndarray:
    x, y = sample.x, sample.y
    check_slit(y, config)
    out = np.asarray(hessian_y_fn(F2)(jnp.asarray(x), jnp.asarray(y)))
    return check_finite(out, "fundamental tensor")


def grad(fn: Callable, argnum: int) -> Callable:
    """Forward-mode gradient of a scalar function."""
    return jax.jacfwd(fn, argnums=argnum)
