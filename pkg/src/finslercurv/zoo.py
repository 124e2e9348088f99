"""Ready-made metric specs used by tests, scripts and example configs."""

from __future__ import annotations

import numpy as np

from .metrics import Randers, Riemannian, WarpedProduct, make_chart

TWO_PI = 2 * np.pi


def _identity(n):
    return [["1" if i == j else "0" for j in range(n)] for i in range(n)]


def _diag(entries):
    n = len(entries)
    return [[entries[i] if i == j else "0" for j in range(n)] for i in range(n)]


def euclidean(n: int = 2, names=None, lo=-1.0, hi=1.0) -> Riemannian:
    names = names or [f"x{i + 1}" for i in range(n)]
    return Riemannian.build(make_chart(names, lo, hi), _identity(n))


def flat_torus(n: int = 2, names=None) -> Riemannian:
    names = names or [f"x{i + 1}" for i in range(n)]
    return Riemannian.build(make_chart(names, 0.0, TWO_PI, True), _identity(n))


def round_sphere(radius: float = 1.0, names=("theta", "phi")) -> Riemannian:
    """Polar chart, theta kept away from the poles."""
    th, ph = names
    chart = make_chart(names, [0.3, 0.0], [np.pi - 0.3, TWO_PI], [False, True])
    r2 = repr(float(radius) ** 2)
    return Riemannian.build(chart, _diag([r2, f"{r2} * sin({th})^2"]))


def hyperbolic_plane(names=("x1", "x2")) -> Riemannian:
    """Upper half-plane, second coordinate in [0.5, 2]."""
    chart = make_chart(names, [-1.0, 0.5], [1.0, 2.0])
    return Riemannian.build(chart, _diag([f"1 / {names[1]}^2"] * 2))


def diag_metric_a() -> Riemannian:
    return Riemannian.build(make_chart(["x1", "x2"]), _diag(["1 + x1^2", "2 + sin(x1 * x2)"]))


def diag_metric_b() -> Riemannian:
    return Riemannian.build(make_chart(["x1", "x2", "x3"]),
                            _diag(["exp(x2)", "1 + 0.5 * cos(x3)", "2 + x1^2 * x2^2"]))


def full_metric() -> Riemannian:
    """A non-diagonal 2D metric."""
    return Riemannian.build(make_chart(["x1", "x2"]), [["2 + x2^2", "0.3 * sin(x1)"],
                                                       ["0.3 * sin(x1)", "1 + x1^2"]])


def riemannian_suite() -> dict:
    return {"sphere": round_sphere(), "torus": flat_torus(2), "diag_a": diag_metric_a(),
            "diag_b": diag_metric_b(), "full": full_metric(), "half_plane": hyperbolic_plane()}


def randers_constant(b, names=None, periodic: bool = False) -> Randers:
    """Minkowski Randers norm |y| + b.y (constant b, Euclidean alpha)."""
    n = len(b)
    alpha = flat_torus(n, names) if periodic else euclidean(n, names)
    return Randers.build(alpha, [repr(float(v)) for v in b])


def randers_varying() -> Randers:
    """Randers metric with x-dependent b on a Euclidean box."""
    return Randers.build(euclidean(2), ["0.3 * sin(x2)", "0.2 * cos(x1)"])


# -- warped products -------------------------------------------------------------------

def hyperbolic_warped(n2: int = 2, fiber_names=None) -> WarpedProduct:
    """R x_{e^t} R^{n2}: hyperbolic space, Einstein with lambda = -n2."""
    base = euclidean(1, ["t"])
    fiber = euclidean(n2, fiber_names or [f"u{i + 1}" for i in range(n2)])
    return WarpedProduct.build(base, fiber, "exp(t)")


def circle_warp(fiber: str = "flat", n2: int = 2, warp: str = "2 + cos(theta)") -> WarpedProduct:
    """Circle base (theta periodic) warped over a flat or Randers torus fiber."""
    base = flat_torus(1, ["theta"])
    names = [f"u{i + 1}" for i in range(n2)]
    if fiber == "flat":
        fib = flat_torus(n2, names)
    elif fiber == "randers":
        fib = randers_constant([0.3] + [0.1] * (n2 - 1), names, periodic=True)
    else:
        raise ValueError(f"unknown fiber kind {fiber!r}")
    return WarpedProduct.build(base, fib, warp)


def torus_warp(warp: str = "2 + cos(theta)", fiber: str = "flat") -> WarpedProduct:
    """Flat 2-torus base (theta, phi) warped over a flat or Randers 2-torus."""
    base = flat_torus(2, ["theta", "phi"])
    fib = flat_torus(2, ["u1", "u2"]) if fiber == "flat" else randers_constant([0.3, 0.1], ["u1", "u2"], True)
    return WarpedProduct.build(base, fib, warp)


def sphere_product(warp: str = "1") -> WarpedProduct:
    """S^2 x S^2 with unit spheres; Einstein with lambda = mu = 1 when warp = 1."""
    return WarpedProduct.build(round_sphere(1.0, ("theta", "phi")), round_sphere(1.0, ("psi", "chi")), warp)


def hyperbolic_product(warp: str = "1") -> WarpedProduct:
    """H^2 x H^2; Einstein with lambda = mu = -1 when warp = 1."""
    return WarpedProduct.build(hyperbolic_plane(), hyperbolic_plane(("u1", "u2")), warp)


def sphere_over_torus(warp: str = "1") -> WarpedProduct:
    """Round sphere base over a flat circle fiber."""
    return WarpedProduct.build(round_sphere(), flat_torus(1, ["u1"]), warp)


def randers_base_warp(warp: str = "2 + cos(theta)", b=(0.3, 0.2)) -> WarpedProduct:
    """Berwald (constant-b Randers) torus base with a flat torus fiber."""
    base = randers_constant(b, ["theta", "phi"], periodic=True)
    return WarpedProduct.build(base, flat_torus(2, ["u1", "u2"]), warp)


def random_periodic_warp(seed: int, n_modes: int = 3, fiber_dim: int = 2, base_dim: int = 1) -> WarpedProduct:
    """Nonconstant positive trigonometric warp on a flat torus base."""
    rng = np.random.default_rng(seed)
    base_names = ["theta", "phi"][:base_dim]
    terms = ["3"]
    for _ in range(n_modes):
        k = rng.integers(1, 4, size=base_dim)
        amp = rng.uniform(0.1, 0.6)
        phase = rng.uniform(0, TWO_PI)
        arg = " + ".join(f"{int(ki)} * {nm}" for ki, nm in zip(k, base_names))
        terms.append(f"{amp:.6f} * cos({arg} + {phase:.6f})")
    base = flat_torus(base_dim, base_names)
    fiber = flat_torus(fiber_dim, [f"u{i + 1}" for i in range(fiber_dim)])
    return WarpedProduct.build(base, fiber, " + ".join(terms))
