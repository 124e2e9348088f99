"""Independent reference computations, sharing no code with the engine.

Riemannian quantities come from sympy via Christoffel symbols; the metric
entries are re-read from their strings by sympy's own parser.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
import sympy as sp


def _sym(text: str, names):
    loc = {n: sp.Symbol(n) for n in names}
    loc.update({"ln": sp.log, "e": sp.E, "pi": sp.pi})
    return sp.sympify(text.replace("^", "**"), locals=loc)


class ChristoffelOracle:
    """Levi-Civita connection, Riemann/Ricci tensors of g(x) given as strings."""

    def __init__(self, names, g_strings):
        self.names = list(names)
        xs = sp.symbols(self.names)
        self.xs = xs
        n = len(xs)
        g = sp.Matrix(n, n, lambda i, j: _sym(g_strings[i][j], self.names))
        g = (g + g.T) / 2
        ginv = sp.simplify(g.inv())
        gam = [[[sum(ginv[k, l] * (sp.diff(g[j, l], xs[i]) + sp.diff(g[i, l], xs[j]) - sp.diff(g[i, j], xs[l]))
                     for l in range(n)) / 2 for j in range(n)] for i in range(n)] for k in range(n)]
        ric = sp.zeros(n, n)
        for j in range(n):
            for k in range(n):
                s = 0
                for i in range(n):
                    s += sp.diff(gam[i][j][k], xs[i]) - sp.diff(gam[i][j][i], xs[k])
                    for p in range(n):
                        s += gam[i][i][p] * gam[p][j][k] - gam[i][k][p] * gam[p][j][i]
                ric[j, k] = s
        self._g = sp.lambdify([xs], g, "numpy")
        self._gam = sp.lambdify([xs], sp.Array(gam), "numpy")
        self._ric = sp.lambdify([xs], ric, "numpy")

    def g(self, x):
        return np.asarray(self._g(list(x)), dtype=float)

    def christoffel(self, x):
        return np.asarray(self._gam(list(x)), dtype=float)  # [k, i, j]

    def ricci_tensor(self, x):
        return np.asarray(self._ric(list(x)), dtype=float)

    def spray(self, x, y):
        return 0.5 * np.einsum("kij,i,j->k", self.christoffel(x), y, y)

    def ricci(self, x, y):
        return float(y @ self.ricci_tensor(x) @ y)


@lru_cache(maxsize=None)
def christoffel_oracle(names: tuple, g_strings: tuple) -> ChristoffelOracle:
    return ChristoffelOracle(names, g_strings)


def oracle_for(spec) -> ChristoffelOracle:
    """Build the oracle from a Riemannian spec's entry strings."""
    from finslercurv.expr import to_string

    g = tuple(tuple(to_string(e) for e in row) for row in spec.g)
    return christoffel_oracle(spec.chart.names, g)


def randers_g(a, b, y):
    """Closed-form fundamental tensor of F = sqrt(a(y,y)) + b.y."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    y = np.asarray(y, float)
    alpha = np.sqrt(y @ a @ y)
    F = alpha + b @ y
    ly = a @ y / alpha
    return (F / alpha) * (a - np.outer(ly, ly)) + np.outer(ly + b, ly + b)


def randers_ht_density_2d(b_norm: float, n_theta: int = 20000) -> float:
    """HT density of a constant Randers norm on R^2 from an independent polar integral.

    sigma = (1/pi) int_{F<1} det g dy, with det g = (F/alpha)^3 and F = r(1 + b cos t):
    the radial integral is (1/2) (1 + b cos t)^{-2} (1 + b cos t)^3 = (1 + b cos t)/2.
    """
    t = np.linspace(0, 2 * np.pi, n_theta, endpoint=False)
    integrand = 0.5 * (1 + b_norm * np.cos(t)) ** 3 / (1 + b_norm * np.cos(t)) ** 2
    return float(np.mean(integrand) * 2 * np.pi / np.pi)


def ellipse_area_randers(b_norm: float) -> float:
    """Area of {|y| + b y_1 < 1}: an ellipse with semi-axes 1/(1-b^2), 1/sqrt(1-b^2)."""
    return np.pi / (1 - b_norm**2) ** 1.5


def sphere_great_circle(t, speed=1.0):
    """Equatorial great circle theta = pi/2, phi = speed * t."""
    return np.array([np.pi / 2, speed * t])
