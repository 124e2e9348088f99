import jax.numpy as jnp
import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from finslercurv import diffcore, zoo
from finslercurv.diffcore import DerivRequest, partial
from finslercurv.errors import NonFinite, OrderTooHigh, SlitViolation
from finslercurv.metrics import tangent
from oracles import randers_g


def test_mixed_polynomial():
    f = lambda x, y: x[0] ** 2 * y[1]  # noqa: E731
    for x0 in (0.3, -1.7, 2.0):
        d = partial(DerivRequest(f, [("x", 0, 1), ("y", 1, 1)], ([x0, 0.5], [1.0, 2.0])))
        assert float(d) == pytest.approx(2 * x0, abs=1e-14)


def test_euclidean_hessian_is_twice_identity():
    f = lambda x, y: y @ y  # noqa: E731
    d = partial(DerivRequest(f, [("y", None, 2)], (np.zeros(3), np.array([0.2, -1.0, 0.4]))))
    np.testing.assert_allclose(d, 2 * np.eye(3), atol=1e-14)


@pytest.mark.parametrize("b, y", [((0.3, 0.0), (1.0, 0.0)), ((0.5, 0.0), (1.0, 0.0)), ((0.5, 0.0), (0.0, 1.0)),
                                  ((0.2, -0.4), (0.7, 1.3))])
def test_randers_fundamental_tensor(b, y):
    spec = zoo.randers_constant(b)
    g = diffcore.hessian_y(spec.F2, tangent([0.1, 0.2], y))
    np.testing.assert_allclose(g, randers_g(np.eye(2), b, y), atol=1e-12)


def test_hessian_of_riemannian_matches_input():
    spec = zoo.euclidean(2)
    from finslercurv.metrics import Riemannian, make_chart
    spec = Riemannian.build(make_chart(["x1", "x2"]), [["1", "0"], ["0", "4"]])
    g = diffcore.hessian_y(spec.F2, tangent([0.0, 0.0], [1.0, 1.0]))
    np.testing.assert_allclose(g, np.diag([1.0, 4.0]), atol=1e-14)


def test_order_limit():
    f = lambda x, y: jnp.sum(y**6)  # noqa: E731
    with pytest.raises(OrderTooHigh):
        partial(DerivRequest(f, [("y", 0, 3), ("y", 1, 2)], (np.zeros(2), np.ones(2))))
    # order 4 is allowed
    d = partial(DerivRequest(f, [("y", 0, 4)], (np.zeros(2), np.ones(2))))
    assert float(d) == pytest.approx(360.0)


def test_slit_and_finite_guards():
    f = lambda x, y: jnp.sqrt(y @ y)  # noqa: E731
    with pytest.raises(SlitViolation):
        partial(DerivRequest(f, [("y", 0, 1)], (np.zeros(2), np.array([1e-7, 0.0]))))
    g = lambda x, y: jnp.log(x[0]) * y[0]  # noqa: E731
    with pytest.raises(NonFinite):
        partial(DerivRequest(g, [("y", 0, 1)], (np.array([-1.0, 0.0]), np.ones(2))))


coef = st.integers(-3, 3)
powers = st.tuples(st.integers(0, 3), st.integers(0, 3), st.integers(0, 2), st.integers(0, 2))
monomials = st.lists(st.tuples(coef, powers), min_size=1, max_size=4)
order_lists = st.lists(st.tuples(st.sampled_from(["x", "y"]), st.integers(0, 1), st.integers(1, 2)),
                       min_size=1, max_size=3).filter(lambda o: sum(r for *_, r in o) <= 4)


@given(monomials, order_lists, st.lists(st.floats(-1.5, 1.5), min_size=4, max_size=4))
def test_polynomial_exactness(terms, orders, point):
    xs = sp.symbols("a0 a1 b0 b1")
    poly = sum(c * xs[0] ** p[0] * xs[1] ** p[1] * xs[2] ** p[2] * xs[3] ** p[3] for c, p in terms)

    def f(x, y):
        return sum(c * x[0] ** p[0] * x[1] ** p[1] * y[0] ** p[2] * y[1] ** p[3] for c, p in terms) + 0.0 * x[0]

    x0, y0 = np.array(point[:2]), np.array(point[2:])
    if np.linalg.norm(y0) < 1e-3:
        y0 = y0 + 0.5
    expr = poly
    for block, idx, rep in orders:
        expr = sp.diff(expr, xs[idx if block == "x" else 2 + idx], rep)
    want = float(expr.subs(dict(zip(xs, [*x0, *y0]))))
    got = float(partial(DerivRequest(f, orders, (x0, y0))))
    assert got == pytest.approx(want, abs=1e-9 * max(1.0, abs(want)))


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_mixed_partials_commute(s, t):
    spec = zoo.randers_varying()
    x = np.array([s - 0.5, t - 0.5])
    y = np.array([0.6, -0.9])
    a = partial(DerivRequest(spec.F2, [("x", 0, 1), ("y", 1, 1)], (x, y)))
    b = partial(DerivRequest(spec.F2, [("y", 1, 1), ("x", 0, 1)], (x, y)))
    assert abs(float(a) - float(b)) < 1e-10
