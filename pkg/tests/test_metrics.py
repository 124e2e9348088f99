import jax.numpy as jnp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from finslercurv import zoo
from finslercurv.errors import DimensionMismatch, DomainError, NotPositiveDefinite
from finslercurv.metrics import (MinkowskiNorm, Randers, WarpedProduct, check_metric, eval_F,
                                 fundamental_tensor, make_chart, tangent)
from oracles import randers_g

ZOO = {
    "euclid": zoo.euclidean(3),
    "sphere": zoo.round_sphere(),
    "randers": zoo.randers_varying(),
    "minkowski": MinkowskiNorm.build(make_chart(["x1", "x2"]), "(y1^4 + y2^4 + y1^2 * y2^2)^(1/4)"),
    "hyperbolic": zoo.hyperbolic_warped(),
    "circle_randers": zoo.circle_warp("randers"),
}


def test_eval_F_examples():
    assert eval_F(zoo.euclidean(2), tangent([0, 0], [3, 4])) == pytest.approx(5.0)
    assert eval_F(zoo.randers_constant([0.3, 0.0]), tangent([0, 0], [1, 0])) == pytest.approx(1.3)
    w = zoo.hyperbolic_warped()
    assert eval_F(w, tangent([0, 0, 0], [1, 1, 0])) == pytest.approx(np.sqrt(2))


def test_randers_domain_error():
    spec = zoo.randers_constant([1.1, 0.0])
    with pytest.raises(DomainError):
        eval_F(spec, tangent([0, 0], [1, 0]))


def test_fundamental_tensor_examples():
    ft = fundamental_tensor(zoo.euclidean(2), tangent([0.3, 0.1], [1, 2]))
    np.testing.assert_allclose(ft.g, np.eye(2), atol=1e-14)
    assert ft.det_g == pytest.approx(1.0)
    ft = fundamental_tensor(zoo.hyperbolic_warped(), tangent([0, 0.2, 0.4], [1, 1, 0]))
    np.testing.assert_allclose(ft.g, np.eye(3), atol=1e-14)
    ft = fundamental_tensor(zoo.randers_constant([0.5, 0.0]), tangent([0, 0], [0, 1]))
    np.testing.assert_allclose(ft.g, randers_g(np.eye(2), [0.5, 0], [0, 1]), atol=1e-13)
    np.testing.assert_allclose(ft.g @ ft.g_inv, np.eye(2), atol=1e-9)


def test_warp_scales_fiber_block():
    w = zoo.hyperbolic_warped()
    ft = fundamental_tensor(w, tangent([np.log(2), 0, 0], [0.3, 1, -1]))
    np.testing.assert_allclose(ft.g, np.diag([1.0, 4.0, 4.0]), atol=1e-12)


def test_not_positive_definite_reports_eigenvalue():
    spec = zoo.randers_constant([1.1, 0.0])
    with pytest.raises(NotPositiveDefinite) as ei:
        fundamental_tensor(spec, tangent([0, 0], [-1.0, 0.3]))
    assert ei.value.eigenvalue <= 0


def test_check_metric_reports():
    assert check_metric(zoo.euclidean(2), 100, seed=0).ok
    rep = check_metric(zoo.randers_constant([1.1, 0.0]), 100, seed=0)
    assert "NotPositiveDefinite" in rep.kinds()
    w = WarpedProduct.build(zoo.euclidean(1, ["t"]), zoo.euclidean(2, ["u1", "u2"]), "exp(t)")
    assert check_metric(w, 50, seed=1).ok
    assert check_metric(zoo.circle_warp("randers"), 30, seed=2).ok
    # deterministic in the seed
    a = check_metric(zoo.randers_constant([1.1, 0.0]), 40, seed=3)
    b = check_metric(zoo.randers_constant([1.1, 0.0]), 40, seed=3)
    assert a.failures == b.failures


def test_periodic_reduction_and_dimension_checks():
    s = tangent([7.0, 0.5], [1.0, 0.0], zoo.flat_torus(2).chart)
    assert 0 <= s.x[0] < 2 * np.pi and s.x[0] == pytest.approx(7.0 - 2 * np.pi)
    with pytest.raises(DimensionMismatch):
        tangent([0.0, 0.0], [1.0, 0.0, 0.0])
    with pytest.raises(DimensionMismatch):
        WarpedProduct.build(zoo.euclidean(1, ["t"]), zoo.euclidean(1, ["t"]), "1")
    with pytest.raises(DimensionMismatch):
        Randers.build(zoo.euclidean(2), ["0.1"])


@pytest.mark.parametrize("name", sorted(ZOO))
@given(st.integers(0, 10_000), st.sampled_from([0.5, 2.0, 7.0]))
def test_homogeneity_and_euler(name, seed, lam):
    spec = ZOO[name]
    from finslercurv.curvature import kernels

    k = kernels(spec)
    s = spec.random_samples(1, seed)[0]
    x, y = jnp.asarray(s.x), jnp.asarray(s.y)
    F = float(k.F(x, y))
    assert float(k.F(x, lam * y)) == pytest.approx(lam * F, rel=1e-10)
    g = np.asarray(k.g(x, y))
    np.testing.assert_allclose(np.asarray(k.g(x, lam * y)), g, atol=1e-9 * np.abs(g).max())
    assert float(s.y @ g @ s.y) == pytest.approx(F**2, rel=1e-9)


@given(st.integers(0, 10_000))
def test_warped_block_structure(seed):
    for w in (zoo.hyperbolic_warped(), zoo.circle_warp("randers")):
        s = w.random_samples(1, seed)[0]
        g = fundamental_tensor(w, s).g
        assert np.abs(g[: w.n1, w.n1:]).max() <= 1e-10
