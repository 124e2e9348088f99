import numpy as np
import pytest

from finslercurv import zoo
from finslercurv.errors import BlowUp
from finslercurv.geodesics import integrate, ode_residual
from finslercurv.metrics import Riemannian, make_chart, tangent


def test_euclidean_straight_line():
    traj = integrate(zoo.euclidean(2), tangent([0, 0], [1, 0]), 1.0, 0.01)
    np.testing.assert_allclose(traj.xs[-1], [1.0, 0.0], atol=1e-14)
    assert traj.ts[-1] == pytest.approx(1.0)


def test_great_circle_period():
    s2 = zoo.round_sphere()
    traj = integrate(s2, s2.sample([np.pi / 2, 0.0], [0.0, 1.0]), 2 * np.pi, 1e-3)
    phi = traj.xs[-1][1]
    assert min(phi, 2 * np.pi - phi) < 1e-5 and abs(traj.xs[-1][0] - np.pi / 2) < 1e-5


def test_tilted_great_circle_returns():
    s2 = zoo.round_sphere()
    start = s2.sample([1.2, 0.5], [0.4, 0.9])
    traj = integrate(s2, start, 2 * np.pi / float(np.sqrt(0.4**2 + np.sin(1.2) ** 2 * 0.81)), 1e-3)
    d = (traj.xs[-1] - start.x + np.pi) % (2 * np.pi) - np.pi
    assert np.abs(d).max() < 1e-5


def test_rk4_order():
    s2 = zoo.round_sphere()
    start = s2.sample([1.2, 0.5], [0.4, 0.9])
    ref = integrate(s2, start, 2.0, 1e-3).xs[-1]
    errs = [np.abs(integrate(s2, start, 2.0, h).xs[-1] - ref).max() for h in (0.08, 0.04)]
    assert 12 < errs[0] / errs[1] < 20


def test_vertical_geodesic_of_hyperbolic_warp():
    w = zoo.hyperbolic_warped()
    traj = integrate(w, w.sample([0.0, 0.2, 0.3], [1.0, 0.0, 0.0]), 0.8, 1e-3)
    np.testing.assert_allclose(traj.xs[-1], [0.8, 0.2, 0.3], atol=1e-12)


def test_speed_drift_and_residual():
    for spec in (zoo.round_sphere(), zoo.randers_varying(), zoo.circle_warp("randers")):
        s = spec.random_samples(1, seed=4)[0]
        traj = integrate(spec, s, 10.0 if spec.dim != 2 or spec.kind == "riemannian" else 1.0, 1e-3)
        assert traj.speed_drift < 1e-6
        # x'' = -2G is quadratic in the velocity, so the check scales with |v|^2
        scale = max(1.0, float(np.max(np.sum(traj.vs**2, axis=1))))
        assert ode_residual(spec, traj) < 1e-6 * scale


def test_ode_residual_converges():
    s2 = zoo.round_sphere()
    s = s2.random_samples(1, seed=4)[0]
    r1 = ode_residual(s2, integrate(s2, s, 3.0, 2e-3))
    r2 = ode_residual(s2, integrate(s2, s, 3.0, 1e-3))
    assert r1 / r2 > 10


def test_rescaled_velocity_traces_same_path():
    spec = zoo.randers_varying()
    s = spec.sample([0.1, -0.2], [0.3, 0.2])
    a = integrate(spec, s, 1.0, 1e-3)
    b = integrate(spec, spec.sample(s.x, 2 * s.y), 0.5, 5e-4)
    np.testing.assert_allclose(a.xs[-1], b.xs[-1], atol=1e-6)


def test_backward_integration_inverts_forward():
    s2 = zoo.round_sphere()
    s = s2.sample([1.0, 0.3], [0.5, 0.5])
    fwd = integrate(s2, s, 1.0, 1e-3)
    back = integrate(s2, s2.sample(fwd.xs[-1], fwd.vs[-1]), -1.0, 1e-3)
    np.testing.assert_allclose(back.xs[-1], s.x, atol=1e-10)


def test_blowup_guard():
    # g = (1 - x)^2 in 1D: x = 1 lies at distance 1/2 and the coordinate speed diverges there
    spec = Riemannian.build(make_chart(["x"], -1.0, 1.0), [["(1 - x)^2"]])
    with pytest.raises(BlowUp):
        integrate(spec, spec.sample([0.0], [1.0]), 5.0, 1e-2)


def test_step_must_be_positive():
    with pytest.raises(ValueError):
        integrate(zoo.euclidean(2), tangent([0, 0], [1, 0]), 1.0, 0.0)
