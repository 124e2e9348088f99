import numpy as np
import pytest

from finslercurv import audit, zoo
from finslercurv.audit import CONSISTENT, VIOLATED


def test_trivial_flat_product_is_consistent():
    rep = audit.triviality_audit(zoo.torus_warp("2"), 0.0, grid=16, n_samples=10)
    assert rep.verdict == CONSISTENT and not rep.contradiction
    assert rep.f_variation < rep.triv_tol


@pytest.mark.parametrize("lam", [0.0, -1.0])
def test_nonconstant_warp_violates_einstein(lam):
    rep = audit.triviality_audit(zoo.circle_warp(), lam, grid=32, n_samples=10)
    assert rep.verdict == VIOLATED and rep.lambda_residual > 1e-2 and not rep.contradiction


def test_triviality_needs_nonpositive_lambda():
    with pytest.raises(ValueError):
        audit.triviality_audit(zoo.circle_warp(), 1.0)


def test_hyperbolic_product_soundness():
    w = zoo.hyperbolic_product()
    for rep in audit.soundness_check(w, -1.0, -1.0, grid=8, n_samples=10):
        assert rep.verdict == CONSISTENT


def test_positivity_branches():
    # lambda < 0 fitted: branch not applicable
    rep = audit.positivity_audit(zoo.hyperbolic_warped(), grid=16, n_samples=10)
    assert rep.lambda_fit == pytest.approx(-2.0) and rep.conditions["positive_lambda_branch"]["status"] == "not-applicable"
    # S2 x S2: lambda = mu = 1, nothing forced, trivial
    rep = audit.positivity_audit(zoo.sphere_product("1"), grid=8, n_samples=10)
    assert rep.verdict == CONSISTENT
    # sphere base, flat fiber: mu = 0 forces laplacian(f) >= lambda f, impossible with f constant
    rep = audit.positivity_audit(zoo.sphere_over_torus("1"), grid=8, lam=1.0, n_samples=10)
    assert rep.conditions["positive_lambda_branch"]["violations"] > 0 and not rep.contradiction
    # injected negative mu on a nonconstant warp
    rep = audit.positivity_audit(zoo.sphere_over_torus("2 + 0.5 * cos(theta)"), grid=16, lam=1.0, mu=-1.0,
                                 n_samples=10)
    assert rep.conditions["positive_lambda_branch"]["violations"] > 0
    assert any("maximum principle" in n for n in rep.notes)
    assert rep.verdict == VIOLATED


def test_conditions_on_trivial_flat_product():
    cond = audit.condition_suite_63(zoo.torus_warp("2"), 0.0, 0.0, grid=8)
    assert cond["e"]["status"] == "holds" and cond["e"]["sign_check"] == "consistent"
    assert cond["f"]["implied"].startswith("|grad f| = 0")


def test_conditions_on_nonconstant_warp():
    cond = audit.condition_suite_63(zoo.circle_warp(), 0.0, 0.0, grid=32)
    assert cond["a"]["status"] == "holds"
    assert cond["a"]["sign_check"] == "violated"


def test_conditions_reproducible():
    a = audit.condition_suite_63(zoo.circle_warp(), 0.0, 0.5, grid=16, seed=3)
    b = audit.condition_suite_63(zoo.circle_warp(), 0.0, 0.5, grid=16, seed=3)
    assert a == b


def test_hessian_eigenvalue_reported():
    rep = audit.triviality_audit(zoo.circle_warp(), 0.0, grid=64, n_samples=5)
    assert rep.hessian_min_eig == pytest.approx(-1.0, abs=1e-3)
    assert rep.subharmonicity["sign"] == "mixed"
