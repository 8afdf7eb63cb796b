"""Metric models, catalog, sampling and strong convexity."""

import math

import numpy as np
import pytest

from finslerkit import metrics
from finslerkit.errors import DimensionError, DomainError, NonConvex, RegularityViolation
from finslerkit.metrics import PhiProfile, TangentPoint


CATALOG = [m.name for m in metrics.catalog()]


def test_catalog_names():
    for name in ["EUCLID_2", "EUCLID_3", "SPHERE_2", "POINCARE_2", "FUNK_2", "FUNK_3",
                 "MINK_RAND", "RAND_PAR", "AB_QUAD", "HEIS_RANDERS"]:
        assert name in CATALOG
    with pytest.raises(KeyError):
        metrics.lookup("NOPE")


@pytest.mark.parametrize("name", CATALOG)
def test_catalog_strongly_convex(name):
    rep = metrics.check_strong_convexity(metrics.lookup(name), samples=16)
    assert rep.min_eigenvalue > 0


def test_nonconvex_randers_rejected():
    with pytest.raises(NonConvex) as exc:
        metrics.check_strong_convexity(metrics.mink_randers(1.5))
    assert exc.value.witness is not None


def test_tangent_point_validation():
    with pytest.raises(DomainError):
        TangentPoint([0.0, 0.0], [0.0, 0.0])
    with pytest.raises(DimensionError):
        TangentPoint([0.0] * 5, [1.0] * 5)
    with pytest.raises(DomainError):
        metrics.evaluate_F(metrics.funk(2), TangentPoint([0.79, 0.3], [1.0, 0.0]))


def test_euclid_and_minkowski_randers_values():
    assert metrics.evaluate_F(metrics.euclid(3), TangentPoint([0.1, 0.2, 0.3], [3.0, 4.0, 0.0])) == pytest.approx(5.0)
    # |y| + 0.3 y1
    f = metrics.evaluate_F(metrics.mink_randers(0.3), TangentPoint([0.0, 0.0], [0.6, 0.8]))
    assert f == pytest.approx(1.0 + 0.18)


def test_funk_closed_form():
    """Funk metric of the unit ball: (sqrt(|y|^2 - (|x|^2|y|^2 - <x,y>^2)) + <x,y>) / (1 - |x|^2)."""
    x, y = np.array([0.1, 0.2]), np.array([1.0, 0.3])
    xx, yy, xy = x @ x, y @ y, x @ y
    ref = (math.sqrt(yy - (xx * yy - xy * xy)) + xy) / (1 - xx)
    assert metrics.evaluate_F(metrics.funk(2), TangentPoint(x, y)) == pytest.approx(ref, rel=1e-14)


def test_sphere_conformal_factor():
    x, y = np.array([0.3, -0.4]), np.array([1.0, 0.0])
    ref = 2.0 / (1.0 + 0.25)
    assert metrics.evaluate_F(metrics.sphere2(), TangentPoint(x, y)) == pytest.approx(ref, rel=1e-14)


def test_sampling_is_deterministic_and_inside():
    m = metrics.funk(3)
    x1, y1 = metrics.sample_points(m, 12, seed=5, dirs_per_point=3)
    x2, y2 = metrics.sample_points(m, 12, seed=5, dirs_per_point=3)
    assert np.array_equal(x1, x2) and np.array_equal(y1, y2)
    assert x1.shape == (12, 3, 3)
    assert np.all(np.linalg.norm(x1, axis=-1) <= 0.8)
    assert np.allclose(np.linalg.norm(y1, axis=-1), 1.0)


def test_global_domain_contains_everything():
    assert metrics.euclid(2).domain.contains([10.0, -30.0])
    assert not metrics.sphere2().domain.contains([0.95, 0.0])


def test_phi_regularity():
    phi = PhiProfile("polynomial", (1.0, 0.0, 1.0), 1.0)
    p, q, r = phi.regularity_margins([0.0, 0.5], 0.16)
    assert np.all(p > 0) and np.all(q > 0) and np.all(r > 0)
    with pytest.raises(RegularityViolation):
        phi.check_regular([1.0], 0.5)
    with pytest.raises(RegularityViolation):
        PhiProfile("polynomial", (1.0, 0.0, -2.0), 1.0).check_regular([0.9], 0.9)


def test_randers_phi_b0():
    assert PhiProfile.randers(0.5).b0 == pytest.approx(2.0)
    assert PhiProfile.randers(0.5)(0.4) == pytest.approx(1.2)


def test_ab_quad_regularity_check_in_evaluate():
    m = metrics.ab_quad(b=(0.4, 0.0, 0.0))
    assert metrics.evaluate_F(m, TangentPoint([0, 0, 0], [1.0, 0, 0])) == pytest.approx(1.0 * (1 + 0.16))


def test_fundamental_tensor_riemannian():
    g = metrics.fundamental_tensor_values(metrics.sphere2(), np.array([0.3, -0.4]), np.array([1.0, 0.2]))
    assert np.allclose(g, 4.0 / 1.25 ** 2 * np.eye(2), atol=1e-14)
