"""Homogeneous (alpha, beta)-spaces: Lie data validation, S formula, invariant metric."""

import math

import numpy as np
import pytest

from finslerkit import curvature, homogeneous, metrics
from finslerkit.errors import ChartTooLarge, RegularityViolation, ValidationError
from finslerkit.homogeneous import LieAlgebraData, heisenberg_data, structure_from_triplets
from finslerkit.metrics import MinkowskiMetric, PhiProfile, TangentPoint


def _data(structure, h=(), m=(0, 1, 2), ip=None, u=(0.5, 0.0, 0.0)):
    return LieAlgebraData(len(h) + len(m), structure, h, m, np.eye(len(m)) if ip is None else ip, u)


def test_structure_triplets_antisymmetric():
    c = structure_from_triplets(3, [(0, 1, 2, 2.0)])
    assert c[2, 0, 1] == 2.0 and c[2, 1, 0] == -2.0
    with pytest.raises(ValidationError):
        structure_from_triplets(3, [(1, 1, 2, 1.0)])


def test_validation_errors():
    c = np.zeros((3, 3, 3))
    c[2, 0, 1] = 1.0
    with pytest.raises(ValidationError, match="antisymmetric"):
        _data(c)
    # [[e0, e1], e2] + cyclic = e0
    bad = structure_from_triplets(3, [(0, 1, 1, 1.0), (1, 2, 0, 1.0)])
    with pytest.raises(ValidationError, match="Jacobi"):
        _data(bad)
    heis = structure_from_triplets(3, [(0, 1, 2, 1.0)])
    with pytest.raises(ValidationError, match="partition"):
        LieAlgebraData(3, heis, (), (0, 1), np.eye(2), (0.1, 0.0))
    with pytest.raises(ValidationError, match="positive definite"):
        _data(heis, ip=np.diag([1.0, -1.0, 1.0]))
    with pytest.raises(ValidationError, match="components"):
        _data(heis, u=(0.1, 0.0))


def test_reductive_and_subalgebra_checks():
    # e0 spans h; [e0, e1] = e0 lands in h, so [h, m] is not inside m
    c = structure_from_triplets(3, [(0, 1, 0, 1.0)])
    with pytest.raises(ValidationError, match="reductive"):
        _data(c, h=(0,), m=(1, 2), u=(0.1, 0.0))
    # so(3) with h = span(e0) is reductive
    so3 = structure_from_triplets(3, [(0, 1, 2, 1.0), (1, 2, 0, 1.0), (2, 0, 1, 1.0)])
    d = _data(so3, h=(0,), m=(1, 2), u=(0.1, 0.0))
    assert d.jacobi_residual() < 1e-15


def test_deng_wang_hand_value():
    """u = e1, y = e2 + e3 on the Heisenberg algebra: S = -sqrt(2)."""
    d = heisenberg_data(u=(1.0, 0.0, 0.0))
    assert homogeneous.deng_wang_s(d, [0.0, 1.0, 1.0]) == pytest.approx(-math.sqrt(2), abs=1e-12)


def test_s_vanishes_along_u():
    d = heisenberg_data()
    assert homogeneous.deng_wang_s(d, d.u) == pytest.approx(0.0, abs=1e-15)
    assert homogeneous.deng_wang_s(d, -d.u) == pytest.approx(0.0, abs=1e-15)


def test_s_homogeneous_of_degree_one():
    d = heisenberg_data()
    y = np.array([0.3, -0.7, 0.4])
    assert homogeneous.deng_wang_s(d, 2.5 * y) == pytest.approx(2.5 * homogeneous.deng_wang_s(d, y), rel=1e-12)


def test_theorem41_probe_constant_zero():
    rep = homogeneous.theorem41_probe(heisenberg_data(), samples=50)
    assert rep.c == pytest.approx(0.0, abs=1e-14)
    assert rep.S_plus_u == pytest.approx(0.0, abs=1e-14)


@pytest.mark.parametrize("y", [[1.0, 0.0, 0.0], [0.0, 1.0, 1.0], [0.3, -0.7, 0.4], [-0.2, 0.5, 0.9]])
def test_origin_cross_check_against_pipeline(y):
    """S from the algebraic formula equals S of the invariant metric at o."""
    d = heisenberg_data()
    m = homogeneous.invariant_metric_field(d)
    s_pipe = curvature.s_curvature(m, TangentPoint([0.0, 0.0, 0.0], y))
    assert float(s_pipe) == pytest.approx(homogeneous.deng_wang_s(d, y), abs=1e-9)


def test_invariant_metric_matches_identity_at_origin():
    m = homogeneous.heisenberg_randers()
    y = np.array([0.2, 0.6, -0.3])
    ref = np.linalg.norm(y) + 0.5 * y[0]
    assert metrics.evaluate_F(m, TangentPoint([0, 0, 0], y)) == pytest.approx(ref, rel=1e-14)


def test_chart_limit_and_regularity():
    with pytest.raises(ChartTooLarge):
        homogeneous.invariant_metric_field(heisenberg_data(), chart=0.5)
    with pytest.raises(RegularityViolation):
        homogeneous.invariant_metric_field(heisenberg_data(u=(1.0, 0.0, 0.0)))


def test_abelian_data_gives_minkowski():
    d = LieAlgebraData(2, np.zeros((2, 2, 2)), (), (0, 1), np.eye(2), np.array([0.3, 0.0]),
                       phi=PhiProfile.randers(1.0))
    m = homogeneous.invariant_metric_field(d)
    assert isinstance(m, MinkowskiMetric)
    assert np.max(np.abs(curvature.spray(m, TangentPoint([0.1, 0.0], [1.0, 0.2])))) == 0.0
