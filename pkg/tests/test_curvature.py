"""Curvature pipeline: closed forms, independent finite-difference routes, identities."""

from dataclasses import dataclass

import numpy as np
import pytest

from finslerkit import curvature, jets, metrics
from finslerkit.curvature import Flag, Pipeline
from finslerkit.errors import DomainError, EngineDisagreement
from finslerkit.jets import Jet, MultiIndex
from finslerkit.metrics import MetricModel, TangentPoint

CATALOG = [m.name for m in metrics.catalog()]
SMALL = [n for n in CATALOG if n != "EUCLID_4"]


def _pts(metric, count=10, seed=3):
    x, y = metrics.sample_points(metric, count, seed)
    return x[:, 0], y[:, 0]


def _fd_spray(metric, x, y):
    """G^i = 1/4 g^il (d2F2/dx^k dy^l y^k - dF2/dx^l), every partial from the fd oracle."""
    n = metric.n
    base = np.r_[x, y]
    f = metric.F2
    g = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            mi = MultiIndex.of(n, y={i: 2} if i == j else {i: 1, j: 1})
            g[i, j] = 0.5 * jets.fd_partial(f, base, mi)
    rhs = np.empty(n)
    for l in range(n):
        mixed = sum(y[k] * jets.fd_partial(f, base, MultiIndex.of(n, x={k: 1}, y={l: 1})) for k in range(n))
        rhs[l] = mixed - jets.fd_partial(f, base, MultiIndex.of(n, x={l: 1}))
    return 0.25 * np.linalg.solve(g, rhs)


@pytest.mark.parametrize("name", ["FUNK_2", "SPHERE_2", "POINCARE_2", "SPH_RAND", "HEIS_RANDERS", "RAND_CYL"])
def test_spray_matches_fd_oracle(name):
    m = metrics.lookup(name)
    x, y = _pts(m, 3)
    G = curvature.spray(m, (x, y))
    for k in range(3):
        assert np.allclose(G[k], _fd_spray(m, x[k], y[k]), rtol=1e-7, atol=1e-9)


@pytest.mark.parametrize("n", [2, 3])
def test_funk_closed_forms(n):
    m = metrics.funk(n)
    x, y = _pts(m, 8)
    p = Pipeline(m, x, y)
    assert np.allclose(p.G, 0.5 * p.F[:, None] * y, atol=1e-12)
    assert np.allclose(p.S, 0.5 * (n + 1) * p.F, atol=1e-10)
    c, res = curvature.isotropic_berwald_fit(m, (x, y))
    assert c[0] == pytest.approx(0.5, abs=1e-10) and res[0] < 1e-10
    u = curvature.transverse_edges(p, seed=1)
    assert np.allclose(curvature.flag_curvature_values(p, u), -0.25, atol=1e-10)


def test_riemannian_constant_curvature():
    for m, k in [(metrics.sphere2(), 1.0), (metrics.poincare2(), -1.0)]:
        x, y = _pts(m, 8)
        p = Pipeline(m, x, y)
        assert np.allclose(curvature.flag_curvature_values(p, curvature.transverse_edges(p)), k, atol=1e-10)
        assert np.max(np.abs(p.C)) < 1e-12


def test_flag_curvature_single_flag_and_parallel_edge():
    m = metrics.sphere2()
    at = TangentPoint([0.2, 0.1], [1.0, 0.5])
    assert curvature.flag_curvature(m, Flag(at, [0.0, 1.0])) == pytest.approx(1.0, abs=1e-10)
    with pytest.raises(DomainError):
        curvature.flag_curvature(m, Flag(at, [2.0, 1.0]))


@pytest.mark.parametrize("name", ["EUCLID_2", "SPHERE_2", "POINCARE_2"])
def test_riemannian_volume_form(name):
    """sigma_F = sqrt(det a) for Riemannian metrics."""
    m = metrics.lookup(name)
    x, _ = _pts(m, 4)
    sig = curvature.volume_form_sigma(m, x)
    if name == "EUCLID_2":
        ref = np.ones(len(x))
    else:
        sign = 1.0 if name == "SPHERE_2" else -1.0
        ref = 4.0 / (1.0 + sign * np.sum(x * x, axis=1)) ** 2
    assert np.allclose(sig, ref, rtol=1e-9)


@pytest.mark.parametrize("name", ["FUNK_2", "SPH_RAND", "HEIS_RANDERS"])
def test_log_sigma_gradient_matches_central_differences(name):
    m = metrics.lookup(name)
    x, _ = _pts(m, 2)
    ls = curvature.log_sigma_jet(m, x, px=1)
    for k in range(len(x)):
        assert np.allclose(ls.grad_x().value[k], curvature.sigma_fd_gradient(m, x[k]), atol=1e-6)


@pytest.mark.parametrize("name", SMALL)
def test_homogeneity_degrees(name):
    m = metrics.lookup(name)
    x, y = _pts(m, 4)
    a, b = Pipeline(m, x, y), Pipeline(m, x, 2.0 * y)
    for attr, d in [("g", 0), ("C", -1), ("G", 2), ("N", 1), ("B", -1), ("S", 1), ("R", 2), ("J", 0)]:
        va, vb = getattr(a, attr), getattr(b, attr)
        assert np.allclose(vb, 2.0 ** d * va, rtol=1e-9, atol=1e-11), attr


@pytest.mark.parametrize("name", CATALOG)
def test_contractions_with_y_vanish(name):
    m = metrics.lookup(name)
    count = 10 if name == "EUCLID_4" else 50
    x, y = _pts(m, count, seed=11)
    p = Pipeline(m, x, y)
    tol = 1e-8 * (1 + np.max(np.abs(p.B)) + np.max(np.abs(p.R)))
    assert np.max(np.abs(np.einsum("bijk,bk->bij", p.C, y))) <= tol
    assert np.max(np.abs(np.einsum("bijk,bk->bij", p.L, y))) <= tol
    assert np.max(np.abs(np.einsum("bij,bj->bi", p.E, y))) <= tol
    assert np.max(np.abs(np.einsum("bijkl,bl->bijk", p.B, y))) <= tol
    assert np.max(np.abs(np.einsum("bij,bj->bi", p.h, y))) <= tol
    assert np.max(np.abs(np.einsum("bik,bk->bi", p.R, y))) <= tol


@pytest.mark.parametrize("name", SMALL)
def test_two_route_agreement(name):
    m = metrics.lookup(name)
    x, y = _pts(m, 10)
    p = Pipeline(m, x, y)
    assert np.max(np.abs(p.J - p.J_formula)) <= 1e-6
    assert np.max(np.abs(p.E - p.E_from_divergence)) <= 1e-6
    assert np.max(np.abs(p.I_h_along_y - p.J)) <= 1e-6
    assert np.max(np.abs(p.dtau_dy - p.I)) <= 1e-6


@pytest.mark.parametrize("name", CATALOG)
def test_deicke_consistency(name):
    m = metrics.lookup(name)
    x, y = _pts(m, 6)
    p = Pipeline(m, x, y)
    c_zero = np.max(np.abs(p.C)) <= 1e-8
    i_zero = np.max(np.abs(p.I)) <= 1e-7
    assert c_zero == i_zero
    assert c_zero == (m.variant == "riemannian" or name.startswith("EUCLID"))


@pytest.mark.parametrize("connection", ["berwald", "chern"])
def test_identities_on_funk(connection):
    m = metrics.funk(2)
    x, y = _pts(m, 6)
    assert np.max(curvature.identity_eiilj_residual(m, (x, y), connection)) <= 1e-4
    assert np.max(curvature.eq9_residual(m, (x, y), connection)) <= 1e-4


def test_reducibility_randers():
    for name in ["FUNK_3", "MINK_RAND", "HEIS_RANDERS"]:
        m = metrics.lookup(name)
        at = _pts(m, 6)
        assert np.max(curvature.c_reducibility_residual(m, at)) <= 1e-8
        assert np.max(curvature.landsberg_reducibility_residual(m, at)) <= 1e-8


def test_berwald_entries_have_zero_B():
    for name in ["RAND_PAR", "RAND_CYL", "AB_QUAD", "MINK_RAND"]:
        m = metrics.lookup(name)
        assert np.max(np.abs(curvature.berwald_curvature(m, _pts(m, 6)))) <= 1e-10


def test_horizontal_derivative_of_euclidean_field_is_plain_derivative():
    m = metrics.euclid(2)

    def field(x, y):
        return x[0] * x[0] * x[1] + 0.0 * y[0]

    d = curvature.horizontal_derivative(m, field, TangentPoint([0.3, 0.5], [1.0, 0.0]))
    assert np.allclose(d, [2 * 0.3 * 0.5, 0.09], atol=1e-14)


def test_functional_api_shapes():
    m = metrics.funk(3)
    x, y = _pts(m, 5)
    xb, yb = x.reshape(5, 1, 3), y.reshape(5, 1, 3)
    assert curvature.fundamental_tensor(m, (xb, yb)).shape == (5, 1, 3, 3)
    assert curvature.s_curvature(m, TangentPoint(x[0], y[0])).shape == ()
    s = curvature.curvature_sample(m, (x, y))
    assert s.B.shape == (5, 3, 3, 3, 3)


@dataclass(frozen=True, eq=False)
class _Inconsistent(MetricModel):
    """Jet evaluation deliberately differs from float evaluation."""

    def F2(self, x, y):
        base = y[0] * y[0] + y[1] * y[1]
        if isinstance(y[0], Jet):
            return base + 0.01 * x[0] * y[0] * y[1]
        return base


def test_cross_check_detects_engine_disagreement():
    m = _Inconsistent("BROKEN", 2, metrics.Domain("box", 0.9))
    with pytest.raises(EngineDisagreement):
        curvature.pipeline(m, TangentPoint([0.1, 0.2], [1.0, 0.5]), cross_check=True)
    Pipeline(metrics.funk(2), np.array([[0.1, 0.2]]), np.array([[1.0, 0.3]]), cross_check=True)
