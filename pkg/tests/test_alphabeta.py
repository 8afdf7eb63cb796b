"""(alpha, beta) machinery: scalar functions, covariant derivatives, criteria."""

import math

import mpmath
import numpy as np
import pytest

from finslerkit import alphabeta, metrics
from finslerkit.alphabeta import ABState, q_delta_phi, xi
from finslerkit.errors import RandersTypeInput, RegularityViolation
from finslerkit.metrics import AlphaBetaMetric, Domain, PhiProfile

RANDERS = PhiProfile.randers(1.0)
QUAD = PhiProfile("polynomial", (1.0, 0.0, 1.0), 1.0)


def _mp_reference(phi_mp, s, b2, n):
    """Q, Delta, Phi with derivatives of Q by mpmath numerical differentiation."""
    with mpmath.workdps(40):
        def Q(t):
            p, p1 = phi_mp(t), mpmath.diff(phi_mp, t)
            return p1 / (p - t * p1)

        s = mpmath.mpf(s)
        q, q1, q2 = Q(s), mpmath.diff(Q, s), mpmath.diff(Q, s, 2)
        delta = 1 + s * q + (b2 - s * s) * q1
        Phi = -(n * delta + 1 + s * q) * (q - s * q1) - (b2 - s * s) * (1 + s * q) * q2
        return float(q), float(delta), float(Phi)


def test_phi_vanishes_for_riemannian_profile():
    for s in [-0.3, 0.0, 0.7]:
        Q, delta, Phi = q_delta_phi(ABState(s, 0.5, 3, PhiProfile.riemannian()))
        assert (Q, delta, Phi) == (0.0, 1.0, 0.0)


@pytest.mark.parametrize("s,expected", [(0.0, (1.0, 1.0, -3.0, -0.75)), (0.2, (1.0, 1.2, -3.6, -1.125))])
def test_hand_values_randers(s, expected):
    st = ABState(s, 0.25, 2, RANDERS)
    got = q_delta_phi(st) + (xi(st),)
    assert np.allclose(got, expected, rtol=0, atol=1e-12)


@pytest.mark.parametrize("s", [-0.4, 0.0, 0.15, 0.5])
@pytest.mark.parametrize("n", [2, 3, 4])
def test_q_delta_phi_match_mpmath(s, n):
    got = q_delta_phi(ABState(s, 0.36, n, QUAD))
    ref = _mp_reference(lambda t: 1 + t * t, s, 0.36, n)
    assert np.allclose(got, ref, rtol=1e-10, atol=1e-12)


def test_regularity_rejected():
    with pytest.raises(RegularityViolation):
        ABState(1.0, 0.25, 2, RANDERS)


def test_xi_scan_flags_non_constancy():
    scan = alphabeta.xi_is_constant(RANDERS, 0.25, 2)
    assert not scan.constant
    assert scan.spread > 0.1
    flat = alphabeta.xi_is_constant(PhiProfile.riemannian(), 0.25, 2)
    assert flat.constant


def test_randers_type_sweep():
    """50 profiles of the form c1 sqrt(1 + c2 s^2) + c3 s and 50 that are not."""
    rng = np.random.default_rng(2024)
    for _ in range(50):
        c1, c2, c3 = rng.uniform(0.5, 2.0), rng.uniform(-0.5, 1.0), rng.uniform(-0.8, 0.8)
        assert alphabeta.is_randers_type(lambda t, c1=c1, c2=c2, c3=c3: c1 * np.sqrt(1 + c2 * t * t) + c3 * t)
    for _ in range(50):
        a1, a2, a3 = rng.uniform(-0.5, 0.5), rng.uniform(0.1, 1.0), rng.uniform(-0.3, 0.3)
        phi = PhiProfile("polynomial", (1.0, a1, a2, a3), 1.0)
        assert not alphabeta.is_randers_type(phi)


def test_randers_input_rejected_by_criteria():
    with pytest.raises(RandersTypeInput):
        alphabeta.cheng_isotropic_s_check(metrics.funk(2))


def test_beta_covariants_hand_example():
    """beta = x2 dx1 on flat R^2: r_12 = s_12 = 1/2, s_i = (0, x2/2)."""
    x = np.array([[0.3, 0.4]])
    cov = alphabeta.beta_covariants(None, lambda x: [x[1], 0.0], x)
    assert np.allclose(cov.r[0], [[0, 0.5], [0.5, 0]], atol=1e-15)
    assert np.allclose(cov.s_anti[0], [[0, 0.5], [-0.5, 0]], atol=1e-15)
    assert np.allclose(cov.s_vec[0], [0.0, 0.2], atol=1e-15)


def test_beta_covariants_match_central_differences():
    """b_{i;j} = d_j b_i - b_m Gamma^m_ij with Christoffels from differenced a."""
    m = metrics.funk(2)
    x0 = np.array([0.2, -0.1])
    h = 1e-5

    def a(x):
        return np.array(m.a(list(x)), float)

    def b(x):
        return np.array(m.b(list(x)), float)

    da = np.stack([(a(x0 + h * e) - a(x0 - h * e)) / (2 * h) for e in np.eye(2)], axis=-1)
    db = np.stack([(b(x0 + h * e) - b(x0 - h * e)) / (2 * h) for e in np.eye(2)], axis=-1)
    lower = 0.5 * (np.einsum("lji->lij", da) + da - np.einsum("ijl->lij", da))
    gam = np.einsum("ml,lij->mij", np.linalg.inv(a(x0)), lower)
    ref = db - np.einsum("m,mij->ij", b(x0), gam)
    cov = alphabeta.metric_beta_covariants(m, x0[None, :])
    assert np.allclose(cov.b_cov[0], ref, atol=1e-8)
    assert not cov.is_parallel()
    assert alphabeta.metric_beta_covariants(metrics.randers_parallel(), np.zeros((1, 3))).is_parallel()


def _ab_varying():
    return AlphaBetaMetric("AB_VAR", 2, Domain("box", 0.9), b=lambda x: [0.3 * x[1] + 0.2, 0.0],
                           phi=PhiProfile("polynomial", (1.0, 0.0, 1.0), 1.0))


@pytest.mark.parametrize("check", [alphabeta.cheng_isotropic_s_check, alphabeta.li_shen_j_check,
                                   alphabeta.parallel_beta_berwald_check])
def test_criteria_agree_with_tensors(check):
    rep = check(metrics.ab_quad(), samples=20)
    assert rep.verdict and rep.agrees
    rep = check(_ab_varying(), samples=20)
    assert not rep.verdict and rep.agrees


def test_parallel_criterion_on_randers():
    assert alphabeta.parallel_beta_berwald_check(metrics.randers_parallel()).agrees
    rep = alphabeta.parallel_beta_berwald_check(metrics.funk(2))
    assert not rep.verdict and rep.agrees


def test_isotropic_s_e_equivalence():
    rep = alphabeta.isotropic_s_e_equivalence_probe(metrics.funk(2))
    assert rep.holds and rep.s_isotropic
    assert np.allclose(rep.c_S, 0.5, atol=1e-8) and np.allclose(rep.c_E, 0.5, atol=1e-8)
    rep = alphabeta.isotropic_s_e_equivalence_probe(_ab_varying())
    assert rep.holds and not rep.s_isotropic and not rep.e_isotropic


def test_li_shen_phi_condition_reported():
    rep = alphabeta.li_shen_j_check(metrics.ab_quad(), samples=5)
    assert math.isfinite(rep.evidence["lambda"])
