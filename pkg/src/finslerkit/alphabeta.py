"""(alpha, beta)-metric machinery: Q, Delta, Phi, Xi, covariant derivatives of
beta, and the isotropic-S / vanishing-J / Berwald criteria with cross-checks
against the generic curvature pipeline."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import jets
from .curvature import Pipeline, fit_scalar_multiple
from .errors import RandersTypeInput, RegularityViolation
from .jets import Jet
from .metrics import AlphaBetaMetric, MetricModel, PhiProfile, sample_points

ZERO_TOL = 1e-8


# ----------------------------------------------------------------------------
# scalar functions of s
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class ABState:
    s: float
    b2: float
    n: int
    phi: PhiProfile

    def __post_init__(self):
        if self.b2 < 0:
            raise ValueError("b^2 must be non-negative")
        if abs(self.s) >= self.phi.b0:
            raise RegularityViolation(f"|s| = {abs(self.s):.6g} >= b0 = {self.phi.b0:.6g}")


def _phi_jet(phi: Callable, s: float, order: int) -> Jet:
    sp = jets.space(0, 1, 0, order)
    v = phi(Jet.variable(sp, "y", 0, s))
    if not isinstance(v, Jet):
        v = Jet.constant(sp, v)
    return v


def _q_jet(phi: Callable, s: float) -> Jet:
    p = _phi_jet(phi, s, 3)
    sv = Jet.variable(p.space, "y", 0, s)
    p1 = p.dy(0)
    den = p - sv * p1
    if den.value <= 0:
        raise RegularityViolation(f"phi - s phi' <= 0 at s = {s:.6g}")
    if p.value <= 0:
        raise RegularityViolation(f"phi <= 0 at s = {s:.6g}")
    return p1 / den


def q_delta_phi(state: ABState) -> tuple[float, float, float]:
    """(Q, Delta, Phi) at ``state``; derivatives of Q come from 1-D jets of phi."""
    q = _q_jet(state.phi, state.s)
    Q = float(q.value)
    Q1 = float(q.dy(0).value)
    Q2 = float(q.dy(0).dy(0).value)
    s, b2, n = state.s, state.b2, state.n
    delta = 1 + s * Q + (b2 - s * s) * Q1
    Phi = -(n * delta + 1 + s * Q) * (Q - s * Q1) - (b2 - s * s) * (1 + s * Q) * Q2
    return Q, delta, Phi


def xi(state: ABState) -> float:
    """Xi = (b^2 Q + s) Phi / Delta^2."""
    Q, delta, Phi = q_delta_phi(state)
    return (state.b2 * Q + state.s) * Phi / delta ** 2


@dataclass(frozen=True)
class XiScan:
    s: np.ndarray
    xi: np.ndarray
    spread: float
    deviation_from_zero: float

    @property
    def constant(self) -> bool:
        return self.deviation_from_zero <= 1e-3


def xi_is_constant(phi: PhiProfile, b2: float, n: int, points: int = 201, margin: float = 1e-3) -> XiScan:
    """Scan Xi over s in (-b + margin, b - margin), clipped to the regularity radius."""
    b = np.sqrt(b2)
    top = min(b, phi.b0) - margin
    if top <= 0:
        return XiScan(np.zeros(1), np.zeros(1), 0.0, 0.0)
    s = np.linspace(-top, top, points)
    vals = np.array([xi(ABState(float(si), b2, n, phi)) for si in s])
    x0 = xi(ABState(0.0, b2, n, phi))
    return XiScan(s, vals, float(vals.max() - vals.min()), float(np.max(np.abs(vals - x0))))


# ----------------------------------------------------------------------------
# Randers-type detection
# ----------------------------------------------------------------------------

def is_randers_type(phi: Callable, s_max: float = 0.9, tol: float = 1e-9) -> bool:
    """Whether phi(s) = c1 sqrt(1 + c2 s^2) + c3 s on five interpolation nodes.

    The odd part must be linear in s and the square of the even part linear in
    s^2 with positive constant term.
    """
    s = s_max * np.arange(1, 6) / 5.0
    fp = np.array([float(jets.value_of(phi(v))) for v in s])
    fm = np.array([float(jets.value_of(phi(-v))) for v in s])
    f0 = float(jets.value_of(phi(0.0)))
    odd = (fp - fm) / 2
    even = np.r_[f0, (fp + fm) / 2]
    scale = 1.0 + np.max(np.abs(np.r_[fp, fm]))
    c3 = np.dot(odd, s) / np.dot(s, s)
    if np.max(np.abs(odd - c3 * s)) > tol * scale:
        return False
    if f0 <= 0:
        return False
    s2 = np.r_[0.0, s * s]
    A = np.stack([np.ones_like(s2), s2], axis=1)
    e2 = even * even
    coef, *_ = np.linalg.lstsq(A, e2, rcond=None)
    return bool(np.max(np.abs(A @ coef - e2)) <= tol * scale ** 2 and np.all(even > 0))


def _require_non_randers(metric: MetricModel) -> AlphaBetaMetric:
    if not isinstance(metric, AlphaBetaMetric):
        raise TypeError(f"{metric.name} is not an (alpha, beta)-metric")
    if metric.is_randers or is_randers_type(metric.phi, 0.9 * min(1.0, metric.phi.b0)):
        raise RandersTypeInput(f"{metric.name}: phi is of Randers type")
    return metric


# ----------------------------------------------------------------------------
# covariant derivative of beta
# ----------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BetaCovariants:
    r: np.ndarray
    s_anti: np.ndarray
    s_vec: np.ndarray
    b_raised: np.ndarray
    b_cov: np.ndarray
    a: np.ndarray
    b: np.ndarray

    @property
    def b2(self) -> np.ndarray:
        return np.einsum("...i,...i->...", self.b, self.b_raised)

    def is_parallel(self, tol: float = ZERO_TOL) -> bool:
        return bool(np.max(np.abs(self.r)) <= tol and np.max(np.abs(self.s_anti)) <= tol)


def _matrix_jet(rows, sp, shape):
    return jets.stack([jets.stack([_as(v, sp, shape) for v in row], axis=-1) for row in rows], axis=-2)


def _as(v, sp, shape):
    if isinstance(v, Jet):
        return v
    return Jet.constant(sp, np.broadcast_to(np.asarray(v, float), shape))


def beta_covariants(a: Callable | None, b: Callable, x) -> BetaCovariants:
    """r_ij, s_ij, s_i and b^i at points ``x`` (shape (..., n)).

    ``a(x)`` returns the alpha coefficients (``None`` for the flat metric) and
    ``b(x)`` the 1-form coefficients, both written with generic arithmetic.
    """
    x = np.asarray(x, float)
    shape, n = x.shape[:-1], x.shape[-1]
    sp = jets.space(n, 0, 1, 0)
    xs = [Jet.variable(sp, "x", i, x[..., i]) for i in range(n)]
    if a is None:
        aj = Jet.constant(sp, np.broadcast_to(np.eye(n), shape + (n, n)))
    else:
        aj = _matrix_jet(a(xs), sp, shape)
    bj = jets.stack([_as(v, sp, shape) for v in b(xs)], axis=-1)
    av = aj.value
    ainv = np.linalg.inv(av)
    da = aj.grad_x().value  # [l, j, i] = d a_lj / dx^i
    db = bj.grad_x().value  # [i, j] = d b_i / dx^j
    # lower[l, i, j] = 1/2 (d_i a_lj + d_j a_li - d_l a_ij)
    lower = 0.5 * (np.einsum("...lji->...lij", da) + da - np.einsum("...ijl->...lij", da))
    gam = np.einsum("...ml,...lij->...mij", ainv, lower)
    bv = bj.value
    bcov = db - np.einsum("...m,...mij->...ij", bv, gam)
    r = 0.5 * (bcov + np.swapaxes(bcov, -1, -2))
    s = 0.5 * (bcov - np.swapaxes(bcov, -1, -2))
    braised = np.einsum("...ij,...j->...i", ainv, bv)
    svec = np.einsum("...j,...ji->...i", braised, s)
    return BetaCovariants(r, s, svec, braised, bcov, av, bv)


def metric_beta_covariants(metric: AlphaBetaMetric, x) -> BetaCovariants:
    return beta_covariants(metric.a, metric.b if metric.b is not None else (lambda x: [0.0] * metric.n), x)


# ----------------------------------------------------------------------------
# criteria with pipeline cross-checks
# ----------------------------------------------------------------------------

def _samples(metric, samples, seed, dirs=1):
    x, y = sample_points(metric, samples, seed, dirs_per_point=dirs)
    return x.reshape(-1, metric.n), y.reshape(-1, metric.n), x[:, 0]


@dataclass(frozen=True)
class CriterionReport:
    name: str
    verdict: bool
    evidence: dict
    pipeline_value: float
    pipeline_threshold: float

    @property
    def pipeline_zero(self) -> bool:
        return self.pipeline_value <= self.pipeline_threshold

    @property
    def agrees(self) -> bool:
        return self.verdict == self.pipeline_zero


def cheng_isotropic_s_check(metric: MetricModel, samples: int = 20, seed: int = 0) -> CriterionReport:
    """Isotropic S-curvature iff r_ij = 0 and s_i = 0 (non-Randers-type phi)."""
    metric = _require_non_randers(metric)
    x, y, xb = _samples(metric, samples, seed)
    cov = metric_beta_covariants(metric, xb)
    r_max = float(np.max(np.abs(cov.r)))
    s_max = float(np.max(np.abs(cov.s_vec)))
    S = Pipeline(metric, x, y).S
    return CriterionReport("cheng_isotropic_s", r_max <= ZERO_TOL and s_max <= ZERO_TOL,
                           {"r_max": r_max, "s_vec_max": s_max}, float(np.max(np.abs(S))), 1e-4)


def li_shen_j_check(metric: MetricModel, samples: int = 20, seed: int = 0) -> CriterionReport:
    """J = 0 criterion: r_ij = k(x)(b^2 a_ij - b_i b_j) and s_ij = 0."""
    metric = _require_non_randers(metric)
    x, y, xb = _samples(metric, samples, seed)
    cov = metric_beta_covariants(metric, xb)
    b2 = cov.b2
    tmpl = b2[:, None, None] * cov.a - cov.b[:, :, None] * cov.b[:, None, :]
    k, fit_res = fit_scalar_multiple(cov.r, tmpl, np.arange(len(xb)))
    s_anti = float(np.max(np.abs(cov.s_anti)))
    verdict = bool(np.max(fit_res) <= 1e-7 and s_anti <= ZERO_TOL)
    J = Pipeline(metric, x, y).J
    phi_res, lam = _phi_condition(metric.phi, float(np.max(b2)), metric.n)
    return CriterionReport("li_shen_j", verdict,
                           {"k": k.tolist(), "fit_residual": float(np.max(fit_res)), "s_anti_max": s_anti,
                            "lambda": lam, "phi_condition_residual": phi_res},
                           float(np.max(np.abs(J))), 1e-5)


def _phi_condition(phi: PhiProfile, b2: float, n: int, points: int = 41):
    """Fit Phi = lambda Delta^(3/2) / sqrt(b^2 - s^2) on an s-grid; (residual, lambda)."""
    b = np.sqrt(b2)
    top = min(b, phi.b0) * 0.95
    if top <= 0:
        return float("nan"), float("nan")
    s = np.linspace(-top, top, points)
    vals = np.array([q_delta_phi(ABState(float(si), b2, n, phi)) for si in s])
    rhs = vals[:, 1] ** 1.5 / np.sqrt(b2 - s * s)
    lam = float(np.dot(vals[:, 2], rhs) / np.dot(rhs, rhs))
    return float(np.max(np.abs(vals[:, 2] - lam * rhs))), lam


def parallel_beta_berwald_check(metric: MetricModel, samples: int = 20, seed: int = 0) -> CriterionReport:
    """Berwald iff beta is parallel with respect to alpha."""
    if not isinstance(metric, AlphaBetaMetric):
        raise TypeError(f"{metric.name} is not an (alpha, beta)-metric")
    x, y, xb = _samples(metric, samples, seed)
    cov = metric_beta_covariants(metric, xb)
    r_max = float(np.max(np.abs(cov.r)))
    s_max = float(np.max(np.abs(cov.s_anti)))
    B = Pipeline(metric, x, y).B
    return CriterionReport("parallel_beta_berwald", r_max <= ZERO_TOL and s_max <= ZERO_TOL,
                           {"r_max": r_max, "s_anti_max": s_max}, float(np.max(np.abs(B))), 1e-6)


@dataclass(frozen=True)
class EquivalenceReport:
    c_S: np.ndarray
    c_E: np.ndarray
    residual_S: float
    residual_E: float
    max_deviation: float
    tol: float

    @property
    def s_isotropic(self) -> bool:
        return self.residual_S <= self.tol

    @property
    def e_isotropic(self) -> bool:
        return self.residual_E <= self.tol

    @property
    def holds(self) -> bool:
        if self.s_isotropic != self.e_isotropic:
            return False
        return not self.s_isotropic or self.max_deviation <= self.tol


def isotropic_s_e_equivalence_probe(metric: MetricModel, samples: int = 10, seed: int = 0,
                                    tol: float = 1e-4) -> EquivalenceReport:
    """Fit S = (n+1) c F and E = (n+1)/2 c F^-1 h per base point and compare."""
    n = metric.n
    dirs = 2 * n + 2
    x, y = sample_points(metric, samples, seed, dirs_per_point=dirs)
    p = Pipeline(metric, x.reshape(-1, n), y.reshape(-1, n))
    groups = np.repeat(np.arange(samples), dirs)
    cS, rS = fit_scalar_multiple(p.S, (n + 1) * p.F, groups)
    cE, rE = fit_scalar_multiple(p.E, 0.5 * (n + 1) * p.h / p.F[:, None, None], groups)
    return EquivalenceReport(cS, cE, float(np.max(rS)), float(np.max(rE)),
                             float(np.max(np.abs(cS - cE))), tol)
