"""Berwald frame, main scalar and the mu/lambda form of B on Finsler surfaces."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curvature import Pipeline, pipeline
from .errors import DimensionError, FitDegenerate
from .metrics import MetricModel


def _pipe(metric: MetricModel, at) -> Pipeline:
    if metric.n != 2:
        raise DimensionError(f"{metric.name} has dimension {metric.n}; surfaces need n = 2")
    return pipeline(metric, at)


@dataclass(frozen=True, eq=False)
class BerwaldFrame:
    ell: np.ndarray
    m: np.ndarray
    ell_low: np.ndarray
    m_low: np.ndarray

    def flipped(self) -> "BerwaldFrame":
        return BerwaldFrame(self.ell, -self.m, self.ell_low, -self.m_low)


def _frame(p: Pipeline) -> BerwaldFrame:
    ell = p.y / p.F[:, None]
    ell_low = np.einsum("bij,bj->bi", p.g, ell)
    m = np.stack([-ell_low[:, 1], ell_low[:, 0]], axis=1)
    m /= np.sqrt(np.einsum("bij,bi,bj->b", p.g, m, m))[:, None]
    return BerwaldFrame(ell, m, ell_low, np.einsum("bij,bj->bi", p.g, m))


def berwald_frame(metric: MetricModel, at) -> BerwaldFrame:
    """(l, m) with l = y/F, g(l, m) = 0, g(m, m) = 1 and det(l, m) > 0."""
    p = _pipe(metric, at)
    f = _frame(p)
    o = p._out
    return BerwaldFrame(o(f.ell), o(f.m), o(f.ell_low), o(f.m_low))


def main_scalar(metric: MetricModel, at) -> np.ndarray:
    """I = F C(m, m, m)."""
    p = _pipe(metric, at)
    m = _frame(p).m
    return p._out(p.F * np.einsum("bijk,bi,bj,bk->b", p.C, m, m, m))


def main_scalar_from_norm(metric: MetricModel, at) -> np.ndarray:
    """|I| = F ||C||_g, since C = (I/F) m m m on a surface."""
    p = _pipe(metric, at)
    gi = p.g_inv
    c2 = np.einsum("bijk,bil,bjm,bkn,blmn->b", p.C, gi, gi, gi, p.C)
    return p._out(p.F * np.sqrt(np.maximum(c2, 0.0)))


@dataclass(frozen=True)
class Decomposition:
    mu: np.ndarray
    lam: np.ndarray
    residual: float
    trace_residual: float
    contraction_residual: float
    landsberg_residual: float


def _basis(p: Pipeline):
    ell = p.y / p.F[:, None]
    h = p.h
    hu = np.einsum("bim,bml->bil", p.g_inv, h)
    t1 = np.einsum("bjkl,bi->bijkl", p.C, ell)
    t2 = (np.einsum("bij,bkl->bijkl", hu, h) + np.einsum("bik,bjl->bijkl", hu, h)
          + np.einsum("bil,bjk->bijkl", hu, h))
    return t1, t2


def decomposition_check(metric: MetricModel, at, c_tol: float = 1e-10) -> Decomposition:
    """Fit B = mu C l + lambda (h h + h h + h h) per point and test the
    trace (E = 3/2 lambda h) and contraction (J + mu/2 F I = 0) relations."""
    p = _pipe(metric, at)
    t1, t2 = _basis(p)
    B = p.B.reshape(len(p.B), -1)
    a1 = t1.reshape(len(t1), -1)
    a2 = t2.reshape(len(t2), -1)
    c_norm = np.max(np.abs(p.C).reshape(len(p.C), -1), axis=1)
    if np.any(c_norm <= c_tol):
        lam = np.einsum("bk,bk->b", B, a2) / np.einsum("bk,bk->b", a2, a2)
        res = float(np.max(np.abs(B - lam[:, None] * a2)))
        raise FitDegenerate(f"{metric.name}: C vanishes, mu is not identifiable", p._out(lam), res)
    A = np.stack([a1, a2], axis=2)
    coef = np.stack([np.linalg.lstsq(A[k], B[k], rcond=None)[0] for k in range(len(B))])
    mu, lam = coef[:, 0], coef[:, 1]
    res = float(np.max(np.abs(B - np.einsum("bkc,bc->bk", A, coef))))
    e_trace = float(np.max(np.abs(p.E - 1.5 * lam[:, None, None] * p.h)))
    j_contr = float(np.max(np.abs(p.J + 0.5 * (mu * p.F)[:, None] * p.I)))
    el = float(np.max(np.abs(p.L + 0.5 * (mu * p.F)[:, None, None, None] * p.C)))
    return Decomposition(p._out(mu), p._out(lam), res, e_trace, j_contr, el)


def frame_coefficients(metric: MetricModel, at, flip: bool = False):
    """(mu, lambda) read off frame components of B(m, m, m); ``flip`` uses -m."""
    p = _pipe(metric, at)
    f = _frame(p)
    if flip:
        f = f.flipped()
    bm = np.einsum("bijkl,bj,bk,bl->bi", p.B, f.m, f.m, f.m)
    main = p.F * np.einsum("bijk,bi,bj,bk->b", p.C, f.m, f.m, f.m)
    mu = p.F * np.einsum("bi,bi->b", f.ell_low, bm) / main
    lam = np.einsum("bi,bi->b", f.m_low, bm) / 3.0
    return p._out(mu), p._out(lam)
