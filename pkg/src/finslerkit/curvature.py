"""Curvature tensors of a Finsler metric from jets of F^2.

A :class:`Pipeline` expands F^2 once at a batch of tangent points and derives
every other quantity from that expansion:

=============  =======================  =================
quantity       definition               jet caps (x, y)
=============  =======================  =================
g_ij           1/2 d2 F^2 / dy dy       (2, 3)
C_ijk          1/2 dg_ij / dy^k         (2, 2)
I_i            g^jk C_ijk               (2, 2)
G^i            spray coefficients       (1, 3)
N^i_j          dG^i / dy^j              (1, 2)
Gamma^i_jk     dN^i_j / dy^k            (1, 1)
B^i_jkl        dGamma^i_jk / dy^l       values
=============  =======================  =================

Horizontal derivatives use ``delta_p = d/dx^p - N^m_p d/dy^m`` together with
either the Berwald connection (default) or the Chern connection.

``at`` arguments accept a :class:`~finslerkit.metrics.TangentPoint` or a pair
``(x, y)`` of arrays with shape ``(..., n)``; results carry the batch shape.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import jets
from .errors import DomainError, EngineDisagreement, QuadratureFailure
from .jets import Jet, MultiIndex
from .metrics import MetricModel, TangentPoint
from .quadrature import DEFAULT_NODES, sphere_rule, unit_ball_volume

CONNECTIONS = ("berwald", "chern")
QUAD_TOL = 1e-8
_LETTERS = "abcdefgh"


# ----------------------------------------------------------------------------
# volume form
# ----------------------------------------------------------------------------

def _as_jet(v, sp, shape) -> Jet:
    if isinstance(v, Jet):
        return v
    return Jet.constant(sp, np.broadcast_to(np.asarray(v, float), shape))


def _indicatrix_volume(metric: MetricModel, x: np.ndarray, px: int, m: int | None = None,
                       chunk: int = 8) -> Jet:
    """Vol{y : F(x, y) < 1} as an x-only jet, batched over the rows of ``x``."""
    n = metric.n
    pts, w = sphere_rule(n, m)
    ys = [pts[:, i] for i in range(n)]
    sp = jets.space(n, 0, px, 0)
    parts = []
    for lo in range(0, len(x), chunk):
        xc = x[lo:lo + chunk]
        xs = [Jet.variable(sp, "x", i, xc[:, i, None]) for i in range(n)]
        f = _as_jet(metric.F(xs, ys), sp, (len(xc), len(w)))
        if np.any(f.value <= 0):
            raise DomainError(f"{metric.name}: F <= 0 on the unit sphere")
        parts.append((jets.reciprocal(f) ** n * w).sum(axis=-1) / n)
    return Jet(sp, np.concatenate([p.c for p in parts], axis=0))


def _volume_values(metric: MetricModel, x: np.ndarray, m: int) -> np.ndarray:
    n = metric.n
    pts, w = sphere_rule(n, m)
    out = np.empty(len(x))
    for k, xi in enumerate(x):
        f = np.broadcast_to(np.asarray(metric.F(list(xi[:, None]), list(pts.T)), float), w.shape)
        out[k] = np.dot(w, f ** (-n)) / n
    return out


def log_sigma_jet(metric: MetricModel, x, px: int = 2, check: bool = True) -> Jet:
    """ln sigma_F as an x-only jet at each row of ``x`` (shape (B, n)).

    The x-derivatives are exact derivatives of the quadrature sum. With
    ``check`` the quadrature error is estimated by doubling the node count.
    """
    x = np.atleast_2d(np.asarray(x, float))
    vol = _indicatrix_volume(metric, x, px)
    if check:
        fine = _volume_values(metric, x, 2 * DEFAULT_NODES[metric.n])
        err = np.max(np.abs(fine - vol.value) / np.abs(fine))
        if err > QUAD_TOL:
            raise QuadratureFailure(f"{metric.name}: indicatrix volume error estimate {err:.2e}")
    return math.log(unit_ball_volume(metric.n)) - jets.log(vol)


def volume_form_sigma(metric: MetricModel, x) -> np.ndarray:
    """sigma_F(x) = Vol(B^n) / Vol(indicatrix at x)."""
    x = np.asarray(x, float)
    shape = x.shape[:-1]
    ls = log_sigma_jet(metric, x.reshape(-1, metric.n), px=0)
    return np.exp(ls.value).reshape(shape)


def sigma_fd_gradient(metric: MetricModel, x, step: float = 1e-4) -> np.ndarray:
    """Central-difference gradient of ln sigma_F (the classical route)."""
    x = np.asarray(x, float)
    n = metric.n
    out = np.empty(n)
    for i in range(n):
        e = np.zeros(n)
        e[i] = step
        lp, lm = np.log(volume_form_sigma(metric, np.stack([x + e, x - e])))
        out[i] = (lp - lm) / (2 * step)
    return out


# ----------------------------------------------------------------------------
# small jet helpers
# ----------------------------------------------------------------------------

def _trace(t: Jet) -> Jet:
    return Jet(t.space, np.einsum("...iiZ->...Z", t.c))


def _det(g: Jet) -> Jet:
    n = g.shape[-1]

    def minor(rows, cols):
        if len(rows) == 1:
            return g[..., rows[0], cols[0]]
        r0, rest = rows[0], rows[1:]
        total = None
        for k, c in enumerate(cols):
            term = g[..., r0, c] * minor(rest, cols[:k] + cols[k + 1:])
            total = term if total is None else (total + term if k % 2 == 0 else total - term)
        return total

    return minor(tuple(range(n)), tuple(range(n)))


# ----------------------------------------------------------------------------
# the pipeline
# ----------------------------------------------------------------------------

class Pipeline:
    """All curvature quantities at a batch of tangent points (lazily computed)."""

    def __init__(self, metric: MetricModel, x, y, connection: str = "berwald",
                 cross_check: bool = False, x_order: int = 2):
        if connection not in CONNECTIONS:
            raise ValueError(f"connection must be one of {CONNECTIONS}")
        n = metric.n
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        if x.shape[-1] != n or y.shape[-1] != n:
            raise DomainError(f"{metric.name} has dimension {n}")
        x, y = np.broadcast_arrays(x, y)
        self.batch_shape = x.shape[:-1]
        self.metric = metric
        self.n = n
        self.connection = connection
        self.x = x.reshape(-1, n)
        self.y = y.reshape(-1, n)
        metric.check_point(self.x, self.y)
        # x_order = 1 suffices for values up to B, L, J and S
        self.space = jets.space(n, n, x_order, 5)
        self.xs, self.ys = jets.tangent_variables(self.space, self.x, self.y)
        self.yj = jets.stack(self.ys, axis=-1)
        if cross_check:
            self.cross_check()

    def _out(self, a: np.ndarray) -> np.ndarray:
        return np.asarray(a).reshape(self.batch_shape + np.shape(a)[1:])

    # jets ------------------------------------------------------------------
    @functools.cached_property
    def F2(self) -> Jet:
        return _as_jet(self.metric.F2(self.xs, self.ys), self.space, (len(self.x),))

    @functools.cached_property
    def Fj(self) -> Jet:
        return jets.sqrt(self.F2.project(jets.space(self.n, self.n, self.space.px, 3)))

    @functools.cached_property
    def gj(self) -> Jet:
        return 0.5 * self.F2.grad_y().grad_y()

    @functools.cached_property
    def ginvj(self) -> Jet:
        return jets.inverse(self.gj)

    @functools.cached_property
    def Cj(self) -> Jet:
        return 0.5 * self.gj.grad_y()

    @functools.cached_property
    def Ij(self) -> Jet:
        return jets.contract("jk,ijk->i", self.ginvj, self.Cj)

    @functools.cached_property
    def Iupj(self) -> Jet:
        return jets.contract("ij,j->i", self.ginvj, self.Ij)

    @functools.cached_property
    def Gj(self) -> Jet:
        fx = self.F2.grad_x()
        fxy = fx.grad_y()
        rhs = jets.contract("kj,k->j", fxy, self.yj) - fx
        return 0.25 * jets.contract("ij,j->i", self.ginvj, rhs)

    @functools.cached_property
    def Nj(self) -> Jet:
        return self.Gj.grad_y()

    @functools.cached_property
    def Gamj(self) -> Jet:
        """Berwald connection coefficients Gamma^i_jk."""
        return self.Nj.grad_y()

    @functools.cached_property
    def chernj(self) -> Jet:
        g, gi = self.gj, self.ginvj
        d = g.grad_x() - jets.contract("ljm,mk->ljk", g.grad_y(), self.Nj)
        return 0.5 * (jets.contract("il,ljk->ijk", gi, d) + jets.contract("il,lkj->ijk", gi, d)
                      - jets.contract("il,jkl->ijk", gi, d))

    @property
    def connection_coeffs(self) -> Jet:
        return self.Gamj if self.connection == "berwald" else self.chernj

    @functools.cached_property
    def Jj(self) -> Jet:
        """Mean Landsberg curvature from the rate-of-change formula."""
        I = self.Ij
        t1 = jets.contract("im,m->i", I.grad_x(), self.yj)
        t2 = jets.contract("m,mi->i", I, self.Nj)
        t3 = jets.contract("m,im->i", self.Gj, I.grad_y())
        return t1 - t2 - 2.0 * t3

    @functools.cached_property
    def log_sigma(self) -> Jet:
        return log_sigma_jet(self.metric, self.x, px=2)

    @functools.cached_property
    def Sj(self) -> Jet:
        ls = self.log_sigma.lift(jets.space(self.n, self.n, 2, 2))
        return _trace(self.Nj) - jets.contract("i,i->", self.yj, ls.grad_x())

    @functools.cached_property
    def tauj(self) -> Jet:
        ls = self.log_sigma.lift(jets.space(self.n, self.n, 2, 3))
        return 0.5 * jets.log(_det(self.gj)) - ls

    def hderiv(self, t: Jet, kinds: str = "") -> Jet:
        """Horizontal covariant derivative; ``kinds`` marks each tensor index
        as lower ('l') or upper ('u'). The derivative index is appended last."""
        if len(kinds) != len(t.shape) - 1:
            raise ValueError("kinds must describe every tensor index")
        L = _LETTERS[:len(kinds)]
        out = t.grad_x() - jets.contract(f"{L}m,mp->{L}p", t.grad_y(), self.Nj)
        gam = self.connection_coeffs
        for k, kind in enumerate(kinds):
            Lm = L[:k] + "m" + L[k + 1:]
            if kind == "l":
                out = out - jets.contract(f"{Lm},m{L[k]}p->{L}p", t, gam)
            elif kind == "u":
                out = out + jets.contract(f"{Lm},{L[k]}mp->{L}p", t, gam)
            else:
                raise ValueError(f"index kind must be 'l' or 'u', got {kind!r}")
        return out

    # values ----------------------------------------------------------------
    @functools.cached_property
    def F(self) -> np.ndarray:
        return np.sqrt(self.F2.value)

    @functools.cached_property
    def g(self) -> np.ndarray:
        return self.gj.value

    @functools.cached_property
    def g_inv(self) -> np.ndarray:
        return self.ginvj.value

    @functools.cached_property
    def C(self) -> np.ndarray:
        return self.Cj.value

    @functools.cached_property
    def I(self) -> np.ndarray:
        return self.Ij.value

    @functools.cached_property
    def G(self) -> np.ndarray:
        return self.Gj.value

    @functools.cached_property
    def N(self) -> np.ndarray:
        return self.Nj.value

    @functools.cached_property
    def B(self) -> np.ndarray:
        return self.Gamj.grad_y().value

    @functools.cached_property
    def y_low(self) -> np.ndarray:
        return np.einsum("bij,bj->bi", self.g, self.y)

    @functools.cached_property
    def h(self) -> np.ndarray:
        yl = self.y_low
        return self.g - yl[:, :, None] * yl[:, None, :] / (self.F ** 2)[:, None, None]

    @functools.cached_property
    def E(self) -> np.ndarray:
        return 0.5 * np.einsum("bmmij->bij", self.B)

    @functools.cached_property
    def E_from_divergence(self) -> np.ndarray:
        return 0.5 * _trace(self.Nj).grad_y().grad_y().value

    @functools.cached_property
    def L(self) -> np.ndarray:
        return -0.5 * np.einsum("bm,bmjkl->bjkl", self.y_low, self.B)

    @functools.cached_property
    def J(self) -> np.ndarray:
        return np.einsum("bjk,bijk->bi", self.g_inv, self.L)

    @functools.cached_property
    def J_formula(self) -> np.ndarray:
        return self.Jj.value

    @functools.cached_property
    def R(self) -> np.ndarray:
        gx = self.Gj.grad_x().value
        nx = self.Nj.grad_x().value
        return (2 * gx - np.einsum("bikj,bj->bik", nx, self.y)
                + 2 * np.einsum("bj,bijk->bik", self.G, self.Gamj.value)
                - np.einsum("bij,bjk->bik", self.N, self.N))

    @functools.cached_property
    def sigma(self) -> np.ndarray:
        return np.exp(self.log_sigma.value)

    @functools.cached_property
    def S(self) -> np.ndarray:
        return self.Sj.value

    @functools.cached_property
    def tau(self) -> np.ndarray:
        return self.tauj.value

    @functools.cached_property
    def dtau_dy(self) -> np.ndarray:
        return self.tauj.grad_y().value

    # identities --------------------------------------------------------------
    @functools.cached_property
    def _s_terms(self) -> np.ndarray:
        """S_{.k|m} y^m - S_{|k}."""
        sdot = self.hderiv(self.Sj.grad_y(), "l").value
        return np.einsum("bkm,bm->bk", sdot, self.y) - self.hderiv(self.Sj).value

    @functools.cached_property
    def eiilj_residual(self) -> np.ndarray:
        jh = np.einsum("bkm,bm->bk", self.hderiv(self.Jj, "l").value, self.y)
        return jh + np.einsum("bm,bmk->bk", self.I, self.R) - self._s_terms

    @functools.cached_property
    def eq9_residual(self) -> np.ndarray:
        u = self.hderiv(self.Iupj, "u")
        uu = self.hderiv(u, "ul").value
        lhs = np.einsum("bipq,bp,bq->bi", uu, self.y, self.y) + np.einsum("bim,bm->bi", self.R, self.Iupj.value)
        return lhs - np.einsum("bik,bk->bi", self.g_inv, self._s_terms)

    @functools.cached_property
    def I_h_along_y(self) -> np.ndarray:
        """I_{i|p} y^p, which equals J_i."""
        return np.einsum("bip,bp->bi", self.hderiv(self.Ij, "l").value, self.y)

    def reducibility(self, t: np.ndarray, v: np.ndarray) -> np.ndarray:
        h = self.h
        red = (v[:, :, None, None] * h[:, None, :, :] + v[:, None, :, None] * h[:, :, None, :]
               + v[:, None, None, :] * h[:, :, :, None]) / (self.n + 1)
        return t - red

    @functools.cached_property
    def isotropic_berwald_template(self) -> np.ndarray:
        """F^-1 {h_jk h^i_l + h_kl h^i_j + h_lj h^i_k + 2F C_jkl l^i}."""
        h = self.h
        hu = np.einsum("bim,bml->bil", self.g_inv, h)
        ell = self.y / self.F[:, None]
        t = (np.einsum("bjk,bil->bijkl", h, hu) + np.einsum("bkl,bij->bijkl", h, hu)
             + np.einsum("blj,bik->bijkl", h, hu)
             + 2 * self.F[:, None, None, None, None] * np.einsum("bjkl,bi->bijkl", self.C, ell))
        return t / self.F[:, None, None, None, None]

    def cross_check(self, tol: float = 1e-6) -> None:
        """Compare jet-engine g, C and spray inputs with the fd oracle at the first point."""
        n = self.n
        base = np.r_[self.x[0], self.y[0]]
        field = self.metric.F2
        jet = jets.jet_eval(field, base[None, :], 2, 3)
        checks = []
        for i in range(n):
            for j in range(i, n):
                checks.append(MultiIndex.of(n, y={i: 2} if i == j else {i: 1, j: 1}))
            checks.append(MultiIndex.of(n, x={i: 1}))
            checks.append(MultiIndex.of(n, x={i: 1}, y={0: 1}))
            checks.append(MultiIndex.of(n, y={i: 3}))
        for mi in checks:
            a = float(jet.partial(mi)[0])
            b = jets.fd_partial(field, base, mi)
            if abs(a - b) > tol * (1 + abs(a)):
                raise EngineDisagreement(f"{self.metric.name}: jet {a!r} vs fd {b!r} at {mi}")

    def sample(self) -> "CurvatureSample":
        o = self._out
        return CurvatureSample(
            x=o(self.x), y=o(self.y), F=o(self.F), g=o(self.g), g_inv=o(self.g_inv), C=o(self.C),
            I=o(self.I), tau=o(self.tau), h=o(self.h), G=o(self.G), N=o(self.N), B=o(self.B),
            E=o(self.E), L=o(self.L), J=o(self.J), R=o(self.R), S=o(self.S), sigma=o(self.sigma))


@dataclass(frozen=True, eq=False)
class CurvatureSample:
    x: np.ndarray
    y: np.ndarray
    F: np.ndarray
    g: np.ndarray
    g_inv: np.ndarray
    C: np.ndarray
    I: np.ndarray
    tau: np.ndarray
    h: np.ndarray
    G: np.ndarray
    N: np.ndarray
    B: np.ndarray
    E: np.ndarray
    L: np.ndarray
    J: np.ndarray
    R: np.ndarray
    S: np.ndarray
    sigma: np.ndarray


@dataclass(frozen=True, eq=False)
class Flag:
    pole: TangentPoint
    u: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "u", np.asarray(self.u, float))


# ----------------------------------------------------------------------------
# functional API
# ----------------------------------------------------------------------------

def _split(at):
    if isinstance(at, TangentPoint):
        return at.x, at.y
    x, y = at
    return np.asarray(x, float), np.asarray(y, float)


@functools.lru_cache(maxsize=16)
def _cached(metric, xb: bytes, yb: bytes, shape: tuple, connection: str) -> Pipeline:
    x = np.frombuffer(xb).reshape(shape)
    y = np.frombuffer(yb).reshape(shape)
    return Pipeline(metric, x, y, connection)


def pipeline(metric: MetricModel, at, connection: str = "berwald", cross_check: bool = False) -> Pipeline:
    x, y = _split(at)
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    if cross_check:
        return Pipeline(metric, x, y, connection, cross_check=True)
    x = np.ascontiguousarray(x)
    y = np.ascontiguousarray(y)
    return _cached(metric, x.tobytes(), y.tobytes(), x.shape, connection)


def curvature_sample(metric, at, cross_check: bool = False) -> CurvatureSample:
    return pipeline(metric, at, cross_check=cross_check).sample()


def _value(name):
    def op(metric: MetricModel, at, cross_check: bool = False) -> np.ndarray:
        p = pipeline(metric, at, cross_check=cross_check)
        return p._out(getattr(p, name))
    op.__name__ = name
    return op


fundamental_tensor = _value("g")
fundamental_tensor.__doc__ = "g_ij = 1/2 d^2 F^2 / dy^i dy^j."
cartan_torsion = _value("C")
cartan_torsion.__doc__ = "C_ijk = 1/4 d^3 F^2 / dy^i dy^j dy^k."
mean_cartan = _value("I")
mean_cartan.__doc__ = "I_i = g^jk C_ijk."
spray = _value("G")
spray.__doc__ = "Spray coefficients G^i."
nonlinear_connection = _value("N")
nonlinear_connection.__doc__ = "N^i_j = dG^i / dy^j."
berwald_curvature = _value("B")
berwald_curvature.__doc__ = "B^i_jkl = d^3 G^i / dy^j dy^k dy^l."
mean_berwald = _value("E")
mean_berwald.__doc__ = "E_ij = 1/2 B^m_mij."
landsberg = _value("L")
landsberg.__doc__ = "L_jkl = -1/2 y_i B^i_jkl."
mean_landsberg = _value("J")
mean_landsberg.__doc__ = "J_i = g^jk L_ijk."
mean_landsberg_formula = _value("J_formula")
mean_landsberg_formula.__doc__ = "J_i = y^m dI_i/dx^m - I_m N^m_i - 2 G^m dI_i/dy^m."
riemann_curvature = _value("R")
riemann_curvature.__doc__ = "Riemann curvature R^i_k."
s_curvature = _value("S")
s_curvature.__doc__ = "S = dG^i/dy^i - y^i d(ln sigma_F)/dx^i."
distortion = _value("tau")
distortion.__doc__ = "tau = ln(sqrt(det g) / sigma_F)."
angular_metric = _value("h")
angular_metric.__doc__ = "h_ij = g_ij - F^-2 y_i y_j."


def flag_curvature(metric: MetricModel, flag: Flag) -> float:
    p = pipeline(metric, flag.pole)
    return float(flag_curvature_values(p, flag.u[None, :])[0])


def flag_curvature_values(p: Pipeline, u: np.ndarray) -> np.ndarray:
    """K for transverse edges ``u`` (shape (B, n)) at the pipeline's points."""
    u = np.asarray(u, float).reshape(-1, p.n)
    g, y = p.g, p.y
    gyy = np.einsum("bij,bi,bj->b", g, y, y)
    guu = np.einsum("bij,bi,bj->b", g, u, u)
    gyu = np.einsum("bij,bi,bj->b", g, y, u)
    den = gyy * guu - gyu ** 2
    if np.any(den <= 1e-14 * gyy * guu):
        raise DomainError("flag edge u is parallel to the pole y")
    num = np.einsum("bij,bi,bjk,bk->b", g, u, p.R, u)
    return num / den


def transverse_edges(p: Pipeline, seed: int = 0) -> np.ndarray:
    """Seeded flag edges, made g_y-orthogonal to y and g_y-unit."""
    u = np.random.default_rng(seed).standard_normal(p.y.shape)
    g, y = p.g, p.y
    u -= (np.einsum("bij,bi,bj->b", g, u, y) / np.einsum("bij,bi,bj->b", g, y, y))[:, None] * y
    return u / np.sqrt(np.einsum("bij,bi,bj->b", g, u, u))[:, None]


def horizontal_derivative(metric: MetricModel, field: Callable, at, p: int | None = None,
                          connection: str = "berwald") -> np.ndarray:
    """delta f / delta x^p for a scalar field f(x, y); all p when ``p`` is None."""
    pl = pipeline(metric, at, connection)
    sp = jets.space(pl.n, pl.n, 1, 1)
    f = _as_jet(field(*jets.tangent_variables(sp, pl.x, pl.y)), sp, (len(pl.x),))
    d = pl._out(pl.hderiv(f).value)
    return d if p is None else d[..., p]


def berwald_h_derivative(metric: MetricModel, vector_field: Callable, at, p: int | None = None,
                         connection: str = "berwald") -> np.ndarray:
    """V^i_{|p} for a y-dependent vector field returning a length-n sequence."""
    pl = pipeline(metric, at, connection)
    sp = jets.space(pl.n, pl.n, 1, 1)
    comps = vector_field(*jets.tangent_variables(sp, pl.x, pl.y))
    v = jets.stack([_as_jet(c, sp, (len(pl.x),)) for c in comps], axis=-1)
    d = pl._out(pl.hderiv(v, "u").value)
    return d if p is None else d[..., p]


def identity_eiilj_residual(metric: MetricModel, at, connection: str = "berwald") -> np.ndarray:
    """J_{k|m} y^m + I_m R^m_k - (S_{.k|m} y^m - S_{|k})."""
    p = pipeline(metric, at, connection)
    return p._out(p.eiilj_residual)


def eq9_residual(metric: MetricModel, at, connection: str = "berwald") -> np.ndarray:
    """I^i_{|p|q} y^p y^q + R^i_m I^m - g^ik (S_{.k|m} y^m - S_{|k})."""
    p = pipeline(metric, at, connection)
    return p._out(p.eq9_residual)


def c_reducibility_residual(metric: MetricModel, at) -> np.ndarray:
    """max |C_ijk - (I_i h_jk + I_j h_ik + I_k h_ij)/(n+1)| per point."""
    p = pipeline(metric, at)
    r = p.reducibility(p.C, p.I)
    return p._out(np.abs(r).reshape(len(r), -1).max(axis=1))


def landsberg_reducibility_residual(metric: MetricModel, at) -> np.ndarray:
    """max |L_ijk - (J_i h_jk + J_j h_ik + J_k h_ij)/(n+1)| per point."""
    p = pipeline(metric, at)
    r = p.reducibility(p.L, p.J)
    return p._out(np.abs(r).reshape(len(r), -1).max(axis=1))


def isotropic_berwald_fit(metric: MetricModel, at, groups: np.ndarray | None = None):
    """Least-squares c in B = c T (isotropic Berwald form); returns (c, residual).

    ``groups`` labels points sharing one base point (c = c(x)); by default all
    points form one group. Both outputs are per group.
    """
    p = pipeline(metric, at)
    return fit_scalar_multiple(p.B, p.isotropic_berwald_template, groups)


def fit_scalar_multiple(target: np.ndarray, template: np.ndarray, groups=None):
    """Per-group least squares of target ~ c * template; (c, max residual)."""
    tb = target.reshape(len(target), -1)
    mb = template.reshape(len(template), -1)
    groups = np.zeros(len(tb), int) if groups is None else np.asarray(groups).ravel()
    labels = np.unique(groups)
    cs = np.empty(len(labels))
    res = np.empty(len(labels))
    for k, lab in enumerate(labels):
        sel = groups == lab
        t, m = tb[sel].ravel(), mb[sel].ravel()
        mm = float(m @ m)
        cs[k] = float(t @ m) / mm if mm > 0 else 0.0
        res[k] = float(np.max(np.abs(t - cs[k] * m))) if t.size else 0.0
    return cs, res
