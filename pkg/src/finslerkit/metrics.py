"""Finsler metric models, the built-in catalog and strong-convexity checks.

Every model exposes ``F(x, y)`` and ``F2(x, y)`` written only with arithmetic
operators and the primitives of :mod:`finslerkit.jets`, so the same code runs
on floats, mpmath object arrays and jets. ``x`` and ``y`` are sequences of
length ``n`` whose entries share one (broadcastable) shape.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.stats import qmc

from . import jets
from .errors import DimensionError, DomainError, NonConvex, RegularityViolation
from .jets import Jet


def dot(a: Sequence, b: Sequence):
    return sum(ai * bi for ai, bi in zip(a, b))


def quad_form(a, u: Sequence, v: Sequence | None = None):
    """sum_ij a[i][j] u_i v_j, with ``a=None`` meaning the identity."""
    v = u if v is None else v
    if a is None:
        return dot(u, v)
    n = len(u)
    return sum(a[i][j] * u[i] * v[j] for i in range(n) for j in range(n))


# ----------------------------------------------------------------------------
# chart domains and tangent points
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class Domain:
    """Chart domain: the box [-r, r]^n, the closed ball |x| <= r, or all of
    R^n ("global", where r only bounds the sampling box)."""

    kind: str = "box"
    radius: float = 0.9

    def __post_init__(self):
        if self.kind not in ("box", "ball", "global"):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if self.radius <= 0:
            raise ValueError("domain radius must be positive")

    def contains(self, x) -> np.ndarray:
        x = np.asarray(x, float)
        if self.kind == "global":
            return np.all(np.isfinite(x), axis=-1)
        if self.kind == "box":
            return np.all(np.abs(x) <= self.radius + 1e-12, axis=-1)
        return np.linalg.norm(x, axis=-1) <= self.radius + 1e-12


@dataclass(frozen=True, eq=False)
class TangentPoint:
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, float)
        y = np.asarray(self.y, float)
        if x.shape != y.shape or x.ndim != 1:
            raise ValueError("x and y must be vectors of equal length")
        if not 2 <= x.size <= 4:
            raise DimensionError("dimension must be between 2 and 4")
        if np.linalg.norm(y) <= 1e-12:
            raise DomainError("direction y must be nonzero")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.x.size


# ----------------------------------------------------------------------------
# (alpha, beta) profiles
# ----------------------------------------------------------------------------

def _horner(coeffs: Sequence[float], s):
    r = 0.0
    for c in reversed(coeffs):
        r = r * s + c
    return r


@dataclass(frozen=True)
class PhiProfile:
    """phi(s) for F = alpha * phi(beta / alpha).

    ``kind`` is ``"randers"`` (phi = 1 + eps*s, ``coeffs = (eps,)``),
    ``"polynomial"`` (``coeffs`` in increasing powers) or ``"rational"``
    (``coeffs`` / ``den``). ``b0`` is the regularity radius.
    """

    kind: str
    coeffs: tuple[float, ...]
    b0: float
    den: tuple[float, ...] = (1.0,)

    def __post_init__(self):
        if self.kind not in ("randers", "polynomial", "rational"):
            raise ValueError(f"unknown phi kind {self.kind!r}")
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        object.__setattr__(self, "den", tuple(float(c) for c in self.den))

    @classmethod
    def randers(cls, eps: float = 1.0) -> "PhiProfile":
        return cls("randers", (eps,), 1.0 / abs(eps) if eps else np.inf)

    @classmethod
    def riemannian(cls) -> "PhiProfile":
        return cls("polynomial", (1.0,), np.inf)

    def __call__(self, s):
        if self.kind == "randers":
            return 1.0 + self.coeffs[0] * s
        if self.kind == "polynomial":
            return _horner(self.coeffs, s)
        return _horner(self.coeffs, s) / _horner(self.den, s)

    def derivatives(self, s: float, order: int = 2) -> np.ndarray:
        """phi and its first ``order`` derivatives at a float ``s``."""
        sp = jets.space(0, 1, 0, order)
        j = self(Jet.variable(sp, "y", 0, s))
        if not isinstance(j, Jet):
            return np.r_[float(j), np.zeros(order)]
        return np.array([j.partial(jets_mi(k)) for k in range(order + 1)])

    def regularity_margins(self, s, b2):
        """The three quantities that must be positive for a regular metric:
        phi, phi - s phi', and phi - s phi' + (b^2 - s^2) phi''."""
        s = np.atleast_1d(np.asarray(s, float))
        d = np.array([self.derivatives(si, 2) for si in s])
        p, p1, p2 = d[:, 0], d[:, 1], d[:, 2]
        return p, p - s * p1, p - s * p1 + (b2 - s * s) * p2

    def check_regular(self, s, b2) -> None:
        s = np.atleast_1d(np.asarray(s, float))
        if np.any(np.abs(s) >= self.b0):
            raise RegularityViolation(f"|s| = {np.max(np.abs(s)):.6g} >= b0 = {self.b0:.6g}")
        margins = self.regularity_margins(s, b2)
        for name, m in zip(("phi", "phi - s phi'", "phi - s phi' + (b^2-s^2) phi''"), margins):
            if np.any(m <= 0):
                raise RegularityViolation(f"{name} <= 0 at s = {s[np.argmin(m)]:.6g}")


@functools.lru_cache(maxsize=None)
def jets_mi(k: int) -> jets.MultiIndex:
    return jets.MultiIndex((), (k,))


# ----------------------------------------------------------------------------
# metric models
# ----------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MetricModel:
    """Base class; subclasses implement :meth:`F` (and optionally :meth:`F2`)."""

    name: str
    n: int
    domain: Domain = field(default_factory=Domain)

    variant = "abstract"

    def F(self, x, y):
        raise NotImplementedError

    def F2(self, x, y):
        f = self.F(x, y)
        return f * f

    @property
    def is_randers(self) -> bool:
        return False

    def check_point(self, x, y) -> None:
        x = np.asarray(x, float)
        if not np.all(self.domain.contains(x)):
            raise DomainError(f"point outside the chart domain of {self.name}")
        if np.any(np.linalg.norm(np.asarray(y, float), axis=-1) <= 1e-12):
            raise DomainError("direction y must be nonzero")

    def describe(self) -> dict:
        return {"name": self.name, "variant": self.variant, "n": self.n,
                "domain": {"kind": self.domain.kind, "radius": self.domain.radius}}


@dataclass(frozen=True, eq=False)
class MinkowskiMetric(MetricModel):
    """x-independent norm. ``norm2`` (F^2), when given, is used for F2."""

    norm: Callable | None = None
    norm2: Callable | None = None

    variant = "minkowski"

    def F(self, x, y):
        if self.norm is not None:
            return self.norm(y)
        return jets.sqrt(self.norm2(y))

    def F2(self, x, y):
        if self.norm2 is not None:
            return self.norm2(y)
        f = self.norm(y)
        return f * f


@dataclass(frozen=True, eq=False)
class RiemannianMetric(MetricModel):
    """F^2 = a_ij(x) y^i y^j; ``a`` returns an n x n nested sequence."""

    a: Callable | None = None

    variant = "riemannian"

    def F2(self, x, y):
        return quad_form(None if self.a is None else self.a(x), y)

    def F(self, x, y):
        return jets.sqrt(self.F2(x, y))


@dataclass(frozen=True, eq=False)
class AlphaBetaMetric(MetricModel):
    """F = alpha phi(beta/alpha), alpha^2 = a_ij(x) y^i y^j, beta = b_i(x) y^i.

    ``a=None`` means the flat metric; ``b`` returns a length-n sequence.
    """

    a: Callable | None = None
    b: Callable | None = None
    phi: PhiProfile = field(default_factory=PhiProfile.riemannian)

    variant = "alphabeta"

    def alpha_matrix(self, x):
        if self.a is None:
            return None
        return self.a(x)

    def beta_vector(self, x):
        if self.b is None:
            return [0.0] * self.n
        return self.b(x)

    def alpha(self, x, y):
        return jets.sqrt(quad_form(self.alpha_matrix(x), y))

    def beta(self, x, y):
        return dot(self.beta_vector(x), y)

    def F(self, x, y):
        al = self.alpha(x, y)
        return al * self.phi(self.beta(x, y) / al)

    def alpha_beta_numeric(self, x: np.ndarray):
        """(a_ij, b_i) at a single float point as arrays."""
        a = self.alpha_matrix(list(x))
        a = np.eye(self.n) if a is None else np.array([[float(jets.value_of(v)) for v in row] for row in a])
        b = np.array([float(jets.value_of(v)) for v in self.beta_vector(list(x))])
        return a, b

    def b_norm2(self, x: np.ndarray) -> float:
        a, b = self.alpha_beta_numeric(x)
        return float(b @ np.linalg.solve(a, b))

    def s_value(self, x, y) -> np.ndarray:
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        xs, ys = list(np.moveaxis(x, -1, 0)), list(np.moveaxis(y, -1, 0))
        return np.asarray(self.beta(xs, ys) / self.alpha(xs, ys), float)


@dataclass(frozen=True, eq=False)
class RandersMetric(AlphaBetaMetric):
    """F = alpha + eps * beta."""

    eps: float = 1.0

    variant = "randers"

    def __post_init__(self):
        object.__setattr__(self, "phi", PhiProfile.randers(self.eps))

    @property
    def is_randers(self) -> bool:
        return True

    def F(self, x, y):
        return self.alpha(x, y) + self.eps * self.beta(x, y)


@dataclass(frozen=True, eq=False)
class SphericalMetric(MetricModel):
    """F = psi(|x|, |y|, <x, y>). ``psi`` must be smooth where it is evaluated;
    profiles that use ``r`` are singular at x = 0 for the jet engine."""

    psi: Callable | None = None

    variant = "spherical"

    def F(self, x, y):
        r2 = dot(x, x)
        r = jets.sqrt(r2) if _uses_r(self.psi) else r2
        return self.psi(r, jets.sqrt(dot(y, y)), dot(x, y))


def _uses_r(psi) -> bool:
    return getattr(psi, "uses_r", True)


# ----------------------------------------------------------------------------
# evaluation, sampling and convexity
# ----------------------------------------------------------------------------

def evaluate_F(metric: MetricModel, at: TangentPoint) -> float:
    if at.n != metric.n:
        raise DomainError(f"{metric.name} has dimension {metric.n}, point has {at.n}")
    metric.check_point(at.x, at.y)
    if isinstance(metric, AlphaBetaMetric):
        s = float(metric.s_value(at.x, at.y))
        if abs(s) >= metric.phi.b0:
            raise RegularityViolation(f"|s| = {abs(s):.6g} >= b0 = {metric.phi.b0:.6g}")
    return float(np.asarray(metric.F(list(at.x), list(at.y)), float))


def sample_points(metric: MetricModel, count: int, seed: int = 0, dirs_per_point: int = 1):
    """Deterministic low-discrepancy sample of base points and unit directions.

    Returns ``(x, y)`` with shapes ``(count, dirs, n)``; ``y`` is Euclidean-unit.
    """
    n = metric.n
    halton = qmc.Halton(d=n, scramble=True, seed=seed)
    r = metric.domain.radius * 0.999
    pts = []
    while len(pts) < count:
        u = halton.random(max(8, 2 * count))
        cand = r * (2 * u - 1)
        if metric.domain.kind == "ball":
            cand = cand[np.linalg.norm(cand, axis=1) <= r]
        pts.extend(cand)
    x = np.array(pts[:count])
    dirs = qmc.Halton(d=n, scramble=True, seed=seed + 7919).random(count * dirs_per_point)
    from scipy.stats import norm
    y = norm.ppf(np.clip(dirs, 1e-9, 1 - 1e-9))
    y /= np.linalg.norm(y, axis=1, keepdims=True)
    y = y.reshape(count, dirs_per_point, n)
    return np.repeat(x[:, None, :], dirs_per_point, axis=1), y


def fundamental_tensor_values(metric: MetricModel, x, y) -> np.ndarray:
    """g_ij at float points (shape (..., n)) using a y-order-2 jet."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    sp = jets.space(metric.n, metric.n, 0, 2)
    xs, ys = jets.tangent_variables(sp, x, y)
    f2 = metric.F2(xs, ys)
    n = metric.n
    g = np.empty(x.shape[:-1] + (n, n))
    for i in range(n):
        fi = f2.dy(i)
        for j in range(n):
            g[..., i, j] = 0.5 * fi.dy(j).value
    return g


@dataclass(frozen=True)
class ConvexityReport:
    min_eigenvalue: float
    witness: tuple[np.ndarray, np.ndarray]
    samples: int


def check_strong_convexity(metric: MetricModel, samples: int = 64, seed: int = 0) -> ConvexityReport:
    """Minimum eigenvalue of g over a seeded sample; NonConvex unless > 1e-9."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    x, y = sample_points(metric, samples, seed, dirs_per_point=4)
    x = x.reshape(-1, metric.n)
    y = y.reshape(-1, metric.n)
    f = np.asarray(metric.F(list(x.T), list(y.T)), float)
    if np.any(f <= 0):
        k = int(np.argmin(f))
        raise NonConvex(f"{metric.name}: F <= 0 at a nonzero direction", (x[k], y[k]), float("nan"))
    if isinstance(metric, AlphaBetaMetric) and not metric.is_randers:
        s = metric.s_value(x, y)
        b2 = np.array([metric.b_norm2(xi) for xi in x])
        for si, b2i in zip(s, b2):
            metric.phi.check_regular(si, b2i)
    g = fundamental_tensor_values(metric, x, y)
    eig = np.linalg.eigvalsh(g)[:, 0]
    k = int(np.argmin(eig))
    if not eig[k] > 1e-9:
        raise NonConvex(f"{metric.name}: fundamental tensor not positive definite "
                        f"(min eigenvalue {eig[k]:.3e})", (x[k], y[k]), float(eig[k]))
    return ConvexityReport(float(eig[k]), (x[k], y[k]), len(eig))


# ----------------------------------------------------------------------------
# catalog
# ----------------------------------------------------------------------------

def euclid(n: int) -> MinkowskiMetric:
    return MinkowskiMetric(f"EUCLID_{n}", n, Domain("global", 0.9), norm2=lambda y: dot(y, y))


def _conformal(sign: float):
    def a(x):
        lam = 4.0 / (1.0 + sign * dot(x, x)) ** 2
        n = len(x)
        return [[lam if i == j else 0.0 for j in range(n)] for i in range(n)]
    return a


def sphere2() -> RiemannianMetric:
    return RiemannianMetric("SPHERE_2", 2, Domain("box", 0.9), a=_conformal(1.0))


def poincare2() -> RiemannianMetric:
    return RiemannianMetric("POINCARE_2", 2, Domain("ball", 0.8), a=_conformal(-1.0))


def funk(n: int) -> RandersMetric:
    """Funk metric of the unit ball, split as alpha + beta."""

    def a(x):
        d = 1.0 - dot(x, x)
        return [[((d if i == j else 0.0) + x[i] * x[j]) / (d * d) for j in range(n)] for i in range(n)]

    def b(x):
        d = 1.0 - dot(x, x)
        return [xi / d for xi in x]

    return RandersMetric(f"FUNK_{n}", n, Domain("ball", 0.8), a=a, b=b, eps=1.0)


def mink_randers(eps: float = 0.3) -> RandersMetric:
    return RandersMetric("MINK_RAND", 2, Domain("global", 0.9), b=lambda x: [1.0, 0.0], eps=eps)


def randers_parallel(b=(0.4, 0.2, 0.0)) -> RandersMetric:
    """Flat alpha with a constant (hence parallel) beta."""
    b = tuple(float(v) for v in b)
    return RandersMetric("RAND_PAR", len(b), Domain("global", 0.9), b=lambda x: list(b), eps=1.0)


def randers_cylinder() -> RandersMetric:
    """R x S^2 (stereographic) with beta = 0.5 dx^1, parallel but not constant-coefficient alpha."""

    def a(x):
        lam = 4.0 / (1.0 + x[1] * x[1] + x[2] * x[2]) ** 2
        return [[1.0, 0.0, 0.0], [0.0, lam, 0.0], [0.0, 0.0, lam]]

    return RandersMetric("RAND_CYL", 3, Domain("box", 0.9), a=a, b=lambda x: [1.0, 0.0, 0.0], eps=0.5)


def ab_quad(b=(0.4, 0.0, 0.0)) -> AlphaBetaMetric:
    """phi(s) = 1 + s^2 with flat alpha and constant beta."""
    b = tuple(float(v) for v in b)
    return AlphaBetaMetric("AB_QUAD", len(b), Domain("global", 0.9), b=lambda x: list(b),
                           phi=PhiProfile("polynomial", (1.0, 0.0, 1.0), 1.0))


def spherical_randers(eps: float = 0.3) -> SphericalMetric:
    def psi(r, u, v):
        return u + eps * v
    psi.uses_r = False
    return SphericalMetric("SPH_RAND", 2, Domain("box", 0.9), psi=psi)


def catalog() -> list[MetricModel]:
    from .homogeneous import heisenberg_randers

    return [
        euclid(2), euclid(3), euclid(4),
        sphere2(), poincare2(),
        funk(2), funk(3),
        mink_randers(), randers_parallel(), randers_cylinder(),
        ab_quad(), spherical_randers(),
        heisenberg_randers(),
    ]


def lookup(name: str) -> MetricModel:
    for m in catalog():
        if m.name == name:
            return m
    raise KeyError(f"no catalog metric named {name!r}")
