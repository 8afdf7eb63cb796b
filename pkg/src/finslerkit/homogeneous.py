"""Homogeneous (alpha, beta)-spaces G/H from Lie-algebra data.

Vectors of the complement m are written in the basis ``m_indices`` of g.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .alphabeta import ABState, q_delta_phi
from .errors import ChartTooLarge, RegularityViolation, ValidationError
from .metrics import AlphaBetaMetric, Domain, MinkowskiMetric, PhiProfile, dot, quad_form
from . import jets

JACOBI_TOL = 1e-12
CHART_RADIUS = 0.2
SERIES_ORDER = 8


def structure_from_triplets(dim: int, triplets) -> np.ndarray:
    """c[k, i, j] with [e_i, e_j] = sum_k c[k, i, j] e_k from ``(i, j, k, value)``
    entries (0-based); antisymmetric partners are filled in."""
    c = np.zeros((dim, dim, dim))
    for i, j, k, v in triplets:
        if i == j:
            raise ValidationError(f"[e{i}, e{i}] must vanish")
        c[k, i, j] += v
        c[k, j, i] -= v
    return c


@dataclass(frozen=True, eq=False)
class LieAlgebraData:
    dim_g: int
    structure: np.ndarray
    h_indices: tuple[int, ...]
    m_indices: tuple[int, ...]
    inner_product: np.ndarray
    u: np.ndarray
    kappa: float = 1.0
    phi: PhiProfile = field(default_factory=lambda: PhiProfile.randers(1.0))
    name: str = "homogeneous"

    def __post_init__(self):
        c = np.asarray(self.structure, float)
        object.__setattr__(self, "structure", c)
        object.__setattr__(self, "h_indices", tuple(int(i) for i in self.h_indices))
        object.__setattr__(self, "m_indices", tuple(int(i) for i in self.m_indices))
        object.__setattr__(self, "inner_product", np.asarray(self.inner_product, float))
        object.__setattr__(self, "u", np.asarray(self.u, float))
        d = self.dim_g
        if c.shape != (d, d, d):
            raise ValidationError(f"structure constants must have shape ({d}, {d}, {d})")
        if np.max(np.abs(c + np.swapaxes(c, 1, 2)), initial=0.0) > JACOBI_TOL:
            raise ValidationError("structure constants are not antisymmetric")
        jac = self.jacobi_residual()
        if jac > JACOBI_TOL:
            raise ValidationError(f"Jacobi identity residual {jac:.3e} exceeds {JACOBI_TOL}")
        if sorted(self.h_indices + self.m_indices) != list(range(d)):
            raise ValidationError("h_indices and m_indices must partition the basis")
        h, m = list(self.h_indices), list(self.m_indices)
        if h and np.max(np.abs(c[np.ix_(m, h, h)])) > JACOBI_TOL:
            raise ValidationError("h is not closed under the bracket")
        if h and np.max(np.abs(c[np.ix_(h, h, m)])) > JACOBI_TOL:
            raise ValidationError("decomposition is not reductive: [h, m] is not contained in m")
        a = self.inner_product
        n = len(m)
        if a.shape != (n, n) or np.max(np.abs(a - a.T)) > 1e-12:
            raise ValidationError("inner product must be a symmetric matrix on m")
        if np.linalg.eigvalsh(a)[0] <= 0:
            raise ValidationError("inner product is not positive definite")
        if self.u.shape != (n,):
            raise ValidationError(f"u must have {n} components")

    @property
    def n(self) -> int:
        return len(self.m_indices)

    def jacobi_residual(self) -> float:
        c = self.structure
        # [[e_i, e_j], e_k] + cyclic, expanded in the basis
        t = np.einsum("lij,mlk->mijk", c, c)
        r = t + np.einsum("mijk->mjki", t) + np.einsum("mijk->mkij", t)
        return float(np.max(np.abs(r), initial=0.0))

    def ip(self, a, b) -> float:
        return float(np.asarray(a) @ self.inner_product @ np.asarray(b))

    @property
    def u_norm2(self) -> float:
        return self.ip(self.u, self.u)

    @property
    def abelian_on_m(self) -> bool:
        m = list(self.m_indices)
        return bool(np.max(np.abs(self.structure[:, m][:, :, m]), initial=0.0) == 0.0)

    def check_regular(self) -> None:
        if self.u_norm2 >= self.phi.b0 ** 2:
            raise RegularityViolation(f"|u|^2 = {self.u_norm2:.6g} >= b0^2 = {self.phi.b0 ** 2:.6g}")
        self.phi.check_regular(np.linspace(-1, 1, 9) * math.sqrt(self.u_norm2), self.u_norm2)


def bracket_m(data: LieAlgebraData, a, b) -> np.ndarray:
    """[a, b] projected to m (components in the m basis)."""
    m = list(data.m_indices)
    c = data.structure[np.ix_(m, m, m)]
    return np.einsum("kij,i,j->k", c, np.asarray(a, float), np.asarray(b, float))


def _alpha_F(data: LieAlgebraData, y):
    al = math.sqrt(data.ip(y, y))
    return al, al * float(data.phi(data.ip(data.u, y) / al))


def deng_wang_s(data: LieAlgebraData, y) -> float:
    """S(y) = (1/alpha) Phi/(2 Delta^2) (kappa <[u,y]_m, y> + alpha Q <[u,y]_m, u>)."""
    y = np.asarray(y, float)
    if np.linalg.norm(y) <= 1e-12:
        raise ValueError("y must be nonzero")
    al = math.sqrt(data.ip(y, y))
    s = data.ip(data.u, y) / al
    Q, delta, Phi = q_delta_phi(ABState(s, data.u_norm2, data.n, data.phi))
    uy = bracket_m(data, data.u, y)
    return (Phi / (2 * delta ** 2)) * (data.kappa * data.ip(uy, y) + al * Q * data.ip(uy, data.u)) / al


@dataclass(frozen=True)
class Theorem41Report:
    S_plus_u: float
    S_minus_u: float
    c: float
    isotropic_e_c: float
    fit_c: float
    fit_eta: np.ndarray
    fit_residual: float


def theorem41_probe(data: LieAlgebraData, samples: int = 200, seed: int = 0) -> Theorem41Report:
    """c from c (F(u) + F(-u)) = 0 plus a least-squares fit S = (n+1) c F + eta(y)."""
    n = data.n
    if data.u_norm2 > 0:
        sp, sm = deng_wang_s(data, data.u), deng_wang_s(data, -data.u)
        fsum = _alpha_F(data, data.u)[1] + _alpha_F(data, -data.u)[1]
        c = (sp + sm) / ((n + 1) * fsum)
    else:
        sp = sm = c = 0.0
    rng = np.random.default_rng(seed)
    ys = rng.standard_normal((samples, n))
    ys /= np.linalg.norm(ys, axis=1, keepdims=True)
    S = np.array([deng_wang_s(data, y) for y in ys])
    F = np.array([_alpha_F(data, y)[1] for y in ys])
    A = np.column_stack([(n + 1) * F, ys])
    coef, *_ = np.linalg.lstsq(A, S, rcond=None)
    res = float(np.max(np.abs(A @ coef - S)))
    return Theorem41Report(sp, sm, float(c), 0.0, float(coef[0]), coef[1:], res)


# ----------------------------------------------------------------------------
# invariant metric in exponential coordinates
# ----------------------------------------------------------------------------

def _theta_matrix(data: LieAlgebraData, x):
    """Columns Theta_X(e_j) = pr_m sum_k (-1)^k/(k+1)! ad_X^k e_j for X = x^i e_i in m.

    Entries are generic (floats, jets or mpmath values); exact for nilpotent
    algebras of step <= SERIES_ORDER."""
    d = data.dim_g
    m = list(data.m_indices)
    c = data.structure
    ad = [[0.0] * d for _ in range(d)]
    for k in range(d):
        for j in range(d):
            terms = [x[a] * c[k, mi, j] for a, mi in enumerate(m) if c[k, mi, j] != 0.0]
            if terms:
                ad[k][j] = sum(terms[1:], terms[0])
    nonzero = [[not (isinstance(v, float) and v == 0.0) for v in row] for row in ad]
    theta = []
    for j in m:
        v = [1.0 if i == j else 0.0 for i in range(d)]
        acc = list(v)
        for k in range(1, SERIES_ORDER + 1):
            w = [0.0] * d
            for r in range(d):
                terms = [ad[r][t] * v[t] for t in range(d)
                         if nonzero[r][t] and not (isinstance(v[t], float) and v[t] == 0.0)]
                if terms:
                    w[r] = sum(terms[1:], terms[0])
            v = w
            if all(isinstance(e, float) and e == 0.0 for e in v):
                break
            coef = (-1) ** k / math.factorial(k + 1)
            acc = [acc[r] + coef * v[r] if not (isinstance(v[r], float) and v[r] == 0.0) else acc[r]
                   for r in range(d)]
        theta.append([acc[i] for i in m])
    return [[theta[j][i] for j in range(len(m))] for i in range(len(m))]  # rows i, cols j


@dataclass(frozen=True, eq=False)
class HomogeneousMetric(AlphaBetaMetric):
    """Invariant (alpha, beta)-metric F(exp(X) o, y) = F_o(Theta_X(y))."""

    data: LieAlgebraData | None = None

    variant = "homogeneous"

    def __post_init__(self):
        data = self.data
        A = data.inner_product
        Au = A @ data.u

        def a(x):
            M = _theta_matrix(data, x)
            n = len(M)
            AM = [[sum(A[i, k] * M[k][j] for k in range(n)) for j in range(n)] for i in range(n)]
            return [[sum(M[k][i] * AM[k][j] for k in range(n)) for j in range(n)] for i in range(n)]

        def b(x):
            M = _theta_matrix(data, x)
            n = len(M)
            return [sum(Au[k] * M[k][j] for k in range(n)) for j in range(n)]

        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "phi", data.phi)

    @property
    def is_randers(self) -> bool:
        return self.phi.kind == "randers"

    def _theta(self, x, y):
        M = _theta_matrix(self.data, x)
        n = len(M)
        return [sum(M[i][j] * y[j] for j in range(n)) for i in range(n)]

    def alpha(self, x, y):
        return jets.sqrt(quad_form(self.data.inner_product.tolist(), self._theta(x, y)))

    def beta(self, x, y):
        return dot((self.data.inner_product @ self.data.u).tolist(), self._theta(x, y))

    def F(self, x, y):
        th = self._theta(x, y)
        al = jets.sqrt(quad_form(self.data.inner_product.tolist(), th))
        return al * self.phi(dot((self.data.inner_product @ self.data.u).tolist(), th) / al)

    def describe(self) -> dict:
        d = super().describe()
        d["kappa"] = self.data.kappa
        return d


def invariant_metric_field(data: LieAlgebraData, chart: float = CHART_RADIUS, name: str | None = None):
    """Metric model of the invariant (alpha, beta)-metric on a ball chart around o."""
    if chart > CHART_RADIUS:
        raise ChartTooLarge(f"chart radius {chart} exceeds the validity radius {CHART_RADIUS}")
    data.check_regular()
    name = name or data.name
    if data.abelian_on_m:
        A = data.inner_product.tolist()
        Au = (data.inner_product @ data.u).tolist()
        phi = data.phi

        def norm(y):
            al = jets.sqrt(quad_form(A, y))
            return al * phi(dot(Au, y) / al)

        return MinkowskiMetric(name, data.n, Domain("ball", chart), norm=norm)
    return HomogeneousMetric(name, data.n, Domain("ball", chart), data=data)


def heisenberg_data(u=(0.5, 0.0, 0.0), kappa: float = 1.0, phi: PhiProfile | None = None,
                    name: str = "HEIS_RANDERS") -> LieAlgebraData:
    """Heisenberg algebra [e1, e2] = e3, h = 0, identity inner product."""
    return LieAlgebraData(3, structure_from_triplets(3, [(0, 1, 2, 1.0)]), (), (0, 1, 2),
                          np.eye(3), np.asarray(u, float), kappa, phi or PhiProfile.randers(1.0), name)


def heisenberg_randers() -> HomogeneousMetric:
    return invariant_metric_field(heisenberg_data())
