"""Truncated multivariate Taylor arithmetic on the tangent bundle.

A :class:`Jet` holds the Taylor coefficients of a (tensor of) scalar field(s)
around a base point ``(x, y)`` in R^n x R^n. Coefficients are truncated
separately in the total x-degree and the total y-degree, so a jet lives in a
:class:`JetSpace` with caps ``(px, py)``. Every coefficient that is stored is
exact; differentiating lowers the relevant cap by one, and binary operations
project both operands onto the smaller common space.

Jets carry leading tensor axes (batch of sample points, tensor indices), so a
whole curvature pipeline over many points runs as a handful of array
operations.

The module also contains the finite-difference engine :func:`fd_partial`,
which shares nothing with the jet code and is used as an independent oracle.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import mpmath
import numpy as np
from scipy.special import binom

from .errors import DomainError, StepUnderflow

MAX_X_ORDER = 2
MAX_Y_ORDER = 5


@dataclass(frozen=True)
class MultiIndex:
    """Derivative orders in the base coordinates x and the fibre coordinates y."""

    x_orders: tuple[int, ...]
    y_orders: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "x_orders", tuple(int(v) for v in self.x_orders))
        object.__setattr__(self, "y_orders", tuple(int(v) for v in self.y_orders))
        if any(v < 0 for v in self.x_orders + self.y_orders):
            raise ValueError("derivative orders must be non-negative")
        if sum(self.x_orders) > MAX_X_ORDER or sum(self.y_orders) > MAX_Y_ORDER:
            raise ValueError(
                f"multi-index exceeds bounds (x <= {MAX_X_ORDER}, y <= {MAX_Y_ORDER})"
            )

    @classmethod
    def of(cls, n: int, x: dict[int, int] | None = None, y: dict[int, int] | None = None):
        """Build from sparse ``{variable: order}`` maps (0-based variables)."""
        xo = [0] * n
        yo = [0] * n
        for k, v in (x or {}).items():
            xo[k] = v
        for k, v in (y or {}).items():
            yo[k] = v
        return cls(tuple(xo), tuple(yo))

    @property
    def order(self) -> int:
        return sum(self.x_orders) + sum(self.y_orders)

    @property
    def factorial(self) -> int:
        return math.prod(math.factorial(v) for v in self.x_orders + self.y_orders)

    def as_tuple(self) -> tuple[int, ...]:
        return self.x_orders + self.y_orders


def _monomials(k: int, d: int) -> list[tuple[int, ...]]:
    out = []
    for deg in range(d + 1):
        for combo in itertools.combinations_with_replacement(range(k), deg):
            e = [0] * k
            for v in combo:
                e[v] += 1
            out.append(tuple(e))
    return out


def _group_pairs(monos: list[tuple[int, ...]]):
    """All (c, a, b) index triples with a + b = c inside one variable group."""
    lookup = {m: i for i, m in enumerate(monos)}
    cs, as_, bs = [], [], []
    for ic, c in enumerate(monos):
        for ia, a in enumerate(monos):
            if all(ai <= ci for ai, ci in zip(a, c)):
                cs.append(ic)
                as_.append(ia)
                bs.append(lookup[tuple(ci - ai for ci, ai in zip(c, a))])
    return np.array(cs), np.array(as_), np.array(bs)


class JetSpace:
    """Index bookkeeping for jets in ``nx`` base and ``ny`` fibre variables.

    Use :func:`space` to obtain cached instances.
    """

    def __init__(self, nx: int, ny: int, px: int, py: int):
        self.nx, self.ny, self.px, self.py = nx, ny, px, py
        self.xmonos = _monomials(nx, px)
        self.ymonos = _monomials(ny, py)
        nyb = len(self.ymonos)
        self.size = len(self.xmonos) * nyb
        self.index = {
            xm + ym: i * nyb + j
            for i, xm in enumerate(self.xmonos)
            for j, ym in enumerate(self.ymonos)
        }
        self.degrees = np.array(
            [[sum(xm), sum(ym)] for xm in self.xmonos for ym in self.ymonos], dtype=int
        ).reshape(-1, 2)
        self.total_degree = px + py

        xc, xa, xb = _group_pairs(self.xmonos)
        yc, ya, yb = _group_pairs(self.ymonos)
        c = (xc[:, None] * nyb + yc[None, :]).ravel()
        a = (xa[:, None] * nyb + ya[None, :]).ravel()
        b = (xb[:, None] * nyb + yb[None, :]).ravel()
        order = np.argsort(c, kind="stable")
        self._ia = a[order]
        self._ib = b[order]
        c = c[order]
        self._starts = np.flatnonzero(np.r_[True, c[1:] != c[:-1]])

    def __repr__(self):
        return f"JetSpace(nx={self.nx}, ny={self.ny}, px={self.px}, py={self.py})"

    @property
    def key(self):
        return (self.nx, self.ny, self.px, self.py)

    def mul(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        prod = a[..., self._ia] * b[..., self._ib]
        return np.add.reduceat(prod, self._starts, axis=-1)

    def contract(self, subscripts: str, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Tensor contraction of two coefficient arrays (trailing axis = jet)."""
        ins, out = subscripts.split("->")
        sa, sb = ins.split(",")
        expr = f"...{sa}Z,...{sb}Z->...{out}Z"
        prod = np.einsum(expr, a[..., self._ia], b[..., self._ib], optimize=True)
        return np.add.reduceat(prod, self._starts, axis=-1)


@functools.lru_cache(maxsize=None)
def space(nx: int, ny: int, px: int, py: int) -> JetSpace:
    return JetSpace(nx, ny, max(px, 0), max(py, 0))


@functools.lru_cache(maxsize=None)
def _projection(src: tuple, dst: tuple) -> np.ndarray:
    s, d = space(*src), space(*dst)
    return np.array([s.index[m] for m in (xm + ym for xm in d.xmonos for ym in d.ymonos)])


@functools.lru_cache(maxsize=None)
def _derivative_table(src: tuple, group: str, var: int):
    s = space(*src)
    if group == "x":
        d = space(s.nx, s.ny, s.px - 1, s.py)
    else:
        d = space(s.nx, s.ny, s.px, s.py - 1)
    idx, fac = [], []
    for xm in d.xmonos:
        for ym in d.ymonos:
            m = list(xm + ym)
            pos = var if group == "x" else s.nx + var
            m[pos] += 1
            idx.append(s.index[tuple(m)])
            fac.append(m[pos])
    return d, np.array(idx), np.array(fac, dtype=float)


@functools.lru_cache(maxsize=None)
def _lift_table(src: tuple, dst: tuple) -> tuple[np.ndarray, np.ndarray]:
    """Embed an x-only jet (ny = 0) into a space with fibre variables."""
    s, d = space(*src), space(*dst)
    zero_y = (0,) * d.ny
    dst_idx, src_idx = [], []
    for xm in d.xmonos:
        dst_idx.append(d.index[xm + zero_y])
        src_idx.append(s.index[xm])
    return np.array(dst_idx), np.array(src_idx)


class Jet:
    """Tensor of truncated Taylor expansions sharing one :class:`JetSpace`.

    ``c`` has shape ``tensor_shape + (space.size,)``; ``c[..., 0]`` is the value.
    """

    __slots__ = ("space", "c")
    __array_ufunc__ = None

    def __init__(self, sp: JetSpace, c: np.ndarray):
        self.space = sp
        self.c = c

    # construction -----------------------------------------------------------
    @classmethod
    def constant(cls, sp: JetSpace, value) -> "Jet":
        value = np.asarray(value, dtype=float)
        c = np.zeros(value.shape + (sp.size,))
        c[..., 0] = value
        return cls(sp, c)

    @classmethod
    def variable(cls, sp: JetSpace, group: str, var: int, value) -> "Jet":
        j = cls.constant(sp, value)
        pos = var if group == "x" else sp.nx + var
        m = [0] * (sp.nx + sp.ny)
        m[pos] = 1
        key = tuple(m)
        if key in sp.index:
            j.c[..., sp.index[key]] = 1.0
        return j

    # basic properties -------------------------------------------------------
    @property
    def shape(self) -> tuple[int, ...]:
        return self.c.shape[:-1]

    @property
    def value(self) -> np.ndarray:
        return self.c[..., 0]

    def __repr__(self):
        return f"Jet(shape={self.shape}, {self.space!r})"

    def __getitem__(self, idx) -> "Jet":
        if not isinstance(idx, tuple):
            idx = (idx,)
        return Jet(self.space, self.c[idx + (slice(None),)])

    def __len__(self):
        return self.shape[0]

    def project(self, sp: JetSpace) -> "Jet":
        if sp is self.space:
            return self
        return Jet(sp, self.c[..., _projection(self.space.key, sp.key)])

    def coef(self, mi: MultiIndex | tuple) -> np.ndarray:
        key = mi.as_tuple() if isinstance(mi, MultiIndex) else tuple(mi)
        try:
            return self.c[..., self.space.index[key]]
        except KeyError:
            raise KeyError(f"multi-index {key} is outside the valid orders of {self.space}")

    def partial(self, mi: MultiIndex) -> np.ndarray:
        return self.coef(mi) * mi.factorial

    def dx(self, var: int) -> "Jet":
        return self._diff("x", var)

    def dy(self, var: int) -> "Jet":
        return self._diff("y", var)

    def _diff(self, group: str, var: int) -> "Jet":
        cap = self.space.px if group == "x" else self.space.py
        if cap == 0:
            raise ValueError(f"cannot differentiate: {group}-order already exhausted")
        d, idx, fac = _derivative_table(self.space.key, group, var)
        return Jet(d, self.c[..., idx] * fac)

    def grad_y(self) -> "Jet":
        """Stack of fibre derivatives; the new index is appended last."""
        return stack([self.dy(k) for k in range(self.space.ny)], axis=-1)

    def grad_x(self) -> "Jet":
        return stack([self.dx(k) for k in range(self.space.nx)], axis=-1)

    def sum(self, axis=None) -> "Jet":
        if axis is None:
            axis = tuple(range(len(self.shape)))
        axis = _tensor_axes(axis, len(self.shape))
        return Jet(self.space, self.c.sum(axis=axis))

    def moveaxis(self, src, dst) -> "Jet":
        nd = len(self.shape)
        return Jet(self.space, np.moveaxis(self.c, _tensor_axes(src, nd), _tensor_axes(dst, nd)))

    def lift(self, sp: JetSpace) -> "Jet":
        """Embed an x-only jet into ``sp`` (constant in the fibre variables)."""
        if self.space.ny != 0:
            raise ValueError("only fibre-free jets can be lifted")
        tgt = space(sp.nx, sp.ny, min(sp.px, self.space.px), sp.py)
        src = space(self.space.nx, 0, tgt.px, 0)
        me = self.project(src)
        di, si = _lift_table(src.key, tgt.key)
        c = np.zeros(self.shape + (tgt.size,))
        c[..., di] = me.c[..., si]
        return Jet(tgt, c)

    # arithmetic -------------------------------------------------------------
    def _common(self, other: "Jet"):
        a, b = self.space, other.space
        if a is b:
            return self, other, a
        if (a.nx, a.ny) != (b.nx, b.ny):
            raise ValueError(f"incompatible jet spaces {a} and {b}")
        sp = space(a.nx, a.ny, min(a.px, b.px), min(a.py, b.py))
        return self.project(sp), other.project(sp), sp

    def __add__(self, other):
        if isinstance(other, Jet):
            a, b, sp = self._common(other)
            return Jet(sp, a.c + b.c)
        other = np.asarray(other, dtype=float)
        c = np.array(np.broadcast_to(self.c, np.broadcast_shapes(self.shape, other.shape) + (self.space.size,)))
        c[..., 0] += other
        return Jet(self.space, c)

    __radd__ = __add__

    def __neg__(self):
        return Jet(self.space, -self.c)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            a, b, sp = self._common(other)
            return Jet(sp, sp.mul(a.c, b.c))
        other = np.asarray(other, dtype=float)
        return Jet(self.space, self.c * other[..., None])

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * reciprocal(other)
        other = np.asarray(other, dtype=float)
        if np.any(other == 0):
            raise DomainError("division by zero")
        return Jet(self.space, self.c / other[..., None])

    def __rtruediv__(self, other):
        return reciprocal(self) * other

    def __pow__(self, p):
        if isinstance(p, (int, np.integer)) or (isinstance(p, float) and p.is_integer()):
            p = int(p)
            if p < 0:
                return reciprocal(self) ** (-p)
            result = None
            base = self
            while p:
                if p & 1:
                    result = base if result is None else result * base
                p >>= 1
                if p:
                    base = base * base
            return Jet.constant(self.space, np.ones(self.shape)) if result is None else result
        return power(self, float(p))


def _tensor_axes(axis, nd):
    # negative axes count from the end of the tensor shape, not the coefficient axis
    if isinstance(axis, int):
        return axis if axis >= 0 else axis - 1
    return tuple(a if a >= 0 else a - 1 for a in axis)


def stack(jets: Sequence, axis: int = 0) -> Jet:
    jets = list(jets)
    js = [j for j in jets if isinstance(j, Jet)]
    if not js:
        return np.stack([np.asarray(j, float) for j in jets], axis=axis)
    sp = js[0].space
    for j in js[1:]:
        _, _, sp = js[0].project(sp)._common(j)
    shape = np.broadcast_shapes(*[j.shape if isinstance(j, Jet) else np.shape(j) for j in jets])
    cs = []
    for j in jets:
        if not isinstance(j, Jet):
            j = Jet.constant(sp, np.asarray(j, float))
        c = j.project(sp).c
        cs.append(np.broadcast_to(c, shape + (sp.size,)))
    if axis < 0:
        axis -= 1
    return Jet(sp, np.stack(cs, axis=axis))


def contract(subscripts: str, a, b):
    """``einsum`` of two operands that may be jets or plain arrays.

    Subscripts describe tensor axes only; leading batch axes broadcast.
    """
    ins, out = subscripts.split("->")
    sa, sb = ins.split(",")
    ja, jb = isinstance(a, Jet), isinstance(b, Jet)
    if ja and jb:
        a, b, sp = a._common(b)
        return Jet(sp, sp.contract(subscripts, a.c, b.c))
    if ja:
        return Jet(a.space, np.einsum(f"...{sa}Z,...{sb}->...{out}Z", a.c, np.asarray(b, float)))
    if jb:
        return Jet(b.space, np.einsum(f"...{sa},...{sb}Z->...{out}Z", np.asarray(a, float), b.c))
    return np.einsum(f"...{sa},...{sb}->...{out}", a, b)


def inverse(g: Jet) -> Jet:
    """Matrix inverse of a jet-valued matrix (last two axes) by Newton-Schulz."""
    g0 = g.value
    x = Jet.constant(g.space, np.linalg.inv(g0))
    eye = np.eye(g.shape[-1])
    steps = max(1, math.ceil(math.log2(g.space.total_degree + 1)))
    for _ in range(steps):
        gx = contract("ij,jk->ik", g, x)
        x = contract("ij,jk->ik", x, 2 * eye - gx)
    return x


# primitive functions ----------------------------------------------------------

def _compose(u: Jet, series: Callable[[np.ndarray, int], list]) -> Jet:
    """Evaluate f(u) given the Taylor coefficients of f at u0."""
    u0 = u.value
    k_max = u.space.total_degree
    coeffs = series(u0, k_max)
    delta = Jet(u.space, u.c.copy())
    delta.c[..., 0] = 0.0
    r = delta * coeffs[k_max] if k_max > 0 else None
    for k in range(k_max - 1, 0, -1):
        r = (r + coeffs[k]) * delta
    if r is None:
        return Jet.constant(u.space, coeffs[0])
    return r + coeffs[0]


def _power_series(p: float):
    def series(u0, kmax):
        return [binom(p, k) * u0 ** (p - k) for k in range(kmax + 1)]
    return series


def _is_mp(u) -> bool:
    return isinstance(u, mpmath.mpf) or (isinstance(u, np.ndarray) and u.dtype == object)


def _mp_apply(fn, u):
    return np.frompyfunc(fn, 1, 1)(u) if isinstance(u, np.ndarray) else fn(u)


def _mp_min(u):
    return min(u.ravel()) if isinstance(u, np.ndarray) else u


def reciprocal(u):
    if isinstance(u, Jet):
        if np.any(u.value == 0):
            raise DomainError("division by zero")
        return _compose(u, lambda u0, kmax: [(-1.0) ** k * u0 ** (-1.0 - k) for k in range(kmax + 1)])
    if _is_mp(u):
        return 1 / u
    u = np.asarray(u, float)
    if np.any(u == 0):
        raise DomainError("division by zero")
    return 1.0 / u


def power(u, p: float):
    if isinstance(u, Jet):
        if np.any(u.value <= 0):
            raise DomainError(f"non-integer power {p} of a non-positive value")
        return _compose(u, _power_series(p))
    if _is_mp(u):
        if _mp_min(u) <= 0:
            raise DomainError(f"non-integer power {p} of a non-positive value")
        return u ** mpmath.mpf(p)
    u = np.asarray(u, float)
    if np.any(u <= 0):
        raise DomainError(f"non-integer power {p} of a non-positive value")
    return u ** p


def sqrt(u):
    if isinstance(u, Jet):
        if np.any(u.value <= 0):
            raise DomainError("sqrt of a non-positive value")
        return _compose(u, _power_series(0.5))
    if _is_mp(u):
        if _mp_min(u) < 0:
            raise DomainError("sqrt of a negative value")
        return _mp_apply(mpmath.sqrt, u)
    u = np.asarray(u, float)
    if np.any(u < 0):
        raise DomainError("sqrt of a negative value")
    return np.sqrt(u)


def log(u):
    if isinstance(u, Jet):
        if np.any(u.value <= 0):
            raise DomainError("log of a non-positive value")

        def series(u0, kmax):
            return [np.log(u0)] + [(-1.0) ** (k + 1) / (k * u0 ** k) for k in range(1, kmax + 1)]

        return _compose(u, series)
    if _is_mp(u):
        if _mp_min(u) <= 0:
            raise DomainError("log of a non-positive value")
        return _mp_apply(mpmath.log, u)
    u = np.asarray(u, float)
    if np.any(u <= 0):
        raise DomainError("log of a non-positive value")
    return np.log(u)


def exp(u):
    if isinstance(u, Jet):
        return _compose(u, lambda u0, kmax: [np.exp(u0) / math.factorial(k) for k in range(kmax + 1)])
    if _is_mp(u):
        return _mp_apply(mpmath.exp, u)
    return np.exp(np.asarray(u, float))


def value_of(u) -> np.ndarray:
    return u.value if isinstance(u, Jet) else np.asarray(u, float)


# public engine API --------------------------------------------------------------

ScalarField = Callable[[Sequence, Sequence], object]


def tangent_variables(sp: JetSpace, x, y):
    """Coordinate jets for base points ``x`` and directions ``y`` (shape (..., n))."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    xs = [Jet.variable(sp, "x", i, x[..., i]) for i in range(sp.nx)]
    ys = [Jet.variable(sp, "y", i, y[..., i]) for i in range(sp.ny)]
    return xs, ys


def jet_eval(field: ScalarField, base, max_x_order: int = MAX_X_ORDER,
             max_y_order: int = MAX_Y_ORDER) -> Jet:
    """Taylor-expand ``field`` at ``base`` = (x, y) (last axis of length 2n)."""
    if not (0 <= max_x_order <= MAX_X_ORDER and 0 <= max_y_order <= MAX_Y_ORDER):
        raise ValueError("requested orders exceed the multi-index bounds")
    base = np.asarray(base, float)
    n = base.shape[-1] // 2
    sp = space(n, n, max_x_order, max_y_order)
    xs, ys = tangent_variables(sp, base[..., :n], base[..., n:])
    out = field(xs, ys)
    if not isinstance(out, Jet):
        return Jet.constant(sp, np.broadcast_to(np.asarray(out, float), base.shape[:-1]))
    return out


def partial(field: ScalarField, base, idx: MultiIndex) -> np.ndarray:
    """Exact mixed partial derivative via the jet engine."""
    jet = jet_eval(field, base, sum(idx.x_orders), sum(idx.y_orders))
    return jet.partial(idx)


FD_DIGITS = 40


def fd_partial(field: ScalarField, base, idx: MultiIndex, step: float | None = None,
               levels: int = 1, digits: int | None = FD_DIGITS) -> float:
    """Mixed partial by tensor-product central differences plus Richardson.

    The k-th central difference has an error expansion in even powers of the
    step, so ``levels`` halvings give error O(step^(2 + 2*levels)); the default
    single level is O(step^4). ``step`` defaults to ``1e-3 * (1 + |base|)``.

    Stencil values are computed in ``digits``-digit arithmetic (mpmath) so that
    cancellation in high-order differences does not swamp the result; pass
    ``digits=None`` for plain float64, which is only trustworthy up to about
    third order.
    """
    base = np.asarray(base, float)
    n = base.size // 2
    orders = np.array(idx.as_tuple())
    if step is None:
        step = 1e-3 * (1.0 + float(np.linalg.norm(base)))
    if step < 1e-10:
        raise StepUnderflow(f"finite-difference step {step:g} below 1e-10")
    active = [v for v in range(2 * n) if orders[v] > 0]

    stencils = []
    for v in active:
        k = orders[v]
        stencils.append([(j - k / 2.0, (-1) ** (k - j) * math.comb(k, j)) for j in range(k + 1)])
    combos = list(itertools.product(*stencils))
    offsets = [[o for o, _ in combo] for combo in combos]
    weights = [math.prod(w for _, w in combo) for combo in combos]

    def estimate(h):
        if digits is None:
            pts = np.repeat(base[None, :], len(combos), axis=0)
            if active:
                pts[:, active] += np.array(offsets) * h
            with np.errstate(invalid="ignore", divide="ignore"):
                vals = np.broadcast_to(
                    np.asarray(field(list(pts[:, :n].T), list(pts[:, n:].T)), float), (len(combos),))
            if not np.all(np.isfinite(vals)):
                raise DomainError("field not finite on the finite-difference stencil")
            return float(np.dot(weights, vals)) / h ** idx.order
        with mpmath.workdps(digits):
            hm = mpmath.mpf(h)
            cols = []
            for v in range(2 * n):
                col = np.empty(len(combos), dtype=object)
                for r, off in enumerate(offsets):
                    shift = off[active.index(v)] if v in active else 0
                    col[r] = mpmath.mpf(base[v]) + shift * hm
                cols.append(col)
            vals = np.broadcast_to(np.asarray(field(cols[:n], cols[n:]), dtype=object), (len(combos),))
            total = mpmath.fsum(w * v for w, v in zip(weights, vals))
            return total / hm ** idx.order

    table = [estimate(step / 2 ** m) for m in range(levels + 1)]
    for lev in range(1, levels + 1):
        fac = 4 ** lev
        table = [(fac * table[m + 1] - table[m]) / (fac - 1) for m in range(len(table) - 1)]
    return float(table[0])
