"""Geodesics, linear parallel transport and the scalars Psi, f, f~ along them."""

from __future__ import annotations

import io
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import solve_ivp

from . import jets
from .curvature import Pipeline, flag_curvature_values, transverse_edges
from .errors import BoundaryExit, InapplicableHypothesis, IntegrationFailure
from .metrics import MetricModel, TangentPoint

GRID_STEP = 1e-2


def spray_values(metric: MetricModel, x, y, with_connection: bool = False):
    """G^i (and N^i_j) at float points, from a small jet of F^2."""
    x = np.atleast_2d(np.asarray(x, float))
    y = np.atleast_2d(np.asarray(y, float))
    n = metric.n
    sp = jets.space(n, n, 1, 3 if with_connection else 2)
    xs, ys = jets.tangent_variables(sp, x, y)
    f2 = metric.F2(xs, ys)
    if not isinstance(f2, jets.Jet) or not np.any(f2.grad_x().c):
        G = np.zeros_like(y)
        return (G, np.zeros(y.shape + (n,))) if with_connection else G
    yj = jets.stack(ys, axis=-1)
    g = 0.5 * f2.grad_y().grad_y()
    fx = f2.grad_x()
    rhs = jets.contract("kj,k->j", fx.grad_y(), yj) - fx
    if not with_connection:
        gv = g.value
        return 0.25 * np.linalg.solve(gv, rhs.value[..., None])[..., 0]
    Gj = 0.25 * jets.contract("ij,j->i", jets.inverse(g), rhs)
    return Gj.value, Gj.grad_y().value


@dataclass(frozen=True)
class GeodesicState:
    t: float
    x: np.ndarray
    y: np.ndarray
    F0: float


@dataclass(frozen=True, eq=False)
class FlowTrace:
    metric: MetricModel
    times: np.ndarray
    x: np.ndarray
    y: np.ndarray
    F0: float
    tol: float
    boundary_exit: bool = False
    tracked: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.times) > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("trace times must be strictly increasing")
        for k, v in self.tracked.items():
            if len(v) != len(self.times):
                raise ValueError(f"tracked series {k!r} has the wrong length")

    @property
    def states(self) -> list[GeodesicState]:
        return [GeodesicState(float(t), x, y, self.F0) for t, x, y in zip(self.times, self.x, self.y)]

    @property
    def speed(self) -> np.ndarray:
        return np.asarray(self.metric.F(list(self.x.T), list(self.y.T)), float)

    @property
    def speed_drift(self) -> float:
        return float(np.max(np.abs(self.speed - self.F0)) / self.F0)


def _exit_event(metric: MetricModel, n: int):
    dom = metric.domain
    if dom.kind == "global":
        return None

    def event(t, z):
        x = z[:n]
        if dom.kind == "ball":
            return dom.radius - np.linalg.norm(x)
        return dom.radius - np.max(np.abs(x))

    event.terminal = True
    event.direction = -1
    return event


def _grid(t_end: float, h: float) -> np.ndarray:
    k = int(np.floor(t_end / h + 1e-9))
    t = np.arange(k + 1) * h
    if t_end - t[-1] > 1e-12:
        t = np.r_[t, t_end]
    return t


def integrate_geodesic(metric: MetricModel, x0, y0, t_max: float, tol: float = 1e-10,
                       h: float = GRID_STEP, raise_on_exit: bool = False) -> FlowTrace:
    """Solve x' = y, y' = -2 G(x, y) on [0, t_max], sampled on a uniform grid.

    Uses the embedded Dormand-Prince 4(5) pair with dense output. Leaving the
    chart ends the trace early with ``boundary_exit`` set.
    """
    at = TangentPoint(x0, y0)
    n = at.n
    metric.check_point(at.x, at.y)
    F0 = float(np.asarray(metric.F(list(at.x), list(at.y)), float))

    def rhs(t, z):
        return np.r_[z[n:], -2.0 * spray_values(metric, z[:n], z[n:])[0]]

    sol = solve_ivp(rhs, (0.0, t_max), np.r_[at.x, at.y], method="RK45", rtol=tol,
                    atol=tol * 1e-2, dense_output=True, events=_exit_event(metric, n))
    if sol.status == -1:
        raise IntegrationFailure(sol.message)
    exited = sol.status == 1
    t_end = float(sol.t[-1])
    times = _grid(t_end, h)
    z = sol.sol(times).T
    trace = FlowTrace(metric, times, z[:, :n], z[:, n:], F0, tol, exited)
    if exited and raise_on_exit:
        raise BoundaryExit(f"geodesic left the chart at t = {t_end:.6g}", trace)
    return trace


def parallel_transport(metric: MetricModel, trace: FlowTrace, u0) -> np.ndarray:
    """U(t) with U' + N(x, x') U = 0 along the trace's geodesic, on its grid."""
    n = metric.n
    u0 = np.asarray(u0, float)

    def rhs(t, z):
        x, y, u = z[:n], z[n:2 * n], z[2 * n:]
        G, N = spray_values(metric, x, y, with_connection=True)
        return np.r_[y, -2.0 * G[0], -N[0] @ u]

    t_end = float(trace.times[-1])
    sol = solve_ivp(rhs, (0.0, t_end), np.r_[trace.x[0], trace.y[0], u0], method="RK45",
                    rtol=trace.tol, atol=trace.tol * 1e-2, dense_output=True)
    if sol.status == -1:
        raise IntegrationFailure(sol.message)
    return sol.sol(trace.times).T[:, 2 * n:]


def transport_residual(metric: MetricModel, trace: FlowTrace, U: np.ndarray) -> np.ndarray:
    """|U' + N U| per interior node with U' by central differences."""
    h = np.diff(trace.times)
    du = (U[2:] - U[:-2]) / (h[1:] + h[:-1])[:, None]
    _, N = spray_values(metric, trace.x[1:-1], trace.y[1:-1], with_connection=True)
    return np.linalg.norm(du + np.einsum("bij,bj->bi", N, U[1:-1]), axis=1)


def g_norm2(metric: MetricModel, trace: FlowTrace, U: np.ndarray) -> np.ndarray:
    from .metrics import fundamental_tensor_values
    g = fundamental_tensor_values(metric, trace.x, trace.y)
    return np.einsum("bij,bi,bj->b", g, U, U)


def _node_pipeline(metric: MetricModel, trace: FlowTrace, x_order: int = 2) -> Pipeline:
    return Pipeline(metric, trace.x, trace.y, x_order=x_order)


def track_scalars(metric: MetricModel, trace: FlowTrace) -> FlowTrace:
    """Fill F, Psi = ||I||, f = F^2 g(I, I), f~ and ||J|| at every node."""
    p = _node_pipeline(metric, trace, x_order=1)
    ii = np.einsum("bi,bi->b", p.I, p.Iupj.value)
    fj = p.F2 * jets.contract("i,i->", p.Ij, p.Iupj)
    df = fj.grad_y().value
    ftilde = p.F ** 2 * np.einsum("bij,bi,bj->b", p.g_inv, df, df)
    jn = np.sqrt(np.maximum(np.einsum("bij,bi,bj->b", p.g_inv, p.J, p.J), 0.0))
    tracked = dict(trace.tracked)
    tracked.update({"F": p.F, "Psi": np.sqrt(np.maximum(ii, 0.0)), "f": p.F ** 2 * ii,
                    "f_tilde": ftilde, "J_norm": jn})
    return replace(trace, tracked=tracked)


def central_derivative(t: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Derivative on a (nearly) uniform grid; one-sided at the ends."""
    return np.gradient(v, t)


def psi_bound_violation(trace: FlowTrace) -> float:
    """max(|Psi'| - ||J||) over interior nodes where Psi > 0, Psi' by central differences."""
    psi, jn, t = trace.tracked["Psi"], trace.tracked["J_norm"], trace.times
    if len(psi) < 3:
        return 0.0
    dpsi = (psi[2:] - psi[:-2]) / (t[2:] - t[:-2])
    mask = psi[1:-1] > 1e-12
    if not np.any(mask):
        return 0.0
    return float(np.max(np.abs(dpsi[mask]) - jn[1:-1][mask]))


@dataclass(frozen=True)
class ConvexityReport:
    applicable: bool
    k_max: float
    identity_gap: float
    inequality_violation: float
    lhs: np.ndarray
    rhs: np.ndarray

    @property
    def max_violation(self) -> float:
        return max(self.identity_gap, self.inequality_violation)


def convexity_probe(metric: MetricModel, trace: FlowTrace) -> ConvexityReport:
    """Compare second differences of Psi^2 with 2(-R^i_m I^m I_i + ||J||^2)."""
    p = _node_pipeline(metric, trace)
    kv = flag_curvature_values(p, transverse_edges(p))
    k_max = float(np.max(kv))
    applicable = k_max <= 1e-9
    if not applicable:
        warnings.warn(f"{metric.name}: flag curvature positive on sampled flags", InapplicableHypothesis)
    iup = p.Iupj.value
    psi2 = np.einsum("bi,bi->b", p.I, iup)
    jj = np.einsum("bij,bi,bj->b", p.g_inv, p.J, p.J)
    rii = np.einsum("bi,bim,bm->b", p.I, p.R, iup)
    rhs = 2.0 * (-rii + jj)
    t = trace.times
    if len(t) < 3:
        return ConvexityReport(applicable, k_max, 0.0, 0.0, np.zeros(0), np.zeros(0))
    h0, h1 = t[1:-1] - t[:-2], t[2:] - t[1:-1]
    lhs = 2.0 * (h0 * psi2[2:] - (h0 + h1) * psi2[1:-1] + h1 * psi2[:-2]) / (h0 * h1 * (h0 + h1))
    dpsi2 = np.gradient(np.sqrt(np.maximum(psi2, 0.0)), t)[1:-1] ** 2
    gap = float(np.max(np.abs(lhs - rhs[1:-1])))
    viol = float(max(0.0, np.max(2 * jj[1:-1] - lhs), np.max(2 * dpsi2 - lhs)))
    return ConvexityReport(applicable, k_max, gap, viol, lhs, rhs[1:-1])


def trace_to_text(trace: FlowTrace) -> str:
    """Whitespace-separated table: t, x1..xn, y1..yn, then tracked series."""
    n = trace.x.shape[1]
    names = sorted(trace.tracked)
    cols = ["t"] + [f"x{i + 1}" for i in range(n)] + [f"y{i + 1}" for i in range(n)] + names
    buf = io.StringIO()
    buf.write("# " + " ".join(cols) + "\n")
    data = np.column_stack([trace.times, trace.x, trace.y] + [trace.tracked[k] for k in names])
    for row in data:
        buf.write(" ".join(f"{v:.17g}" for v in row) + "\n")
    return buf.getvalue()
