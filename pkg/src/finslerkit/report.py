"""Classification reports and identity suites over seeded samples."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import alphabeta, curvature, surfaces
from .curvature import Pipeline, fit_scalar_multiple, flag_curvature_values, transverse_edges
from .errors import FitDegenerate, InapplicableSuite
from .homogeneous import HomogeneousMetric, deng_wang_s, theorem41_probe
from .metrics import AlphaBetaMetric, MetricModel, sample_points

SCHEMA = 1
DEFAULT_TOL = 1e-6
SIGMA_TOL = 1e-4

CLASSES = ("riemannian", "berwald", "landsberg", "weakly_landsberg", "weakly_berwald",
           "isotropic_S", "isotropic_E", "isotropic_berwald")
# (stronger, weaker): the stronger verdict forces the weaker one
IMPLICATIONS = (("riemannian", "berwald"), ("berwald", "landsberg"), ("berwald", "weakly_berwald"),
                ("landsberg", "weakly_landsberg"), ("riemannian", "weakly_landsberg"),
                ("riemannian", "weakly_berwald"), ("riemannian", "landsberg"))


def dec(v) -> str:
    """Fixed decimal string for a float; -0.0 prints as 0."""
    return f"{float(v) + 0.0:.12e}"


def _decs(a) -> list:
    return [dec(v) for v in np.ravel(a)]


# ----------------------------------------------------------------------------
# g-norms
# ----------------------------------------------------------------------------

def g_norm(t: np.ndarray, kinds: str, g: np.ndarray, g_inv: np.ndarray) -> np.ndarray:
    """Pointwise sqrt(T . T) with indices raised and lowered by g; ``kinds``
    marks each tensor index as lower ('l') or upper ('u')."""
    if not kinds:
        return np.abs(t)
    other = t
    letters = "ijklmn"
    for pos, k in enumerate(kinds):
        src = "".join(letters[:len(kinds)])
        dst = src.replace(src[pos], "z")
        m = g_inv if k == "l" else g
        other = np.einsum(f"b{src[pos]}z,b{src}->b{dst}", m, other)
    s = (t * other).reshape(len(t), -1).sum(axis=1)
    return np.sqrt(np.maximum(s, 0.0))


# ----------------------------------------------------------------------------
# classification
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class Verdict:
    holds: bool
    evidence: float
    threshold: float
    forced_by: str | None = None
    fit: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        d = {"verdict": self.holds, "max_residual": dec(self.evidence), "threshold": dec(self.threshold)}
        if self.forced_by:
            d["implied_by"] = self.forced_by
        d.update(self.fit)
        return d


@dataclass(frozen=True)
class ClassificationReport:
    metric: str
    variant: str
    n: int
    verdicts: dict
    k_min: float
    k_max: float
    samples: int
    directions: int
    seed: int
    tol: float
    scale: float

    def __post_init__(self):
        for a, b in IMPLICATIONS:
            assert not self.verdicts[a].holds or self.verdicts[b].holds, f"{a} holds but {b} does not"

    def to_json(self) -> dict:
        return {
            "schema": SCHEMA,
            "metric": self.metric,
            "variant": self.variant,
            "n": self.n,
            "classes": {k: self.verdicts[k].to_json() for k in CLASSES},
            "flag_curvature": {"min": dec(self.k_min), "max": dec(self.k_max)},
            "sampling": {"base_points": self.samples, "directions_per_point": self.directions,
                         "seed": self.seed},
            "tolerances": {"zero": dec(self.tol), "sigma": dec(max(self.tol, SIGMA_TOL)),
                           "scale": dec(self.scale)},
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"


def _unit_samples(metric: MetricModel, samples: int, seed: int, dirs: int):
    x, y = sample_points(metric, samples, seed, dirs_per_point=dirs)
    n = metric.n
    x, y = x.reshape(-1, n), y.reshape(-1, n)
    f = np.asarray(metric.F(list(x.T), list(y.T)), float)
    return x, y / f[:, None]


def _almost_isotropic_fit(S, F, y, groups, n):
    """S = (n+1) c F + eta_i y^i per group; (c, eta, residual) arrays."""
    labels = np.unique(groups)
    cs, etas, res = [], [], []
    for lab in labels:
        sel = groups == lab
        A = np.column_stack([(n + 1) * F[sel], y[sel]])
        coef = np.linalg.lstsq(A, S[sel], rcond=None)[0]
        cs.append(coef[0])
        etas.append(coef[1:])
        res.append(np.max(np.abs(A @ coef - S[sel])))
    return np.array(cs), np.array(etas), np.array(res)


def classify(metric: MetricModel, samples: int = 10, seed: int = 0, tol: float = DEFAULT_TOL,
             directions: int | None = None) -> ClassificationReport:
    """Verdicts for the standard curvature classes over a seeded sample."""
    n = metric.n
    dirs = directions or 2 * n + 2
    x, y = _unit_samples(metric, samples, seed, dirs)
    groups = np.repeat(np.arange(samples), dirs)
    p = Pipeline(metric, x, y)
    g, gi = p.g, p.g_inv
    scale = float(np.max(g_norm(p.N, "ul", g, gi)))
    thr = tol * (1.0 + scale)
    sthr = max(tol, SIGMA_TOL) * (1.0 + scale)

    raw = {
        "riemannian": float(np.max(g_norm(p.C, "lll", g, gi))),
        "berwald": float(np.max(g_norm(p.B, "ulll", g, gi))),
        "landsberg": float(np.max(g_norm(p.L, "lll", g, gi))),
        "weakly_landsberg": float(np.max(g_norm(p.J, "l", g, gi))),
        "weakly_berwald": float(np.max(g_norm(p.E, "ll", g, gi))),
    }
    verdicts = {k: Verdict(v <= thr, v, thr) for k, v in raw.items()}

    cS, rS = fit_scalar_multiple(p.S, (n + 1) * p.F, groups)
    ca, eta, ra = _almost_isotropic_fit(p.S, p.F, y, groups, n)
    verdicts["isotropic_S"] = Verdict(
        float(np.max(rS)) <= sthr, float(np.max(rS)), sthr,
        fit={"c": _decs(cS), "almost_isotropic": {
            "verdict": bool(np.max(ra) <= sthr), "c": _decs(ca),
            "eta": [_decs(e) for e in eta], "max_residual": dec(np.max(ra))}})
    cE, rE = fit_scalar_multiple(p.E, 0.5 * (n + 1) * p.h / p.F[:, None, None], groups)
    verdicts["isotropic_E"] = Verdict(float(np.max(rE)) <= thr, float(np.max(rE)), thr,
                                      fit={"c": _decs(cE)})
    cB, rB = fit_scalar_multiple(p.B, p.isotropic_berwald_template, groups)
    verdicts["isotropic_berwald"] = Verdict(float(np.max(rB)) <= thr, float(np.max(rB)), thr,
                                            fit={"c": _decs(cB)})

    # numerical noise near a threshold must not break the implication lattice
    for a, b in IMPLICATIONS:
        if verdicts[a].holds and not verdicts[b].holds:
            v = verdicts[b]
            verdicts[b] = Verdict(True, v.evidence, v.threshold, a, v.fit)

    K = flag_curvature_values(p, transverse_edges(p, seed))
    return ClassificationReport(metric.name, metric.variant, n, verdicts, float(np.min(K)),
                                float(np.max(K)), samples, dirs, seed, tol, scale)


# ----------------------------------------------------------------------------
# identity suites
# ----------------------------------------------------------------------------

SUITES = ("eiilj", "eq9", "creducible", "surface", "abeta", "dengwang")


@dataclass(frozen=True)
class IdentityResult:
    name: str
    residual: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.residual) and self.residual <= self.tol)

    def to_json(self) -> dict:
        return {"max_residual": dec(self.residual), "tolerance": dec(self.tol), "pass": self.passed}


@dataclass(frozen=True)
class SuiteReport:
    metric: str
    results: dict
    samples: int
    seed: int

    @property
    def passed(self) -> bool:
        return all(r.passed for rs in self.results.values() for r in rs)

    def to_json(self) -> dict:
        return {"schema": SCHEMA, "metric": self.metric, "samples": self.samples, "seed": self.seed,
                "pass": self.passed,
                "suites": {k: {r.name: r.to_json() for r in v} for k, v in self.results.items()}}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"


def applicable(metric: MetricModel, suite: str) -> str | None:
    """None if the suite applies, else the reason it does not."""
    if suite == "creducible" and not metric.is_randers:
        return "needs a Randers-type metric"
    if suite == "surface" and metric.n != 2:
        return "needs n = 2"
    if suite == "abeta" and not isinstance(metric, AlphaBetaMetric):
        return "needs an (alpha, beta)-metric"
    if suite == "dengwang" and not isinstance(metric, HomogeneousMetric):
        return "needs a homogeneous metric"
    return None


def _points(metric, samples, seed):
    x, y = sample_points(metric, samples, seed)
    return x[:, 0], y[:, 0]


def _suite_eiilj(metric, x, y, samples, seed):
    r = curvature.identity_eiilj_residual(metric, (x, y))
    return [IdentityResult("eiilj", float(np.max(r)), SIGMA_TOL)]


def _suite_eq9(metric, x, y, samples, seed):
    r = curvature.eq9_residual(metric, (x, y))
    return [IdentityResult("eq9", float(np.max(r)), SIGMA_TOL)]


def _suite_creducible(metric, x, y, samples, seed):
    return [IdentityResult("c_reducible", float(np.max(curvature.c_reducibility_residual(metric, (x, y)))), 1e-6),
            IdentityResult("l_reducible",
                           float(np.max(curvature.landsberg_reducibility_residual(metric, (x, y)))), 1e-6)]


def _suite_surface(metric, x, y, samples, seed):
    at = (x, y)
    try:
        d = surfaces.decomposition_check(metric, at)
        fit, e_trace, j_contr = d.residual, d.trace_residual, d.contraction_residual
    except FitDegenerate as exc:
        p = curvature.pipeline(metric, at)
        fit = exc.residual
        e_trace = float(np.max(np.abs(p.E - 1.5 * np.asarray(exc.lam).reshape(-1, 1, 1) * p.h)))
        j_contr = float(np.max(np.abs(p.J)))
    ms = surfaces.main_scalar(metric, at)
    mn = surfaces.main_scalar_from_norm(metric, at)
    return [IdentityResult("berwald_frame_fit", fit, 1e-6), IdentityResult("mean_berwald_trace", e_trace, 1e-6),
            IdentityResult("mean_landsberg_contraction", j_contr, 1e-6),
            IdentityResult("main_scalar_two_routes", float(np.max(np.abs(np.abs(ms) - mn))), 1e-8)]


def _criterion(rep) -> IdentityResult:
    return IdentityResult(f"{rep.name}_agrees_with_tensors", 0.0 if rep.agrees else 1.0, 0.5)


def _suite_abeta(metric, x, y, samples, seed):
    out = []
    if not metric.is_randers and not alphabeta.is_randers_type(metric.phi):
        out += [_criterion(alphabeta.cheng_isotropic_s_check(metric, samples, seed)),
                _criterion(alphabeta.li_shen_j_check(metric, samples, seed))]
    if not isinstance(metric, HomogeneousMetric):
        out.append(_criterion(alphabeta.parallel_beta_berwald_check(metric, samples, seed)))
    eq = alphabeta.isotropic_s_e_equivalence_probe(metric, samples, seed)
    agree = eq.s_isotropic == eq.e_isotropic
    out.append(IdentityResult("isotropic_s_e_equivalence",
                              eq.max_deviation if agree and eq.s_isotropic else (0.0 if agree else np.inf),
                              eq.tol))
    return out


def _suite_dengwang(metric, x, y, samples, seed):
    data = metric.data
    out = [IdentityResult("s_at_plus_minus_u", max(abs(deng_wang_s(data, data.u)),
                                                   abs(deng_wang_s(data, -data.u))) if data.u_norm2 > 0 else 0.0,
                          1e-12)]
    rng = np.random.default_rng(seed)
    ys = rng.standard_normal((samples, data.n))
    S = Pipeline(metric, np.zeros_like(ys), ys).S
    dw = np.array([deng_wang_s(data, v) for v in ys])
    out.append(IdentityResult("origin_cross_check", float(np.max(np.abs(S - dw))), 1e-3))
    t = theorem41_probe(data, seed=seed)
    out.append(IdentityResult("isotropic_constant_vanishes", abs(t.c), 1e-10))
    return out


_RUNNERS = {"eiilj": _suite_eiilj, "eq9": _suite_eq9, "creducible": _suite_creducible,
            "surface": _suite_surface, "abeta": _suite_abeta, "dengwang": _suite_dengwang}


def run_identity_suite(metric: MetricModel, suite="all", samples: int = 10, seed: int = 0) -> SuiteReport:
    """Run the named suites (a list, a comma string or "all" for every
    applicable one); explicitly requested suites must apply."""
    if isinstance(suite, str):
        suite = [s.strip() for s in suite.split(",") if s.strip()]
    if list(suite) == ["all"]:
        names = [s for s in SUITES if applicable(metric, s) is None]
    else:
        names = list(suite)
        for s in names:
            if s not in SUITES:
                raise InapplicableSuite(f"unknown suite {s!r}; expected one of {', '.join(SUITES)}")
            why = applicable(metric, s)
            if why:
                raise InapplicableSuite(f"suite {s!r} does not apply to {metric.name}: {why}")
    x, y = _points(metric, samples, seed)
    return SuiteReport(metric.name, {s: _RUNNERS[s](metric, x, y, samples, seed) for s in names},
                       samples, seed)
