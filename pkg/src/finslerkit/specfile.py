"""Metric spec files: INI-style sections read with :mod:`configparser`.

Layout (see README for the full schema)::

    [metric]
    kind = euclid | riemannian | randers | alphabeta | minkowski | spherical
           | homogeneous | catalog
    n = 2
    name = MY_METRIC

plus one kind-specific section and an optional ``[domain]``.
"""

from __future__ import annotations

import configparser
from pathlib import Path

import numpy as np

from . import jets
from .errors import FinslerError, ParseError, ValidationError
from .expr import Expression, compile_expression
from .homogeneous import LieAlgebraData, invariant_metric_field, structure_from_triplets
from .metrics import (AlphaBetaMetric, Domain, MetricModel, MinkowskiMetric, PhiProfile,
                      RandersMetric, RiemannianMetric, SphericalMetric, check_strong_convexity,
                      dot, lookup)

KINDS = ("euclid", "riemannian", "randers", "alphabeta", "minkowski", "spherical",
         "homogeneous", "catalog")
CONVEXITY_SAMPLES = 32


class _Section:
    """Key access with located diagnostics; tracks unused keys."""

    def __init__(self, cp: configparser.ConfigParser, name: str, required: bool = True):
        self.name = name
        if not cp.has_section(name):
            if required:
                raise ParseError(f"missing section [{name}]", f"[{name}]")
            self.items = {}
        else:
            self.items = dict(cp.items(name))
        self.used: set[str] = set()

    def where(self, key: str) -> str:
        return f"[{self.name}] {key}"

    def has(self, key: str) -> bool:
        return key in self.items

    def raw(self, key: str, default=None) -> str:
        if key not in self.items:
            if default is None:
                raise ParseError(f"missing key {key!r}", self.where(key))
            return default
        self.used.add(key)
        return self.items[key].strip()

    def int(self, key: str, default=None) -> int:
        v = self.raw(key, None if default is None else str(default))
        try:
            return int(v)
        except ValueError:
            raise ParseError(f"expected an integer, got {v!r}", self.where(key)) from None

    def float(self, key: str, default=None) -> float:
        v = self.raw(key, None if default is None else repr(default))
        try:
            return float(v)
        except ValueError:
            raise ParseError(f"expected a number, got {v!r}", self.where(key)) from None

    def floats(self, key: str, default=None) -> list[float]:
        v = self.raw(key, default)
        try:
            return [float(t) for t in v.replace(",", " ").split()]
        except ValueError:
            raise ParseError(f"expected numbers, got {v!r}", self.where(key)) from None

    def rows(self, key: str) -> list[list[str]]:
        return [ln.replace(",", " ").split() for ln in self.raw(key).splitlines() if ln.strip()]

    def expr(self, key: str, n: int, default=None, prefix: str = "x") -> Expression:
        return compile_expression(self.raw(key, default), n, self.where(key), prefix)

    def check_unused(self) -> None:
        extra = sorted(set(self.items) - self.used)
        if extra:
            raise ParseError(f"unknown key {extra[0]!r}", self.where(extra[0]))


def _vector_field(sec: _Section, n: int, prefix: str = "b"):
    exprs = [sec.expr(f"{prefix}{i + 1}", n, "0") for i in range(n)]
    return lambda x: [e(x) for e in exprs]


def _matrix_field(sec: _Section, n: int):
    """a_ij entries a11, a12, ...; off-diagonal entries default to 0 and may
    be given once (aij or aji)."""
    entries = {}
    for i in range(n):
        for j in range(i, n):
            k1, k2 = f"a{i + 1}{j + 1}", f"a{j + 1}{i + 1}"
            if i != j and sec.has(k1) and sec.has(k2) and sec.items[k1].strip() != sec.items[k2].strip():
                raise ParseError(f"{k1} and {k2} differ; a must be symmetric", sec.where(k2))
            key = k1 if sec.has(k1) or i == j else k2
            if i != j and sec.has(k1) and sec.has(k2):
                sec.raw(k2)
            entries[i, j] = sec.expr(key, n, None if i == j else "0")

    def a(x):
        return [[entries[min(i, j), max(i, j)](x) for j in range(n)] for i in range(n)]

    return a


def _alpha(cp, sec: _Section, n: int, sections: list):
    ref = sec.raw("alpha", "flat")
    if ref == "flat":
        return None
    if ref == "riemannian":
        rs = _Section(cp, "riemannian")
        sections.append(rs)
        return _matrix_field(rs, n)
    raise ParseError(f"alpha must be 'flat' or 'riemannian', got {ref!r}", sec.where("alpha"))


def _phi(sec: _Section, default: PhiProfile | None = None) -> PhiProfile:
    if not sec.has("phi_kind") and default is not None:
        return default
    kind = sec.raw("phi_kind")
    if kind == "randers":
        eps = sec.float("eps", 1.0)
        if eps == 0.0:
            raise ParseError("eps must be nonzero", sec.where("eps"))
        return PhiProfile.randers(eps)
    if kind not in ("polynomial", "rational"):
        raise ParseError(f"unknown phi_kind {kind!r}", sec.where("phi_kind"))
    coeffs = tuple(sec.floats("phi_coeffs"))
    den = tuple(sec.floats("phi_den", "1")) if kind == "rational" else (1.0,)
    b0 = sec.float("b0")
    if b0 <= 0:
        raise ParseError("b0 must be positive", sec.where("b0"))
    return PhiProfile(kind, coeffs, b0, den)


def _domain(cp, default: Domain) -> Domain:
    sec = _Section(cp, "domain", required=False)
    if not sec.items:
        return default
    kind = sec.raw("kind", default.kind)
    radius = sec.float("radius", default.radius)
    sec.check_unused()
    try:
        return Domain(kind, radius)
    except ValueError as exc:
        raise ParseError(str(exc), "[domain]") from None


def _homogeneous(cp, n: int, name: str, sections: list) -> MetricModel:
    sec = _Section(cp, "homogeneous")
    sections.append(sec)
    dim = sec.int("dim")
    trip = []
    for row in sec.rows("structure"):
        if len(row) != 4:
            raise ParseError(f"structure entries are 'i j k value', got {' '.join(row)!r}",
                             sec.where("structure"))
        try:
            i, j, k = (int(t) - 1 for t in row[:3])
            v = float(row[3])
        except ValueError:
            raise ParseError(f"bad structure entry {' '.join(row)!r}", sec.where("structure")) from None
        if min(i, j, k) < 0 or max(i, j, k) >= dim:
            raise ParseError(f"basis index out of range in {' '.join(row)!r}", sec.where("structure"))
        trip.append((i, j, k, v))
    h = [int(t) - 1 for t in sec.floats("h_indices", " ")]
    m_default = " ".join(str(i + 1) for i in range(dim) if i not in h)
    m = [int(t) - 1 for t in sec.floats("m_indices", m_default)]
    if len(m) != n:
        raise ParseError(f"m has dimension {len(m)} but n = {n}", sec.where("m_indices"))
    try:
        ip = np.array([[float(t) for t in r] for r in sec.rows("m_inner_product")])
    except ValueError:
        raise ParseError("bad m_inner_product entry", sec.where("m_inner_product")) from None
    u = sec.floats("u")
    kappa = sec.float("kappa", 1.0)
    chart = sec.float("chart", 0.2)
    phi = _phi(sec, PhiProfile.randers(1.0))
    c = structure_from_triplets(dim, trip)
    data = LieAlgebraData(dim, c, tuple(h), tuple(m), ip, np.array(u), kappa, phi, name)
    return invariant_metric_field(data, chart, name)


def _build(cp, meta: _Section, sections: list) -> MetricModel:
    kind = meta.raw("kind")
    if kind not in KINDS:
        raise ParseError(f"unknown kind {kind!r}; expected one of {', '.join(KINDS)}", meta.where("kind"))
    if kind == "catalog":
        entry = meta.raw("entry")
        try:
            return lookup(entry)
        except KeyError:
            raise ParseError(f"unknown catalog entry {entry!r}", meta.where("entry")) from None
    n = meta.int("n")
    if not 2 <= n <= 4:
        raise ParseError(f"n must be 2, 3 or 4, got {n}", meta.where("n"))
    name = meta.raw("name", f"{kind.upper()}_{n}")
    box = Domain("box", 0.9)
    if kind == "euclid":
        return MinkowskiMetric(name, n, _domain(cp, Domain("global", 0.9)), norm2=lambda y: dot(y, y))
    if kind == "riemannian":
        sec = _Section(cp, "riemannian")
        sections.append(sec)
        return RiemannianMetric(name, n, _domain(cp, box), a=_matrix_field(sec, n))
    if kind == "randers":
        sec = _Section(cp, "randers")
        sections.append(sec)
        a = _alpha(cp, sec, n, sections)
        eps = sec.float("eps", 1.0)
        return RandersMetric(name, n, _domain(cp, box), a=a, b=_vector_field(sec, n), eps=eps)
    if kind == "alphabeta":
        sec = _Section(cp, "alphabeta")
        sections.append(sec)
        a = _alpha(cp, sec, n, sections)
        b = _vector_field(sec, n)
        phi = _phi(sec)
        if phi.kind == "randers":
            return RandersMetric(name, n, _domain(cp, box), a=a, b=b, eps=phi.coeffs[0])
        return AlphaBetaMetric(name, n, _domain(cp, box), a=a, b=b, phi=phi)
    if kind == "minkowski":
        sec = _Section(cp, "minkowski")
        sections.append(sec)
        if sec.has("norm2"):
            e = sec.expr("norm2", n, prefix="y")
            return MinkowskiMetric(name, n, _domain(cp, Domain("global", 0.9)), norm2=e)
        e = sec.expr("norm", n, prefix="y")
        return MinkowskiMetric(name, n, _domain(cp, Domain("global", 0.9)), norm=e)
    if kind == "spherical":
        sec = _Section(cp, "spherical")
        sections.append(sec)
        e = Expression(sec.raw("psi"), ("r", "u", "v"), sec.where("psi"))

        def psi(r, u, v):
            return e([r, u, v])

        psi.uses_r = "r" in e.used
        return SphericalMetric(name, n, _domain(cp, box), psi=psi)
    return _homogeneous(cp, n, name, sections)


def _homogeneity_check(metric: MetricModel, seed: int = 0) -> None:
    """F(x, t y) = t F(x, y) for t > 0 at a few points."""
    from .metrics import sample_points
    x, y = sample_points(metric, 4, seed)
    x, y = x[:, 0], y[:, 0]
    xs = list(x.T)
    f1 = np.asarray(jets.value_of(metric.F(xs, list(y.T))), float)
    f2 = np.asarray(jets.value_of(metric.F(xs, list((2.5 * y).T))), float)
    if np.max(np.abs(f2 - 2.5 * f1)) > 1e-9 * (1 + np.max(np.abs(f1))):
        raise ValidationError(f"{metric.name}: F is not positively 1-homogeneous in y")


def parse_metric_text(text: str, source: str = "<string>", validate: bool = True) -> MetricModel:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text, source)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        if line is None and getattr(exc, "errors", None):
            line = exc.errors[0][0]
        raise ParseError(f"malformed spec file {source}", f"line {line}") from None
    meta = _Section(cp, "metric")
    sections = [meta]
    try:
        metric = _build(cp, meta, sections)
    except (ParseError, ValidationError):
        raise
    except FinslerError as exc:
        raise ValidationError(str(exc), exc) from exc
    for sec in sections:
        sec.check_unused()
    known = {"metric", "domain"} | {s.name for s in sections}
    unknown = sorted(set(cp.sections()) - known)
    if unknown:
        raise ParseError(f"unexpected section [{unknown[0]}]", f"[{unknown[0]}]")
    if validate:
        validate_metric(metric)
    return metric


def validate_metric(metric: MetricModel, samples: int = CONVEXITY_SAMPLES, seed: int = 0) -> None:
    """Homogeneity and strong convexity (which includes phi regularity)."""
    try:
        _homogeneity_check(metric, seed)
        check_strong_convexity(metric, samples=samples, seed=seed)
    except ValidationError:
        raise
    except FinslerError as exc:
        raise ValidationError(str(exc), exc) from exc


def parse_metric_spec(path, validate: bool = True) -> MetricModel:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {p}: {exc.strerror}", str(p)) from None
    return parse_metric_text(text, str(p), validate)
