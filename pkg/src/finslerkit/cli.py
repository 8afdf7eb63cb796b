"""Command line interface.

Exit codes: 0 success (identity suites all pass), 2 classification run,
3 identity failure, 4 input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import curvature, flows, metrics, report
from .errors import FinslerError, InapplicableSuite, ParseError
from .specfile import parse_metric_spec

EXIT_OK, EXIT_CLASSIFIED, EXIT_IDENTITY_FAILURE, EXIT_INPUT = 0, 2, 3, 4

QUANTITIES = {"F": "F", "g": "g", "g_inv": "g_inv", "C": "C", "I": "I", "h": "h", "G": "G",
              "N": "N", "B": "B", "E": "E", "L": "L", "J": "J", "R": "R", "S": "S",
              "sigma": "sigma", "tau": "tau"}
TRACKS = {"psi": "Psi", "f": "f", "ftilde": "f_tilde", "F": "F", "jnorm": "J_norm"}


class InputError(Exception):
    pass


def load_metric(ref: str) -> metrics.MetricModel:
    """A spec file path, or a catalog name when no such file exists."""
    if not Path(ref).exists():
        try:
            return metrics.lookup(ref)
        except KeyError:
            raise ParseError(f"no spec file or catalog entry named {ref!r}", ref) from None
    return parse_metric_spec(ref)


def _vector(text: str, what: str) -> np.ndarray:
    try:
        v = np.array([float(t) for t in text.replace(",", " ").split()])
    except ValueError:
        raise InputError(f"{what}: expected numbers, got {text!r}") from None
    if v.size == 0:
        raise InputError(f"{what}: empty vector")
    return v


def parse_at(text: str) -> tuple[np.ndarray, np.ndarray]:
    """``"x=0.1,0.2;y=1,0"`` -> (x, y)."""
    parts = {}
    for chunk in text.split(";"):
        if not chunk.strip():
            continue
        key, sep, val = chunk.partition("=")
        if not sep or key.strip() not in ("x", "y"):
            raise InputError(f"--at: expected 'x=...;y=...', got {text!r}")
        parts[key.strip()] = _vector(val, f"--at {key.strip()}")
    if set(parts) != {"x", "y"}:
        raise InputError("--at needs both x and y")
    return parts["x"], parts["y"]


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _nested(a):
    a = np.asarray(a, float)
    if a.ndim == 0:
        return report.dec(a)
    return [_nested(v) for v in a]


def cmd_classify(args) -> int:
    m = load_metric(args.metric)
    rep = report.classify(m, samples=args.samples, seed=args.seed, tol=args.tol)
    _emit(rep.dumps(), args.out)
    return EXIT_CLASSIFIED


def cmd_identities(args) -> int:
    m = load_metric(args.metric)
    rep = report.run_identity_suite(m, args.suite, samples=args.samples, seed=args.seed)
    _emit(rep.dumps(), args.out)
    return EXIT_OK if rep.passed else EXIT_IDENTITY_FAILURE


def cmd_curvature(args) -> int:
    m = load_metric(args.metric)
    x, y = parse_at(args.at)
    if args.quantity not in QUANTITIES and args.quantity != "K":
        raise InputError(f"unknown quantity {args.quantity!r}; choose from "
                         f"{', '.join(sorted(QUANTITIES) + ['K'])}")
    p = curvature.Pipeline(m, x[None, :], y[None, :])
    if args.quantity == "K":
        if args.u is None:
            raise InputError("quantity K needs --u")
        value = curvature.flag_curvature_values(p, _vector(args.u, "--u")[None, :])[0]
    else:
        value = getattr(p, QUANTITIES[args.quantity])[0]
    doc = {"schema": report.SCHEMA, "metric": m.name, "quantity": args.quantity,
           "x": _nested(x), "y": _nested(y), "value": _nested(value)}
    _emit(json.dumps(doc, indent=2, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def cmd_flow(args) -> int:
    m = load_metric(args.metric)
    names = [t.strip() for t in args.track.split(",") if t.strip()]
    bad = [t for t in names if t not in TRACKS]
    if bad:
        raise InputError(f"unknown tracked series {bad[0]!r}; choose from {', '.join(TRACKS)}")
    trace = flows.integrate_geodesic(m, _vector(args.x0, "--x0"), _vector(args.y0, "--y0"),
                                     args.tmax, tol=args.tol)
    if names:
        full = flows.track_scalars(m, trace)
        keep = {TRACKS[t]: full.tracked[TRACKS[t]] for t in names}
        trace = flows.FlowTrace(m, trace.times, trace.x, trace.y, trace.F0, trace.tol,
                                trace.boundary_exit, keep)
    if trace.boundary_exit:
        print(f"note: geodesic left the chart at t = {trace.times[-1]:.6g}; trace truncated",
              file=sys.stderr)
    _emit(flows.trace_to_text(trace), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="finslerkit", description="Numerical Finsler geometry toolkit.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, samples=True):
        p.add_argument("--metric", required=True, help="spec file path or catalog name")
        if samples:
            p.add_argument("--samples", type=int, default=10)
            p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", help="output file (default stdout)")

    p = sub.add_parser("classify", help="curvature class verdicts as JSON")
    common(p)
    p.add_argument("--tol", type=float, default=report.DEFAULT_TOL)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("identities", help="run identity suites")
    common(p)
    p.add_argument("--suite", default="all", help=f"comma list from {', '.join(report.SUITES)} or 'all'")
    p.set_defaults(func=cmd_identities)

    p = sub.add_parser("curvature", help="one quantity at one tangent point")
    common(p, samples=False)
    p.add_argument("--at", required=True, help='"x=x1,..,xn;y=y1,..,yn"')
    p.add_argument("--quantity", required=True)
    p.add_argument("--u", help="flag edge for quantity K")
    p.set_defaults(func=cmd_curvature)

    p = sub.add_parser("flow", help="geodesic trace with tracked scalars")
    common(p, samples=False)
    p.add_argument("--x0", required=True)
    p.add_argument("--y0", required=True)
    p.add_argument("--tmax", type=float, required=True)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--track", default="psi,f,ftilde")
    p.set_defaults(func=cmd_flow)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except InapplicableSuite as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (InputError, FinslerError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
