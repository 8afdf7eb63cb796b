"""Restricted expression compiler for coordinate functions."""

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from finslerkit import jets
from finslerkit.errors import ParseError
from finslerkit.expr import Expression, compile_expression, coordinate_names
from finslerkit.jets import Jet


def test_names():
    assert coordinate_names(3) == ("x1", "x2", "x3")
    assert coordinate_names(2, "y") == ("y1", "y2")


@pytest.mark.parametrize("src,val", [
    ("1 + 2*x1 - x2/4", 1 + 2 * 0.5 - (-2.0) / 4),
    ("x1**2 * x2**-1", 0.25 / -2.0),
    ("-x1 + +x2", -2.5),
    ("sqrt(x1) + exp(x2) - log(x1)", math.sqrt(0.5) + math.exp(-2.0) - math.log(0.5)),
    ("3", 3.0),
    ("1e-3 * x2", -2e-3),
])
def test_float_values(src, val):
    e = compile_expression(src, 2)
    assert e([0.5, -2.0]) == pytest.approx(val, rel=1e-15)


def test_used_and_constant():
    e = compile_expression("x1 * x3 + 1", 3)
    assert e.used == {"x1", "x3"} and not e.constant
    assert compile_expression("2.5", 3).constant


@pytest.mark.parametrize("src", [
    "x4", "y1", "x1 ** x2", "x1 ** 0.5", "abs(x1)", "sqrt(x1, x2)", "x1 if x2 else 0",
    "x1 % 2", "__import__('os')", "x1.real", "[x1]", "True", "'a'", "x1 +", "sqrt(x=1)",
])
def test_rejected(src):
    with pytest.raises(ParseError) as exc:
        Expression(src, coordinate_names(3), where="[riemannian] a11")
    assert "[riemannian] a11" in str(exc.value)


def test_jet_evaluation_gives_exact_derivatives():
    e = compile_expression("x1**3 * x2 + exp(x2)", 2)
    sp = jets.space(2, 0, 3, 0)
    xs = [Jet.variable(sp, "x", i, v) for i, v in enumerate([0.7, 0.2])]
    j = e(xs)
    assert j.dx(0).dx(0).value == pytest.approx(6 * 0.7 * 0.2, rel=1e-14)
    assert j.dx(1).value == pytest.approx(0.7 ** 3 + math.exp(0.2), rel=1e-14)


def test_mpmath_evaluation():
    e = compile_expression("sqrt(x1) * x2", 2)
    with mpmath.workdps(30):
        v = e([mpmath.mpf(2), mpmath.mpf(3)])
        assert abs(v - 3 * mpmath.sqrt(2)) < mpmath.mpf(10) ** -28


@settings(max_examples=50, deadline=None)
@given(a=st.floats(-3, 3), b=st.floats(-3, 3), k=st.integers(-3, 4))
def test_matches_python_arithmetic(a, b, k):
    src = f"({a!r}) * x1 - x2 / 3 + (x1 + 5) ** {k}"
    x = [0.8, -1.1]
    ref = a * x[0] - x[1] / 3 + (x[0] + 5) ** k
    assert compile_expression(src, 2)(x) == pytest.approx(ref, rel=1e-14, abs=1e-14)


def test_vectorized_numpy_input():
    e = compile_expression("x1 * x2", 2)
    assert np.allclose(e([np.arange(3.0), np.ones(3)]), [0.0, 1.0, 2.0])
