import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from abel_equiv.errors import EvalDomainError, ExpressionSyntaxError, NonIntegerExponent
from abel_equiv.expr import BinOp, Call, Const, Pow, Var, parse


def test_grammar_examples():
    ast = parse("3*x^2+sin(x)").ast
    assert isinstance(ast, BinOp) and ast.op == "+"
    assert isinstance(ast.left, BinOp) and ast.left.op == "*"
    assert isinstance(ast.left.right, Pow) and isinstance(ast.left.right.base, Var)
    assert isinstance(ast.right, Call) and ast.right.func == "sin"
    ast = parse("1/(1+x)").ast
    assert isinstance(ast, BinOp) and ast.op == "/" and isinstance(ast.left, Const)


def test_rejects_bad_input():
    with pytest.raises(NonIntegerExponent):
        parse("x^(1/2)")
    with pytest.raises(ExpressionSyntaxError):
        parse("1+")
    with pytest.raises(ExpressionSyntaxError):
        parse("foo(x)")
    with pytest.raises(ExpressionSyntaxError):
        parse("")


def test_jet_examples():
    assert np.allclose(parse("sin(x)").jet(0.0, 3).coeffs, [0, 1, 0, -1 / 6])
    assert np.allclose(parse("x").jet(5.0, 2).coeffs, [5, 1, 0])
    assert np.allclose(parse("1/(1+x)").jet(1.0, 2).coeffs, [0.5, -0.25, 0.125])


def test_domain_error_names_subexpression():
    with pytest.raises(EvalDomainError):
        parse("log(x)").jet(-1.0, 2)


def test_render_round_trip():
    for text in ["3*x^2+sin(x)", "-x^2", "(1-x)/(2+x)^3", "exp(-x)*cos(2*x)"]:
        e = parse(text)
        again = parse(e.render())
        for x in (0.1, 0.7, 1.3):
            assert again(x) == pytest.approx(e(x), rel=1e-14)


poly_terms = st.lists(st.floats(-2, 2), min_size=1, max_size=4)


@settings(max_examples=50, deadline=None)
@given(poly_terms, st.floats(-1, 1))
def test_jet_derivatives_match_finite_differences(c, x0):
    text = "+".join(f"({v!r})*x^{i}" for i, v in enumerate(c)) + "+sin(x)*exp(x/3)"
    e = parse(text)
    j = e.jet(x0, 2)
    h = 1e-4
    fd1 = (e(x0 + h) - e(x0 - h)) / (2 * h)
    fd2 = (e(x0 + h) - 2 * e(x0) + e(x0 - h)) / h ** 2
    assert j.value == pytest.approx(e(x0), rel=1e-12, abs=1e-12)
    assert j.derivative(1) == pytest.approx(fd1, rel=1e-6, abs=1e-6)
    assert j.derivative(2) == pytest.approx(fd2, rel=1e-4, abs=1e-4)


def test_batched_evaluation_marks_undefined_points():
    j = parse("sqrt(x)").jet(np.array([-1.0, 4.0]), 1)
    assert math.isnan(j.coeffs[0, 0]) and j.coeffs[0, 1] == pytest.approx(2.0)
