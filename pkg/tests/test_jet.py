import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from abel_equiv.errors import BasePointMismatch, DivisionByZeroConstantTerm, DomainError, NonInvertibleJet
from abel_equiv.jet import Jet, compose, exp, log, revert, rpow, sin, sqrt

coeff = st.floats(-3, 3, allow_nan=False, allow_infinity=False)
ORDER = 5


def jets(order=ORDER, nonzero_const=False, base=0.0):
    c = st.lists(coeff, min_size=order + 1, max_size=order + 1)
    if nonzero_const:
        c = c.filter(lambda v: abs(v[0]) > 0.1)
    return c.map(lambda v: Jet(v, base))


def close(a, b, tol=1e-9):
    scale = max(1.0, float(np.max(np.abs(a.coeffs))), float(np.max(np.abs(b.coeffs))))
    return float(np.max(np.abs(a.coeffs - b.coeffs))) <= tol * scale


def test_arithmetic_examples():
    assert np.allclose((Jet([1, 1, 0]) * Jet([1, 1, 0])).coeffs, [1, 2, 1])
    assert np.allclose((Jet([2, 0, 0]) + Jet([0, 0, 3])).coeffs, [2, 0, 3])
    assert np.allclose((Jet([1, 0, 0]) / Jet([1, 1, 0])).coeffs, [1, -1, 1])


def test_division_by_zero_constant_term():
    with pytest.raises(DivisionByZeroConstantTerm):
        Jet([1, 0]) / Jet([0, 1])


def test_base_point_mismatch():
    with pytest.raises(BasePointMismatch):
        Jet([1, 0], 0.0) + Jet([1, 0], 1.0)


def test_compose_examples():
    assert np.allclose(compose(Jet([1, 1, 0.5]), Jet([0, 2, 0])).coeffs, [1, 2, 2])
    j = Jet([2.0, -1.0, 0.5, 0.25], 1.5)
    assert compose(Jet.variable(2.0, 3), j).allclose(j)
    assert np.allclose(compose(Jet([0, 1, 1]), Jet([0, 1, 1])).coeffs, [0, 1, 2])


def test_revert_examples():
    r = revert(Jet([0, 2]))
    assert np.allclose(r.coeffs, [0, 0.5]) and r.base_point == 0.0
    r = revert(Jet([5, 1, 0, 0], 1.0))
    assert np.allclose(r.coeffs, [1, 1, 0, 0]) and r.base_point == 5.0
    assert np.allclose(revert(Jet([0, 1, 1, 0])).coeffs, [0, 1, -1, 2])
    with pytest.raises(NonInvertibleJet):
        revert(Jet([0, 0, 1]))


def test_rpow_examples():
    assert rpow(Jet([8, 0, 0]), 5, 2).coeffs[0] == pytest.approx(8 ** 2.5, rel=1e-14)
    assert np.allclose(rpow(Jet([-27, 0, 0]), 1, 3).coeffs, [-3, 0, 0])
    assert np.allclose(rpow(Jet([4, 4, 1]), 1, 2).coeffs, [2, 1, 0])
    with pytest.raises(DomainError):
        rpow(Jet([-4, 1]), 1, 2)
    with pytest.raises(DomainError):
        rpow(Jet([0, 1]), 1, 3)


def test_elementary_functions_match_scalar_derivatives():
    x = Jet.variable(0.3, 4)
    assert exp(x).derivative(3) == pytest.approx(math.exp(0.3))
    assert log(x).derivative(2) == pytest.approx(-1 / 0.3 ** 2)
    assert sin(x).derivative(3) == pytest.approx(-math.cos(0.3))
    assert sqrt(x).derivative(1) == pytest.approx(0.5 / math.sqrt(0.3))


def test_batched_jets_propagate_nan():
    base = np.array([0.5, -0.5, 2.0])
    j = rpow(Jet.variable(base, 3), 1, 2)
    assert np.isnan(j.coeffs[:, 1]).all()
    assert j.coeffs[0, 2] == pytest.approx(math.sqrt(2.0))


@settings(max_examples=60, deadline=None)
@given(jets(), jets(), jets())
def test_ring_laws(a, b, c):
    assert close((a + b) * c, a * c + b * c)
    assert close((a * b) * c, a * (b * c))
    assert close(a * b, b * a)


@settings(max_examples=60, deadline=None)
@given(jets(), jets(nonzero_const=True))
def test_division_inverts_multiplication(a, b):
    assert close((a / b) * b, a, 1e-6)


@settings(max_examples=60, deadline=None)
@given(st.lists(coeff, min_size=ORDER + 1, max_size=ORDER + 1).filter(lambda v: abs(v[1]) > 0.2),
       st.floats(-2, 2))
def test_revert_round_trip(c, x0):
    j = Jet(c, x0)
    ident = compose(revert(j), j)
    assert close(ident, Jet.variable(x0, ORDER), 1e-6)


@settings(max_examples=60, deadline=None)
@given(jets(nonzero_const=True), st.integers(-4, 4), st.integers(1, 4))
def test_rpow_powers_back(j, m, n):
    if m == 0 or (n % 2 == 0 and j.value < 0):
        return
    r = rpow(j, m, n)
    back = r ** n
    target = j ** m if m > 0 else 1.0 / (j ** -m)
    assert close(back, target, 1e-6)


@settings(max_examples=60, deadline=None)
@given(jets(), jets())
def test_derivative_is_a_derivation(a, b):
    lhs = (a * b).deriv()
    rhs = a.deriv() * b.truncate(ORDER - 1) + a.truncate(ORDER - 1) * b.deriv()
    assert close(lhs, rhs)
