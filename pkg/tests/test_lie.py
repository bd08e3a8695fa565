import numpy as np
import pytest

from abel_equiv import invariants as inv
from abel_equiv.lie import (
    InfinitesimalGenerator,
    JetPoint,
    directional_derivative,
    finite_consistency,
    infinitesimal_defect,
    prolong_coefficients,
)
from abel_equiv.model import AbelEquation, Family
from abel_equiv.sampling import random_equation, random_generator_fields

EQ = AbelEquation.from_strings("k3", a="1+x^2", b="x", c="2-x", d="x^3+1")
X0 = 0.4
A, DA, C = 1 + X0 ** 2, 2 * X0, 2 - X0


def comps(xi, eta, zeta):
    gen = InfinitesimalGenerator.from_strings("k3", xi, eta, zeta)
    return prolong_coefficients(gen, 1, JetPoint.from_equation(EQ, X0, 4))


def test_prolongation_examples():
    p = comps("0", "1", "0")
    assert p[("a", 0)] == pytest.approx(-2 * A) and p[("a", 1)] == pytest.approx(-2 * DA)
    p = comps("x", "0", "0")
    assert p[("a", 0)] == pytest.approx(-A) and p[("a", 1)] == pytest.approx(-2 * DA)
    assert comps("0", "0", "1")[("d", 0)] == pytest.approx(-C)


def test_relative_invariant_is_an_eigenvector_of_scaling():
    gen = InfinitesimalGenerator.from_strings("k3", "0", "1", "0")
    ratios = []
    for x0 in (0.4, 0.9):
        at = JetPoint.from_equation(EQ, x0, 4)
        s3 = inv.relative_invariants(Family.K3, at.jets)["s3"].value
        ratios.append(directional_derivative(gen, "s3", at) / s3)
    assert ratios[0] == pytest.approx(ratios[1], rel=1e-6)
    assert ratios[0] == pytest.approx(-3.0, rel=1e-6)


@pytest.mark.parametrize("family", [Family.K3, Family.K4, Family.K4S])
def test_absolute_invariants_are_annihilated(family):
    rng = np.random.default_rng(7)
    checked = 0
    while checked < 5:
        eq = random_equation(rng, family)
        x0 = float(rng.uniform(-0.5, 0.5))
        gen = InfinitesimalGenerator(*random_generator_fields(rng), family)
        at = JetPoint.from_equation(eq, x0, 6)
        try:
            defects = [infinitesimal_defect(gen, n, at) for n in inv.absolute_names(family)]
        except inv.Undefined:
            continue
        assert max(defects) <= 1e-6
        checked += 1


def test_finite_and_infinitesimal_derivatives_agree_for_quintics():
    rng = np.random.default_rng(2)
    eq = random_equation(rng, Family.K5)
    gen = InfinitesimalGenerator(*random_generator_fields(rng), Family.K5)
    res = finite_consistency(gen, "J1", eq, 0.1)
    assert res.worst <= 1e-6
