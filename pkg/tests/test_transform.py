import numpy as np
import pytest

from abel_equiv.errors import NonInvertibleAtPoint, NotCanonical
from abel_equiv.invariants import canonical_check_jets
from abel_equiv.model import AbelEquation, Family
from abel_equiv.sampling import random_equation, random_transformation
from abel_equiv.transform import (
    PointTransformation,
    ResidualTransformation,
    TransformedEquation,
    apply,
    apply_inverse,
    compose,
    invert,
    residual_apply,
    transform_equation,
)

CUBE = AbelEquation.from_strings("k3", a="1", b="0", c="0", d="0")


def values(jets):
    return {n: j.value for n, j in jets.items()}


def test_identity_leaves_coefficients():
    eq = AbelEquation.from_strings("k3", a="1+x", b="x^2", c="-1", d="sin(x)")
    X, jets = apply(PointTransformation.identity(), eq, 0.3, 4)
    assert X == pytest.approx(0.3)
    for n, j in eq.coefficient_jets(0.3, 4).items():
        assert np.allclose(jets[n].coeffs, j.coeffs)


def test_scaling_and_shift_examples():
    _, jets = apply(PointTransformation.from_strings("x", "2", "0"), CUBE, 0.0, 2)
    assert values(jets) == pytest.approx({"a": 0.25, "b": 0, "c": 0, "d": 0})
    _, jets = apply(PointTransformation.from_strings("x", "1", "1"), CUBE, 0.0, 2)
    assert values(jets) == pytest.approx({"a": 1, "b": -3, "c": 3, "d": -1})


def test_pushforward_against_pointwise_chain_rule():
    # Y = g y + h with y' = P(x, y) gives dY/dX = (g' y + g P + h') / f'
    rng = np.random.default_rng(5)
    for fam in (Family.K3, Family.K4, Family.K5):
        for _ in range(10):
            eq = random_equation(rng, fam)
            T = random_transformation(rng, family=fam)
            x0 = float(rng.uniform(-0.5, 0.5))
            _, jets = apply(T, eq, x0, 1)
            fj, gj, hj = T.jets(x0, 1)
            coeffs = [eq[n](x0) for n in fam.coefficient_names]
            deg = fam.degree
            for y in (-0.7, 0.2, 1.1):
                P = sum(c * y ** (deg - i) for i, c in enumerate(coeffs))
                lhs = (gj.coeffs[1] * y + gj.value * P + hj.coeffs[1]) / fj.coeffs[1]
                Y = gj.value * y + hj.value
                rhs = sum(jets[n].value * Y ** (deg - i) for i, n in enumerate(fam.coefficient_names))
                assert rhs == pytest.approx(lhs, rel=1e-10, abs=1e-10)


def test_composition_examples():
    T = compose(PointTransformation.from_strings("x", "3", "0"), PointTransformation.from_strings("x", "2", "0"))
    assert T.g(0.4) == pytest.approx(6.0)
    T = compose(PointTransformation.from_strings("x+1", "1", "0"), PointTransformation.from_strings("2*x", "1", "0"))
    assert [T.f(x) for x in (0.0, 1.0)] == pytest.approx([1.0, 3.0])


def test_inverse_examples():
    assert invert(PointTransformation.from_strings("x", "2", "0"), 0.0, 3).g.value == pytest.approx(0.5)
    assert invert(PointTransformation.from_strings("x", "1", "5"), 0.0, 3).h.value == pytest.approx(-5.0)
    inv = invert(PointTransformation.from_strings("x^3+x", "1", "0"), 1.0, 3)
    assert inv.base_point == pytest.approx(2.0)
    assert inv.f.value == pytest.approx(1.0) and inv.f.coeffs[1] == pytest.approx(0.25)
    with pytest.raises(NonInvertibleAtPoint):
        invert(PointTransformation.from_strings("x^2", "1", "0"), 0.0, 3)


def test_apply_then_inverse_round_trip():
    rng = np.random.default_rng(11)
    eq = random_equation(rng, Family.K4)
    T = random_transformation(rng, family=Family.K4)
    X, jets = apply(T, eq, 0.2, 6)
    _, back = apply_inverse(invert(T, 0.2, 7), Family.K4, jets)
    for n, j in eq.coefficient_jets(0.2, 6).items():
        assert np.allclose(back[n].coeffs, j.coeffs, rtol=1e-8, atol=1e-8)


def test_residual_transformations():
    eq = AbelEquation.from_strings("k3", a="1", b="0", c="0", d="1")
    _, jets = residual_apply(ResidualTransformation.for_family(Family.K3, 1.0, 0.0), eq, 0.0, 3)
    assert values(jets) == pytest.approx({"a": 1, "b": 0, "c": 0, "d": 1})
    # X = x/4, Y = 2y: dY/dX = 8 (y^3 + 1) = Y^3 + 8
    _, jets = residual_apply(ResidualTransformation.for_family(Family.K3, 2.0, 0.0), eq, 0.0, 3)
    assert values(jets) == pytest.approx({"a": 1, "b": 0, "c": 0, "d": 8})
    k4 = AbelEquation.from_strings("k4", a="1", b="0", c="x", d="0", e="1")
    _, jets = residual_apply(ResidualTransformation.for_family(Family.K4, -1.5, 0.7), k4, 0.3, 4)
    assert canonical_check_jets(Family.K4, jets)
    with pytest.raises(NotCanonical):
        residual_apply(ResidualTransformation.for_family(Family.K3, 2.0, 0.0),
                       AbelEquation.from_strings("k3", a="1", b="1", c="0", d="0"), 0.0)


def test_transformed_equation_matches_apply():
    eq = AbelEquation.from_strings("k3", a="1", b="0", c="0", d="x")
    T = PointTransformation.from_strings("x^3+x", "1+x^2", "x")
    X, jets = apply(T, eq, 0.6, 4)
    lazy = TransformedEquation(eq, T, 0.6).coefficient_jets(X, 4)
    for n in jets:
        assert np.allclose(lazy[n].coeffs, jets[n].coeffs, rtol=1e-10, atol=1e-12)


def test_transform_equation_affine_only():
    eq = AbelEquation.from_strings("k3", a="1", b="0", c="0", d="x")
    T = PointTransformation.from_strings("2*x+1", "x^2+1", "x")
    new = transform_equation(T, eq)
    _, jets = apply(T, eq, 0.4, 3)
    for n, j in new.coefficient_jets(1.8, 3).items():
        assert np.allclose(j.coeffs, jets[n].coeffs, rtol=1e-10, atol=1e-12)
    with pytest.raises(ValueError, match="affine"):
        transform_equation(PointTransformation.from_strings("x^3+x", "1", "0"), eq)
