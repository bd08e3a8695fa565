"""Seeded random equations and transformations for the property suites.

Everything is a polynomial of degree <= 3 whose coefficients are drawn so that
the quantities that must not vanish (leading coefficients, f', g) stay
bounded away from zero on ``WINDOW``.  The higher coefficients of those
polynomials shrink with the degree, which keeps them nonvanishing on
``WINDOW`` widened by a factor two as well (transformed windows reach there).
"""

from __future__ import annotations

import numpy as np

from .expr import Expression, parse
from .model import AbelEquation, Family
from .transform import PointTransformation

__all__ = ["WINDOW", "polynomial", "random_polynomial", "random_equation",
           "random_transformation", "random_generator_fields"]

# the interval on which the nondegeneracy bounds below hold
WINDOW = (-1.0, 1.0)

_X = parse("x")


def polynomial(coeffs):
    """Expression for sum c_i x^i (zero terms dropped)."""
    e = Expression.constant(0.0)
    for i, c in enumerate(coeffs):
        c = float(c)
        if c == 0.0:
            continue
        e = e + (c if i == 0 else c * _X ** i)
    return e


def random_polynomial(rng, degree=3, scale=1.0):
    return polynomial(rng.uniform(-scale, scale, degree + 1))


# bounds on the x, x^2, x^3 coefficients of nonvanishing polynomials
_TAIL = np.array([0.1, 0.03, 0.01])


def _bounded_away(rng, low=0.6, high=1.6, sign=None):
    """Polynomial of random or fixed sign with |value| >= low - 0.4 on |x| <= 2."""
    c0 = rng.uniform(low, high)
    s = sign if sign is not None else (1.0 if rng.random() < 0.5 else -1.0)
    tail_coeffs = rng.uniform(-_TAIL, _TAIL)
    return polynomial(s * np.concatenate(([c0], tail_coeffs)))


def random_equation(rng, family):
    """Random equation of ``family`` with polynomial coefficients of degree <= 3."""
    family = Family.from_tag(family) if not isinstance(family, Family) else family
    names = family.coefficient_names
    coeffs = {}
    for name in names:
        if name in family.leading_names:
            coeffs[name] = _bounded_away(rng)
        else:
            coeffs[name] = random_polynomial(rng)
    return AbelEquation(family, coeffs)


def random_transformation(rng, family=None, allow_reversal=False):
    """Random polynomial (f, g, h) with f' > 0.14 and g > 0.2 on |x| <= 2.

    With ``allow_reversal`` the signs of f and g are flipped at random
    (together for K4S, which needs g/f' > 0).
    """
    f1 = rng.uniform(0.7, 1.8)
    f = polynomial([rng.uniform(-0.5, 0.5), f1, rng.uniform(-0.05, 0.05),
                    rng.uniform(-0.03, 0.03)])
    g = _bounded_away(rng, 0.6, 1.8, sign=1.0)
    h = random_polynomial(rng, 3, 0.8)
    if allow_reversal:
        flip_f = rng.random() < 0.5
        flip_g = rng.random() < 0.5
        if family is Family.K4S:
            flip_g = flip_f
        if flip_f:
            f = -f
        if flip_g:
            g = -g
    return PointTransformation(f, g, h)


def random_generator_fields(rng, degree=3, scale=1.0):
    """Random polynomial (xi, eta, zeta) for infinitesimal generators."""
    return tuple(random_polynomial(rng, degree, scale) for _ in range(3))
