"""Infinitesimal action of the pseudogroup on coefficient jets.

A vector field ``xi d/dx + (eta y + zeta) d/dy`` induces a field on the
coefficient bundle with components ``xi`` on x and ``phi_u`` on every
coefficient u.  For K3, K4 and K4S the components are tabulated; for every
family they can also be induced by differentiating the finite action along
``T_t = (x + t xi, 1 + t eta, t zeta)``.  Prolongation uses the characteristic
``Q_u = phi_u - xi u'``: the component on ``u^(i)`` is ``D^i Q_u + xi u^(i+1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import invariants as inv
from .errors import OrderTooLow, WrongFamily
from .expr import Expression, parse
from .jet import Jet
from .model import Family
from .transform import pushforward_in_x

__all__ = [
    "InfinitesimalGenerator",
    "JetPoint",
    "TABULATED_FAMILIES",
    "base_components",
    "tabulated_components",
    "induced_components",
    "prolong_coefficients",
    "invariant_gradient",
    "directional_derivative",
    "infinitesimal_defect",
    "FiniteConsistency",
    "finite_consistency",
]

TABULATED_FAMILIES = (Family.K3, Family.K4, Family.K4S)

# step of the central difference in t used to induce generators
_INDUCE_STEP = 1e-3


@dataclass(frozen=True)
class InfinitesimalGenerator:
    xi: Expression
    eta: Expression
    zeta: Expression
    family: Family

    @classmethod
    def from_strings(cls, family, xi="0", eta="0", zeta="0"):
        family = family if isinstance(family, Family) else Family.from_tag(family)
        return cls(parse(xi), parse(eta), parse(zeta), family)

    def jets(self, x0, order):
        return self.xi.jet(x0, order), self.eta.jet(x0, order), self.zeta.jet(x0, order)


@dataclass(frozen=True)
class JetPoint:
    """Coefficient jets of one family at a common base point."""

    family: Family
    jets: dict

    def __post_init__(self):
        names = self.family.coefficient_names
        if set(self.jets) != set(names):
            raise WrongFamily(f"jet point does not carry the {self.family.value} coefficients")
        orders = {j.order for j in self.jets.values()}
        points = {j.base_point for j in self.jets.values()}
        if len(orders) != 1 or len(points) != 1:
            raise ValueError("jet point needs a common order and base point")
        object.__setattr__(self, "jets", {n: self.jets[n] for n in names})

    @property
    def order(self):
        return next(iter(self.jets.values())).order

    @property
    def base_point(self):
        return next(iter(self.jets.values())).base_point

    @classmethod
    def from_equation(cls, eq, x0, order):
        return cls(eq.family, eq.coefficient_jets(x0, order))

    def coordinates(self, k=None):
        """Flat vector of u^(i) (true derivatives), i <= k, in family order."""
        k = self.order if k is None else k
        return np.array([j.derivative(i) for j in self.jets.values() for i in range(k + 1)])

    def with_coordinates(self, values, k):
        out = {}
        it = iter(values)
        for name, j in self.jets.items():
            coeffs = j.coeffs.copy()
            for i in range(k + 1):
                coeffs[i] = next(it) / math.factorial(i)
            out[name] = Jet(coeffs, j.base_point)
        return JetPoint(self.family, out)


# -- base components ------------------------------------------------------------------

def tabulated_components(family, u, xi, eta, zeta):
    """Tabulated components phi_u as jets (K3, K4, K4S); ``u`` maps name -> jet."""
    dxi, deta, dzeta = xi.deriv(), eta.deriv(), zeta.deriv()
    n = min(j.order for j in u.values())
    xi1, eta, zeta = dxi.truncate(n), eta.truncate(n), zeta.truncate(n)
    deta, dzeta = deta.truncate(n), dzeta.truncate(n)
    if family is Family.K3:
        a, b, c, d = (u[k] for k in "abcd")
        return {
            "a": -(2.0 * eta + xi1) * a,
            "b": -(xi1 * b + 3.0 * zeta * a + eta * b),
            "c": deta - xi1 * c - 2.0 * zeta * b,
            "d": dzeta - zeta * c + eta * d - xi1 * d,
        }
    if family is Family.K4:
        a, b, c, d, e = (u[k] for k in "abcde")
        return {
            "a": -(3.0 * eta + xi1) * a,
            "b": -(xi1 * b + 4.0 * zeta * a + 2.0 * eta * b),
            "c": -(xi1 * c + 3.0 * zeta * b + eta * c),
            "d": deta - 2.0 * zeta * c - xi1 * d,
            "e": dzeta - zeta * d + eta * e - xi1 * e,
        }
    if family is Family.K4S:
        p, q, r, s = (u[k] for k in "pqrs")
        return {
            "p": -0.25 * (3.0 * eta + xi1) * p,
            "q": 0.25 * ((eta - xi1) * q - 4.0 * zeta * p),
            "r": deta - xi1 * r,
            "s": dzeta + (eta - xi1) * s - zeta * r,
        }
    raise WrongFamily(f"no tabulated generator for {family.value}")


def induced_components(family, u, xi, eta, zeta, step=_INDUCE_STEP):
    """phi_u obtained as d/dt of the finite action of T_t at t = 0.

    Central differences at steps t and t/2 are combined by Richardson
    extrapolation, leaving an O(t^4) error.
    """
    n = min(j.order for j in u.values())
    x0 = xi.base_point
    ident = Jet.variable(x0, n + 1)
    one = Jet.constant(1.0, x0, n + 1)
    xi, eta, zeta = xi.truncate(n + 1), eta.truncate(n + 1), zeta.truncate(n + 1)

    def pushed(t):
        return pushforward_in_x(family, u, ident + t * xi, one + t * eta, t * zeta)

    def central(t):
        plus, minus = pushed(t), pushed(-t)
        return {k: (plus[k].coeffs - minus[k].coeffs) / (2.0 * t) for k in plus}

    c1, c2 = central(step), central(step / 2.0)
    return {k: Jet((4.0 * c2[k] - c1[k]) / 3.0, x0) for k in c1}


def base_components(gen, at, source="auto"):
    """phi_u as jets of order ``at.order`` (generator jets taken one order higher).

    ``source`` is 'tabulated', 'induced' or 'auto' (tabulated when available).
    """
    if gen.family is not at.family:
        raise WrongFamily(f"generator is for {gen.family.value}, point for {at.family.value}")
    xi, eta, zeta = gen.jets(at.base_point, at.order + 1)
    if source == "auto":
        source = "tabulated" if at.family in TABULATED_FAMILIES else "induced"
    if source == "tabulated":
        return tabulated_components(at.family, at.jets, xi, eta, zeta)
    if source == "induced":
        return induced_components(at.family, at.jets, xi, eta, zeta)
    raise ValueError(f"unknown generator source {source!r}")


def prolong_coefficients(gen, k, at, source="auto"):
    """Components of the k-th prolongation on every u^(i), i <= k, at ``at``.

    Keys are ``(name, i)``; the x-component is stored under ``("x", 0)``.
    """
    if at.order < k + 1:
        raise OrderTooLow(f"prolongation to order {k} needs jets of order {k + 1}")
    phi = base_components(gen, at, source)
    xi = gen.xi.jet(at.base_point, k + 1)
    xi0 = xi.value
    out = {("x", 0): xi0}
    for name, u in at.jets.items():
        char = phi[name].truncate(k) - xi.truncate(k) * u.deriv().truncate(k)
        for i in range(k + 1):
            out[(name, i)] = char.derivative(i) + xi0 * u.derivative(i + 1)
    return out


# -- invariance checks ----------------------------------------------------------------

def _ref_order(family, ref):
    name, k = inv.parse_ref(ref)
    return inv.required_order(family, name, k)


def _evaluate(at, ref, k):
    jets = {n: j.truncate(k) for n, j in at.jets.items()}
    return inv.evaluate_ref(at.family, jets, ref).value


def invariant_gradient(ref, at, rel_step=1e-6):
    """Central-difference gradient of an invariant in the coordinates u^(i), i <= order."""
    k = _ref_order(at.family, ref)
    if at.order < k:
        raise OrderTooLow(f"{ref} needs jets of order {k}")
    base = at.coordinates(k)
    grad = np.empty_like(base)
    for idx, v in enumerate(base):
        step = rel_step * max(1.0, abs(v))
        up, down = base.copy(), base.copy()
        up[idx] += step
        down[idx] -= step
        grad[idx] = (_evaluate(at.with_coordinates(up, k), ref, k)
                     - _evaluate(at.with_coordinates(down, k), ref, k)) / (2.0 * step)
    return grad


def _generator_vector(gen, at, k, source):
    comps = prolong_coefficients(gen, k, at, source)
    return np.array([comps[(name, i)] for name in at.jets for i in range(k + 1)])


def directional_derivative(gen, ref, at, source="auto", rel_step=1e-6):
    """X^(k)(F) at ``at``: unnormalized derivative of invariant ``ref`` along the generator."""
    k = _ref_order(at.family, ref)
    if at.order < k + 1:
        raise OrderTooLow(f"{ref} along a generator needs jets of order {k + 1}")
    grad = invariant_gradient(ref, at, rel_step)
    return float(grad @ _generator_vector(gen, at, k, source))


def infinitesimal_defect(gen, ref, at, source="auto", rel_step=1e-6):
    """|G . V| / (|G| |V|) for gradient G of ``ref`` and prolonged generator V.

    Zero for functions that do not depend on the jet coordinates.
    """
    k = _ref_order(at.family, ref)
    if at.order < k + 1:
        raise OrderTooLow(f"{ref} along a generator needs jets of order {k + 1}")
    grad = invariant_gradient(ref, at, rel_step)
    vec = _generator_vector(gen, at, k, source)
    norm = float(np.linalg.norm(grad) * np.linalg.norm(vec))
    if norm == 0.0:
        return 0.0
    return abs(float(grad @ vec)) / norm


@dataclass(frozen=True)
class FiniteConsistency:
    """d/dt of an invariant along T_t, from the finite action and from the generator."""

    finite: float
    infinitesimal: float
    value: float

    @property
    def worst(self):
        return max(self.finite, self.infinitesimal)


def finite_consistency(gen, ref, eq, x0, step=1e-4):
    """Compare the finite and infinitesimal derivatives of ``ref`` along T_t.

    ``finite`` is the central difference in t of the invariant of ``T_t . eq``
    at ``f_t(x0)``; ``infinitesimal`` is the contraction with the induced
    generator.  Both are divided by ``1 + |value|`` and should vanish.
    """
    from .transform import PointTransformation, apply

    fam = eq.family
    k = _ref_order(fam, ref)
    x = parse("x")

    def value_at(t):
        T = PointTransformation(x + t * gen.xi, 1 + t * gen.eta, t * gen.zeta)
        _, jets = apply(T, eq, x0, k)
        return inv.evaluate_ref(fam, jets, ref).value

    value = value_at(0.0)
    scale = 1.0 + abs(value)
    finite = abs(value_at(step) - value_at(-step)) / (2.0 * step) / scale
    at = JetPoint.from_equation(eq, x0, k + 1)
    induced = abs(directional_derivative(gen, ref, at, source="induced")) / scale
    return FiniteConsistency(finite, induced, value)
