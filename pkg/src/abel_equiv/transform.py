"""Action of the pseudogroup x -> f(x), y -> g(x) y + h(x) on equations.

The action is computed on jets.  Substituting ``y = (Y - h)/g`` into
``y' = sum a_i y^i`` and using ``dY/dX = (g' y + g y' + h') / f'`` gives the
new coefficients as functions of the *old* variable x
(:func:`pushforward_in_x`); composing with the reverted jet of f re-expresses
them in the new variable X (:func:`apply_jets`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import jet as jetlib
from .errors import NonInvertibleAtPoint, NotCanonical, OrderTooLow, WrongFamily
from .expr import Expression, parse
from .jet import Jet, compose as jet_compose, revert, rpow
from .model import AbelEquation, Family

__all__ = [
    "PointTransformation",
    "ResidualTransformation",
    "InverseJets",
    "TransformedEquation",
    "pushforward_in_x",
    "apply_jets",
    "apply",
    "compose",
    "invert",
    "apply_inverse",
    "residual_apply",
    "transform_equation",
]


@dataclass(frozen=True)
class PointTransformation:
    """x -> f(x), y -> g(x) y + h(x)."""

    f: Expression
    g: Expression
    h: Expression

    @classmethod
    def identity(cls):
        return cls(parse("x"), parse("1"), parse("0"))

    @classmethod
    def from_strings(cls, f="x", g="1", h="0"):
        return cls(parse(f), parse(g), parse(h))

    def jets(self, x0, order):
        return self.f.jet(x0, order), self.g.jet(x0, order), self.h.jet(x0, order)

    def check_invertible(self, x0):
        fj, gj, _ = self.jets(x0, 1)
        if fj.coeffs[1] == 0 or gj.value == 0:
            raise NonInvertibleAtPoint(
                f"f'({x0}) = {fj.coeffs[1]:g}, g({x0}) = {gj.value:g}; need both nonzero")


@dataclass(frozen=True)
class ResidualTransformation:
    """X -> K^(-m) (X + h), Y -> K Y, permuting canonical forms."""

    K: float
    h: float
    family_exponent: int

    @classmethod
    def for_family(cls, family, K, h):
        m = {Family.K3: 2, Family.K4: 3, Family.K5: 4}.get(family)
        if m is None:
            raise WrongFamily(f"no residual transformations for {family.value}")
        return cls(float(K), float(h), m)

    def to_point_transformation(self):
        if self.K == 0:
            raise NonInvertibleAtPoint("K must be nonzero")
        scale = self.K ** (-self.family_exponent)
        return PointTransformation(
            Expression.constant(scale) * (parse("x") + self.h),
            Expression.constant(self.K),
            parse("0"))


def _check_jets(fj, gj):
    if fj.order < 1:
        raise NonInvertibleAtPoint("f needs a jet of order >= 1")
    if fj.batched:
        return  # degenerate columns turn NaN downstream
    if fj.coeffs[1] == 0:
        raise NonInvertibleAtPoint("f' vanishes at the base point")
    if gj.value == 0:
        raise NonInvertibleAtPoint("g vanishes at the base point")


def pushforward_in_x(family, jets, fj, gj, hj):
    """Transformed coefficients, as jets in the old variable x.

    ``jets`` are coefficient jets of order N; ``fj, gj, hj`` need order N+1.
    The result holds, for every coefficient name, the jet at x0 of
    x -> (new coefficient)(f(x)).
    """
    _check_jets(fj, gj)
    n = min(j.order for j in jets.values())
    if min(fj.order, gj.order, hj.order) < n + 1:
        raise OrderTooLow("transformation jets need one order more than the coefficients")
    fp = fj.deriv().truncate(n)
    gp = gj.deriv().truncate(n)
    hp = hj.deriv().truncate(n)
    g = gj.truncate(n)
    h = hj.truncate(n)
    if family.is_singular:
        return _push_singular(family, jets, fp, g, gp, h, hp)
    names = family.coefficient_names
    k = family.degree
    a = {k - i: jets[name] for i, name in enumerate(names)}  # a[i] multiplies y^i
    # powers (-h)^m and g^(1-i)
    mh = [Jet.constant(1.0, g.base_point, n)]
    for _ in range(k):
        mh.append(mh[-1] * (-h))
    ginv = 1.0 / g
    gpow = {1: Jet.constant(1.0, g.base_point, n)}
    for i in range(2, k + 1):
        gpow[i] = gpow[i - 1] * ginv
    out = {}
    for j in range(k + 1):
        acc = Jet.constant(0.0, g.base_point, n)
        for i in range(max(j, 1), k + 1):
            acc = acc + math.comb(i, j) * a[i] * mh[i - j] * gpow[i]
        if j == 0:
            acc = acc + g * a[0] - gp * h * ginv + hp
        elif j == 1:
            acc = acc + gp * ginv
        out[names[k - j]] = acc / fp
    return {name: out[name] for name in names}


def _push_singular(family, jets, fp, g, gp, h, hp):
    p, q = jets["p"], jets["q"]
    ginv = 1.0 / g
    ratio = g / fp
    if family is Family.K4S:
        if not ratio.batched and ratio.value <= 0:
            raise WrongFamily("g/f' must be positive to stay inside the k4s family")
        m = rpow(ratio, 1, 4)
    else:
        m = rpow(ratio, 1, 5)
    new_p = p * ginv * m
    new_q = (q - p * h * ginv) * m
    lin = gp * ginv  # g'/g
    if family is Family.K4S:
        r, s = jets["r"], jets["s"]
        return {"p": new_p, "q": new_q,
                "r": (r + lin) / fp,
                "s": (g * s + hp - (r + lin) * h) / fp}
    s, t = jets["s"], jets["t"]
    if family is Family.K5S2:
        return {"p": new_p, "q": new_q,
                "s": (s + lin) / fp,
                "t": (g * t + hp - (s + lin) * h) / fp}
    r = jets["r"]
    return {"p": new_p, "q": new_q,
            "r": r * ginv / fp,
            "s": (s + lin - 2.0 * r * h * ginv) / fp,
            "t": (g * t + hp - (s + lin) * h + r * h * h * ginv) / fp}


def apply_jets(family, jets, fj, gj, hj):
    """Transformed coefficient jets in the new variable, at X0 = f(x0)."""
    pushed = pushforward_in_x(family, jets, fj, gj, hj)
    n = min(j.order for j in pushed.values())
    if n == 0:
        return fj.value, {name: Jet(j.coeffs, fj.value) for name, j in pushed.items()}
    finv = revert(fj.truncate(n))
    return fj.value, {name: jet_compose(j, finv) for name, j in pushed.items()}


def apply(T, eq, x0, order):
    """Apply ``T`` to ``eq`` at ``x0``: returns (f(x0), transformed jets of ``order``)."""
    fj, gj, hj = T.jets(x0, order + 1)
    _check_jets(fj, gj)
    jets = eq.coefficient_jets(x0, order)
    return apply_jets(eq.family, jets, fj, gj, hj)


def compose(T2, T1):
    """T2 after T1: f = f2(f1), g = g2(f1) g1, h = g2(f1) h1 + h2(f1)."""
    g2f1 = T2.g.substitute(T1.f)
    return PointTransformation(
        T2.f.substitute(T1.f),
        g2f1 * T1.g,
        g2f1 * T1.h + T2.h.substitute(T1.f))


@dataclass(frozen=True)
class InverseJets:
    """Jets at f(x0) of the inverse transformation (f^-1, 1/(g o f^-1), -h o f^-1 / g o f^-1)."""

    base_point: float
    f: Jet
    g: Jet
    h: Jet


def invert(T, x0, order):
    fj, gj, hj = T.jets(x0, order)
    _check_jets(fj, gj)
    finv = revert(fj)
    g_back = jet_compose(gj, finv)
    h_back = jet_compose(hj, finv)
    return InverseJets(fj.value, finv, 1.0 / g_back, -h_back / g_back)


def apply_inverse(inv, family, jets):
    """Apply an :class:`InverseJets` to coefficient jets expanded at ``inv.base_point``."""
    return apply_jets(family, jets, inv.f, inv.g, inv.h)


def residual_apply(R, eq, x0, order=8):
    from .invariants import canonical_check

    if not canonical_check(eq, x0):
        raise NotCanonical(f"equation is not in {eq.family.value} canonical shape at {x0}")
    return apply(R.to_point_transformation(), eq, x0, order)


class TransformedEquation:
    """``T . eq`` evaluated lazily at points of the new variable.

    ``x_ref`` is a point of the original domain near which f is inverted by
    Newton's method; f must be monotone on the region sampled.
    """

    def __init__(self, eq, T, x_ref=0.0):
        self.base = eq
        self.T = T
        self.family = eq.family
        self.x_ref = float(x_ref)

    def preimage(self, X):
        """Solve f(x) = X by Newton's method; accepts arrays (NaN where it fails)."""
        X = np.asarray(X, dtype=float)
        x = np.full(X.shape, self.x_ref)
        with np.errstate(all="ignore"):
            for _ in range(60):
                fj = self.T.f.jet(x, 1)
                step = (fj.coeffs[0] - X) / fj.coeffs[1]
                x = x - step
                if np.all(np.abs(step) <= 1e-15 * np.maximum(1.0, np.abs(x))):
                    break
            residual = np.abs(self.T.f.jet(x, 0).coeffs[0] - X)
            x = np.where(residual <= 1e-10 * np.maximum(1.0, np.abs(X)), x, np.nan)
        if x.ndim == 0:
            if np.isnan(x):
                raise NonInvertibleAtPoint(f"could not invert f at {float(X)}")
            return float(x)
        return x

    def coefficient_jets(self, X, order):
        x = self.preimage(X)
        _, jets = apply(self.T, self.base, x, order)
        # rebase on the requested point (differs from f(x) only by rounding)
        return {n: Jet(j.coeffs, X) for n, j in jets.items()}


def _is_affine(e, probes=(-1.3, 0.0, 0.7, 2.1)):
    try:
        jets = [e.jet(x, 2) for x in probes]
    except Exception:
        return None
    slopes = [j.coeffs[1] for j in jets]
    if any(abs(j.coeffs[2]) > 1e-12 for j in jets) or max(slopes) - min(slopes) > 1e-12:
        return None
    return slopes[0], jets[0].value - slopes[0] * probes[0]


def _as_constant(e, probes=(-1.3, 0.0, 0.7, 2.1)):
    try:
        jets = [e.jet(x, 1) for x in probes]
    except Exception:
        return None
    vals = [j.value for j in jets]
    if any(abs(j.coeffs[1]) > 1e-12 for j in jets) or max(vals) - min(vals) > 1e-12:
        return None
    return vals[0]


def transform_equation(T, eq):
    """Expression-level ``T . eq``; needs an affine f (so that f^-1 is expressible).

    For the singular families g/f' must moreover be constant, because the
    transported p, q carry a fractional power of it.
    """
    aff = _is_affine(T.f)
    if aff is None:
        raise ValueError("expression-level transformation needs an affine f; "
                         "use apply() at a point instead")
    alpha, beta = aff
    if alpha == 0:
        raise NonInvertibleAtPoint("f is constant")
    x = parse("x")
    finv = (x - beta) / alpha
    f, g, h = T.f, T.g, T.h
    fp, gp, hp = Expression.constant(alpha), g.diff(), h.diff()
    fam = eq.family
    c = eq.coefficients
    if fam.is_singular:
        ratio = _as_constant(g / fp)
        if ratio is None:
            raise ValueError("singular families need constant g/f' at expression level")
        if fam is Family.K4S and ratio <= 0:
            raise WrongFamily("g/f' must be positive to stay inside the k4s family")
        m = math.copysign(abs(ratio) ** (1.0 / (4 if fam is Family.K4S else 5)), ratio)
        lin = gp / g
        new = {"p": c["p"] / g * m, "q": (c["q"] - c["p"] * h / g) * m}
        if fam is Family.K4S:
            new["r"] = (c["r"] + lin) / fp
            new["s"] = (g * c["s"] + hp - (c["r"] + lin) * h) / fp
        elif fam is Family.K5S2:
            new["s"] = (c["s"] + lin) / fp
            new["t"] = (g * c["t"] + hp - (c["s"] + lin) * h) / fp
        else:
            new["r"] = c["r"] / g / fp
            new["s"] = (c["s"] + lin - 2 * c["r"] * h / g) / fp
            new["t"] = (g * c["t"] + hp - (c["s"] + lin) * h + c["r"] * h * h / g) / fp
    else:
        names = fam.coefficient_names
        k = fam.degree
        a = {k - i: c[name] for i, name in enumerate(names)}
        new = {}
        for j in range(k + 1):
            acc = Expression.constant(0)
            for i in range(max(j, 1), k + 1):
                term = math.comb(i, j) * a[i] * (-h) ** (i - j) / g ** (i - 1)
                acc = acc + term
            if j == 0:
                acc = acc + g * a[0] - gp * h / g + hp
            elif j == 1:
                acc = acc + gp / g
            new[names[k - j]] = acc / fp
    return AbelEquation(fam, {n: e.substitute(finv) for n, e in new.items()})
