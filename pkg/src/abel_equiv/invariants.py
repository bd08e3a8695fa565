"""Relative and absolute differential invariants of the six families.

Every formula lives in one table, :data:`CATALOG`.  Each entry is evaluated on
coefficient *jets*, so a formula applied to order-N jets yields the invariant
as a jet of order ``N - entry.order``; the total derivative ``D/Dx`` is the
coefficient shift and ``nabla = A * D/Dx`` is applied at jet level.

Fractional powers use the real-branch rule of :func:`jet.rpow`; every ``|.|``
in a formula is literal.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from .errors import (
    DivisionByZeroConstantTerm,
    DomainError,
    FitFailed,
    OrderTooLow,
    TresseDenominatorVanishes,
)
from .jet import Jet, jabs, rpow
from .model import DEFAULT_TOL_ZERO, Family, jet_scale, vanishes

__all__ = [
    "Formula",
    "CATALOG",
    "InvariantValue",
    "DerivationCoefficient",
    "names",
    "relative_names",
    "absolute_names",
    "basic_absolute_names",
    "signature_components",
    "degree_of",
    "order_of",
    "relative_jets",
    "relative_invariants",
    "absolute_invariants",
    "cubic_chain",
    "derivation_coefficient",
    "invariant_jet",
    "nabla_jet",
    "nabla_power",
    "evaluate_ref",
    "batch_refs",
    "tresse_derivative",
    "weight_fit",
    "WeightFit",
    "canonical_check",
    "canonical_check_jets",
    "k4s_unbalanced_J",
    "syzygy_residuals",
]


class Undefined(Exception):
    """A denominator vanished; the invariant is not defined at this jet."""


@dataclass(frozen=True)
class InvariantValue:
    name: str
    order: int
    value: float
    defined: bool = True

    def as_float(self):
        return self.value if self.defined else None


@dataclass(frozen=True)
class DerivationCoefficient:
    family: Family
    value: float
    defined: bool = True


@dataclass(frozen=True)
class Formula:
    name: str
    family: Family
    kind: str            # 'relative' | 'absolute' | 'derivation'
    order: int           # highest coefficient derivative consumed
    compute: Callable
    degree: int = 0      # polynomial degree (relative invariants)
    requires: tuple = () # relative invariants that must not vanish


class _Ctx:
    """Coefficient jets of one family plus memoized relative invariants."""

    def __init__(self, family, jets):
        self.family = family
        self.jets = jets
        self.cache = {}

    def __getattr__(self, name):
        try:
            return self.__dict__["jets"][name]
        except KeyError:
            raise AttributeError(name) from None

    @staticmethod
    def D(j):
        return j.deriv()

    def rel(self, name):
        if name not in self.cache:
            self.cache[name] = _ENTRIES[(self.family, name)].compute(self)
        return self.cache[name]


def _frac_abs(j, m, n):
    return rpow(jabs(j), m, n)


# -- K3: y' = a y^3 + b y^2 + c y + d ---------------------------------------------------

def _k3_W(c):
    return c.D(c.a) + c.a * c.c - c.b ** 2 / 3.0


def _k3_s3(c):
    a, b, D = c.a, c.b, c.D
    return D(a) * b - D(b) * a + a * b * c.c - (2.0 / 9.0) * b ** 3 - 3.0 * a ** 2 * c.d


def _k3_chain(n):
    """s_{2n+1} = a * D s_{2n-1} - (2n-1) s_{2n-1} (a' + ac - b^2/3)."""
    prev = f"s{2 * n - 1}"

    def compute(c):
        s = c.rel(prev)
        return c.a * c.D(s) - (2 * n - 1) * s * _k3_W(c)

    return compute


# -- K4: y' = a y^4 + b y^3 + c y^2 + d y + e --------------------------------------------

def _k4_I2(c):
    a, b, D = c.a, c.b, c.D
    return 3.0 * (a * D(b) - D(a) * b) + a * c.c ** 2 - 3.0 * a * b * c.d + 12.0 * a ** 2 * c.e


def _k4_I3(c):
    a, b, cc, d, D = c.a, c.b, c.c, c.d, c.D
    return (8.0 * a * D(a) * (4.0 * a * cc - 3.0 * b ** 2) + 24.0 * a ** 2 * b * D(b)
            - 32.0 * a ** 3 * D(cc) - 3.0 * b ** 5 + 64.0 * a ** 3 * cc * d
            - 24.0 * a ** 2 * b ** 2 * d - 32.0 * a ** 2 * b * cc ** 2 + 20.0 * a * b ** 3 * cc)


# -- K4S: y' = (p y + q)^4 + r y + s ----------------------------------------------------

def _k4s_L1(c):
    p, q, D = c.p, c.q, c.D
    return D(q) * p - D(p) * q + p ** 2 * c.s - p * q * c.r


def _k4s_L2(c):
    p, q, r, s, D = c.p, c.q, c.r, c.s, c.D
    dp, dq = D(p), D(q)
    return (p * (p * D(dq) - q * D(dp)) + 6.0 * dp * (dp * q - p * dq)
            + dp * p * (9.0 * q * r - 4.0 * p * s) - 5.0 * r * p ** 2 * dq
            - p ** 2 * q * D(r) + p ** 3 * D(s) + 4.0 * p ** 2 * r * (q * r - p * s))


def _k4s_J(c):
    # weight-zero normalization; the unbalanced L2/(L0^2 |L1|^(7/2)) is not invariant
    # (see k4s_unbalanced_J).  The sign(L0) factor makes J independent of the
    # choice (p, q) versus (-p, -q), which describe the same ODE.
    L0, L1, L2 = c.rel("L0"), c.rel("L1"), c.rel("L2")
    return L2 * L0 / (_frac_abs(L0, 3, 2) * _frac_abs(L1, 7, 4))


# -- K5: y' = a y^5 + b y^4 + c y^3 + d y^2 + e y + f -----------------------------------

def _k5_K2(c):
    a, b = c.a, c.b
    return 4.0 * b ** 3 - 15.0 * a * b * c.c + 25.0 * a ** 2 * c.d


def _k5_K3(c):
    a, b, cc, d, D = c.a, c.b, c.c, c.d, c.D
    return (50.0 * a * D(b) - 50.0 * b * D(a) + 8.0 * b ** 2 * d + 5.0 * a * cc * d
            - 50.0 * a * b * c.e - 3.0 * b * cc ** 2 + 250.0 * a ** 2 * c.f)


def _k5_K4(c):
    a, b, cc, d, e, f, D = c.a, c.b, c.c, c.d, c.e, c.f, c.D
    return (2500.0 * a ** 2 * d * D(a) + 1500.0 * a ** 2 * b * D(cc)
            - 2500.0 * a ** 3 * D(d) - 1500.0 * a ** 2 * cc * D(b)
            + 825.0 * a ** 2 * cc ** 2 * d + 6000.0 * a ** 2 * b ** 2 * f
            - 495.0 * a * b * cc ** 3 + 1440.0 * a * b ** 2 * cc * d
            - 3000.0 * a ** 2 * b * d ** 2 - 288.0 * b ** 4 * d
            - 1500.0 * a ** 2 * b * cc * e + 7500.0 * a ** 3 * d * e
            - 15000.0 * a ** 3 * cc * f + 108.0 * b ** 3 * cc ** 2)


# -- K5S1: y' = (p y + q)^5 + r y^2 + s y + t --------------------------------------------

def _k5s1_L2(c):
    p, q, D = c.p, c.q, c.D
    return -D(p) * q + D(q) * p + q ** 2 * c.r - p * q * c.s + c.t * p ** 2


def _k5s1_L3(c):
    p, r, D = c.p, c.r, c.D
    return 5.0 * D(p) * r + 3.0 * p * r * c.s - 6.0 * c.q * r ** 2 - p * D(r)


# -- K5S2: y' = (p y + q)^5 + s y + t ---------------------------------------------------

def _k5s2_M2(c):
    p, q, D = c.p, c.q, c.D
    return -D(p) * q + D(q) * p - p * q * c.s + c.t * p ** 2


def _k5s2_M4(c):
    p, q, s, t, D = c.p, c.q, c.s, c.t, c.D
    dp, dq = D(p), D(q)
    return (p * (p * D(dq) - q * D(dp)) + 7.0 * dp * (dp * q - p * dq) + p ** 3 * D(t)
            - p ** 2 * q * D(s) - 6.0 * p ** 2 * s * dq + dp * p * (11.0 * q * s - 5.0 * p * t)
            + 5.0 * p ** 2 * s * (q * s - p * t))


def _rel(name, family, order, degree, compute):
    return Formula(name, family, "relative", order, compute, degree=degree)


def _abs(name, family, order, requires, compute):
    return Formula(name, family, "absolute", order, compute, requires=requires)


def _der(family, order, requires, compute):
    return Formula("nabla", family, "derivation", order, compute, requires=requires)


K3, K4, K4S, K5, K5S1, K5S2 = (Family.K3, Family.K4, Family.K4S,
                               Family.K5, Family.K5S1, Family.K5S2)

CATALOG = (
    # K3
    _rel("s1", K3, 0, 1, lambda c: c.a),
    _rel("s3", K3, 1, 3, _k3_s3),
    _rel("s5", K3, 2, 4, _k3_chain(2)),
    _rel("s7", K3, 3, 5, _k3_chain(3)),
    _rel("s9", K3, 4, 6, _k3_chain(4)),
    _abs("J1", K3, 2, ("s3",), lambda c: c.rel("s5") ** 3 / c.rel("s3") ** 5),
    _abs("J2", K3, 3, ("s3",), lambda c: c.rel("s5") * c.rel("s7") / c.rel("s3") ** 4),
    _abs("J3", K3, 4, ("s3",), lambda c: c.rel("s9") / c.rel("s3") ** 3),
    _der(K3, 1, ("s3",), lambda c: c.rel("s1") / rpow(c.rel("s3"), 2, 3)),
    # K4
    _rel("I0", K4, 0, 1, lambda c: c.a),
    _rel("I1", K4, 0, 2, lambda c: 8.0 * c.a * c.c - 3.0 * c.b ** 2),
    _rel("I2", K4, 1, 3, _k4_I2),
    _rel("I3", K4, 1, 5, _k4_I3),
    _abs("J1", K4, 1, ("I1",), lambda c: c.rel("I2") * c.rel("I0") / c.rel("I1") ** 2),
    _abs("J2", K4, 1, ("I1",), lambda c: c.rel("I3") / _frac_abs(c.rel("I1"), 5, 2)),
    _der(K4, 0, ("I1",), lambda c: c.rel("I0") ** 2 / _frac_abs(c.rel("I1"), 3, 2)),
    # K4S
    _rel("L0", K4S, 0, 1, lambda c: c.p),
    _rel("L1", K4S, 1, 3, _k4s_L1),
    _rel("L2", K4S, 2, 5, _k4s_L2),
    _abs("J", K4S, 2, ("L0", "L1"), _k4s_J),
    _der(K4S, 1, ("L0", "L1"),
         lambda c: _frac_abs(c.rel("L0"), 1, 2) / _frac_abs(c.rel("L1"), 3, 4)),
    # K5
    _rel("K0", K5, 0, 1, lambda c: c.a),
    _rel("K1", K5, 0, 2, lambda c: 5.0 * c.a * c.c - 2.0 * c.b ** 2),
    _rel("K2", K5, 0, 3, _k5_K2),
    _rel("K3", K5, 1, 3, _k5_K3),
    _rel("K4", K5, 1, 5, _k5_K4),
    _abs("J0", K5, 0, ("K1",), lambda c: c.rel("K2") ** 2 / c.rel("K1") ** 3),
    _abs("J1", K5, 1, ("K1",),
         lambda c: c.rel("K3") * c.rel("K0") ** 2 / _frac_abs(c.rel("K1"), 5, 2)),
    _abs("J2", K5, 1, ("K1",),
         lambda c: c.rel("K4") * c.rel("K0") ** 2 / _frac_abs(c.rel("K1"), 7, 2)),
    _der(K5, 0, ("K1",), lambda c: c.rel("K0") ** 3 / c.rel("K1") ** 2),
    # K5S1
    _rel("L0", K5S1, 0, 1, lambda c: c.p),
    _rel("L1", K5S1, 0, 1, lambda c: c.r),
    _rel("L2", K5S1, 1, 3, _k5s1_L2),
    _rel("L3", K5S1, 1, 3, _k5s1_L3),
    _abs("J0", K5S1, 1, ("L0", "L1"),
         lambda c: c.rel("L2") * rpow(c.p, 4, 3) / rpow(c.r, 5, 3)),
    _abs("J1", K5S1, 1, ("L0", "L1"),
         lambda c: c.rel("L3") * rpow(c.p, 2, 3) / rpow(c.r, 7, 3)),
    _der(K5S1, 0, ("L0", "L1"), lambda c: rpow(c.p, 5, 3) / rpow(c.r, 4, 3)),
    # K5S2
    _rel("M0", K5S2, 0, 1, lambda c: c.p),
    _rel("M2", K5S2, 1, 3, _k5s2_M2),
    _rel("M4", K5S2, 2, 5, _k5s2_M4),
    _abs("J", K5S2, 2, ("M0", "M2"),
         lambda c: c.rel("M4") / (rpow(c.p, 2, 5) * rpow(c.rel("M2"), 9, 5))),
    _der(K5S2, 1, ("M0", "M2"), lambda c: rpow(c.p, 3, 5) / rpow(c.rel("M2"), 4, 5)),
)

_ENTRIES = {(f.family, f.name): f for f in CATALOG}

_BASIC = {
    K3: ("J1",),
    K4: ("J1", "J2"),
    K4S: ("J",),
    K5: ("J0", "J1", "J2"),
    K5S1: ("J0", "J1"),
    K5S2: ("J",),
}


def names(family, kind=None):
    return tuple(f.name for f in CATALOG
                 if f.family is family and f.kind != "derivation"
                 and (kind is None or f.kind == kind))


def relative_names(family):
    return names(family, "relative")


def absolute_names(family):
    return names(family, "absolute")


def basic_absolute_names(family):
    """The generating absolute invariants (signature coordinates before nabla)."""
    return _BASIC[family]


def signature_components(family):
    """Component names of the signature map: basics, then their nabla-derivatives."""
    basics = _BASIC[family]
    return basics + tuple(f"nabla_{n}" for n in basics)


def entry(family, name):
    try:
        return _ENTRIES[(family, name)]
    except KeyError:
        raise KeyError(f"{family.value} has no invariant named {name!r}") from None


def degree_of(family, name):
    return entry(family, name).degree


def order_of(family, name):
    return entry(family, name).order


# -- evaluation ------------------------------------------------------------------

def _min_order(jets):
    return min(j.order for j in jets.values())


def _check_defined(ctx, formula, tol):
    """Raise Undefined when one of the formula's denominators vanishes."""
    if not formula.requires:
        return
    base = _min_order(ctx.jets)
    for name in formula.requires:
        rel_entry = _ENTRIES[(ctx.family, name)]
        scale = jet_scale(ctx.jets, min(base, rel_entry.order))
        if vanishes(ctx.rel(name).value, rel_entry.degree, scale, tol):
            raise Undefined(name)


def relative_jets(family, jets, max_order=None):
    """All relative invariants whose order fits the jets, as jets."""
    ctx = _Ctx(family, jets)
    order = _min_order(jets)
    if max_order is not None:
        order = min(order, max_order)
    return {f.name: ctx.rel(f.name) for f in CATALOG
            if f.family is family and f.kind == "relative" and f.order <= order}


def relative_invariants(family, jets):
    """Values at the base point of the family's relative invariants.

    The basic ones are always returned (OrderTooLow if the jets are too
    short); the higher members of the cubic chain (s5, s7, s9) are included
    when the jet order allows.
    """
    order = _min_order(jets)
    need = _BASIC_REL_ORDER[family]
    if order < need:
        raise OrderTooLow(f"{family.value} relative invariants need jets of order {need}")
    ctx = _Ctx(family, jets)
    return {f.name: InvariantValue(f.name, f.order, ctx.rel(f.name).value)
            for f in CATALOG
            if f.family is family and f.kind == "relative" and f.order <= order}


_BASIC_REL_ORDER = {K3: 1, K4: 1, K4S: 2, K5: 1, K5S1: 1, K5S2: 2}


def cubic_chain(jets, n):
    """s_{2n+1} of the cubic family as a jet (n = 1 gives s3)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    order = _min_order(jets)
    if order < n:
        raise OrderTooLow(f"s{2 * n + 1} needs jets of order >= {n}")
    ctx = _Ctx(Family.K3, jets)
    name = f"s{2 * n + 1}"
    if (Family.K3, name) in _ENTRIES:
        return ctx.rel(name)
    # beyond the catalog cap: continue the recursion directly
    s = ctx.rel("s9")
    for m in range(5, n + 1):
        s = ctx.a * s.deriv() - (2 * m - 1) * s * _k3_W(ctx)
    return s


def invariant_jet(family, jets, name, tol=DEFAULT_TOL_ZERO, ctx=None):
    """Absolute or relative invariant ``name`` as a jet; raises Undefined."""
    f = entry(family, name)
    if _min_order(jets) < f.order:
        raise OrderTooLow(f"{name} needs jets of order {f.order}")
    ctx = ctx or _Ctx(family, jets)
    if f.kind == "relative":
        return ctx.rel(name)
    _check_defined(ctx, f, tol)
    try:
        return f.compute(ctx)
    except (DomainError, DivisionByZeroConstantTerm) as exc:
        raise Undefined(str(exc)) from None


def derivation_jet(family, jets, tol=DEFAULT_TOL_ZERO, ctx=None):
    f = _ENTRIES[(family, "nabla")]
    ctx = ctx or _Ctx(family, jets)
    _check_defined(ctx, f, tol)
    try:
        return f.compute(ctx)
    except (DomainError, DivisionByZeroConstantTerm) as exc:
        raise Undefined(str(exc)) from None


def absolute_invariants(family, jets, tol=DEFAULT_TOL_ZERO):
    """Absolute invariants supported by the jet order, soft-failing to defined=False."""
    order = _min_order(jets)
    ctx = _Ctx(family, jets)
    out = {}
    for f in CATALOG:
        if f.family is not family or f.kind != "absolute" or f.order > order:
            continue
        try:
            out[f.name] = InvariantValue(f.name, f.order,
                                         invariant_jet(family, jets, f.name, tol, ctx).value)
        except Undefined:
            out[f.name] = InvariantValue(f.name, f.order, math.nan, False)
    return out


def derivation_coefficient(family, jets, tol=DEFAULT_TOL_ZERO):
    """The coefficient A of the invariant derivation nabla = A D/Dx at the base point."""
    try:
        return DerivationCoefficient(family, derivation_jet(family, jets, tol).value)
    except Undefined:
        return DerivationCoefficient(family, math.nan, False)


def nabla_order(family):
    return _ENTRIES[(family, "nabla")].order


def required_order(family, name, k=0):
    """Jet order needed to evaluate nabla^k applied to ``name``."""
    base = order_of(family, name)
    if k == 0:
        return base
    return max(base, nabla_order(family)) + k


def nabla_jet(family, jets, name, k, tol=DEFAULT_TOL_ZERO, ctx=None):
    """nabla^k of invariant ``name`` as a jet (order reduced by k)."""
    need = required_order(family, name, k)
    if _min_order(jets) < need:
        raise OrderTooLow(f"nabla^{k} {name} needs jets of order {need}")
    ctx = ctx or _Ctx(family, jets)
    j = invariant_jet(family, jets, name, tol, ctx)
    if k:
        A = derivation_jet(family, jets, tol, ctx)
        for _ in range(k):
            j = A * j.deriv()
    return j


def batch_refs(family, jets, refs, tol=DEFAULT_TOL_ZERO):
    """Invariant references evaluated on batched jets, with a definedness mask.

    Returns ``(jets_by_ref, mask)``; a column is masked when a denominator
    invariant vanishes there or any result is not finite.
    """
    ctx = _Ctx(family, jets)
    base = _min_order(jets)
    parsed = [parse_ref(r) for r in refs]
    formulas = {entry(family, name) for name, _ in parsed}
    if any(k for _, k in parsed):
        formulas.add(_ENTRIES[(family, "nabla")])
    ok = None
    with np.errstate(all="ignore"):
        for f in formulas:
            for req in f.requires:
                rel_entry = _ENTRIES[(family, req)]
                scale = jet_scale(jets, min(base, rel_entry.order))
                bad = vanishes(ctx.rel(req).value, rel_entry.degree, scale, tol)
                ok = ~bad if ok is None else ok & ~bad
        A = _ENTRIES[(family, "nabla")].compute(ctx) if any(k for _, k in parsed) else None
        out = {}
        for ref, (name, k) in zip(refs, parsed):
            j = entry(family, name).compute(ctx)
            for _ in range(k):
                j = A * j.deriv()
            out[ref] = j
            finite = np.all(np.isfinite(j.coeffs), axis=0)
            ok = finite if ok is None else ok & finite
    return out, ok


_REF_RE = re.compile(r"^(?:nabla(\d*)_)?(\w+)$")


def parse_ref(ref):
    """'J1' -> ('J1', 0); 'nabla_J1' -> ('J1', 1); 'nabla2_J1' -> ('J1', 2)."""
    m = _REF_RE.match(ref)
    if not m:
        raise KeyError(f"bad invariant reference {ref!r}")
    k = 0 if m.group(1) is None else int(m.group(1) or 1)
    return m.group(2), k


def evaluate_ref(family, jets, ref, tol=DEFAULT_TOL_ZERO, ctx=None):
    name, k = parse_ref(ref)
    return nabla_jet(family, jets, name, k, tol, ctx)


def nabla_power(eq, x0, name, k, tol=DEFAULT_TOL_ZERO):
    """nabla^k J at ``x0`` (k = 0 returns J itself)."""
    fam = eq.family
    need = required_order(fam, name, k)
    jets = eq.coefficient_jets(x0, need)
    label = name if k == 0 else (f"nabla_{name}" if k == 1 else f"nabla{k}_{name}")
    try:
        value = nabla_jet(fam, jets, name, k, tol).value
    except Undefined:
        return InvariantValue(label, need, math.nan, False)
    return InvariantValue(label, need, value)


def tresse_derivative(eq, x0, F_name, J_name, tol=DEFAULT_TOL_ZERO):
    """DF/DJ = (DF/Dx) / (DJ/Dx) at ``x0``.  Names may carry a nabla prefix."""
    fam = eq.family
    fn, fk = parse_ref(F_name)
    jn, jk = parse_ref(J_name)
    need = max(required_order(fam, fn, fk), required_order(fam, jn, jk)) + 1
    jets = eq.coefficient_jets(x0, need)
    ctx = _Ctx(fam, jets)
    try:
        F = nabla_jet(fam, jets, fn, fk, tol, ctx)
        J = nabla_jet(fam, jets, jn, jk, tol, ctx)
    except Undefined:
        return InvariantValue(f"D{F_name}/D{J_name}", need, math.nan, False)
    dJ = J.coeffs[1]
    if vanishes(dJ, 1, abs(J.value), tol):
        raise TresseDenominatorVanishes(f"D{J_name}/Dx vanishes at x = {x0}")
    return InvariantValue(f"D{F_name}/D{J_name}", need, F.coeffs[1] / dJ)


# -- informational forms -----------------------------------------------------------

def k4s_unbalanced_J(jets):
    """The unbalanced K4S quotient L2 / (L0^2 |L1|^(7/2)) (not invariant)."""
    ctx = _Ctx(Family.K4S, jets)
    L0, L1, L2 = ctx.rel("L0"), ctx.rel("L1"), ctx.rel("L2")
    return (L2 / (L0 ** 2 * _frac_abs(L1, 7, 2))).value


def syzygy_residuals(jets, tol=DEFAULT_TOL_ZERO):
    """Residuals of two candidate K3 identities relating J2 to J1.

    ``derived``: J2 - (J1^(1/3) * nabla(J1^(1/3)) + 5/3 J1), relative to |J2| + |J1|.
    ``alternate``: J2 - (nabla(J1^(1/3)) + 15 J1), same scaling.
    """
    ctx = _Ctx(Family.K3, jets)
    J1 = invariant_jet(Family.K3, jets, "J1", tol, ctx)
    J2 = invariant_jet(Family.K3, jets, "J2", tol, ctx).value
    A = derivation_jet(Family.K3, jets, tol, ctx)
    cube_root = rpow(J1, 1, 3)
    nabla_root = (A * cube_root.deriv()).value
    scale = abs(J2) + abs(J1.value) + abs(cube_root.value * nabla_root)
    derived = J2 - (cube_root.value * nabla_root + 5.0 / 3.0 * J1.value)
    alternate = J2 - (nabla_root + 15.0 * J1.value)
    return {"derived": abs(derived) / scale, "alternate": abs(alternate) / scale,
            "J1": J1.value, "J2": J2, "nabla_cbrt_J1": nabla_root}


# -- canonical shapes ------------------------------------------------------------------

# (coefficient that must be identically 1, coefficients that must vanish)
_CANONICAL = {
    K3: ("a", ("b", "c")),
    K4: ("a", ("b", "d")),
    K5: ("a", ("b", "e")),
    K4S: ("p", ("q", "r")),
    K5S1: ("p", ("q", "s")),
    K5S2: ("p", ("q", "s")),
}


def canonical_check_jets(family, jets, tol=1e-9):
    lead, zeros = _CANONICAL[family]
    one = jets[lead]
    scale = 1.0 + max(float(np.max(np.abs(j.coeffs))) for j in jets.values())
    if abs(one.coeffs[0] - 1.0) > tol * scale or np.any(np.abs(one.coeffs[1:]) > tol * scale):
        return False
    return all(bool(np.all(np.abs(jets[n].coeffs) <= tol * scale)) for n in zeros)


def canonical_check(eq, x0, tol=1e-9, order=3):
    """True iff the equation has its family's canonical shape near ``x0``."""
    return canonical_check_jets(eq.family, eq.coefficient_jets(x0, order), tol)


# -- empirical weights -----------------------------------------------------------------

@dataclass(frozen=True)
class WeightFit:
    name: str
    g_exponent: Fraction
    fprime_exponent: Fraction
    residual: float
    trials: int


def weight_fit(family, name, trials=40, seed=0, threshold=1e-6, max_denominator=12):
    """Fit log|F(T.E)/F(E)| = p log|g| + q log|f'| over random (E, T).

    Returns the nearest small rationals (p, q) and the worst residual of the
    rounded law.  Raises FitFailed when the residual exceeds ``threshold``.
    """
    from . import sampling, transform

    rng = np.random.default_rng(seed)
    rows, rhs = [], []
    f = entry(family, name)
    if f.kind != "relative":
        raise KeyError(f"{name} is not a relative invariant of {family.value}")
    order = f.order
    while len(rows) < trials:
        eq = sampling.random_equation(rng, family)
        T = sampling.random_transformation(rng, family=family)
        x0 = float(rng.uniform(-0.5, 0.5))
        jets = eq.coefficient_jets(x0, order)
        before = relative_jets(family, jets)[name].value
        if abs(before) < 1e-3:
            continue
        x1, tj = transform.apply(T, eq, x0, order)
        after = relative_jets(family, tj)[name].value
        fj, gj, _ = T.jets(x0, 1)
        g0, fp0 = gj.value, fj.coeffs[1]
        if after == 0 or abs(abs(g0) - 1) < 1e-3 and abs(abs(fp0) - 1) < 1e-3:
            continue
        rows.append((math.log(abs(g0)), math.log(abs(fp0))))
        rhs.append(math.log(abs(after / before)))
    A = np.array(rows)
    b = np.array(rhs)
    sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    p = Fraction(sol[0]).limit_denominator(max_denominator)
    q = Fraction(sol[1]).limit_denominator(max_denominator)
    residual = float(np.max(np.abs(A @ np.array([float(p), float(q)]) - b)))
    if residual > threshold:
        raise FitFailed(f"{family.value}.{name}: residual {residual:.3g} for "
                        f"exponents ({p}, {q})")
    return WeightFit(name, p, q, residual, trials)
