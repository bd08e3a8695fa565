"""ODE families, equation files and orbit classification."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping

import numpy as np

from .errors import (
    EquationFormatError,
    MissingCoefficient,
    UnexpectedKey,
    UnknownFamily,
    WrongFamily,
)
from .expr import Expression, parse
from .jet import Jet

__all__ = [
    "Family",
    "AbelEquation",
    "OrbitTag",
    "OrbitClass",
    "load_equation",
    "render_equation",
    "expand_singular",
    "expand_jets",
    "coefficient_jets",
    "classify",
    "jet_scale",
    "vanishes",
    "regular_mask",
    "DEFAULT_TOL_ZERO",
]

DEFAULT_TOL_ZERO = 1e-9


class Family(str, Enum):
    K3 = "k3"
    K4 = "k4"
    K4S = "k4s"
    K5 = "k5"
    K5S1 = "k5s1"
    K5S2 = "k5s2"

    @property
    def coefficient_names(self):
        return _NAMES[self]

    @property
    def signature_dimension(self):
        return _SIG_DIM[self]

    @property
    def degree(self):
        """Degree k of the right-hand side in y."""
        return _DEGREE[self]

    @property
    def is_singular(self):
        return self in (Family.K4S, Family.K5S1, Family.K5S2)

    @property
    def expanded(self):
        """The full-coefficient family this one embeds into."""
        return {Family.K4S: Family.K4, Family.K5S1: Family.K5,
                Family.K5S2: Family.K5}.get(self, self)

    @property
    def leading_names(self):
        if self is Family.K5S1:
            return ("p", "r")
        if self.is_singular:
            return ("p",)
        return ("a",)

    @classmethod
    def from_tag(cls, tag):
        try:
            return cls(str(tag).lower())
        except ValueError:
            raise UnknownFamily(f"unknown family {tag!r}") from None


_NAMES = {
    Family.K3: ("a", "b", "c", "d"),
    Family.K4: ("a", "b", "c", "d", "e"),
    Family.K4S: ("p", "q", "r", "s"),
    Family.K5: ("a", "b", "c", "d", "e", "f"),
    Family.K5S1: ("p", "q", "r", "s", "t"),
    Family.K5S2: ("p", "q", "s", "t"),
}
_SIG_DIM = {Family.K3: 2, Family.K4: 4, Family.K4S: 2,
            Family.K5: 6, Family.K5S1: 4, Family.K5S2: 2}
_DEGREE = {Family.K3: 3, Family.K4: 4, Family.K4S: 4,
           Family.K5: 5, Family.K5S1: 5, Family.K5S2: 5}


@dataclass(frozen=True)
class AbelEquation:
    """An ODE of one of the six families with Expression coefficients."""

    family: Family
    coefficients: Mapping[str, Expression]

    def __post_init__(self):
        names = self.family.coefficient_names
        missing = [n for n in names if n not in self.coefficients]
        if missing:
            raise MissingCoefficient(missing[0])
        extra = [n for n in self.coefficients if n not in names]
        if extra:
            raise UnexpectedKey(extra[0])
        ordered = {n: self.coefficients[n] for n in names}
        object.__setattr__(self, "coefficients", ordered)

    @classmethod
    def from_strings(cls, family, **coeffs):
        family = Family.from_tag(family) if not isinstance(family, Family) else family
        return cls(family, {k: parse(v) if isinstance(v, str) else v
                            for k, v in coeffs.items()})

    def coefficient_jets(self, x0, order):
        return coefficient_jets(self, x0, order)

    def __getitem__(self, name):
        return self.coefficients[name]

    def __str__(self):
        return render_equation(self)


# -- file format -------------------------------------------------------------------

def load_equation(document):
    """Build an equation from a JSON text or an already-decoded mapping."""
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise EquationFormatError(f"invalid JSON: {exc}") from None
    if not isinstance(document, Mapping):
        raise EquationFormatError("equation document must be a mapping")
    for key in document:
        if key not in ("family", "coefficients"):
            raise UnexpectedKey(key)
    if "family" not in document:
        raise EquationFormatError("missing key 'family'")
    family = Family.from_tag(document["family"])
    coeffs = document.get("coefficients")
    if not isinstance(coeffs, Mapping):
        raise EquationFormatError("'coefficients' must be a table of expression strings")
    for name in family.coefficient_names:
        if name not in coeffs:
            raise MissingCoefficient(name)
    for name in coeffs:
        if name not in family.coefficient_names:
            raise UnexpectedKey(name)
    parsed = {}
    for name in family.coefficient_names:
        text = coeffs[name]
        if isinstance(text, bool) or not isinstance(text, (str, int, float)):
            raise EquationFormatError(f"coefficient '{name}' must be an expression string")
        parsed[name] = parse(str(text))
    return AbelEquation(family, parsed)


def render_equation(eq):
    """Canonical JSON text: family first, coefficients in family order, LF endings."""
    lines = ["{", f'  "family": {json.dumps(eq.family.value)},', '  "coefficients": {']
    names = eq.family.coefficient_names
    for i, name in enumerate(names):
        sep = "," if i < len(names) - 1 else ""
        lines.append(f"    {json.dumps(name)}: {json.dumps(eq.coefficients[name].render())}{sep}")
    lines += ["  }", "}"]
    return "\n".join(lines) + "\n"


# -- singular parametrizations -------------------------------------------------------

def expand_singular(eq):
    """Rewrite a K4S/K5S1/K5S2 equation in full-coefficient (K4/K5) form."""
    fam = eq.family
    if not fam.is_singular:
        raise WrongFamily(f"{fam.value} is not a singular family")
    c = eq.coefficients
    p, q = c["p"], c["q"]
    if fam is Family.K4S:
        new = {
            "a": p ** 4,
            "b": 4 * (p ** 3 * q),
            "c": 6 * (p ** 2 * q ** 2),
            "d": 4 * (p * q ** 3) + c["r"],
            "e": q ** 4 + c["s"],
        }
        return AbelEquation(Family.K4, new)
    d = 10 * (p ** 2 * q ** 3)
    if fam is Family.K5S1:
        d = d + c["r"]
    new = {
        "a": p ** 5,
        "b": 5 * (p ** 4 * q),
        "c": 10 * (p ** 3 * q ** 2),
        "d": d,
        "e": 5 * (p * q ** 4) + c["s"],
        "f": q ** 5 + c["t"],
    }
    return AbelEquation(Family.K5, new)


def expand_jets(family, jets):
    """Jet-level counterpart of :func:`expand_singular`."""
    if not family.is_singular:
        return dict(jets)
    p, q = jets["p"], jets["q"]
    if family is Family.K4S:
        return {
            "a": p ** 4,
            "b": 4.0 * p ** 3 * q,
            "c": 6.0 * p ** 2 * q ** 2,
            "d": 4.0 * p * q ** 3 + jets["r"],
            "e": q ** 4 + jets["s"],
        }
    d = 10.0 * p ** 2 * q ** 3
    if family is Family.K5S1:
        d = d + jets["r"]
    return {
        "a": p ** 5,
        "b": 5.0 * p ** 4 * q,
        "c": 10.0 * p ** 3 * q ** 2,
        "d": d,
        "e": 5.0 * p * q ** 4 + jets["s"],
        "f": q ** 5 + jets["t"],
    }


def coefficient_jets(eq, x0, order):
    return {name: e.jet(x0, order) for name, e in eq.coefficients.items()}


# -- classification ----------------------------------------------------------------

class OrbitTag(str, Enum):
    REGULAR = "Regular"
    SINGULAR_QUARTIC_I1_ZERO = "SingularQuarticI1Zero"
    SINGULAR_QUINTIC_K1_ZERO = "SingularQuinticK1Zero"
    SINGULAR_QUINTIC_K1K2_ZERO = "SingularQuinticK1K2Zero"
    DEGENERATE_LEADING = "DegenerateLeadingCoefficient"
    SINGULAR_CUBIC_S3_ZERO = "SingularCubicS3Zero"
    # vanishing of the denominator invariant inside a singular family
    SINGULAR_K4S_L1_ZERO = "SingularK4SL1Zero"
    SINGULAR_K5S2_M2_ZERO = "SingularK5S2M2Zero"


@dataclass(frozen=True)
class OrbitClass:
    tag: OrbitTag
    witness: dict = field(default_factory=dict)

    @property
    def regular(self):
        return self.tag is OrbitTag.REGULAR


def jet_scale(jets, order):
    """Sup-norm of the jet coordinates u^(i), i <= order, over all coefficients.

    Batched jets give one scale per column.
    """
    m = 0.0
    for j in jets.values():
        n = min(order, j.order)
        for i in range(n + 1):
            m = np.maximum(m, np.abs(math.factorial(i) * j.coeffs[i]))
    return float(m) if np.ndim(m) == 0 else m


def vanishes(value, degree, scale, tol=DEFAULT_TOL_ZERO):
    """Scaled vanishing test ``|Q| <= tol * (1 + scale)**degree`` (elementwise on arrays)."""
    return np.abs(value) <= tol * (1.0 + scale) ** degree


def classify(eq, x0, tol=DEFAULT_TOL_ZERO, jets=None):
    """Orbit type of the 2-jet of ``eq`` at ``x0``."""
    fam = eq.family
    if jets is None:
        jets = eq.coefficient_jets(x0, 2)
    return classify_jets(fam, jets, tol)


# relative invariant whose vanishing marks a singular orbit, per family
_ORBIT_TEST = {Family.K3: "s3", Family.K4: "I1", Family.K5: "K1",
               Family.K4S: "L1", Family.K5S2: "M2"}


def regular_mask(fam, jets, tol=DEFAULT_TOL_ZERO):
    """Elementwise orbit regularity for batched coefficient jets."""
    from . import invariants as inv

    jets = {k: j.truncate(min(2, j.order)) for k, j in jets.items()}
    order = min(j.order for j in jets.values())
    scale = jet_scale(jets, order)
    ok = np.ones(np.shape(scale), dtype=bool)
    with np.errstate(invalid="ignore"):
        for lead in fam.leading_names:
            ok &= ~vanishes(jets[lead].value, 1, scale, tol)
        name = _ORBIT_TEST.get(fam)
        if name is not None:
            value = inv.relative_jets(fam, jets, max_order=order)[name].value
            ok &= ~vanishes(value, inv.degree_of(fam, name), scale, tol)
    return ok & np.isfinite(scale)


def classify_jets(fam, jets, tol=DEFAULT_TOL_ZERO):
    from . import invariants as inv

    order = min(j.order for j in jets.values())
    scale = jet_scale(jets, min(order, 2))
    witness = {}

    def zero(name, value, degree):
        witness[name] = value
        return bool(vanishes(value, degree, scale, tol))

    for lead in fam.leading_names:
        if zero(lead, jets[lead].value, 1):
            return OrbitClass(OrbitTag.DEGENERATE_LEADING, witness)

    rel = inv.relative_jets(fam, jets, max_order=min(order, 2))

    def check(name):
        return zero(name, rel[name].value, inv.degree_of(fam, name))

    if fam is Family.K3:
        tag = OrbitTag.SINGULAR_CUBIC_S3_ZERO if check("s3") else OrbitTag.REGULAR
    elif fam is Family.K4:
        tag = OrbitTag.SINGULAR_QUARTIC_I1_ZERO if check("I1") else OrbitTag.REGULAR
    elif fam is Family.K5:
        if check("K1"):
            tag = (OrbitTag.SINGULAR_QUINTIC_K1K2_ZERO if check("K2")
                   else OrbitTag.SINGULAR_QUINTIC_K1_ZERO)
        else:
            tag = OrbitTag.REGULAR
    elif fam is Family.K4S:
        tag = OrbitTag.SINGULAR_K4S_L1_ZERO if check("L1") else OrbitTag.REGULAR
    elif fam is Family.K5S2:
        tag = OrbitTag.SINGULAR_K5S2_M2_ZERO if check("M2") else OrbitTag.REGULAR
    else:
        tag = OrbitTag.REGULAR
    return OrbitClass(tag, witness)
