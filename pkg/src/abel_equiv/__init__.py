"""Differential invariants and local equivalence of Abel-type ODEs.

Equations ``y' = sum_i a_i(x) y^i`` of degree 3 to 5 (and their singular
normal forms) are studied under point transformations
``x -> f(x), y -> g(x) y + h(x)``.
"""

from .equivalence import (
    EquivalenceVerdict,
    SignatureCurve,
    Verdict,
    curves_match,
    decide_equivalence,
    regularity,
    signature,
)
from .errors import AbelEquivError
from .invariants import absolute_invariants, derivation_coefficient, nabla_jet, relative_invariants
from .jet import Jet
from .model import AbelEquation, Family, OrbitTag, classify, load_equation, render_equation
from .transform import PointTransformation, apply, compose, invert, transform_equation

__version__ = "0.1.0"

__all__ = [
    "AbelEquation",
    "AbelEquivError",
    "EquivalenceVerdict",
    "Family",
    "Jet",
    "OrbitTag",
    "PointTransformation",
    "SignatureCurve",
    "Verdict",
    "absolute_invariants",
    "apply",
    "classify",
    "compose",
    "curves_match",
    "decide_equivalence",
    "derivation_coefficient",
    "invert",
    "load_equation",
    "nabla_jet",
    "regularity",
    "relative_invariants",
    "render_equation",
    "signature",
    "transform_equation",
]
