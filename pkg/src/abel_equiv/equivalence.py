"""Signature curves and the local equivalence decision.

An equation is sampled into invariant space along a grid; two equations are
declared equivalent when their curves coincide on a common arc.  Arcs are
parametrized by one signature component and compared in the others.

Every sample keeps a short Taylor expansion (in x) of each component.
Reverting the expansion of the parametrizing component and composing the
others with it gives each component as a local power series in the
parameter, so curves are compared at common parameter values without
interpolation error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import invariants as inv
from .errors import AbelEquivError, FamilyMismatch
from .jet import Jet, compose, revert
from .model import DEFAULT_TOL_ZERO, Family, classify_jets, jet_scale, regular_mask, vanishes

__all__ = [
    "Verdict",
    "EquivalenceVerdict",
    "SignatureCurve",
    "RegularityReport",
    "signature",
    "regularity",
    "curves_match",
    "decide_equivalence",
    "DEFAULT_RADIUS",
    "DEFAULT_SAMPLES",
    "DEFAULT_TOL_MATCH",
    "DEFAULT_MIN_OVERLAP",
]

DEFAULT_RADIUS = 0.5
DEFAULT_SAMPLES = 128
DEFAULT_TOL_MATCH = 1e-5
DEFAULT_MIN_OVERLAP = 0.5
DEFAULT_TOL_REGULAR = 1e-8

# order of the per-sample expansions
SERIES_ORDER = 8
# components whose score is within this fraction of the best count as tied
_TIE = 0.05
# allowed truncation error of the local series, as a fraction of tol_match
_TRUNCATION_SHARE = 0.1
_MATCH_GRID = 200


class Verdict(str, Enum):
    EQUIVALENT = "Equivalent"
    NOT_EQUIVALENT = "NotEquivalent"
    INCONCLUSIVE = "Inconclusive"

    @property
    def exit_code(self):
        return {"Equivalent": 0, "NotEquivalent": 1, "Inconclusive": 2}[self.value]


@dataclass(frozen=True)
class EquivalenceVerdict:
    verdict: Verdict
    reason: str
    overlap_fraction: float = 0.0
    max_deviation: float = math.nan

    def as_dict(self):
        return {
            "verdict": self.verdict.value,
            "reason": self.reason,
            "overlap_fraction": self.overlap_fraction,
            "max_deviation": None if math.isnan(self.max_deviation) else self.max_deviation,
        }


@dataclass(frozen=True)
class SignatureCurve:
    """Samples of the signature map.

    ``series[i, c]`` holds the Taylor coefficients in x of component c at
    sample i (``values`` and ``slopes`` are its first two columns).
    """

    family: Family
    components: tuple
    x: np.ndarray
    series: np.ndarray
    defined: np.ndarray

    def __post_init__(self):
        if len(self.components) != self.family.signature_dimension:
            raise ValueError("component count does not match the family")
        if np.any(np.diff(self.x) <= 0):
            raise ValueError("sample points must increase strictly")

    @property
    def values(self):
        return self.series[:, :, 0]

    @property
    def slopes(self):
        return self.series[:, :, 1]

    def __len__(self):
        return self.x.size

    def to_csv(self):
        header = ",".join(("x",) + self.components + ("defined",))
        lines = [header]
        for x, row, ok in zip(self.x, self.values, self.defined):
            cells = [_fmt(x)] + [_fmt(v) if ok else "" for v in row] + [str(bool(ok)).lower()]
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"


def _fmt(v):
    return format(float(v), ".17g")


# -- sampling -----------------------------------------------------------------------

def _signature_order(family, extra):
    refs = inv.signature_components(family)
    return max(inv.required_order(family, *inv.parse_ref(r)) for r in refs) + extra


def sample_grid(eq, xs, tol=DEFAULT_TOL_ZERO, series_order=SERIES_ORDER):
    """(series, defined) of the signature components on the points ``xs``.

    ``eq`` is anything with ``family`` and ``coefficient_jets(x, order)``
    accepting an array of points.
    """
    fam = eq.family
    refs = inv.signature_components(fam)
    xs = np.asarray(xs, dtype=float)
    with np.errstate(all="ignore"):
        jets = eq.coefficient_jets(xs, _signature_order(fam, series_order))
        ok = regular_mask(fam, jets, tol)
        comps, defined = inv.batch_refs(fam, jets, refs, tol)
    series = np.stack([comps[r].truncate(series_order).coeffs.T for r in refs], axis=1)
    ok = ok & defined & np.all(np.isfinite(series), axis=(1, 2))
    series = np.where(ok[:, None, None], series, np.nan)
    return series, ok


def signature(eq, x_from, x_to, n_samples=DEFAULT_SAMPLES, tol=DEFAULT_TOL_ZERO):
    """Sample the signature map on a uniform grid; failures are masked, not raised."""
    if not x_from < x_to:
        raise ValueError("need x_from < x_to")
    if n_samples < 8:
        raise ValueError("need at least 8 samples")
    xs = np.linspace(x_from, x_to, n_samples)
    series, ok = sample_grid(eq, xs, tol)
    return SignatureCurve(eq.family, inv.signature_components(eq.family), xs, series, ok)


# -- regularity -----------------------------------------------------------------------

@dataclass(frozen=True)
class RegularityReport:
    orbit_regular: bool
    orbit_tag: str
    defined: bool
    nabla: dict = field(default_factory=dict)
    coordinate: str | None = None

    @property
    def regular(self):
        return self.orbit_regular and self.defined and self.coordinate is not None


def _bump(ref):
    """(name, k + 1) for a component nabla^k name."""
    name, k = inv.parse_ref(ref)
    return name, k + 1


def regularity(eq, x0, tol=DEFAULT_TOL_ZERO, tol_regular=DEFAULT_TOL_REGULAR):
    """Orbit regularity plus the local-coordinate condition at ``x0``.

    ``nabla`` maps every signature component c to nabla(c) at x0; a component
    qualifies as coordinate when |nabla c| > tol_regular * (1 + |c|).  The
    first qualifying component (in signature order) is reported.
    """
    fam = eq.family
    refs = inv.signature_components(fam)
    order = max(inv.required_order(fam, *_bump(r)) for r in refs)
    jets = eq.coefficient_jets(x0, order)
    orbit = classify_jets(fam, {k: j.truncate(2) for k, j in jets.items()}, tol)
    if not orbit.regular:
        return RegularityReport(False, orbit.tag.value, False)
    ctx = inv._Ctx(fam, jets)
    nabla, best = {}, None
    try:
        for r in refs:
            name, k = _bump(r)
            value = inv.nabla_jet(fam, jets, name, k - 1, tol, ctx).value
            d = inv.nabla_jet(fam, jets, name, k, tol, ctx).value
            nabla[r] = d
            if best is None and abs(d) > tol_regular * (1.0 + abs(value)):
                best = r
    except (inv.Undefined, AbelEquivError, ArithmeticError):
        return RegularityReport(True, orbit.tag.value, False, nabla)
    return RegularityReport(True, orbit.tag.value, True, nabla, best)


# -- matching -------------------------------------------------------------------------

@dataclass(frozen=True)
class _Segment:
    """A monotone arc: parameter values and local series of the other components.

    ``local[i, c]`` are the coefficients of component c as a power series in
    (p - p[i]).
    """

    p: np.ndarray
    local: np.ndarray
    rows: np.ndarray

    @property
    def lo(self):
        return float(self.p.min())

    @property
    def hi(self):
        return float(self.p.max())

    def evaluate(self, grid):
        order = np.argsort(self.p)
        ps = self.p[order]
        idx = np.clip(np.searchsorted(ps, grid), 1, ps.size - 1)
        left, right = ps[idx - 1], ps[idx]
        nearest = np.where(grid - left <= right - grid, idx - 1, idx)
        k = order[nearest]
        s = grid - self.p[k]
        coeffs = self.local[k]                      # (G, C, m+1)
        acc = coeffs[:, :, -1]
        for i in range(coeffs.shape[2] - 2, -1, -1):
            acc = acc * s[:, None] + coeffs[:, :, i]
        return acc                                  # (G, C)


def _reparametrize(curve, param):
    """Series of the non-parameter components in powers of (p - p_i), every sample."""
    p_jet = Jet(curve.series[:, param, :].T, curve.x)
    inverse = revert(p_jet)
    others = [c for c in range(len(curve.components)) if c != param]
    # each component is expanded at x_i and inverse(p_i) = x_i
    local = [compose(Jet(curve.series[:, c, :].T, curve.x), inverse).coeffs.T for c in others]
    if not local:
        return np.zeros((len(curve), 0, p_jet.order + 1))
    return np.stack(local, axis=1)


def _segments(curve, param, budget):
    """Maximal runs of samples on which component ``param`` is strictly monotone.

    A sample is kept only when its local series, evaluated half-way to the
    neighbouring parameter values, has leading truncation terms below
    ``budget`` (relative to max(1, |value|)); this drops neighbourhoods of
    turning points, where the reverted series stops converging.
    """
    dp = curve.slopes[:, param]
    ok = curve.defined & np.isfinite(dp) & (dp != 0.0)
    if np.count_nonzero(ok) < 2:
        return []
    with np.errstate(all="ignore"):
        local = _reparametrize(curve, param)
        p = np.where(ok, curve.values[:, param], np.nan)
        gaps = np.abs(np.diff(p))
        reach = 0.5 * np.fmax(np.concatenate(([np.nan], gaps)),
                              np.concatenate((gaps, [np.nan])))
        tail = np.abs(local[:, :, -1]) * reach[:, None] ** (local.shape[2] - 1)
        others = np.delete(curve.values, param, axis=1)
        error = np.max(tail / np.fmax(1.0, np.abs(others)), axis=1, initial=0.0)
    ok &= np.isfinite(reach) & (error <= budget) & np.all(np.isfinite(local), axis=(1, 2))
    sign = np.sign(np.where(ok, dp, 0.0))
    segs, start = [], None
    for i in range(len(curve) + 1):
        if i < len(curve) and ok[i] and start is not None and sign[i] == sign[start]:
            continue
        if start is not None and i - start >= 2:
            segs.append(_Segment(p[start:i], local[start:i], np.arange(start, i)))
        start = i if i < len(curve) and ok[i] else None
    return segs


def _choose_parameter(c1, c2):
    """Index of the component with the largest scaled spread on both curves."""
    scores = []
    for i in range(len(c1.components)):
        spread = []
        for c in (c1, c2):
            v = c.values[c.defined, i]
            v = v[np.isfinite(v)]
            if v.size < 2:
                spread.append(0.0)
                continue
            spread.append(float(v.max() - v.min()) / max(1.0, float(np.max(np.abs(v)))))
        scores.append(min(spread))
    best = max(scores)
    if best <= 0.0:
        return None
    return next(i for i, s in enumerate(scores) if s >= (1.0 - _TIE) * best)


def _compare(s1, s2):
    """Rows of each segment inside the common parameter range, and the
    scaled sup-deviation of the other components there."""
    lo, hi = max(s1.lo, s2.lo), min(s1.hi, s2.hi)
    if hi <= lo:
        return None
    rows1 = s1.rows[(s1.p >= lo) & (s1.p <= hi)]
    rows2 = s2.rows[(s2.p >= lo) & (s2.p <= hi)]
    if s1.local.shape[1] == 0:
        return rows1, rows2, 0.0
    grid = np.linspace(lo, hi, _MATCH_GRID)
    v1, v2 = s1.evaluate(grid), s2.evaluate(grid)
    diff = np.abs(v1 - v2) / np.maximum(1.0, np.maximum(np.abs(v1), np.abs(v2)))
    return rows1, rows2, float(np.max(diff))


class _Coverage:
    """Samples of both curves covered by a class of segment pairs."""

    def __init__(self, n1, n2, segs1, segs2):
        self.hit1 = np.zeros(n1, dtype=bool)
        self.hit2 = np.zeros(n2, dtype=bool)
        self.total1 = sum(len(s.p) for s in segs1)
        self.total2 = sum(len(s.p) for s in segs2)
        self.deviations = []

    def add(self, rows1, rows2, dev):
        self.hit1[rows1] = True
        self.hit2[rows2] = True
        self.deviations.append(dev)

    @property
    def fraction(self):
        # the shorter curve is the one more fully covered
        return max(np.count_nonzero(self.hit1) / self.total1,
                   np.count_nonzero(self.hit2) / self.total2)


def curves_match(S1, S2, tol_rel=DEFAULT_TOL_MATCH, min_overlap=DEFAULT_MIN_OVERLAP):
    """Compare two signature curves of the same family on their common arcs."""
    if S1.family is not S2.family:
        raise FamilyMismatch(f"cannot compare {S1.family.value} with {S2.family.value}")
    for S, label in ((S1, "first"), (S2, "second")):
        if np.count_nonzero(S.defined) < 2:
            return EquivalenceVerdict(Verdict.INCONCLUSIVE,
                                      f"{label} curve is masked almost everywhere")
    param = _choose_parameter(S1, S2)
    if param is None:
        return EquivalenceVerdict(Verdict.INCONCLUSIVE,
                                  "no component varies on both curves (degenerate signature)")
    name = S1.components[param]
    budget = _TRUNCATION_SHARE * tol_rel
    segs1, segs2 = _segments(S1, param, budget), _segments(S2, param, budget)
    if not segs1 or not segs2:
        return EquivalenceVerdict(Verdict.INCONCLUSIVE, f"no monotone segment in {name}")

    # The samples covered by agreeing (or differing) pairs are pooled, so a curve folded into several monotone branches can match
    # branch by branch.  Arcs below a quarter of min_overlap where different
    # curves happen to touch neither prove nor block NotEquivalent.
    agree = _Coverage(len(S1), len(S2), segs1, segs2)
    close = _Coverage(len(S1), len(S2), segs1, segs2)
    differ = _Coverage(len(S1), len(S2), segs1, segs2)
    for a in segs1:
        for b in segs2:
            found = _compare(a, b)
            if found is None:
                continue
            rows1, rows2, dev = found
            if dev <= tol_rel:
                agree.add(rows1, rows2, dev)
            if dev <= 10.0 * tol_rel:
                close.add(rows1, rows2, dev)
            else:
                differ.add(rows1, rows2, dev)
    if agree.fraction >= min_overlap:
        return EquivalenceVerdict(Verdict.EQUIVALENT,
                                  f"signature curves agree (parametrized by {name})",
                                  min(1.0, agree.fraction), max(agree.deviations))
    if not (agree.deviations or close.deviations or differ.deviations):
        return EquivalenceVerdict(Verdict.INCONCLUSIVE,
                                  f"parameter ranges of {name} are disjoint")
    if differ.fraction >= min_overlap and close.fraction < 0.25 * min_overlap:
        return EquivalenceVerdict(Verdict.NOT_EQUIVALENT,
                                  f"signature curves differ (parametrized by {name})",
                                  min(1.0, differ.fraction), min(differ.deviations))
    if close.fraction >= 0.25 * min_overlap:
        return EquivalenceVerdict(Verdict.INCONCLUSIVE,
                                  f"curves agree within 10*tol on {close.fraction:.2f} of the "
                                  f"samples, short of {min_overlap:g}", close.fraction)
    return EquivalenceVerdict(Verdict.INCONCLUSIVE,
                              f"overlap in {name} covers less than {min_overlap:g} of the curves",
                              max(close.fraction, differ.fraction))


# -- decision pipeline ----------------------------------------------------------------

# relative invariants whose identical vanishing defines a stratum, per expanded family
_STRATA = {Family.K3: ("s3",), Family.K4: ("I1",), Family.K5: ("K1", "K2")}
# fully singular classes inside a family
_SINGULAR_CLASS = {
    Family.K3: ("s3", "singular class s3=0"),
    Family.K4S: ("L1", "singular class L1=0 (equivalent to Y'=Y^4)"),
    Family.K5S2: ("M2", "singular class M2=0 (R3=0)"),
}
_PROBES = 9


def _vanishing_everywhere(eq, names, family, points, tol, expand):
    """For every name: does the relative invariant vanish at all probe points?"""
    from .model import expand_jets

    order = max(max(inv.order_of(family, n) for n in names), 1)
    with np.errstate(all="ignore"):
        jets = eq.coefficient_jets(points, order)
        if expand:
            jets = expand_jets(eq.family, jets)
        rel = inv.relative_jets(family, jets)
        out = []
        for n in names:
            scale = jet_scale(jets, inv.order_of(family, n))
            out.append(bool(np.all(vanishes(rel[n].value, inv.degree_of(family, n), scale, tol))))
    return tuple(out)


def _probes(x0, radius):
    return np.linspace(x0 - radius, x0 + radius, _PROBES)


def stratum(eq, x0, radius=DEFAULT_RADIUS, tol=DEFAULT_TOL_ZERO):
    """Which stratum-defining relative invariants vanish identically near ``x0``."""
    full = eq.family.expanded
    return _vanishing_everywhere(eq, _STRATA[full], full, _probes(x0, radius), tol,
                                 eq.family.is_singular)


def singular_class(eq, x0, radius=DEFAULT_RADIUS, tol=DEFAULT_TOL_ZERO):
    """Label of the fully singular class containing ``eq`` near ``x0``, if any."""
    found = _SINGULAR_CLASS.get(eq.family)
    if found is None:
        return None
    name, label = found
    hit = _vanishing_everywhere(eq, (name,), eq.family, _probes(x0, radius), tol, False)
    return label if hit[0] else None


def decide_equivalence(eq1, x1, eq2, x2, radius=DEFAULT_RADIUS, n_samples=DEFAULT_SAMPLES,
                       tol_match=DEFAULT_TOL_MATCH, tol_zero=DEFAULT_TOL_ZERO,
                       min_overlap=DEFAULT_MIN_OVERLAP):
    """Local equivalence of ``eq1`` near ``x1`` and ``eq2`` near ``x2``.

    Either argument may be any object with ``family`` and
    ``coefficient_jets(x, order)``.
    """
    f1, f2 = eq1.family, eq2.family
    if f1.degree != f2.degree:
        raise FamilyMismatch(f"degrees differ: {f1.value} vs {f2.value}")

    if stratum(eq1, x1, radius, tol_zero) != stratum(eq2, x2, radius, tol_zero):
        return EquivalenceVerdict(Verdict.NOT_EQUIVALENT,
                                  "vanishing loci of relative invariants differ")
    if f1 is not f2:
        return EquivalenceVerdict(Verdict.INCONCLUSIVE,
                                  f"same singular stratum but stated as {f1.value} and {f2.value}")
    if f1 in (Family.K4, Family.K5) and any(stratum(eq1, x1, radius, tol_zero)):
        return EquivalenceVerdict(Verdict.INCONCLUSIVE,
                                  f"singular stratum of {f1.value}; restate in a singular family")

    c1 = singular_class(eq1, x1, radius, tol_zero)
    c2 = singular_class(eq2, x2, radius, tol_zero)
    if c1 and c2:
        return EquivalenceVerdict(Verdict.EQUIVALENT, c1, 1.0, 0.0)
    if c1 or c2:
        return EquivalenceVerdict(Verdict.NOT_EQUIVALENT,
                                  f"only one equation is in the {c1 or c2}")

    for eq, x, label in ((eq1, x1, "first"), (eq2, x2, "second")):
        try:
            report = regularity(eq, x, tol_zero)
        except (AbelEquivError, ArithmeticError, ValueError) as exc:
            return EquivalenceVerdict(Verdict.INCONCLUSIVE, f"{label} equation: {exc}")
        if not report.regular:
            why = ("orbit " + report.orbit_tag if not report.orbit_regular
                   else "invariants undefined" if not report.defined
                   else "no signature component is a local coordinate")
            return EquivalenceVerdict(Verdict.INCONCLUSIVE,
                                      f"{label} equation not regular at {x}: {why}")

    S1 = signature(eq1, x1 - radius, x1 + radius, n_samples, tol_zero)
    S2 = signature(eq2, x2 - radius, x2 + radius, n_samples, tol_zero)
    return curves_match(S1, S2, tol_match, min_overlap)
