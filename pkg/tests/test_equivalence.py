import numpy as np
import pytest

from abel_equiv.equivalence import Verdict, curves_match, decide_equivalence, regularity, signature
from abel_equiv.errors import FamilyMismatch
from abel_equiv.model import AbelEquation, Family
from abel_equiv.sampling import random_equation, random_transformation
from abel_equiv.transform import PointTransformation, TransformedEquation, apply

WORKED = AbelEquation.from_strings("k3", a="1", b="0", c="0", d="x")
SQUARE = AbelEquation.from_strings("k3", a="1", b="0", c="0", d="x^2")
CONST = AbelEquation.from_strings("k3", a="1", b="0", c="0", d="1")
CUBE = AbelEquation.from_strings("k3", a="1", b="0", c="0", d="0")


def test_signature_of_worked_example():
    S = signature(WORKED, 1.0, 2.0, 64)
    assert S.components == ("J1", "nabla_J1") and len(S) == 64
    assert S.defined.all()
    assert np.allclose(S.values[:, 0], 1 / (9 * S.x ** 5), rtol=1e-12)


def test_signature_of_constant_equation_is_a_point():
    S = signature(AbelEquation.from_strings("k3", a="2", b="0", c="1", d="1"), 0.0, 1.0, 16)
    assert np.ptp(S.values, axis=0) == pytest.approx([0.0, 0.0], abs=1e-14)


def test_signature_masks_singular_crossing():
    S = signature(WORKED, -0.5, 0.5, 33)
    assert not S.defined[16] and S.defined[0] and S.defined[-1]


def test_signature_csv():
    text = signature(WORKED, 1.0, 2.0, 8).to_csv()
    lines = text.splitlines()
    assert lines[0] == "x,J1,nabla_J1,defined" and len(lines) == 9
    assert lines[1].startswith("1,") and lines[1].endswith(",true")
    masked = signature(WORKED, -0.5, 0.5, 9).to_csv().splitlines()[5]
    assert masked == "0,,,false"


def test_regularity():
    rep = regularity(WORKED, 1.0)
    assert rep.regular and rep.coordinate == "J1"
    assert not regularity(CONST, 0.0).regular
    assert not regularity(CUBE, 0.0).regular


def test_same_curve_matches_exactly():
    S = signature(WORKED, 1.0, 2.0, 64)
    v = curves_match(S, S)
    assert v.verdict is Verdict.EQUIVALENT and v.max_deviation == 0.0


def test_transformed_curve_matches():
    T = PointTransformation.from_strings("x^3+x", "1+x^2", "sin(x)")
    S1 = signature(WORKED, 1.0, 1.5, 128)
    S2 = signature(TransformedEquation(WORKED, T, 1.0), 2.0, 1.5 ** 3 + 1.5, 128)
    assert curves_match(S1, S2).verdict is Verdict.EQUIVALENT


def test_different_equations_differ():
    S1 = signature(WORKED, 0.5, 1.5, 128)
    S2 = signature(SQUARE, 0.5, 1.5, 128)
    assert curves_match(S1, S2).verdict is Verdict.NOT_EQUIVALENT


def test_disjoint_parameter_ranges_are_inconclusive():
    v = curves_match(signature(WORKED, 1.0, 1.2, 64), signature(WORKED, 3.0, 4.0, 64))
    assert v.verdict is Verdict.INCONCLUSIVE and "disjoint" in v.reason


def test_decide_transformed_random_pairs():
    rng = np.random.default_rng(4)
    done = 0
    while done < 6:
        fam = (Family.K3, Family.K4, Family.K5)[done % 3]
        eq = random_equation(rng, fam)
        T = random_transformation(rng, family=fam)
        x0 = float(rng.uniform(-0.3, 0.3))
        if not regularity(eq, x0).regular:
            continue
        X, _ = apply(T, eq, x0, 1)
        v = decide_equivalence(eq, x0, TransformedEquation(eq, T, x0), X, radius=0.2)
        assert v.verdict is Verdict.EQUIVALENT, v.reason
        done += 1


def test_decide_examples():
    assert decide_equivalence(WORKED, 1.0, SQUARE, 1.0).verdict is Verdict.NOT_EQUIVALENT
    v = decide_equivalence(CONST, 0.0, AbelEquation.from_strings("k3", a="2", b="0", c="1", d="1"), 0.0)
    assert v.verdict is Verdict.INCONCLUSIVE


def test_singular_cubic_class():
    other = AbelEquation.from_strings("k3", a="1+x^2", b="0", c="0", d="0")
    v = decide_equivalence(CUBE, 0.0, other, 0.3)
    assert v.verdict is Verdict.EQUIVALENT and "s3=0" in v.reason


def test_strata_must_agree():
    regular = AbelEquation.from_strings("k4", a="1", b="0", c="1", d="x", e="0")
    stratum = AbelEquation.from_strings("k4", a="1", b="2", c="3/2", d="x", e="0")
    assert decide_equivalence(regular, 0.5, stratum, 0.5).verdict is Verdict.NOT_EQUIVALENT


def test_family_mismatch():
    k4 = AbelEquation.from_strings("k4", a="1", b="0", c="1", d="x", e="0")
    with pytest.raises(FamilyMismatch):
        decide_equivalence(WORKED, 1.0, k4, 1.0)


def test_verdict_exit_codes():
    assert [v.exit_code for v in Verdict] == [0, 1, 2]
