import numpy as np
import pytest

from abel_equiv.errors import EquationFormatError, MissingCoefficient, UnexpectedKey, UnknownFamily, WrongFamily
from abel_equiv.model import (
    AbelEquation,
    Family,
    OrbitTag,
    classify,
    expand_singular,
    load_equation,
    render_equation,
)


def test_from_strings_and_file_format():
    eq = load_equation({"family": "k3", "coefficients": {"a": "1", "b": "0", "c": "0", "d": "x"}})
    assert eq.family is Family.K3 and eq["d"](2.0) == 2.0
    eq = load_equation('{"family": "k4s", "coefficients": {"p": "1", "q": "0", "r": "x", "s": "0"}}')
    assert eq.family is Family.K4S
    assert load_equation(render_equation(eq)) == eq


def test_format_errors():
    with pytest.raises(MissingCoefficient):
        load_equation({"family": "k3", "coefficients": {"a": "1", "b": "0"}})
    with pytest.raises(UnexpectedKey):
        load_equation({"family": "k3", "coefficients": {"a": "1", "b": "0", "c": "0", "d": "0", "z": "1"}})
    with pytest.raises(UnknownFamily):
        load_equation({"family": "k7", "coefficients": {}})
    with pytest.raises(EquationFormatError):
        load_equation("{not json")


def test_expand_singular_binomial():
    eq = AbelEquation.from_strings("k4s", p="1", q="1", r="x", s="2")
    full = expand_singular(eq)
    assert full.family is Family.K4
    vals = {n: full[n](0.5) for n in "abcde"}
    assert vals == pytest.approx({"a": 1, "b": 4, "c": 6, "d": 4.5, "e": 3})
    with pytest.raises(WrongFamily):
        expand_singular(AbelEquation.from_strings("k3", a="1", b="0", c="0", d="x"))


def test_expanded_k4s_lies_on_quartic_stratum():
    eq = AbelEquation.from_strings("k4s", p="1+x^2", q="sin(x)", r="x", s="3")
    full = expand_singular(eq)
    for x in np.linspace(-1, 1, 7):
        a, b, c = full["a"](x), full["b"](x), full["c"](x)
        assert 8 * a * c - 3 * b * b == pytest.approx(0.0, abs=1e-10 * (1 + abs(b)) ** 2)


def test_coefficient_jets_examples():
    eq = AbelEquation.from_strings("k3", a="1", b="0", c="0", d="x")
    jets = eq.coefficient_jets(2.0, 1)
    assert np.allclose(jets["d"].coeffs, [2, 1]) and np.allclose(jets["a"].coeffs, [1, 0])
    eq = AbelEquation.from_strings("k4", a="1", b="0", c="sin(x)", d="0", e="0")
    assert np.allclose(eq.coefficient_jets(0.0, 3)["c"].coeffs, [0, 1, 0, -1 / 6])


@pytest.mark.parametrize("family, coeffs, tag", [
    ("k3", dict(a="1", b="0", c="0", d="0"), OrbitTag.SINGULAR_CUBIC_S3_ZERO),
    ("k3", dict(a="1", b="0", c="0", d="x"), OrbitTag.REGULAR),
    ("k4", dict(a="1", b="0", c="1", d="0", e="0"), OrbitTag.REGULAR),
    ("k4", dict(a="1", b="2", c="3/2", d="0", e="0"), OrbitTag.SINGULAR_QUARTIC_I1_ZERO),
])
def test_classify_examples(family, coeffs, tag):
    eq = AbelEquation.from_strings(family, **coeffs)
    at = 0.0 if coeffs.get("d") == "0" and family == "k3" else 1.0
    assert classify(eq, at).tag is tag
