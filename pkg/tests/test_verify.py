import math

from abel_equiv import verify
from abel_equiv.model import AbelEquation


def test_small_run_passes_and_is_reproducible():
    suites = ["worked_example", "group_laws", "canonical_closure"]
    first = verify.run_all(seed=7, trials=6, suites=suites)
    assert first == verify.run_all(seed=7, trials=6, suites=suites)
    assert first["passed"]


def test_informational_results_do_not_gate():
    report = verify.run_all(seed=1, trials=8, suites=["syzygy"])
    alternate = [r for r in report["results"] if r["name"] == "syzygy.alternate_form"][0]
    assert alternate["informational"] and math.isinf(alternate["tolerance"])
    assert report["passed"]


def test_worked_example_values():
    results = {r.name: r for r in verify.worked_example()}
    assert results["worked_example.values"].passed
    assert results["worked_example.nabla_J1"].worst <= 1e-9


def test_run_equation_counts_skipped_points():
    eq = AbelEquation.from_strings("k3", a="1", b="0", c="0", d="x")
    report = verify.run_equation(eq, seed=0, trials=15)
    (result,) = report["results"]
    assert result["trials"] == 15 and report["passed"]
