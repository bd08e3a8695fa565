"""Acceptance criteria, one PASS/FAIL line each.

The full seeded report (``verify --seed 42``, 200 trials) is produced once
through the command line and shared by the criteria; criterion 10 runs it a
second time and compares the bytes.  Run ``python3 tests/test_acceptance.py``
for the summary lines alone.
"""

import json
import subprocess
import sys
import time

import pytest

from abel_equiv import verify

SEED = 42
TRIALS = 200
FULL_BUDGET_S = 120.0
INVARIANCE_BUDGET_S = 30.0


def run_report():
    cmd = [sys.executable, "-m", "abel_equiv", "verify", "--seed", str(SEED), "--trials", str(TRIALS)]
    start = time.perf_counter()
    proc = subprocess.run(cmd, capture_output=True, check=False)
    elapsed = time.perf_counter() - start
    if proc.returncode not in (0, 1):
        raise RuntimeError(proc.stderr.decode())
    return {"bytes": proc.stdout, "elapsed": elapsed, "exit": proc.returncode,
            "data": json.loads(proc.stdout)}


def entries(report, prefix):
    found = [r for r in report["data"]["results"] if r["name"].startswith(prefix)]
    if not found:
        raise KeyError(f"no results named {prefix}*")
    return found


def judge(results, min_trials=0):
    """(passed, summary) over non-informational results."""
    graded = [r for r in results if not r["informational"]]
    failed = [f"{r['name']} (worst={r['worst']:.3g}, tol={r['tolerance']:.3g}, trials={r['trials']})"
              for r in graded if not r["passed"] or r["trials"] < min_trials]
    ratio = max(r["worst"] / r["tolerance"] if r["tolerance"] > 0
                else (0.0 if r["worst"] == 0 else float("inf")) for r in graded)
    trials = min(r["trials"] for r in graded)
    text = f"worst/tol={ratio:.2g} min_trials={trials}"
    if failed:
        text += " failing: " + ", ".join(failed)
    return not failed, text


def criterion_1(report):
    start = time.perf_counter()
    direct = verify.absolute_invariance(seed=SEED, trials=TRIALS)
    elapsed = time.perf_counter() - start
    ok, text = judge(entries(report, "absolute_invariance"), TRIALS)
    same = [r.as_dict() for r in direct] == entries(report, "absolute_invariance")
    ok = ok and same and elapsed < INVARIANCE_BUDGET_S
    return ok, f"{text} runtime={elapsed:.1f}s (< {INVARIANCE_BUDGET_S:.0f}s) reproducible={same}"


def criterion_2(report):
    return judge(entries(report, "relative_weights"))


def criterion_3(report):
    ok, text = judge(entries(report, "worked_example"))
    d = entries(report, "worked_example.nabla_J1")[0]["details"]
    return ok, f"{text} nabla_J1={d['value']:.12g} fd={d['finite_difference']:.12g}"


def criterion_4(report):
    ok, text = judge(entries(report, "syzygy"), 100)
    alternate = entries(report, "syzygy.alternate_form")[0]
    return ok, f"{text} alternate-form median residual={alternate['details']['median_residual']:.3g} (informational)"


def criterion_5(report):
    return judge(entries(report, "infinitesimal_invariance"), 100)


def criterion_6(report):
    return judge(entries(report, "group_laws"), TRIALS)


def criterion_7(report):
    return judge(entries(report, "singular_embeddings"), 100)


def criterion_8(report):
    pairs = entries(report, "equivalence.transformed_pairs") + entries(report, "equivalence.perturbed_pairs")
    ok_pairs, text = judge(pairs, TRIALS)
    ok_classes, class_text = judge(entries(report, "equivalence.singular_classes"))
    tally = " ".join(f"{r['name'].split('.')[1]}={r['details']['equivalent']}E/"
                     f"{r['details']['notequivalent']}N/{r['details']['inconclusive']}I" for r in pairs)
    return ok_pairs and ok_classes, f"{text} {tally} singular classes: {class_text}"


def criterion_9(report):
    return judge(entries(report, "canonical_closure"), 100)


def criterion_10(report):
    again = run_report()
    same = again["bytes"] == report["bytes"]
    slowest = max(report["elapsed"], again["elapsed"])
    return same and slowest < FULL_BUDGET_S, f"byte_identical={same} runtime={slowest:.1f}s (< {FULL_BUDGET_S:.0f}s)"


CRITERIA = {
    1: ("absolute invariance of J and nabla J", criterion_1),
    2: ("relative-invariant weights", criterion_2),
    3: ("worked closed-form case", criterion_3),
    4: ("derived syzygy", criterion_4),
    5: ("infinitesimal invariance", criterion_5),
    6: ("group laws", criterion_6),
    7: ("singular embeddings and vanishing loci", criterion_7),
    8: ("equivalence decision soundness", criterion_8),
    9: ("canonical-form closure", criterion_9),
    10: ("end-to-end determinism and runtime", criterion_10),
}


def line(number, passed, text):
    title = CRITERIA[number][0]
    return f"{'PASS' if passed else 'FAIL'} criterion {number:2d} {title}: {text}"


@pytest.fixture(scope="module")
def report():
    return run_report()


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, report, capsys):
    passed, text = CRITERIA[number][1](report)
    with capsys.disabled():
        print("\n" + line(number, passed, text))
    assert passed, text


if __name__ == "__main__":
    shared = run_report()
    outcome = [CRITERIA[n][1](shared) for n in sorted(CRITERIA)]
    for n, (passed, text) in zip(sorted(CRITERIA), outcome):
        print(line(n, passed, text))
    sys.exit(0 if all(p for p, _ in outcome) else 1)
