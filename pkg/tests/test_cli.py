import json
import subprocess
import sys

import pytest

from abel_equiv.cli import dumps, main

CUBIC = {"family": "k3", "coefficients": {"a": "1", "b": "0", "c": "0", "d": "x"}}
SQUARE = {"family": "k3", "coefficients": {"a": "1", "b": "0", "c": "0", "d": "x^2"}}


@pytest.fixture
def files(tmp_path):
    out = {}
    for name, doc in {"cubic": CUBIC, "square": SQUARE,
                      "const1": {"family": "k3", "coefficients": {"a": "1", "b": "0", "c": "0", "d": "1"}},
                      "const2": {"family": "k3", "coefficients": {"a": "2", "b": "0", "c": "1", "d": "1"}}}.items():
        path = tmp_path / f"{name}.json"
        path.write_text(json.dumps(doc))
        out[name] = str(path)
    out["dir"] = tmp_path
    return out


def run(capsys, *args):
    with pytest.raises(SystemExit) as exc:
        main(list(args))
    captured = capsys.readouterr()
    return exc.value.code, captured.out, captured.err


def test_invariants_report(capsys, files):
    code, out, _ = run(capsys, "invariants", "--eq", files["cubic"], "--at", "1")
    report = json.loads(out)
    assert code == 0
    assert report["values"]["s3"] == -3.0
    assert report["values"]["J1"] == pytest.approx(1 / 9, abs=1e-15)
    assert report["defined"]["nabla_J1"] is True


def test_invariants_undefined_at_singular_point(capsys, files):
    code, out, _ = run(capsys, "invariants", "--eq", files["cubic"], "--at", "0")
    report = json.loads(out)
    assert code == 0 and report["values"]["J1"] is None and report["defined"]["J1"] is False


def test_exit_codes_for_bad_input(capsys, files):
    code, _, err = run(capsys, "invariants", "--eq", str(files["dir"] / "missing.json"), "--at", "1")
    assert code == 65 and "cannot read" in err
    bad = files["dir"] / "bad.json"
    bad.write_text('{"family": "k3", "coefficients": {"a": "1+", "b": "0", "c": "0", "d": "0"}}')
    assert run(capsys, "classify", "--eq", str(bad), "--at", "0")[0] == 65
    assert run(capsys, "invariants", "--eq", files["cubic"])[0] == 64
    assert run(capsys, "invariants", "--eq", files["cubic"], "--at", "1", "--order", "1")[0] == 64
    assert run(capsys, "nonsense")[0] == 64


def test_classify(capsys, files):
    code, out, _ = run(capsys, "classify", "--eq", files["cubic"], "--at", "0")
    assert code == 0 and json.loads(out)["tag"] == "SingularCubicS3Zero"


def test_signature_csv_default(capsys, files):
    code, out, _ = run(capsys, "signature", "--eq", files["cubic"], "--from", "1", "--to", "2",
                       "--samples", "8")
    lines = out.splitlines()
    assert code == 0 and lines[0] == "x,J1,nabla_J1,defined" and len(lines) == 9


def test_transform_then_equivalent(capsys, files):
    code, out, _ = run(capsys, "transform", "--eq", files["cubic"], "--f", "2*x+1", "--g", "x^2+1",
                       "--h", "x")
    assert code == 0
    moved = files["dir"] / "moved.json"
    moved.write_text(out)
    code, out, _ = run(capsys, "equivalent", "--eq1", files["cubic"], "--at1", "1",
                       "--eq2", str(moved), "--at2", "3")
    assert code == 0 and json.loads(out)["verdict"] == "Equivalent"


def test_transform_rejects_nonaffine_without_point(capsys, files):
    assert run(capsys, "transform", "--eq", files["cubic"], "--f", "x^3+x")[0] == 65
    code, out, _ = run(capsys, "transform", "--eq", files["cubic"], "--f", "x^3+x", "--at", "1",
                       "--order", "2")
    assert code == 0 and json.loads(out)["at"] == 2.0


def test_equivalent_exit_codes(capsys, files):
    code, out, _ = run(capsys, "equivalent", "--eq1", files["cubic"], "--at1", "1",
                       "--eq2", files["square"], "--at2", "1")
    assert code == 1 and json.loads(out)["verdict"] == "NotEquivalent"
    code, out, _ = run(capsys, "equivalent", "--eq1", files["const1"], "--at1", "0",
                       "--eq2", files["const2"], "--at2", "0")
    assert code == 2 and json.loads(out)["max_deviation"] is None


def test_verify_small_run_is_deterministic(capsys):
    args = ("verify", "--seed", "42", "--trials", "4", "--suite", "group_laws",
            "--suite", "worked_example")
    first = run(capsys, *args)
    second = run(capsys, *args)
    assert first == second and first[0] == 0
    assert {r["name"] for r in json.loads(first[1])["results"]} >= {"group_laws.composition"}


def test_verify_single_equation(capsys, files):
    code, out, _ = run(capsys, "verify", "--eq", files["cubic"], "--trials", "10", "--format", "text")
    assert code == 0 and out.startswith("PASS equation_invariance.k3")


def test_threads_variable_is_validated(files, monkeypatch, capsys):
    monkeypatch.setenv("ABEL_EQUIV_THREADS", "0")
    assert run(capsys, "classify", "--eq", files["cubic"], "--at", "1")[0] == 64
    monkeypatch.setenv("ABEL_EQUIV_THREADS", "2")
    assert run(capsys, "classify", "--eq", files["cubic"], "--at", "1")[0] == 0


def test_dumps_is_canonical():
    text = dumps({"b": [1.0, float("nan")], "a": 0.1, "c": True, "d": None})
    assert text.index('"a"') < text.index('"b"')
    assert "0.10000000000000001" in text and "null" in text and "true" in text
    assert json.loads(text)["b"] == [1.0, None]


def test_module_entry_point(files):
    proc = subprocess.run([sys.executable, "-m", "abel_equiv", "classify", "--eq", files["cubic"],
                           "--at", "1"], capture_output=True, text=True, check=False)
    assert proc.returncode == 0 and json.loads(proc.stdout)["tag"] == "Regular"
