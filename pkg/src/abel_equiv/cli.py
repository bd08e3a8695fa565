"""Command-line front end.

Exit codes: 0 success, 64 usage error, 65 bad input data, 70 internal error.
``equivalent`` exits 0/1/2 for Equivalent/NotEquivalent/Inconclusive and
``verify`` exits 1 when a property fails.  JSON output is deterministic:
sorted keys and floats printed with 17 significant digits.
"""

from __future__ import annotations

import math
import os
import sys
from dataclasses import dataclass

import click
import numpy as np

from . import equivalence as ev
from . import invariants as inv
from . import transform as tr
from . import verify as vf
from .errors import AbelEquivError
from .model import DEFAULT_TOL_ZERO, classify, load_equation, render_equation

__all__ = ["cli", "main", "dumps", "RunConfig", "EXIT_USAGE", "EXIT_DATA", "EXIT_INTERNAL"]

EXIT_USAGE = 64
EXIT_DATA = 65
EXIT_INTERNAL = 70
THREADS_ENV = "ABEL_EQUIV_THREADS"


class DataError(Exception):
    """Input that cannot be read or interpreted (exit 65)."""


@dataclass(frozen=True)
class RunConfig:
    tol_zero: float = DEFAULT_TOL_ZERO
    tol_match: float = ev.DEFAULT_TOL_MATCH
    min_overlap: float = ev.DEFAULT_MIN_OVERLAP
    order: int = 8
    samples: int = ev.DEFAULT_SAMPLES
    seed: int = 0
    fmt: str = "json"

    def __post_init__(self):
        for name in ("tol_zero", "tol_match", "min_overlap"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise click.UsageError(f"--{name.replace('_', '-')} must be positive")
        if self.order < 2:
            raise click.UsageError("--order must be at least 2")
        if self.samples < 8:
            raise click.UsageError("--samples must be at least 8")


# -- output ------------------------------------------------------------------------

def _number(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if not math.isfinite(v):
        return "null"
    text = format(v, ".17g")
    if "e" not in text and "." not in text and "n" not in text:
        text += ".0"
    return text


def _escape(s):
    import json

    return json.dumps(s, ensure_ascii=False)


def dumps(obj, indent=0):
    """JSON text with sorted keys, 17-digit floats and null for NaN/inf."""
    pad, inner = "  " * indent, "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{_escape(str(k))}: {dumps(obj[k], indent + 1)}"
                 for k in sorted(obj, key=str)]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        items = [f"{inner}{dumps(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if obj is None:
        return "null"
    if isinstance(obj, str):
        return _escape(obj)
    if isinstance(obj, (bool, int, float, np.number, np.bool_)):
        return _number(obj)
    return _escape(str(obj))


def _emit(obj):
    click.echo(dumps(obj))


def _read_equation(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror or exc}") from None
    return load_equation(text)


def _check_threads():
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return 1
    try:
        n = int(raw)
    except ValueError:
        n = 0
    if n < 1:
        raise click.UsageError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    # evaluation is vectorized on one thread; the cap is accepted for compatibility
    return n


# -- commands ------------------------------------------------------------------------

tol_zero_option = click.option("--tol-zero", type=float, default=DEFAULT_TOL_ZERO,
                               show_default=True, help="Scaled vanishing tolerance.")


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
def cli():
    """Differential invariants and local equivalence of Abel-type ODEs."""
    _check_threads()


@cli.command("invariants")
@click.option("--eq", "eq_path", required=True, help="Equation file (JSON).")
@click.option("--at", "x0", type=float, required=True, help="Base point x0.")
@click.option("--order", type=int, default=8, show_default=True, help="Jet order.")
@tol_zero_option
def cmd_invariants(eq_path, x0, order, tol_zero):
    """Relative and absolute invariants, and nabla of each absolute one, at a point."""
    RunConfig(tol_zero=tol_zero, order=order)
    eq = _read_equation(eq_path)
    fam = eq.family
    jets = eq.coefficient_jets(x0, order)
    values, defined = {}, {}
    for name, v in inv.relative_invariants(fam, jets).items():
        values[name], defined[name] = v.value, True
    for name, v in inv.absolute_invariants(fam, jets, tol_zero).items():
        values[name], defined[name] = (v.value if v.defined else None), v.defined
        if inv.required_order(fam, name, 1) > order:
            continue
        label = f"nabla_{name}"
        try:
            values[label] = inv.nabla_jet(fam, jets, name, 1, tol_zero).value
            defined[label] = True
        except inv.Undefined:
            values[label], defined[label] = None, False
    A = inv.derivation_coefficient(fam, jets, tol_zero)
    _emit({
        "family": fam.value,
        "at": x0,
        "order": order,
        "orbit": classify(eq, x0, tol_zero).tag.value,
        "values": values,
        "defined": defined,
        "derivation_coefficient": A.value if A.defined else None,
    })
    return 0


@cli.command("classify")
@click.option("--eq", "eq_path", required=True, help="Equation file (JSON).")
@click.option("--at", "x0", type=float, required=True, help="Base point x0.")
@tol_zero_option
def cmd_classify(eq_path, x0, tol_zero):
    """Orbit type (regular or which singular stratum) at a point."""
    RunConfig(tol_zero=tol_zero)
    eq = _read_equation(eq_path)
    orbit = classify(eq, x0, tol_zero)
    _emit({"family": eq.family.value, "at": x0, "tag": orbit.tag.value,
           "regular": orbit.regular, "witness": dict(orbit.witness)})
    return 0


@cli.command("signature")
@click.option("--eq", "eq_path", required=True, help="Equation file (JSON).")
@click.option("--from", "x_from", type=float, required=True, help="Left end of the grid.")
@click.option("--to", "x_to", type=float, required=True, help="Right end of the grid.")
@click.option("--samples", type=int, default=ev.DEFAULT_SAMPLES, show_default=True)
@tol_zero_option
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv",
              show_default=True)
def cmd_signature(eq_path, x_from, x_to, samples, tol_zero, fmt):
    """Sample the signature map on a uniform grid."""
    RunConfig(tol_zero=tol_zero, samples=samples)
    if not x_from < x_to:
        raise click.UsageError("--from must be smaller than --to")
    eq = _read_equation(eq_path)
    curve = ev.signature(eq, x_from, x_to, samples, tol_zero)
    if fmt == "csv":
        click.echo(curve.to_csv(), nl=False)
    else:
        _emit({
            "family": eq.family.value,
            "components": list(curve.components),
            "x": curve.x,
            "values": [[v if ok else None for v in row]
                       for row, ok in zip(curve.values.tolist(), curve.defined)],
            "defined": [bool(d) for d in curve.defined],
        })
    return 0


@cli.command("equivalent")
@click.option("--eq1", "eq1_path", required=True, help="First equation file.")
@click.option("--eq2", "eq2_path", required=True, help="Second equation file.")
@click.option("--at1", "x1", type=float, required=True, help="Point for the first equation.")
@click.option("--at2", "x2", type=float, required=True, help="Point for the second equation.")
@click.option("--radius", type=float, default=ev.DEFAULT_RADIUS, show_default=True,
              help="Half-width of the sampling windows.")
@click.option("--samples", type=int, default=ev.DEFAULT_SAMPLES, show_default=True)
@click.option("--tol-match", type=float, default=ev.DEFAULT_TOL_MATCH, show_default=True)
@tol_zero_option
@click.option("--min-overlap", type=float, default=ev.DEFAULT_MIN_OVERLAP, show_default=True)
def cmd_equivalent(eq1_path, eq2_path, x1, x2, radius, samples, tol_match, tol_zero,
                   min_overlap):
    """Decide local equivalence; exit 0 Equivalent, 1 NotEquivalent, 2 Inconclusive."""
    RunConfig(tol_zero=tol_zero, tol_match=tol_match, min_overlap=min_overlap,
              samples=samples)
    if not radius > 0:
        raise click.UsageError("--radius must be positive")
    eq1, eq2 = _read_equation(eq1_path), _read_equation(eq2_path)
    verdict = ev.decide_equivalence(eq1, x1, eq2, x2, radius, samples, tol_match, tol_zero,
                                    min_overlap)
    _emit(verdict.as_dict())
    return verdict.verdict.exit_code


@cli.command("transform")
@click.option("--eq", "eq_path", required=True, help="Equation file (JSON).")
@click.option("--f", "f", default="x", show_default=True, help="New independent variable f(x).")
@click.option("--g", "g", default="1", show_default=True, help="Factor g(x) in y -> g y + h.")
@click.option("--h", "h", default="0", show_default=True, help="Shift h(x) in y -> g y + h.")
@click.option("--at", "x0", type=float, default=None,
              help="Emit the transformed coefficient jets at f(x0) instead of an equation.")
@click.option("--order", type=int, default=8, show_default=True)
def cmd_transform(eq_path, f, g, h, x0, order):
    """Apply x -> f(x), y -> g(x) y + h(x).

    Without --at the transformed equation is written in the equation file
    format (f must then be affine).
    """
    RunConfig(order=order)
    eq = _read_equation(eq_path)
    T = tr.PointTransformation.from_strings(f, g, h)
    if x0 is None:
        click.echo(render_equation(tr.transform_equation(T, eq)), nl=False)
        return 0
    X, jets = tr.apply(T, eq, x0, order)
    _emit({
        "family": eq.family.value,
        "at": X,
        "order": order,
        "derivatives": {n: [j.derivative(i) for i in range(order + 1)]
                        for n, j in jets.items()},
    })
    return 0


@cli.command("verify")
@click.option("--eq", "eq_path", default=None,
              help="Check one equation instead of random ones.")
@click.option("--trials", type=int, default=200, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--suite", "suites", multiple=True, type=click.Choice(sorted(vf.SUITES)),
              help="Run only these suites (repeatable).")
@click.option("--format", "fmt", type=click.Choice(["json", "text"]), default="json",
              show_default=True)
def cmd_verify(eq_path, trials, seed, suites, fmt):
    """Seeded property suites; exit 0 iff every non-informational check passes."""
    if trials < 1:
        raise click.UsageError("--trials must be positive")
    if eq_path is not None:
        if suites:
            raise click.UsageError("--suite cannot be combined with --eq")
        report = vf.run_equation(_read_equation(eq_path), seed=seed, trials=trials)
    else:
        report = vf.run_all(seed=seed, trials=trials, suites=suites or None)
    if fmt == "json":
        _emit(report)
    else:
        for r in report["results"]:
            status = "INFO" if r["informational"] else ("PASS" if r["passed"] else "FAIL")
            click.echo(f"{status} {r['name']} worst={r['worst']:.3g} "
                       f"tol={r['tolerance']:.3g} trials={r['trials']}")
    return 0 if report["passed"] else 1


def main(argv=None):
    """Entry point; maps errors onto the exit codes above."""
    try:
        code = cli.main(args=argv, prog_name="abel-equiv", standalone_mode=False)
    except click.UsageError as exc:
        exc.show()
        code = EXIT_USAGE
    except click.Abort:
        click.echo("aborted", err=True)
        code = EXIT_USAGE
    except (DataError, AbelEquivError, ValueError, ArithmeticError) as exc:
        click.echo(f"error: {exc}", err=True)
        code = EXIT_DATA
    except Exception as exc:  # noqa: BLE001 - last-resort mapping to the internal exit code
        click.echo(f"internal error: {type(exc).__name__}: {exc}", err=True)
        code = EXIT_INTERNAL
    sys.exit(code if isinstance(code, int) else 0)
