"""Command-line front end.

Exit codes: 0 success, 1 bad input or configuration, 2 unreachable target,
3 failed validation or unconverged propagation.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from .cartan import compute_roots, verify_decomposition
from .errors import KPError, UnreachableTarget
from .lie import GroupElement, commutator
from .presets import (
    BASIS_PRESETS,
    DECOMPOSITION_PRESETS,
    _complex_matrix,
    basis_preset,
    decomposition_preset,
    hadamard_target,
    load_decomposition,
)
from .simulate import PulseSchedule, verify_solution
from .synth import SynthesisProblem, solve, sweep_su2, target_from_unitary

EXIT_OK, EXIT_INPUT, EXIT_UNREACHABLE, EXIT_INVALID = 0, 1, 2, 3


class ConfigError(Exception):
    pass


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _load_config(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return doc


def _number(doc, key, default, kind=float, positive=True):
    value = doc.get(key, default)
    try:
        value = kind(value)
    except (TypeError, ValueError):
        raise ConfigError(f"field {key!r}: expected a number") from None
    if positive and not value > 0:
        raise ConfigError(f"field {key!r}: must be positive")
    return value


def _build_problem(args):
    """Resolve flags and optional config into ``(problem, u0, steps, tol)``."""
    doc = _load_config(args.config) if args.config else {}
    source = args.preset or doc.get("decomposition")
    if source is None:
        raise ConfigError("no decomposition: pass --preset or set 'decomposition'")
    try:
        sub = load_decomposition(source)
    except (KeyError, ValueError, OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"decomposition {source!r}: {exc}") from None
    report = verify_decomposition(sub.decomposition)
    if not report.passed:
        raise ConfigError("decomposition fails the Cartan relations\n" + report.summary())

    omega = args.omega if args.omega is not None else _number(doc, "omega", 1.0)
    n_max = args.n_max if args.n_max is not None else _number(doc, "n_max", 8, int)
    steps = args.steps if args.steps is not None else _number(doc, "steps", 4096, int)
    tol = args.tol if args.tol is not None else _number(doc, "tolerance", 1e-5, positive=False)
    if omega <= 0 or n_max < 1 or steps < 1 or tol < 0:
        raise ConfigError("omega, n_max and steps must be positive; tolerance non-negative")

    basis = sub.basis
    d = sub.decomposition
    u0 = None
    flag_targets = [t for t in (args.eta is not None, args.target, args.coeff) if t]
    if len(flag_targets) > 1:
        raise ConfigError("give only one of --eta, --target, --coeff")
    if args.eta is not None:
        if "Jz" not in basis.labels:
            raise ConfigError("--eta needs a basis with a Jz generator")
        x = basis.element(Jz=2 * args.eta)
    elif args.target:
        if args.target != "hadamard" or basis.dim_group != 3:
            raise ConfigError(f"--target {args.target!r} is not available for this basis")
        x = target_from_unitary(d, GroupElement(basis, hadamard_target()))
    elif args.coeff:
        coeffs = {}
        for item in args.coeff:
            label, _, value = item.partition("=")
            try:
                coeffs[label] = coeffs.get(label, 0.0) + float(value)
                basis.index(label)
            except (ValueError, KeyError) as exc:
                raise ConfigError(f"--coeff {item!r}: {exc}") from None
        x = basis.element(**coeffs)
    else:
        target = doc.get("target")
        if not isinstance(target, dict):
            raise ConfigError("no target: pass --eta, --target, --coeff or set 'target'")
        forms = [k for k in ("generator_coeffs", "unitary_matrix") if k in target]
        if len(forms) != 1:
            raise ConfigError("field 'target': give exactly one of generator_coeffs, unitary_matrix")
        if forms[0] == "generator_coeffs":
            try:
                x = basis.element(**{k: float(v) for k, v in target["generator_coeffs"].items()})
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"field 'target.generator_coeffs': {exc}") from None
        else:
            try:
                u_t = GroupElement(basis, _complex_matrix(target["unitary_matrix"], "unitary_matrix"))
                if "initial_unitary" in target:
                    u0 = GroupElement(
                        basis, _complex_matrix(target["initial_unitary"], "initial_unitary")
                    )
            except ValueError as exc:
                raise ConfigError(f"field 'target': {exc}") from None
            x = target_from_unitary(d, u_t, u0)
    problem = SynthesisProblem(sub, x, omega=omega, n_max=int(n_max))
    return problem, u0, int(steps), float(tol)


def cmd_synth(args) -> int:
    problem, _, _, _ = _build_problem(args)
    sol = solve(problem)
    text = json.dumps(sol.to_json(), indent=2) + "\n"
    _emit(text, args.out)
    if args.pulse_csv:
        Path(args.pulse_csv).write_text(PulseSchedule.from_solution(sol, args.steps or 4096).to_csv())
    if sol.constraint_residual > 1e-9 or sol.commutant_residual > 1e-9:
        print("solution fails its constraint checks", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


def cmd_verify(args) -> int:
    problem, u0, steps, tol = _build_problem(args)
    sol = solve(problem)
    report = verify_solution(sol, steps=steps, tol=tol, u0=u0)
    _emit(report.dumps() + "\n", args.out)
    if not report.converged:
        print(
            f"not converged: distance {report.target_distance:.3e} >= {report.tolerance:.3e}",
            file=sys.stderr,
        )
        return EXIT_INVALID
    return EXIT_OK


def _parse_grid(args) -> list[float]:
    if args.eta_grid is not None:
        grid_text = args.eta_grid.strip()
        try:
            if ":" in grid_text:
                lo, hi, n = grid_text.split(":")
                return list(np.linspace(float(lo), float(hi), int(n)))
            return [float(v) for v in grid_text.split(",") if v.strip()]
        except ValueError:
            raise ConfigError(f"--eta-grid {grid_text!r}: expected a,b,c or lo:hi:count") from None
    n = args.points
    return [2 * math.pi * k / (n + 1) for k in range(1, n + 1)]


SWEEP_COLUMNS = [
    "eta", "omega_time_analytic", "omega_time_boozer", "lambda", "grid_oracle_omega_time",
]


def cmd_sweep(args) -> int:
    grid = _parse_grid(args)
    if not grid:
        raise ConfigError("empty eta grid")
    rows = sweep_su2(grid, omega=args.omega or 1.0, n_max=args.n_max or 8,
                     oracle=not args.no_oracle)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS + ["error"])
    for row in rows:
        w.writerow([_fmt(row[c]) for c in SWEEP_COLUMNS] + [row["error"]])
    _emit(buf.getvalue(), args.out)
    failed = sum(1 for r in rows if r["error"])
    if failed:
        print(f"{failed} sweep rows failed", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


_SURDS = ((1.0, ""), (math.sqrt(3), "sqrt3"), (math.sqrt(2), "sqrt2"), (math.sqrt(6), "sqrt6"))


def format_coefficient(c: float) -> str:
    """Short exact-looking form of ``c`` such as ``2``, ``-1/2`` or ``sqrt3/2``."""
    for unit, name in _SURDS:
        r = Fraction(c / unit).limit_denominator(12)
        if abs(float(r) * unit - c) < 1e-10:
            mag = abs(r)
            num = "" if (name and mag.numerator == 1) else str(mag.numerator)
            text = f"{num}{'*' if num and name else ''}{name}"
            if mag.denominator != 1:
                text += f"/{mag.denominator}"
            return ("-" if r < 0 else "") + text
    return _fmt(c)


def format_element(x, tol: float = 1e-12) -> str:
    terms = []
    for label, c in zip(x.basis.labels, x.coeffs):
        if abs(c) <= tol:
            continue
        coef = format_coefficient(c)
        if coef == "1":
            terms.append(label)
        elif coef == "-1":
            terms.append(f"-{label}")
        else:
            terms.append(f"{coef}*{label}")
    if not terms:
        return "0"
    return " + ".join(terms).replace("+ -", "- ")


def commutator_table(basis) -> list[list]:
    gens = [basis.generator(s) for s in basis.labels]
    return [[commutator(a, b) for b in gens] for a in gens]


def render_table(basis) -> str:
    """Commutator table with ``|``-separated cells; row label is the first argument."""
    table = commutator_table(basis)
    cells = [["row\\col", *basis.labels]]
    for label, row in zip(basis.labels, table):
        cells.append([label, *(format_element(x) for x in row)])
    widths = [max(len(r[i]) for r in cells) for i in range(len(cells[0]))]
    lines = [" | ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells]
    note = "# entries over basis elements; each label stands for -i times its Hermitian generator"
    return "\n".join([note, *lines]) + "\n"


def parse_table(text: str, basis) -> dict:
    """Inverse of :func:`render_table`: ``{(row, col): coefficient vector}``."""
    rows = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    header = [c.strip() for c in rows[0].split("|")][1:]
    out = {}
    for line in rows[1:]:
        cells = [c.strip() for c in line.split("|")]
        for col, cell in zip(header, cells[1:]):
            out[(cells[0], col)] = parse_element(cell, basis)
    return out


def _parse_coefficient(text: str) -> float:
    num, _, den = text.partition("/")
    value = 1.0
    for factor in num.split("*"):
        if factor in ("", "1"):
            continue
        unit = dict((n, u) for u, n in _SURDS if n).get(factor)
        value *= unit if unit is not None else float(factor)
    return value / float(den) if den else value


def parse_element(text: str, basis) -> np.ndarray:
    """Coefficients of a string written by :func:`format_element`."""
    coeffs = np.zeros(basis.dim)
    text = text.strip()
    if text == "0":
        return coeffs
    for term in text.replace(" - ", " + -").split(" + "):
        term = term.strip()
        sign = -1.0 if term.startswith("-") else 1.0
        term = term.lstrip("-")
        coef, _, label = term.rpartition("*")
        coeffs[basis.index(label)] += sign * (_parse_coefficient(coef) if coef else 1.0)
    return coeffs


def _table_basis(name):
    if name in BASIS_PRESETS:
        return basis_preset(name)
    if name in DECOMPOSITION_PRESETS:
        return decomposition_preset(name).basis
    raise ConfigError(f"unknown preset {name!r}")


def cmd_table(args) -> int:
    if not args.preset:
        raise ConfigError("table needs --preset")
    _emit(render_table(_table_basis(args.preset)), args.out)
    return EXIT_OK


def cmd_roots(args) -> int:
    source = args.preset or (args.config and _load_config(args.config).get("decomposition"))
    if not source:
        raise ConfigError("roots needs --preset or --config")
    try:
        sub = load_decomposition(source)
    except (KeyError, ValueError, OSError) as exc:
        raise ConfigError(f"decomposition {source!r}: {exc}") from None
    system = compute_roots(sub)
    doc = {
        "a": [format_element(g) for g in sub.a_generators],
        "m": [format_element(m) for m in sub.m_elements],
        "roots": [
            {
                "alpha": [float(a) for a in r.alpha_coeffs],
                "e": format_element(r.e_vector),
                "f": format_element(r.f_vector),
                "g_alpha": r.g_alpha,
            }
            for r in system.roots
        ],
    }
    _emit(json.dumps(doc, indent=2) + "\n", args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--preset", help="decomposition (or basis, for table) preset")
    common.add_argument("--config", help="problem configuration JSON")
    common.add_argument("--out", help="write data here instead of standard output")
    common.add_argument("--steps", type=int, help="propagation steps (default 4096)")
    common.add_argument("--tol", type=float, help="verification tolerance (default 1e-5)")
    common.add_argument("--omega", type=float, help="control norm bound (default 1)")
    common.add_argument("--n-max", type=int, help="largest winding tried (default 8)")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized fixtures")

    target = argparse.ArgumentParser(add_help=False)
    target.add_argument("--eta", type=float, help="su2 target exp(2 i eta Jz)")
    target.add_argument("--target", choices=["hadamard"], help="named target unitary")
    target.add_argument("--coeff", action="append", metavar="LABEL=VALUE",
                        help="target generator coefficient; repeatable")

    parser = argparse.ArgumentParser(
        prog="kpsynth", description="Time-optimal pulse synthesis on symmetric spaces."
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("synth", parents=[common, target], help="solve for the optimal pulse")
    p.add_argument("--pulse-csv", help="also write the sampled pulse table here")
    p.set_defaults(func=cmd_synth)
    p = sub.add_parser("verify", parents=[common, target], help="solve and propagate")
    p.set_defaults(func=cmd_verify)
    p = sub.add_parser("sweep", parents=[common], help="su2 optimal-time table")
    p.add_argument("--points", type=int, default=64, help="uniform grid size in (0, 2 pi)")
    p.add_argument("--eta-grid", help="explicit grid: a,b,c or lo:hi:count")
    p.add_argument("--no-oracle", action="store_true", help="skip the grid-oracle column")
    p.set_defaults(func=cmd_sweep)
    p = sub.add_parser("table", parents=[common], help="print the commutator table")
    p.set_defaults(func=cmd_table)
    p = sub.add_parser("roots", parents=[common], help="print the restricted roots")
    p.set_defaults(func=cmd_roots)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except UnreachableTarget as exc:
        print(f"unreachable target: {exc}", file=sys.stderr)
        return EXIT_UNREACHABLE
    except (KPError, ValueError, KeyError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
