"""Command-line front end.

Every subcommand builds a report dictionary (scalars, per-node series and
warnings) and writes it either as a ``t,value`` CSV of the main series or as
a JSON document. With ``--output`` every series of a JSON report is also
written to its own CSV file next to it.

Exit codes: 0 on success, 1 on configuration errors, 2 on numerical failures.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import sys
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from fracmech import frac_ops as fo
from fracmech import hamjac as hj
from fracmech import variational as va
from fracmech.errors import (
    FunctionSpecError,
    KnownDiscrepancyWarning,
    NumericalError,
    ValidationError,
)

#: fraction of the interval excluded next to each singular endpoint in norms
INTERIOR_MARGIN = 0.1


# {{{ function specs

_NUMBER = r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_TERM_RE = re.compile(
    rf"\s*(?:(?P<coef>{_NUMBER})\s*\*\s*)?(?P<kind>pow|rpow|const)\s*:\s*(?P<value>{_NUMBER})\s*")


def parse_function_spec(spec: str, a: float = 0.0, b: float = 1.0) -> fo.ClosedFormFn:
    """Parse ``term ("+" term)*`` into a :class:`~fracmech.frac_ops.ClosedFormFn`.

    A term is ``[coef "*"] ("pow:" mu | "rpow:" mu | "const:" c)``, where
    ``pow`` is anchored at *a* and ``rpow`` at *b*.

    >>> parse_function_spec("2*pow:1 + const:3")(0.5)
    array(4.)
    """
    terms = []
    pos = 0
    while True:
        m = _TERM_RE.match(spec, pos)
        if m is None:
            raise FunctionSpecError(f"expected a term in {spec!r}", pos)

        coef = float(m["coef"]) if m["coef"] is not None else 1.0
        value = float(m["value"])
        if m["kind"] == "const":
            terms.append(fo.PowerTerm(coef * value, 0.0, fo.Side.Left))
        else:
            if not value > -1:
                raise FunctionSpecError(
                    f"exponent must be > -1, got {value:g}", m.start("value"))
            anchor = fo.Side.Left if m["kind"] == "pow" else fo.Side.Right
            terms.append(fo.PowerTerm(coef, value, anchor))

        pos = m.end()
        if pos == len(spec):
            break
        if spec[pos] != "+":
            raise FunctionSpecError(f"expected '+' in {spec!r}", pos)
        pos += 1

    return fo.ClosedFormFn(tuple(terms), a, b)


# }}}


# {{{ reports


@dataclass
class RunReport:
    config: dict[str, Any]
    scalars: dict[str, Any] = field(default_factory=dict)
    series: dict[str, fo.GridFn] = field(default_factory=dict)
    residuals: dict[str, dict[str, Any]] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    def add_residual(self, name: str, fn: fo.GridFn, *,
                     left: bool = True, right: bool = True) -> float:
        """Store the max-abs norm of *fn* over interior nodes, with the range used."""
        mask = fo.interior_mask(fn.grid, left=left, right=right, margin=INTERIOR_MARGIN)
        t = fn.t[mask]
        norm = float(np.max(np.abs(fn.values[mask])))
        self.residuals[name] = {"max_abs": norm, "t_range": [float(t[0]), float(t[-1])]}
        self.series[name] = fn
        return norm

    def to_json(self, series_files: dict[str, str] | None = None) -> dict[str, Any]:
        def series_entry(name: str, fn: fo.GridFn) -> dict[str, Any]:
            entry: dict[str, Any] = {
                "t": [float(x) for x in fn.t],
                "value": [_json_float(x) for x in fn.values],
                "unreliable_nodes": sorted(fn.unreliable),
            }
            if series_files:
                entry["file"] = series_files[name]
            return entry

        return {
            "config": self.config,
            "results": self.scalars,
            "residuals": self.residuals,
            "series": {k: series_entry(k, v) for k, v in self.series.items()},
            "warnings": self.warnings,
        }


def _json_float(x: float) -> float | None:
    x = float(x)
    return x if math.isfinite(x) else None


def format_csv(fn: fo.GridFn) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["t", "value"])
    for t, v in zip(fn.t, fn.values):
        writer.writerow([f"{t:.17g}", f"{v:.17g}"])
    return buf.getvalue()


def read_csv(path: str | Path) -> fo.GridFn:
    """Read a ``t,value`` CSV sampled on a uniform grid."""
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows or [c.strip() for c in rows[0]] != ["t", "value"]:
        raise ValidationError(f"{path}: expected a 't,value' header")
    try:
        data = np.array([[float(c) for c in row] for row in rows[1:] if row], dtype=float)
    except ValueError as exc:
        raise ValidationError(f"{path}: {exc}") from None
    if data.ndim != 2 or data.shape[1] != 2 or data.shape[0] < 3:
        raise ValidationError(f"{path}: need at least 3 rows of two columns")

    t, values = data[:, 0], data[:, 1]
    grid = fo.Grid(float(t[0]), float(t[-1]), len(t) - 1)
    if not np.allclose(t, grid.nodes, rtol=0, atol=1e-9 * grid.step):
        raise ValidationError(f"{path}: samples are not on a uniform grid")
    return fo.GridFn(grid, values)


# }}}


# {{{ subcommands


def _grid(args) -> fo.Grid:
    return fo.Grid(args.a, args.b, args.grid_n)


def _input(args, grid: fo.Grid | None = None) -> tuple[fo.GridFn, fo.ClosedFormFn | None]:
    if args.input is not None:
        return read_csv(args.input), None
    if args.fn is None:
        raise ValidationError("one of --fn or --input is required")
    fn = parse_function_spec(args.fn, args.a, args.b)
    return fn.sample(grid or _grid(args)), fn


def _side(args) -> fo.Side:
    return fo.Side.Left if args.side == "left" else fo.Side.Right


def _lagrangian(args) -> va.QuadraticLagrangian:
    m11, m12, m22 = args.mass
    return va.QuadraticLagrangian(
        fo.Order(args.alpha), fo.Order(args.beta), args.a, args.b,
        mass=[[m11, m12], [m12, m22]], linear=args.linear, potential=args.potential)


def cmd_deriv(args, report: RunReport) -> str:
    f, fn = _input(args)
    side = _side(args)
    if args.scheme == "gl":
        op = fo.gl_left_deriv if side is fo.Side.Left else fo.gl_right_deriv
        out = op(f, args.alpha)
    else:
        out = fo.quadrature_rl_deriv(fn if fn is not None else f, args.alpha, side, f.grid)
    report.series["derivative"] = out
    return "derivative"


def cmd_integral(args, report: RunReport) -> str:
    if args.scheme != "gl":
        raise ValidationError("fractional integrals are only available with --scheme gl")
    f, _ = _input(args)
    report.series["integral"] = fo.rl_integral(f, args.alpha, _side(args))
    return "integral"


def cmd_el_check(args, report: RunReport) -> str:
    lagrangian = _lagrangian(args)
    q, _ = _input(args)
    residual = va.el_residual(lagrangian, q)
    report.add_residual("el_residual", residual)
    return "el_residual"


def cmd_hj_solve(args, report: RunReport) -> str | None:
    lagrangian = _lagrangian(args)
    ham = va.legendre_transform(lagrangian)
    sol = hj.solve_separable(ham, args.energy, args.split,
                             lambda1=args.lambda1, lambda2=args.lambda2)
    report.scalars.update(_solution_scalars(ham, sol))
    return None


def _solution_scalars(ham: va.QuadraticHamiltonian, sol: hj.HJSolution) -> dict[str, Any]:
    p = hj.momenta_from_solution(sol)
    out = {
        "hamiltonian_kind": ham.kind.name,
        "sigma": ham.sigma,
        "direction": None if ham.direction is None else [float(x) for x in ham.direction],
        "energy": sol.energy_total,
        "energy_split": list(sol.energy_split),
        "w1_coef": sol.w1_coef,
        "w2_coef": sol.w2_coef,
        "p_alpha": p.p_alpha,
        "p_beta": p.p_beta,
        "lambda1": sol.lambda1,
        "lambda2": sol.lambda2,
        "constraint": sol.constrained,
        "shape": sol.shape.name,
        "hjpde_residual": hj.verify_hjpde(sol, ham),
        "constraint_residual": float(ham.constraint_residual(p.p_alpha, p.p_beta)),
    }
    return out


def cmd_example1(args, report: RunReport) -> str:
    grid = fo.Grid(args.a, args.b, args.grid_n)
    lagrangian = va.QuadraticLagrangian.example1(args.alpha, a=args.a, b=args.b)
    ham = va.legendre_transform(lagrangian)
    sol = hj.solve_separable(ham, args.energy, lambda1=args.lambda1)
    report.scalars.update(_solution_scalars(ham, sol))
    report.scalars["hamiltonian_on_momenta"] = float(ham.kinetic(sol.w1_coef, sol.w2_coef))

    if sol.w1_coef > 0:
        report.scalars["xi_alpha_at_b"] = hj.trajectory_identity(sol, args.b)

    _, q = hj.reconstruct_q(sol, grid)
    report.series["trajectory"] = q

    closure = fo.gl_left_deriv(q, args.alpha) - sol.w1_coef
    report.add_residual("closure_residual", closure, right=False)
    report.add_residual("action_residual", hj.verify_action_identity(sol, lagrangian, grid))

    el = report.add_residual("el_residual", va.el_residual(lagrangian, q))
    if el > 1e-10 * max(1.0, sol.w1_coef):
        report.warnings.append(
            "known-nonzero: el_residual contains the right derivative of the constant "
            f"momentum (max interior |residual| = {el:.6g})")
    return "trajectory"


def cmd_example2(args, report: RunReport) -> str:
    grid = fo.Grid(args.a, args.b, args.grid_n)
    lagrangian = va.QuadraticLagrangian.example2(args.alpha, args.beta, a=args.a, b=args.b)
    ham = va.legendre_transform(lagrangian)
    sol = hj.solve_separable(ham, args.energy, lambda1=args.lambda1)
    report.scalars.update(_solution_scalars(ham, sol))
    report.scalars["hamiltonian_on_momenta"] = float(ham.kinetic(sol.w1_coef, sol.w2_coef))
    if sol.w1_coef > 0:
        report.scalars["xi_sum_at_b"] = hj.trajectory_identity(sol, args.b)

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", KnownDiscrepancyWarning)
        residual = hj.example2_operator_residual(sol, grid, scheme=args.scheme)
    report.add_residual("operator_residual", residual)
    for w in caught:
        if issubclass(w.category, KnownDiscrepancyWarning):
            report.warnings.append(f"known-nonzero: operator_residual: {w.message}")
    return "operator_residual"


# }}}


# {{{ argument parsing


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message: str):
        raise ValidationError(message)


def _floats(count: int):
    def parse(text: str) -> list[float]:
        try:
            values = [float(x) for x in text.split(",")]
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected {count} comma-separated numbers")
        if len(values) != count:
            raise argparse.ArgumentTypeError(f"expected {count} comma-separated numbers")
        return values

    return parse


def build_parser() -> argparse.ArgumentParser:
    common = _ArgumentParser(add_help=False)
    common.add_argument("--alpha", type=float, default=0.5)
    common.add_argument("--beta", type=float, default=0.5)
    common.add_argument("--a", type=float, default=0.0)
    common.add_argument("--b", type=float, default=1.0)
    common.add_argument("--grid-n", type=int, default=1024)
    common.add_argument("--scheme", choices=("gl", "quad"), default="gl")
    common.add_argument("--energy", type=float, default=1.0)
    common.add_argument("--lambda1", type=float, default=0.0)
    common.add_argument("--output", help="output file (stdout when omitted)")
    common.add_argument("--format", choices=("csv", "json"), default=None,
                        help="default: csv for deriv/integral, json otherwise")

    source = _ArgumentParser(add_help=False)
    source.add_argument("--fn", help='catalog function, e.g. "2*pow:0.5 + const:1"')
    source.add_argument("--input", help="CSV file with a 't,value' header")
    source.add_argument("--side", choices=("left", "right"), default="left")

    model = _ArgumentParser(add_help=False)
    model.add_argument("--mass", type=_floats(3), default=[1.0, 0.0, 0.0],
                       help="m11,m12,m22 of the symmetric mass matrix")
    model.add_argument("--linear", type=_floats(2), default=[0.0, 0.0])
    model.add_argument("--potential", type=_floats(3), default=[0.0, 0.0, 0.0],
                       help="c0,c1,c2 of c0 + c1 q + c2 q^2 / 2")
    model.add_argument("--split", type=_floats(2), default=None, help="E1,E2")
    model.add_argument("--lambda2", type=float, default=0.0)

    parser = _ArgumentParser(prog="fracmech", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)
    sub.add_parser("deriv", parents=[common, source],
                   help="fractional derivative of a function").set_defaults(func=cmd_deriv)
    sub.add_parser("integral", parents=[common, source],
                   help="fractional integral of a function").set_defaults(func=cmd_integral)
    sub.add_parser("el-check", parents=[common, source, model],
                   help="Euler-Lagrange residual of a trajectory").set_defaults(func=cmd_el_check)
    sub.add_parser("hj-solve", parents=[common, model],
                   help="separable Hamilton-Jacobi solution").set_defaults(func=cmd_hj_solve)
    sub.add_parser("example1", parents=[common],
                   help="L = (D^alpha q)^2 / 2").set_defaults(func=cmd_example1)
    sub.add_parser("example2", parents=[common],
                   help="L = (D^alpha q + D^beta q)^2 / 2").set_defaults(func=cmd_example2)
    return parser


def _validate(args) -> None:
    if args.grid_n < 2:
        raise ValidationError("--grid-n must be at least 2")
    if not args.b > args.a:
        raise ValidationError("--b must be larger than --a")
    if args.energy < 0:
        raise ValidationError("--energy must be non-negative")


def _config(args) -> dict[str, Any]:
    return {k: v for k, v in sorted(vars(args).items()) if k != "func"}


# }}}


def run(argv: Sequence[str] | None = None, *, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        _validate(args)
        report = RunReport(config=_config(args))
        main_series = args.func(args, report)
        fmt = args.format or ("csv" if args.command in ("deriv", "integral") else "json")
        _write(report, main_series, fmt, args.output, stdout)
    except ValidationError as exc:
        print(f"fracmech: error: {exc}", file=stderr)
        return 1
    except NumericalError as exc:
        print(f"fracmech: numerical failure: {exc}", file=stderr)
        return 2
    except OSError as exc:
        print(f"fracmech: error: {exc}", file=stderr)
        return 1
    return 0


def _write(report: RunReport, main_series: str | None, fmt: str,
           output: str | None, stdout) -> None:
    if fmt == "csv":
        if main_series is None:
            raise ValidationError("this command has no series; use --format json")
        text = format_csv(report.series[main_series])
        if output is None:
            stdout.write(text)
        else:
            Path(output).write_text(text)
        return

    files = None
    if output is not None:
        out = Path(output)
        files = {}
        for name, fn in report.series.items():
            path = out.with_name(f"{out.stem}.{name}.csv")
            path.write_text(format_csv(fn))
            files[name] = path.name

    text = json.dumps(report.to_json(files), indent=2) + "\n"
    if output is None:
        stdout.write(text)
    else:
        Path(output).write_text(text)


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
