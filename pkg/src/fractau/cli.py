"""Command-line driver: ``fractau solve|sweep|check|eval|examples``.

Exit codes: 0 success, 2 usage error, 3 parse or problem-file error,
4 solvability violation, 5 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import time
from fractions import Fraction

import mpmath
from mpmath import mp
from mpmath.libmp import to_str

from . import exprlang as ex
from .cordial import (ConstraintError, ProblemSpec, check_solvability, derive_params,
                      manufacture_g, spectrum_value)
from .fracpoly import FracGrid, FracPoly
from .numerics import DomainError, SingularSystemError, to_mpf
from .registry import BUILTIN
from .tau import DegenerateHeightError, SolveOptions, UnsolvableProblemError, solve, _kernel_for

log = logging.getLogger("fractau")

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_UNSOLVABLE, EXIT_NUMERIC = 0, 2, 3, 4, 5
DEFAULT_PRECISION = 50
PROBLEM_KEYS = {"name", "gamma", "beta", "H", "g", "exact_y", "manufacture",
                "alpha_den_override", "precision", "description"}
SWEEP_HEADER = ["n", "sup_error", "residual", "height", "tau_norm", "wall_ms"]


class ProblemFileError(ValueError):
    pass


class UsageError(ValueError):
    pass


def fmt_real(x, digits: int | None = None) -> str:
    """Scientific notation with ``max(17, digits/2)`` significant digits."""
    digits = digits or mp.dps
    return to_str(to_mpf(x)._mpf_, max(17, digits // 2), strip_zeros=False,
                  min_fixed=1, max_fixed=0, show_zero_exponent=True)


def load_problem(data: dict, origin: str = "<problem>") -> tuple[ProblemSpec, int | None]:
    """Validate a problem document; returns the spec and its optional precision."""
    if not isinstance(data, dict):
        raise ProblemFileError(f"{origin}: expected a key/value document")
    unknown = set(data) - PROBLEM_KEYS
    if unknown:
        raise ProblemFileError(f"{origin}: unknown key(s) {', '.join(sorted(unknown))}")
    for key in ("gamma", "beta", "H"):
        if key not in data:
            raise ProblemFileError(f"{origin}: missing required key {key!r}")
    manufacture = bool(data.get("manufacture", False))
    if manufacture == ("g" in data):
        raise ProblemFileError(f"{origin}: give exactly one of 'g' or 'manufacture: true' with 'exact_y'")
    override = data.get("alpha_den_override")
    if override is not None and (not isinstance(override, int) or override < 1):
        raise ProblemFileError(f"{origin}: alpha_den_override must be a positive integer")
    precision = data.get("precision")
    if precision is not None and (not isinstance(precision, int) or precision < 15):
        raise ProblemFileError(f"{origin}: precision must be an integer >= 15")
    for key in ("H", "g", "exact_y"):
        if key in data and not isinstance(data[key], str):
            raise ProblemFileError(f"{origin}: {key!r} must be an expression string")
    spec = ProblemSpec.from_strings(
        str(data["gamma"]), str(data["beta"]), data["H"], data.get("g"), data.get("exact_y"),
        manufacture, override, data.get("name", origin),
    )
    return spec, precision


def _read_source(args) -> tuple[ProblemSpec, int | None]:
    if args.example:
        return load_problem({k: v for k, v in BUILTIN[args.example].items()}, args.example)
    try:
        with open(args.problem, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ProblemFileError(f"cannot read {args.problem}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ProblemFileError(f"{args.problem}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return load_problem(data, args.problem)


def _options(args) -> SolveOptions:
    alpha_den = None
    if getattr(args, "alpha_den", "auto") not in (None, "auto"):
        try:
            alpha_den = int(args.alpha_den)
        except ValueError as exc:
            raise UsageError("--alpha-den takes an integer or 'auto'") from exc
    return SolveOptions(
        quad_order=args.quad_order,
        error_grid=args.grid,
        residual_grid=args.residual_grid,
        alpha_den=alpha_den,
    )


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


SPECTRUM_SHOWN = 8


def _report_dict(report, params, digits) -> dict:
    # values past the scan are listed too, so the decay pattern is visible
    values = dict(report.values)
    if not report.compact:
        for r in range(SPECTRUM_SHOWN):
            values.setdefault(r, spectrum_value(report.h00, params, r))
    spectrum = [
        {"r": r, "lambda": str(Fraction(r) * params.alpha), "value": fmt_real(v, digits)}
        for r, v in sorted(values.items())
    ]
    return {
        "compact": report.compact,
        "h00": fmt_real(report.h00, digits),
        "spectrum": "h00*B(gamma, 1-gamma+beta+lambda), lambda = r*alpha",
        "checked_r_max": report.checked_r_max,
        "violations": list(report.violations),
        "min_gap": fmt_real(report.min_gap, digits) if report.min_gap is not None else None,
        "values": spectrum,
    }


def solution_document(spec: ProblemSpec, sol, digits: int) -> dict:
    return {
        "problem": spec.name,
        "gamma": str(spec.gamma),
        "beta": str(spec.beta),
        "precision": digits,
        "n": sol.n,
        "alpha": str(sol.params.alpha),
        "alpha_den": sol.params.delta,
        "height": sol.height,
        "coefficients": [fmt_real(c, 2 * digits) for c in sol.y.coeffs],
        "tau": [fmt_real(v, digits) for v in sol.tau],
        "tau_norm": fmt_real(sol.tau_norm, digits),
        "residual": fmt_real(sol.residual_sup, digits) if sol.residual_sup is not None else None,
        "sup_error": fmt_real(sol.sup_error, digits) if sol.sup_error is not None else None,
        "solvability": _report_dict(sol.solvability, sol.params, digits),
    }


# ---------------------------------------------------------------------------
# Subcommands


def _check_quad_order(options: SolveOptions, n: int) -> None:
    if n < 1:
        raise UsageError("n must be at least 1")
    if options.quad_order is not None and options.quad_order < n + 1:
        raise UsageError(f"--quad-order {options.quad_order} is below n + 1 = {n + 1}")


def cmd_solve(args) -> int:
    spec, file_precision = _read_source(args)
    digits = args.precision or file_precision or DEFAULT_PRECISION
    options = _options(args)
    _check_quad_order(options, args.n)
    with mp.workdps(digits):
        sol = solve(spec, args.n, options)
        doc = solution_document(spec, sol, digits)
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "exponent", "coefficient"])
        for k, c in enumerate(doc["coefficients"]):
            w.writerow([k, str(Fraction(k, sol.params.delta)), c])
        _emit(buf.getvalue(), args.out)
    else:
        _emit(json.dumps(doc, indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    if args.n_min > args.n_max or args.step < 1 or args.n_min < 1:
        raise UsageError("need 1 <= n_min <= n_max and step >= 1")
    spec, file_precision = _read_source(args)
    digits = args.precision or file_precision or DEFAULT_PRECISION
    options = _options(args)
    out = open(args.out, "w", encoding="utf-8", newline="") if args.out else sys.stdout
    records = []
    try:
        writer = csv.writer(out, lineterminator="\n") if args.format == "csv" else None
        if writer:
            writer.writerow(SWEEP_HEADER)
            out.flush()
        with mp.workdps(digits):
            forcing = None
            if spec.manufacture:
                params = derive_params(spec.gamma, spec.beta, options.alpha_den or spec.alpha_den_override)
                forcing = manufacture_g(ex.as_function(spec.exact_y, ("t",)),
                                        ex.as_function(spec.H, ("t", "s")), params, options.oracle_nodes)
            for n in range(args.n_min, args.n_max + 1, args.step):
                _check_quad_order(options, n)
                start = time.perf_counter()
                sol = solve(spec, n, options, forcing=forcing)
                wall_ms = int(round((time.perf_counter() - start) * 1000))
                row = {
                    "n": n,
                    "sup_error": fmt_real(sol.sup_error, digits) if sol.sup_error is not None else "",
                    "residual": fmt_real(sol.residual_sup, digits),
                    "height": sol.height,
                    "tau_norm": fmt_real(sol.tau_norm, digits),
                    "wall_ms": wall_ms,
                }
                records.append(row)
                if writer:
                    writer.writerow([row[k] for k in SWEEP_HEADER])
                    out.flush()
                log.info("n=%d done in %d ms", n, wall_ms)
    finally:
        if args.format == "json":
            out.write(json.dumps(records, indent=2) + "\n")
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_check(args) -> int:
    spec, file_precision = _read_source(args)
    digits = args.precision or file_precision or DEFAULT_PRECISION
    options = _options(args)
    with mp.workdps(digits):
        params = derive_params(spec.gamma, spec.beta, options.alpha_den or spec.alpha_den_override)
        kernel = _kernel_for(spec, args.n, FracGrid(params.delta), options)
        report = check_solvability(kernel.h00, params, options.margin, kernel.trunc_tol)
        doc = {"problem": spec.name, "alpha": str(params.alpha), "height": kernel.height,
               **_report_dict(report, params, digits)}
    _emit(json.dumps(doc, indent=2) + "\n", args.out)
    return EXIT_UNSOLVABLE if report.violations else EXIT_OK


def _parse_points(text: str) -> list[str]:
    return [p.strip() for p in text.split(",") if p.strip()]


def cmd_eval(args) -> int:
    try:
        with open(args.solution, encoding="utf-8") as fh:
            doc = json.load(fh)
        digits = int(doc.get("precision", DEFAULT_PRECISION))
        alpha_den = int(doc["alpha_den"])
        raw = doc["coefficients"]
    except OSError as exc:
        raise ProblemFileError(f"cannot read {args.solution}: {exc.strerror}") from exc
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ProblemFileError(f"{args.solution}: not a solution document ({exc})") from exc
    rows = []
    with mp.workdps(digits):
        poly = FracPoly.from_coeffs(FracGrid(alpha_den), [mpmath.mpf(c) for c in raw])
        for text in _parse_points(args.points):
            try:
                t = mpmath.mpf(text)
                rows.append({"t": text, "y": fmt_real(poly(t), digits), "error": ""})
            except (ValueError, DomainError) as exc:
                rows.append({"t": text, "y": "", "error": str(exc)})
    if args.format == "json":
        _emit(json.dumps(rows, indent=2) + "\n", args.out)
    else:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=["t", "y", "error"], lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        _emit(buf.getvalue(), args.out)
    return EXIT_OK


def cmd_examples(args) -> int:
    if args.action != "list":
        raise UsageError("the only examples action is 'list'")
    for key, entry in BUILTIN.items():
        print(f"{key}\tgamma={entry['gamma']}\tbeta={entry['beta']}\tH={entry['H']}\t{entry['description']}")
    return EXIT_OK


# ---------------------------------------------------------------------------


def _add_source(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--problem", help="path to a JSON problem file")
    src.add_argument("--example", choices=sorted(BUILTIN), help="built-in problem")
    p.add_argument("--precision", type=int, help="working precision in decimal digits (default 50)")
    p.add_argument("--alpha-den", default="auto", help="override the lattice denominator (integer or 'auto')")
    p.add_argument("--quad-order", type=int, help="Gauss nodes per panel for projections")
    p.add_argument("--grid", type=int, default=2000, help="error grid size (default 2000)")
    p.add_argument("--residual-grid", type=int, default=50, help="residual grid size (default 50)")
    p.add_argument("--out", help="write output here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fractau", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="compute one Tau-solution")
    _add_source(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="error table over a range of n")
    _add_source(p)
    p.add_argument("--n-min", type=int, required=True)
    p.add_argument("--n-max", type=int, required=True)
    p.add_argument("--step", type=int, default=1)
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("check", help="solvability report")
    _add_source(p)
    p.add_argument("--n", type=int, default=16, help="projection order for the kernel (default 16)")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("eval", help="evaluate a stored solution")
    p.add_argument("--solution", required=True, help="JSON document written by 'solve'")
    p.add_argument("--points", required=True, help="comma-separated points in [0, 1]")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("examples", help="built-in problems")
    p.add_argument("action", choices=["list"])
    p.set_defaults(func=cmd_examples)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"fractau: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ex.ParseError as exc:
        print(f"fractau: parse error at offset {exc.position}: {exc.message}", file=sys.stderr)
        return EXIT_PARSE
    except (ProblemFileError, ConstraintError) as exc:
        print(f"fractau: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except UnsolvableProblemError as exc:
        print(f"fractau: {exc}", file=sys.stderr)
        return EXIT_UNSOLVABLE
    except (SingularSystemError, DegenerateHeightError, ArithmeticError, DomainError) as exc:
        print(f"fractau: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
