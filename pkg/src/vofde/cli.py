"""Command-line front end.

    vofde solve        --experiment 1 --n 3 --solver fs
    vofde convergence  --experiment 1 --solver both --n 256..8192
    vofde bench        --experiment 2 --alpha0 1.0 --alpha1 1.5 --solver fdac --n 256..32768
    vofde approx-error --n 1024 --s-list 2,4,8,16 --k-list 1,2,3 --band-list 2,8

Exit status: 0 success, 2 usage, 3 numerical accuracy, 4 resource.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import sys
from typing import Iterable, List, Optional, Sequence

import numpy as np

from .errors import NumericalAccuracyError, ResourceError
from .experiments import (
    StudyRow,
    convergence_study,
    experiment1,
    experiment2,
    max_nodal_error,
    scaling_benchmark,
)
from .model import ApproxParams, constant, make_grid
from .postprocess import to_solution
from .solver import DENSE_LIMIT, solve
from .structured import entry_error

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_RESOURCE = 0, 2, 3, 4

STUDY_HEADER = ["n", "solver", "error", "order", "cpu_m_seconds", "cpu_s_seconds", "s", "k", "band", "base"]
_STUDY_FIELDS = ["n", "solver", "error", "order", "cpu_m", "cpu_s", "s", "k", "band", "base"]
_INT_FIELDS = {"n", "s", "k", "band", "base"}
_STR_FIELDS = {"solver"}


class UsageError(ValueError):
    pass


def parse_sizes(text: str) -> List[int]:
    """'A..B' -> A, 2A, 4A, ... <= B; 'a,b,c' -> list; 'a' -> [a]."""
    text = text.strip()
    try:
        if ".." in text:
            lo, hi = (int(part) for part in text.split(".."))
            if lo < 1 or hi < lo:
                raise UsageError(f"bad size range {text!r}")
            out, n = [], lo
            while n <= hi:
                out.append(n)
                n *= 2
            return out
        sizes = [int(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise UsageError(f"cannot parse grid sizes {text!r}") from exc
    if not sizes or any(n < 1 for n in sizes):
        raise UsageError("grid sizes must be >= 1")
    return sizes


def _int_list(text):
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise UsageError(f"cannot parse integer list {text!r}") from exc


def format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def rows_to_csv(rows: Iterable[StudyRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(STUDY_HEADER)
    for row in rows:
        writer.writerow([format_value(getattr(row, name)) for name in _STUDY_FIELDS])
    return buf.getvalue()


def rows_from_csv(text: str) -> List[StudyRow]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if header != STUDY_HEADER:
        raise ValueError(f"unexpected CSV header {header}")
    rows = []
    for record in reader:
        values = {}
        for name, cell in zip(_STUDY_FIELDS, record):
            if cell == "":
                values[name] = None
            elif name in _INT_FIELDS:
                values[name] = int(cell)
            elif name in _STR_FIELDS:
                values[name] = cell
            else:
                values[name] = float(cell)
        rows.append(StudyRow(**values))
    return rows


def format_table(header: Sequence[str], records: Sequence[Sequence]) -> str:
    def cell(v):
        if v is None:
            return "-"
        if isinstance(v, float):
            return f"{v:.6g}"
        return str(v)

    cells = [[cell(v) for v in rec] for rec in records]
    widths = [max([len(h)] + [len(r[i]) for r in cells]) for i, h in enumerate(header)]
    lines = ["  ".join(h.rjust(w) for h, w in zip(header, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines.extend("  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells)
    return "\n".join(lines) + "\n"


def _study_table(rows):
    records = [[getattr(r, f) for f in _STUDY_FIELDS] for r in rows]
    text = format_table(STUDY_HEADER, records)
    notes = [f"N={r.n} {r.solver}: {r.note}" for r in rows if r.note]
    return text + "".join(n + "\n" for n in notes)


def _records_to_csv(header, records):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for rec in records:
        writer.writerow([format_value(v) for v in rec])
    return buf.getvalue()


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vofde", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, solvers=("fs", "fdac", "both"), default_solver="fdac"):
        p.add_argument("--experiment", type=int, choices=(1, 2), default=1)
        p.add_argument("--alpha0", type=float, default=None)
        p.add_argument("--alpha1", type=float, default=None)
        p.add_argument("--solver", choices=solvers, default=default_solver)
        p.add_argument("--s", type=int, default=None, help="override log-expansion order")
        p.add_argument("--k", type=int, default=None, help="override number of binomial terms")
        p.add_argument("--band", type=int, default=None, help="override exact band width")
        p.add_argument("--base", type=int, default=None, help="override direct-solve block size")
        p.add_argument("--dense-limit", type=int, default=DENSE_LIMIT)
        p.add_argument("--output", default=None, help="write CSV to this path")
        p.add_argument("--format", choices=("csv", "table"), default="table")

    p = sub.add_parser("solve", help="solve once and print nodal values")
    common(p)
    p.add_argument("--n", required=True, type=int)
    p.add_argument("--diffusivity", type=float, default=None, help="replace d(x) by a constant")

    p = sub.add_parser("convergence", help="error and observed order over grid sizes")
    common(p, default_solver="both")
    p.add_argument("--n", required=True)

    p = sub.add_parser("bench", help="median timings over grid sizes")
    common(p, default_solver="both")
    p.add_argument("--n", required=True)
    p.add_argument("--repetitions", type=int, default=None)
    p.add_argument("--with-error", action="store_true")

    p = sub.add_parser("approx-error", help="max entry error of the approximated matrix")
    p.add_argument("--experiment", type=int, choices=(1, 2), default=1)
    p.add_argument("--alpha0", type=float, default=None)
    p.add_argument("--alpha1", type=float, default=None)
    p.add_argument("--n", required=True, type=int)
    p.add_argument("--s-list", default=None)
    p.add_argument("--k-list", default="2")
    p.add_argument("--band-list", default=None)
    p.add_argument("--rows", type=int, default=None, help="sample this many rows (default: all)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", default=None)
    p.add_argument("--format", choices=("csv", "table"), default="table")
    return parser


def _problem(args):
    kw = {}
    if args.alpha0 is not None:
        kw["alpha0"] = args.alpha0
    if args.alpha1 is not None:
        kw["alpha1"] = args.alpha1
    try:
        problem = experiment1(**kw) if args.experiment == 1 else experiment2(**kw)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if getattr(args, "diffusivity", None) is not None:
        if args.diffusivity < 0:
            raise UsageError("--diffusivity must be non-negative")
        problem = dataclasses.replace(
            problem, d=constant(args.diffusivity), exact=None, exact_second_derivative=None
        )
    return problem


def _policy(args):
    overrides = {name: getattr(args, name) for name in ("s", "k", "band", "base") if getattr(args, name) is not None}

    def policy(n):
        params = ApproxParams.default(n)
        return dataclasses.replace(params, **overrides) if overrides else params

    try:
        policy(2)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    return policy


def _methods(args):
    return ["fs", "fdac"] if args.solver == "both" else [args.solver]


def _emit(args, csv_text, table_text, out):
    if args.output:
        with open(args.output, "w", newline="") as fh:
            fh.write(csv_text)
    out.write(csv_text if args.format == "csv" else table_text)


def _cmd_solve(args, out):
    problem = _problem(args)
    grid = make_grid(args.n)
    policy = _policy(args)
    header = ["solver", "i", "x", "u", "u_exact", "abs_error"]
    records = []
    errors = []
    for method in _methods(args):
        params = policy(grid.n) if method == "fdac" else None
        report = solve(problem, grid, method, params=params, dense_limit=args.dense_limit)
        sol = to_solution(problem, grid, report.v)
        exact = problem.exact(grid.interior) if problem.exact is not None else None
        for idx in range(grid.n):
            ue = float(exact[idx]) if exact is not None else None
            err = abs(sol.u[idx] - ue) if ue is not None else None
            records.append([method, idx + 1, float(grid.interior[idx]), float(sol.u[idx]), ue, err])
        if exact is not None:
            errors.append(f"{method}: max nodal error {max_nodal_error(sol.u, exact, grid):.6e}")
    table = format_table(header, records) + "".join(e + "\n" for e in errors)
    _emit(args, _records_to_csv(header, records), table, out)


def _cmd_convergence(args, out):
    problem = _problem(args)
    if problem.exact is None:
        raise UsageError("convergence needs a problem with a known exact solution")
    sizes = parse_sizes(args.n)
    policy = _policy(args)
    rows = []
    for method in _methods(args):
        rows.extend(convergence_study(problem, method, sizes, params_policy=policy, dense_limit=args.dense_limit))
    _emit(args, rows_to_csv(rows), _study_table(rows), out)
    return rows


def _cmd_bench(args, out):
    problem = _problem(args)
    sizes = parse_sizes(args.n)
    if args.repetitions is not None and args.repetitions < 1:
        raise UsageError("--repetitions must be >= 1")
    rows = scaling_benchmark(
        problem,
        _methods(args),
        sizes,
        repetitions=args.repetitions,
        params_policy=_policy(args),
        dense_limit=args.dense_limit,
        with_error=args.with_error,
    )
    _emit(args, rows_to_csv(rows), _study_table(rows), out)
    return rows


def _cmd_approx_error(args, out):
    problem = _problem(args)
    grid = make_grid(args.n)
    defaults = ApproxParams.default(grid.n)
    s_list = _int_list(args.s_list) if args.s_list else [defaults.s]
    k_list = _int_list(args.k_list)
    band_list = _int_list(args.band_list) if args.band_list else [defaults.band]
    rows = None
    if args.rows is not None:
        if args.rows < 1:
            raise UsageError("--rows must be >= 1")
        rng = np.random.default_rng(args.seed)
        take = min(args.rows, grid.n + 1)
        rows = np.sort(rng.choice(np.arange(1, grid.n + 2), size=take, replace=False))
    header = ["n", "s", "k", "band", "max_entry_error", "row", "lag"]
    records = []
    for s in s_list:
        for k in k_list:
            for band in band_list:
                try:
                    params = ApproxParams(s=s, k=k, band=band, base=max(64, band))
                except ValueError as exc:
                    raise UsageError(str(exc)) from exc
                res = entry_error(problem, grid, params, rows=rows)
                records.append([grid.n, s, k, band, res.max_error, res.row, res.lag])
    _emit(args, _records_to_csv(header, records), format_table(header, records), out)


_COMMANDS = {
    "solve": _cmd_solve,
    "convergence": _cmd_convergence,
    "bench": _cmd_bench,
    "approx-error": _cmd_approx_error,
}


def run(argv: Optional[Sequence[str]] = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        _COMMANDS[args.command](args, out)
    except UsageError as exc:
        print(f"vofde: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalAccuracyError as exc:
        print(f"vofde: numerical accuracy error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ResourceError, MemoryError) as exc:
        print(f"vofde: resource error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
