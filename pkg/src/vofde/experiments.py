"""Manufactured test problems, error metrics and convergence/timing studies."""

from __future__ import annotations

import hashlib
import math
import statistics
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import VofdeError
from .model import ApproxParams, Problem, constant, gamma_fn, make_grid
from .postprocess import to_solution
from .quadrature import graded_quad
from .solver import DENSE_LIMIT, SolverKind, solve

# Default quadrature tolerances: exact solution and right-hand side.
EXACT_TOL = 1e-11
RHS_TOL = 1e-10
# Chunk of evaluation points handled per vectorised quadrature call.
_CHUNK = 4096


def _power_s(s, alpha):
    return np.power(s, 2.0 - alpha(s))


def singular_quad(x, alpha, alpha_x=None, tol=RHS_TOL, **quad_kw):
    """int_0^x s^{2-alpha(s)} (x-s)^{1-alpha_x} ds.

    ``alpha_x`` defaults to alpha(x) evaluated pointwise; pass a scalar to
    freeze the kernel order.
    """
    if alpha_x is None:
        def order_at(xx):
            return alpha(xx)
    else:
        def order_at(xx):
            return np.full(np.shape(xx), float(alpha_x))

    def F(s, t, xx):
        return _power_s(s, alpha) * np.power(t, 1.0 - order_at(xx))

    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    left = 2.0 - float(alpha(np.array([0.0]))[0])
    out = _chunked(
        lambda xc: graded_quad(F, xc, left_power=left, right_power=1.0 - order_at(xc), tol=tol, **quad_kw),
        x_arr,
    )
    return float(out[0]) if np.ndim(x) == 0 else out


def smooth_quad(x, weight, alpha, tol=EXACT_TOL, **quad_kw):
    """int s^{2-alpha(s)} w(s) ds with w = x - s over (0, x) or w = 1 - s over (0, 1)."""
    if weight not in ("x-s", "1-s"):
        raise ValueError("weight must be 'x-s' or '1-s'")

    def F(s, t, xx):
        return _power_s(s, alpha) * t

    left = 2.0 - float(alpha(np.array([0.0]))[0])
    if weight == "1-s":
        return float(graded_quad(F, np.array([1.0]), left_power=left, tol=tol, **quad_kw)[0])
    x_arr = np.atleast_1d(np.asarray(x, dtype=float))
    out = _chunked(lambda xc: graded_quad(F, xc, left_power=left, tol=tol, **quad_kw), x_arr)
    return float(out[0]) if np.ndim(x) == 0 else out


def _chunked(fn, x):
    out = np.empty_like(x)
    for start in range(0, len(x), _CHUNK):
        out[start : start + _CHUNK] = fn(x[start : start + _CHUNK])
    return out


class _NodalCache:
    """Memoise an expensive vectorised function by the exact bytes of its input."""

    def __init__(self, fn, maxsize=16):
        self.fn = fn
        self.maxsize = maxsize
        self.store = {}

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        key = (x.shape, hashlib.sha1(np.ascontiguousarray(x).tobytes()).hexdigest())
        hit = self.store.get(key)
        if hit is None:
            hit = self.fn(x)
            if len(self.store) >= self.maxsize:
                self.store.pop(next(iter(self.store)))
            self.store[key] = hit
        return hit.copy()


@dataclass
class QuadratureSolution:
    """Exact solution of the boundary-layer experiment, evaluated by quadrature."""

    alpha: Callable
    tol: float = EXACT_TOL
    _cache: dict = field(default_factory=dict, repr=False)

    def evaluate(self, x, tol=None):
        tol = self.tol if tol is None else tol
        x = np.asarray(x, dtype=float)
        key = (tol, x.shape, hashlib.sha1(np.ascontiguousarray(x).tobytes()).hexdigest())
        if key not in self._cache:
            whole = smooth_quad(1.0, "1-s", self.alpha, tol=tol)
            self._cache[key] = smooth_quad(x, "x-s", self.alpha, tol=tol) - x * whole
        return self._cache[key].copy()

    def __call__(self, x):
        return self.evaluate(x)


def experiment1(alpha0=1.2, alpha1=1.6) -> Problem:
    """Smooth solution u = x^4 (1 - x) with a sinusoidally varying order."""
    if not (1.0 <= alpha0 < 2.0 and 1.0 <= alpha1 < 2.0):
        raise ValueError("alpha0 and alpha1 must lie in [1, 2)")

    def alpha(x):
        y = 1.0 - np.asarray(x, dtype=float)
        return (alpha0 - alpha1) * (y - np.sin(2 * np.pi * y) / (2 * np.pi)) + alpha1

    def f(x):
        x = np.asarray(x, dtype=float)
        a = alpha(x)
        return -(12 * x**2 - 20 * x**3) - (
            24 / gamma_fn(5 - a) * np.power(x, 4 - a) - 120 / gamma_fn(6 - a) * np.power(x, 5 - a)
        )

    return Problem(
        alpha=alpha,
        d=constant(1.0),
        f=f,
        alpha_min=min(alpha0, alpha1),
        alpha_max=max(alpha0, alpha1),
        exact=lambda x: np.asarray(x, dtype=float) ** 4 * (1 - np.asarray(x, dtype=float)),
        exact_second_derivative=lambda s: 12 * s**2 - 20 * s**3,
        name=f"experiment1(alpha0={alpha0}, alpha1={alpha1})",
    )


def experiment2(alpha0=1.2, alpha1=1.6, rhs_tol=RHS_TOL, exact_tol=EXACT_TOL) -> Problem:
    """Boundary-layer solution at x = 0 with a linear order profile."""
    if not 1.0 <= alpha0 <= alpha1 < 2.0:
        raise ValueError("need 1 <= alpha0 <= alpha1 < 2")

    def alpha(x):
        return (alpha1 - alpha0) * np.asarray(x, dtype=float) + alpha0

    def f_raw(x):
        a = alpha(x)
        integral = singular_quad(x, alpha, tol=rhs_tol)
        return -np.power(x, 2.0 - a) - integral / gamma_fn(2.0 - a)

    return Problem(
        alpha=alpha,
        d=constant(1.0),
        f=_NodalCache(f_raw),
        alpha_min=alpha0,
        alpha_max=alpha1,
        exact=QuadratureSolution(alpha, tol=exact_tol),
        exact_second_derivative=lambda s: _power_s(s, alpha),
        name=f"experiment2(alpha0={alpha0}, alpha1={alpha1})",
    )


def operator_residual(problem: Problem, x, left_power=0.0, tol=1e-12):
    """-u'' - d D^{alpha(x)} u - f at points x, for the problem's exact u.

    The Caputo integral of the supplied second derivative is evaluated by
    graded quadrature, independently of any discretisation.
    """
    u2 = problem.exact_second_derivative
    if u2 is None:
        raise ValueError("problem has no exact second derivative")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    alpha = problem.alpha

    def F(s, t, xx):
        return u2(s) * np.power(t, 1.0 - alpha(xx))

    a = alpha(x)
    caputo = graded_quad(F, x, left_power=left_power, right_power=1.0 - a, tol=tol) / gamma_fn(2.0 - a)
    return -u2(x) - problem.d(x) * caputo - problem.f(x)


def max_nodal_error(u_numeric, u_exact, grid) -> float:
    u_numeric = np.asarray(u_numeric, dtype=float)
    if u_numeric.shape != (grid.n,):
        raise ValueError(f"expected {grid.n} nodal values, got {u_numeric.shape}")
    exact = u_exact(grid.interior) if callable(u_exact) else np.asarray(u_exact, dtype=float)
    return float(np.max(np.abs(u_numeric - exact)))


@dataclass
class StudyRow:
    n: int
    solver: str
    error: Optional[float] = None
    order: Optional[float] = None
    cpu_m: Optional[float] = None
    cpu_s: Optional[float] = None
    s: Optional[int] = None
    k: Optional[int] = None
    band: Optional[int] = None
    base: Optional[int] = None
    note: str = ""

    @property
    def failed(self) -> bool:
        return self.error is None and bool(self.note)


def observed_order(err_prev, err_cur, n_prev, n_cur) -> Optional[float]:
    """log(err_prev/err_cur) / log(n_cur/n_prev); log2 of the error ratio for doublings."""
    if not err_prev or not err_cur or err_prev <= 0 or err_cur <= 0:
        return None
    return math.log(err_prev / err_cur) / math.log(n_cur / n_prev)


def _fill_orders(rows: Sequence[StudyRow]) -> None:
    for prev, cur in zip(rows, rows[1:]):
        cur.order = observed_order(prev.error, cur.error, prev.n, cur.n)


def default_policy(n: int) -> ApproxParams:
    return ApproxParams.default(n)


def _solve_with_error(problem, n, method, params_policy, dense_limit, with_error=True):
    grid = make_grid(n)
    params = params_policy(n) if method is SolverKind.FDAC else None
    report = solve(problem, grid, method, params=params, dense_limit=dense_limit)
    note = ""
    err = None
    if with_error and problem.exact is not None:
        sol = to_solution(problem, grid, report.v)
        err = max_nodal_error(sol.u, problem.exact, grid)
        tol = getattr(problem.exact, "tol", None)
        if tol is not None and err < 100 * tol:
            # Keep the exact-solution quadrature two orders below the error.
            tight = err / 1000
            err = max_nodal_error(sol.u, problem.exact.evaluate(grid.interior, tol=tight), grid)
            note = f"exact-solution tol tightened to {tight:.1e}"
    return report, err, note


def _row(n, method, report=None, err=None, note=""):
    row = StudyRow(n=n, solver=method.value, error=err, note=note)
    if report is not None:
        row.cpu_m = report.assembly_seconds
        row.cpu_s = report.solve_seconds
        if report.params_used is not None:
            p = report.params_used
            row.s, row.k, row.band, row.base = p.s, p.k, p.band, p.base
    return row


def convergence_study(problem, method, sizes, params_policy=None, dense_limit=DENSE_LIMIT):
    """Solve at each size and record error, observed order and timings.

    Failures (resource limits, quadrature non-convergence) mark the row as
    failed instead of aborting the study.
    """
    method = SolverKind(getattr(method, "value", method))
    params_policy = params_policy or default_policy
    sizes = list(sizes)
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError("grid sizes must be strictly increasing")
    rows = []
    for n in sizes:
        try:
            report, err, note = _solve_with_error(problem, n, method, params_policy, dense_limit)
            rows.append(_row(n, method, report, err, note))
        except VofdeError as exc:
            rows.append(_row(n, method, note=f"failed: {exc}"))
    _fill_orders(rows)
    return rows


def scaling_benchmark(
    problem,
    methods,
    sizes,
    repetitions=None,
    params_policy=None,
    dense_limit=DENSE_LIMIT,
    with_error=False,
):
    """Median-of-repetitions timings per method and size.

    Default repetitions: 3 for N <= 2^12, 1 above. FS rows above the dense
    limit are omitted.
    """
    params_policy = params_policy or default_policy
    methods = [SolverKind(getattr(m, "value", m)) for m in methods]
    by_method = {m: [] for m in methods}
    for n in sizes:
        reps = repetitions if repetitions is not None else (3 if n <= 2**12 else 1)
        if reps < 1:
            raise ValueError("repetitions must be >= 1")
        for method in methods:
            if method is SolverKind.FS and n > dense_limit:
                continue
            reports = []
            err = None
            note = ""
            try:
                for r in range(reps):
                    report, e, nt = _solve_with_error(
                        problem, n, method, params_policy, dense_limit, with_error=with_error and r == 0
                    )
                    if r == 0:
                        err, note = e, nt
                    reports.append(report)
            except VofdeError as exc:
                by_method[method].append(_row(n, method, note=f"failed: {exc}"))
                continue
            row = _row(n, method, reports[0], err, note)
            row.cpu_m = statistics.median(r.assembly_seconds for r in reports)
            row.cpu_s = statistics.median(r.solve_seconds for r in reports)
            by_method[method].append(row)
    rows = []
    for method in methods:
        _fill_orders(by_method[method])
        rows.extend(by_method[method])
    return rows


def timing_ratios(rows: Sequence[StudyRow], attr="cpu_s"):
    """Successive ratios of a timing column, keyed by the larger n."""
    out = {}
    for prev, cur in zip(rows, rows[1:]):
        a, b = getattr(prev, attr), getattr(cur, attr)
        if a and b:
            out[cur.n] = b / a
    return out

