"""Triangular solvers: dense forward substitution and fast divide-and-conquer."""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from .assembly import DenseLowerSystem, assemble_dense, assemble_rhs, exact_block
from .errors import ResourceError, SingularSystemError
from .model import ApproxParams, Grid, Problem
from .structured import BlockSpec, SpectrumCache, StructuredTables, block_matvec, precompute_tables

# Largest N for which the dense baseline is attempted (~2.1 GB of float64).
DENSE_LIMIT = 2**14


class SolverKind(str, enum.Enum):
    FS = "fs"
    FDAC = "fdac"


@dataclass
class SolveReport:
    v: np.ndarray
    assembly_seconds: float
    solve_seconds: float
    solver_kind: SolverKind
    params_used: Optional[ApproxParams] = None


@dataclass
class FdacTrace:
    """Instrumentation for the recursion (diagnostics and tests only).

    ``blocks`` lists ("diag", lo, hi) base-case solves and
    ("offdiag", row_lo, row_hi, col_lo, col_hi) right-hand-side updates;
    ``entries`` collects every exactly evaluated near-band entry.
    """

    blocks: list = field(default_factory=list)
    entries: list = field(default_factory=list)

    def record_entries(self, rows, cols, values):
        self.entries.extend(zip(rows.tolist(), cols.tolist(), values.tolist()))


def _triangular_solve(A, b):
    diag = np.diagonal(A)
    if np.any(diag == 0):
        raise SingularSystemError("zero on the diagonal of a triangular system")
    return scipy.linalg.solve_triangular(A, b, lower=True, check_finite=False)


def forward_substitution(system: DenseLowerSystem) -> np.ndarray:
    return _triangular_solve(system.entries, system.rhs)


def _fdac(lo, hi, b, v, tables, params, cache, trace):
    n = hi - lo
    if n <= params.base:
        block = exact_block(tables.alpha_rows, tables.scale_rows, lo, hi, lo, hi)
        v[lo:hi] = _triangular_solve(block, b[lo:hi])
        if trace is not None:
            trace.blocks.append(("diag", lo, hi))
            r, c = np.tril_indices(n)
            trace.record_entries(lo + r, lo + c, block[r, c])
        return
    mid = lo + (n + 1) // 2
    _fdac(lo, mid, b, v, tables, params, cache, trace)
    spec = BlockSpec(row_lo=mid, row_hi=hi, col_lo=lo, col_hi=mid)
    b[mid:hi] -= block_matvec(spec, tables, params, v[lo:mid], cache=cache, trace=trace)
    if trace is not None:
        trace.blocks.append(("offdiag", mid, hi, lo, mid))
    _fdac(mid, hi, b, v, tables, params, cache, trace)


def fdac_recursion(tables: StructuredTables, params: ApproxParams, rhs, trace=None) -> np.ndarray:
    """Solve the approximated system for given precomputed tables."""
    b = np.array(rhs, dtype=float)
    if len(b) != tables.size:
        raise ValueError(f"rhs has length {len(b)}, system has {tables.size} rows")
    v = np.empty_like(b)
    _fdac(0, len(b), b, v, tables, params, SpectrumCache(), trace)
    return v


def fdac_solve(problem: Problem, grid: Grid, params: ApproxParams, rhs, trace=None) -> SolveReport:
    """Fast divide-and-conquer solve of the approximated system.

    Entries with lag <= params.band, and all entries inside base-case
    diagonal blocks, are exact; the remaining far-lag entries use the
    truncated expansion. Assembly time covers table precomputation only.
    """
    t0 = time.perf_counter()
    tables = precompute_tables(problem, grid, params)
    t1 = time.perf_counter()
    v = fdac_recursion(tables, params, rhs, trace=trace)
    t2 = time.perf_counter()
    return SolveReport(
        v=v,
        assembly_seconds=t1 - t0,
        solve_seconds=t2 - t1,
        solver_kind=SolverKind.FDAC,
        params_used=params,
    )


def solve(problem: Problem, grid: Grid, method="fdac", params=None, dense_limit=DENSE_LIMIT) -> SolveReport:
    method = SolverKind(str(getattr(method, "value", method)).lower())
    if method is SolverKind.FS:
        if grid.n > dense_limit:
            raise ResourceError(
                f"dense forward substitution refused for N={grid.n} "
                f"(limit {dense_limit}); use the fdac solver instead"
            )
        t0 = time.perf_counter()
        system = assemble_dense(problem, grid)
        t1 = time.perf_counter()
        v = forward_substitution(system)
        t2 = time.perf_counter()
        return SolveReport(v=v, assembly_seconds=t1 - t0, solve_seconds=t2 - t1, solver_kind=SolverKind.FS)

    if params is None:
        params = ApproxParams.default(grid.n)
    rhs = assemble_rhs(problem, grid)
    return fdac_solve(problem, grid, params, rhs)
