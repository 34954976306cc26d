"""Exact collocation system A v = f for the second-derivative proxy v.

Rows and columns use the global indices 1..N+1 in the public scalar
functions; array helpers work with 0-based positions r = i - 1. The
unknown v_0 = -f(0) is eliminated into the right-hand side.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Grid, Problem, gamma_fn


@dataclass(frozen=True)
class DenseLowerSystem:
    entries: np.ndarray  # (N+1, N+1), lower triangular
    rhs: np.ndarray  # (N+1,)


def power(base, exponent):
    """Elementwise base**exponent with 0**positive = 0.

    Operands are made contiguous first: numpy dispatches strided inputs to
    a different pow kernel, and the exact-band entries of the fast solver
    must be bit-identical to the dense ones.
    """
    b, e = np.broadcast_arrays(np.asarray(base, dtype=float), np.asarray(exponent, dtype=float))
    shape = b.shape
    out = np.power(np.ascontiguousarray(b).ravel(), np.ascontiguousarray(e).ravel())
    return out.reshape(shape)


def second_difference(lag, exponent):
    """(lag-1)^e - 2 lag^e + (lag+1)^e, elementwise."""
    lag = np.asarray(lag, dtype=float)
    return power(lag - 1.0, exponent) - 2.0 * power(lag, exponent) + power(lag + 1.0, exponent)


def t_exact(lag, alpha_i):
    """Lag weight of an off-diagonal stiffness entry (lag >= 1)."""
    lag_arr = np.asarray(lag)
    if np.any(lag_arr < 1):
        raise ValueError("t_exact needs lag >= 1; the diagonal is handled separately")
    out = second_difference(lag_arr, 3.0 - np.asarray(alpha_i, dtype=float))
    return float(out) if out.ndim == 0 else out


def row_coefficients(problem: Problem, grid: Grid):
    """alpha(x_i) and the row factor d(x_i) h^{2-alpha} / Gamma(4-alpha), i = 1..N+1."""
    x = np.ascontiguousarray(grid.nodes[1:])
    alpha = np.asarray(problem.alpha(x), dtype=float)
    d = np.asarray(problem.d(x), dtype=float)
    scale = d * power(grid.h, 2.0 - alpha) / gamma_fn(4.0 - alpha)
    return alpha, scale


def exact_entry(i: int, j: int, problem: Problem, grid: Grid) -> float:
    if not 1 <= j <= i <= grid.n + 1:
        raise ValueError(f"need 1 <= j <= i <= N+1, got i={i}, j={j}")
    xi = np.array([grid.nodes[i]])
    alpha = np.asarray(problem.alpha(xi), dtype=float)
    d = np.asarray(problem.d(xi), dtype=float)
    scale = d * power(grid.h, 2.0 - alpha) / gamma_fn(4.0 - alpha)
    if i == j:
        return float(1.0 + scale[0])
    return float(scale[0] * second_difference(np.array([i - j]), 3.0 - alpha)[0])


def exact_block(alpha_rows, scale_rows, row_lo, row_hi, col_lo, col_hi):
    """Dense exact block A[row_lo:row_hi, col_lo:col_hi] (0-based positions)."""
    rows = np.arange(row_lo, row_hi)
    cols = np.arange(col_lo, col_hi)
    lag = rows[:, None] - cols[None, :]
    e = (3.0 - alpha_rows[row_lo:row_hi])[:, None]
    block = np.zeros(lag.shape)
    lower = lag > 0
    if lower.any():
        ee = np.broadcast_to(e, lag.shape)[lower]
        block[lower] = scale_rows[row_lo:row_hi][:, None].repeat(len(cols), 1)[lower] * second_difference(
            lag[lower], ee
        )
    diag = lag == 0
    if diag.any():
        r = np.nonzero(diag)[0]
        block[diag] = 1.0 + scale_rows[row_lo:row_hi][r]
    return block


def assemble_rhs(problem: Problem, grid: Grid) -> np.ndarray:
    """Right-hand side f_1..f_{N+1} with the v_0 column moved across."""
    x = np.ascontiguousarray(grid.nodes[1:])
    h = grid.h
    fx = np.asarray(problem.f(x), dtype=float)
    v0 = -float(np.asarray(problem.f(np.array([0.0])))[0])
    rhs = -fx
    if v0 != 0.0:
        alpha = np.asarray(problem.alpha(x), dtype=float)
        d = np.asarray(problem.d(x), dtype=float)
        e = 3.0 - alpha
        correction = power(x, 2.0 - alpha) / gamma_fn(3.0 - alpha) + (
            power(x - grid.nodes[1], e) - power(x, e)
        ) / (h * gamma_fn(4.0 - alpha))
        rhs = rhs - d * v0 * correction
    return rhs


def assemble_dense(problem: Problem, grid: Grid) -> DenseLowerSystem:
    """Full (N+1) x (N+1) lower-triangular matrix; O(N^2) memory."""
    size = grid.n + 1
    alpha, scale = row_coefficients(problem, grid)
    try:
        A = np.zeros((size, size))
    except MemoryError as exc:
        from .errors import ResourceError

        raise ResourceError(f"cannot allocate dense {size}x{size} system") from exc
    m = np.arange(size + 1, dtype=float)
    for r in range(size):
        A[r, r] = 1.0 + scale[r]
        if r == 0:
            continue
        # P[l] = l^e for l = 0..r+1; column c sits at lag l = r - c.
        P = power(m[: r + 2], np.full(r + 2, 3.0 - alpha[r]))
        t = P[:r] - 2.0 * P[1 : r + 1] + P[2 : r + 2]
        A[r, :r] = scale[r] * t[::-1]
    return DenseLowerSystem(entries=A, rhs=assemble_rhs(problem, grid))
