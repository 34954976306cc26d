"""Recover u from the piecewise-linear second-derivative proxy v_h.

u_h(x) = int_0^x v_h(s) (x - s) ds - x I,  I = int_0^1 v_h(s) (1 - s) ds.
"""

from __future__ import annotations

import numpy as np

from .model import Grid, Problem, Solution


def _check_v(v, grid):
    v = np.asarray(v, dtype=float)
    if v.shape != (grid.n + 2,):
        raise ValueError(f"v must have length N+2 = {grid.n + 2}, got {v.shape}")
    return v


def weighted_integral_I(v, grid: Grid) -> float:
    """Exact int_0^1 v_h(s)(1 - s) ds for nodal values v_0..v_{N+1}."""
    v = _check_v(v, grid)
    w = 1.0 - grid.nodes
    terms = v[:-1] * (2 * w[:-1] + w[1:]) + v[1:] * (w[:-1] + 2 * w[1:])
    return float(grid.h / 6 * terms.sum())


def reconstruct_u(v, grid: Grid) -> np.ndarray:
    """Nodal values u_1..u_N by the O(N) recurrence.

    u_1 = h^2 (2 v_0 + v_1)/6 - h I and
    u_{n+1} = u_n + h V_n + h^2 (2 v_n + v_{n+1})/6 - h I,
    where V_n is the running trapezoid integral of v_h over (0, x_n).
    """
    v = _check_v(v, grid)
    h = grid.h
    n = grid.n
    big_i = weighted_integral_I(v, grid)
    u = np.empty(n)
    running = 0.0
    acc = 0.0
    for m in range(n):
        acc += h * running + h * h * (2 * v[m] + v[m + 1]) / 6 - h * big_i
        u[m] = acc
        running += h * (v[m] + v[m + 1]) / 2
    return u


def u_h_at(x: float, v, grid: Grid) -> float:
    """Evaluate u_h at an arbitrary point of [0, 1] exactly."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must lie in [0, 1], got {x}")
    v = _check_v(v, grid)
    if x == 0.0:
        return 0.0
    h = grid.h
    nodes = grid.nodes
    # Elements fully left of x, then the partial element [x_m, x].
    m = min(int(x / h), grid.n + 1)
    if nodes[m] > x:
        m -= 1
    total = 0.0
    if m > 0:
        a, b = nodes[:m], nodes[1 : m + 1]
        va, vb = v[:m], v[1 : m + 1]
        mid = (a + b) / 2
        # Simpson is exact: the integrand is quadratic on each element.
        total += float(np.sum(h / 6 * (va * (x - a) + 2 * (va + vb) * (x - mid) + vb * (x - b))))
    if x > nodes[m]:
        a = nodes[m]
        vx = v[m] + (v[m + 1] - v[m]) * (x - a) / h
        length = x - a
        mid = (a + x) / 2
        vmid = (v[m] + vx) / 2
        total += length / 6 * (v[m] * (x - a) + 4 * vmid * (x - mid))
    return total - x * weighted_integral_I(v, grid)


def full_v(problem: Problem, v_system) -> np.ndarray:
    """Prepend v_0 = -f(0) to the solution of the N+1 unknown system."""
    v0 = -float(np.asarray(problem.f(np.array([0.0])))[0])
    return np.concatenate([[v0], np.asarray(v_system, dtype=float)])


def to_solution(problem: Problem, grid: Grid, v_system) -> Solution:
    v = full_v(problem, v_system)
    return Solution(v=v, u=reconstruct_u(v, grid))
