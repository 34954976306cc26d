"""Composite Gauss-Legendre quadrature on geometrically graded meshes.

Integrals int_0^x F(s) ds whose integrand behaves like s^a near 0 and,
optionally, like (x - s)^b near x. Each side of the midpoint x/2 carries
panels [x/2 r^{-(j+1)}, x/2 r^{-j}] (mirrored at the right end). The
innermost remaining piece [0, delta] is integrated after the substitution
s = delta w^{1/(1+a)}, which absorbs the leading power exactly.

Integrands are called as ``F(s, t, x)`` with t = x - s supplied separately,
since forming x - s near the right endpoint would cancel catastrophically.
All arguments broadcast with shape (len(x), n_points).
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import QuadratureError

GL_ORDER = 16
GRADING_RATIO = 2.0
MAX_LEVELS = 40
MIN_LEVELS = 4


@lru_cache(maxsize=None)
def gauss_legendre01(order: int):
    """Nodes and weights of the Gauss-Legendre rule on [0, 1]."""
    t, w = np.polynomial.legendre.leggauss(order)
    return (t + 1) / 2, w / 2


def _panel_left(F, x, lo, hi, rule):
    """GL on [lo, hi] measured from 0: s = lo..hi, t = x - s."""
    nodes, weights = rule
    width = hi - lo
    s = lo + width * nodes
    return (F(s, x - s, x) * weights).sum(axis=1) * width[:, 0]


def _panel_right(F, x, lo, hi, rule):
    """GL on distances t = lo..hi from the right end: s = x - t."""
    nodes, weights = rule
    width = hi - lo
    t = lo + width * nodes
    return (F(x - t, t, x) * weights).sum(axis=1) * width[:, 0]


def _terminal_left(F, x, delta, power, rule):
    nodes, weights = rule
    p = 1.0 / (1.0 + power)
    s = delta * nodes**p
    jac = delta * p * nodes ** (p - 1.0)
    return (F(s, x - s, x) * jac * weights).sum(axis=1)


def _terminal_right(F, x, delta, power, rule):
    nodes, weights = rule
    p = 1.0 / (1.0 + power)
    t = delta * nodes**p
    jac = delta * p * nodes ** (p - 1.0)
    return (F(x - t, t, x) * jac * weights).sum(axis=1)


def graded_quad(
    F,
    x,
    left_power=0.0,
    right_power=None,
    *,
    tol=1e-10,
    ratio=GRADING_RATIO,
    order=GL_ORDER,
    max_levels=MAX_LEVELS,
    min_levels=MIN_LEVELS,
):
    """int_0^x F(s) ds for each x, refined until successive levels agree to ``tol``.

    ``left_power`` is the exponent a of the s^a behaviour at 0 (0 for a
    bounded integrand). ``right_power`` is the exponent b of (x - s)^b at
    the right end, or None to treat [x/2, x] as smooth (one panel). Both may
    be arrays broadcasting against ``x``.

    Raises QuadratureError if the budget of ``max_levels`` is exhausted.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x < 0):
        raise ValueError("graded_quad needs x >= 0")
    if ratio <= 1:
        raise ValueError("grading ratio must exceed 1")
    out = np.zeros_like(x)
    active = x > 0
    if not active.any():
        return out

    idx = np.nonzero(active)[0]
    xs = x[idx][:, None]
    a = np.broadcast_to(np.asarray(left_power, dtype=float), x.shape)[idx][:, None]
    b = None
    if right_power is not None:
        b = np.broadcast_to(np.asarray(right_power, dtype=float), x.shape)[idx][:, None]
    if np.any(a <= -1) or (b is not None and np.any(b <= -1)):
        raise ValueError("endpoint exponents must exceed -1")
    rule = gauss_legendre01(order)
    half = xs / 2

    panels = np.zeros(len(idx))
    if b is None:
        panels += _panel_left(F, xs, half, xs, rule)

    def level_value(level, panels_sum):
        delta = half * ratio**-level
        val = panels_sum + _terminal_left(F, xs, delta, a, rule)
        if b is not None:
            val = val + _terminal_right(F, xs, delta, b, rule)
        return val

    previous = level_value(0, panels)
    change = np.full(len(idx), np.inf)
    for level in range(1, max_levels + 1):
        outer = half * ratio ** -(level - 1)
        inner = half * ratio**-level
        panels = panels + _panel_left(F, xs, inner, outer, rule)
        if b is not None:
            panels = panels + _panel_right(F, xs, inner, outer, rule)
        current = level_value(level, panels)
        change = np.abs(current - previous)
        previous = current
        if level >= min_levels and np.all(change <= tol):
            out[idx] = current
            return out

    worst = int(np.argmax(change))
    raise QuadratureError(
        f"graded quadrature did not reach tol={tol:g} in {max_levels} levels "
        f"(worst change {change[worst]:.3e} at x={xs[worst, 0]:.6g})",
        estimate=previous,
        achieved=float(change[worst]),
    )
