"""Problem, grid and approximation-parameter types plus special functions.

Coefficient functions are vectorised callables: they take a float ndarray
of points and return an ndarray of the same shape.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.special

ArrayFn = Callable[[np.ndarray], np.ndarray]

# Points used to estimate alpha extrema when the caller does not supply them.
_ALPHA_SAMPLES = 100_001


def constant(value: float) -> ArrayFn:
    """Vectorised constant function."""
    value = float(value)

    def fn(x):
        return np.full(np.shape(x), value)

    return fn


@dataclass(frozen=True)
class Problem:
    """Coefficients of -u'' - d(x) D^{alpha(x)} u = f on (0, 1), u(0) = u(1) = 0.

    ``alpha_min`` / ``alpha_max`` should be passed when known in closed
    form; otherwise they are estimated by sampling alpha on a fine uniform
    grid, which is approximate. ``exact`` and ``exact_second_derivative``
    are optional handles for manufactured solutions.
    """

    alpha: ArrayFn
    d: ArrayFn
    f: ArrayFn
    alpha_min: Optional[float] = None
    alpha_max: Optional[float] = None
    exact: Optional[ArrayFn] = None
    exact_second_derivative: Optional[ArrayFn] = None
    name: str = "custom"
    alpha_sampled: bool = field(default=False, init=False)

    def __post_init__(self):
        if self.alpha_min is None or self.alpha_max is None:
            xs = np.linspace(0.0, 1.0, _ALPHA_SAMPLES)
            a = np.asarray(self.alpha(xs), dtype=float)
            if self.alpha_min is None:
                object.__setattr__(self, "alpha_min", float(a.min()))
            if self.alpha_max is None:
                object.__setattr__(self, "alpha_max", float(a.max()))
            object.__setattr__(self, "alpha_sampled", True)
        if not 1.0 <= self.alpha_min <= self.alpha_max < 2.0:
            raise ValueError(
                f"need 1 <= alpha_min <= alpha_max < 2, got "
                f"[{self.alpha_min}, {self.alpha_max}]"
            )

    @property
    def alpha_bar(self) -> float:
        return (self.alpha_max + self.alpha_min) / 2

    def check(self, x: np.ndarray) -> None:
        """Validate the coefficient invariants at sample points ``x``."""
        a = np.asarray(self.alpha(x), dtype=float)
        slack = 1e-12
        if np.any(a < self.alpha_min - slack) or np.any(a > self.alpha_max + slack):
            raise ValueError("alpha leaves [alpha_min, alpha_max] at sampled points")
        if np.any(np.asarray(self.d(x)) < 0):
            raise ValueError("diffusivity d must be non-negative")


@dataclass(frozen=True)
class Grid:
    """Uniform partition x_m = m h, m = 0..n+1, h = 1/(n+1)."""

    n: int
    h: float
    nodes: np.ndarray = field(repr=False)

    @property
    def interior(self) -> np.ndarray:
        return self.nodes[1:-1]


def make_grid(n: int) -> Grid:
    if int(n) != n or n < 1:
        raise ValueError(f"grid needs n >= 1 interior nodes, got {n!r}")
    n = int(n)
    h = 1.0 / (n + 1)
    nodes = np.arange(n + 2) * h
    nodes[-1] = 1.0
    nodes.setflags(write=False)
    return Grid(n=n, h=h, nodes=nodes)


@dataclass(frozen=True)
class ApproxParams:
    """Truncation orders and block sizes for the fast solver.

    s    -- highest power kept in the logarithmic expansion
    k    -- number of even binomial terms kept
    band -- lags at or below this are evaluated exactly
    base -- blocks of this size or smaller are solved directly
    """

    s: int
    k: int
    band: int
    base: int

    def __post_init__(self):
        if self.s < 0 or self.k < 1 or self.band < 1 or self.base < 1:
            raise ValueError(f"invalid approximation parameters {self}")

    @classmethod
    def default(cls, n: int) -> "ApproxParams":
        """Defaults for n unknowns: k = 2, s = ceil(e/2 ln n), band = ceil(ln n)."""
        ln_n = math.log(n)
        s = math.ceil(math.e / 2 * ln_n)
        band = max(1, math.ceil(ln_n))
        return cls(s=s, k=2, band=band, base=max(64, band))


@dataclass(frozen=True)
class Solution:
    """Second-derivative proxy v_0..v_{N+1} and nodal values u_1..u_N."""

    v: np.ndarray
    u: np.ndarray


def gamma_fn(x):
    """Gamma function for positive real arguments (scalar or array)."""
    arr = np.asarray(x, dtype=float)
    if np.any(arr <= 0) or np.any(~np.isfinite(arr)):
        raise ValueError("gamma_fn is only defined here for finite x > 0")
    out = scipy.special.gamma(arr)
    return float(out) if out.ndim == 0 else out


def binom_real(a, m: int):
    """Generalised binomial coefficient prod_{r<m} (a - r) / m!.

    ``a`` may be an array; ``m`` is a non-negative integer.
    """
    if m < 0:
        raise ValueError("m must be non-negative")
    a = np.asarray(a, dtype=float)
    out = np.ones_like(a)
    for r in range(m):
        out = out * (a - r) / (r + 1)
    return float(out) if out.ndim == 0 else out
