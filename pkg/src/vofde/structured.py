"""Sum-of-diagonal-times-Toeplitz approximation of off-diagonal blocks.

For lag m = i - j the off-diagonal weight (m-1)^e - 2 m^e + (m+1)^e,
e = 3 - alpha(x_i), is expanded twice: a binomial series in 1/m (k even
terms kept) and a power series of m^{abar - alpha(x_i)} in ln m (terms up
to s kept). Each product term splits into a row factor K[p, q](i) and a
lag-only generator g[p, q](m) = ln^p(m) / m^{abar + 2q - 3}, so a block of
the matrix is sum_{p,q} diag(K[p,q]) T[p,q] with Toeplitz T[p,q].

Lags at or below ``band`` are never approximated; they are added back
exactly as a small triangular corner correction.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from .assembly import row_coefficients, second_difference
from .model import ApproxParams, Grid, Problem, binom_real


def fft_workers() -> int:
    """Worker count for scipy.fft, capped by VOFDE_THREADS (0/unset: default)."""
    raw = os.environ.get("VOFDE_THREADS", "").strip()
    try:
        value = int(raw) if raw else 0
    except ValueError:
        value = 0
    return value if value > 0 else 1


def _fft_length(n: int) -> int:
    return 1 << max(0, (n - 1).bit_length())


@dataclass(frozen=True)
class StructuredTables:
    """Generators and row scalings for one (problem, grid, params) triple.

    ``generators`` and ``scalings`` have shape (s+1, k, N+1): the last axis
    is lag m = 1..N+1 for generators and row i = 1..N+1 for scalings.
    ``alpha_rows``/``scale_rows`` feed the exact near-band entries.
    """

    alpha_bar: float
    generators: np.ndarray
    scalings: np.ndarray
    alpha_rows: np.ndarray
    scale_rows: np.ndarray

    @property
    def size(self) -> int:
        return self.generators.shape[-1]

    @property
    def flat_generators(self) -> np.ndarray:
        return self.generators.reshape(-1, self.size)

    @property
    def flat_scalings(self) -> np.ndarray:
        return self.scalings.reshape(-1, self.size)

    @property
    def nbytes(self) -> int:
        return self.generators.nbytes + self.scalings.nbytes


@dataclass(frozen=True)
class BlockSpec:
    """Off-diagonal block rows [row_lo, row_hi) x cols [col_lo, col_hi), 0-based."""

    row_lo: int
    row_hi: int
    col_lo: int
    col_hi: int

    def __post_init__(self):
        if self.col_hi != self.row_lo:
            raise ValueError("off-diagonal blocks must satisfy col_hi == row_lo")
        if not (self.col_lo < self.col_hi and self.row_lo < self.row_hi):
            raise ValueError(f"empty block {self}")

    @property
    def n_rows(self) -> int:
        return self.row_hi - self.row_lo

    @property
    def n_cols(self) -> int:
        return self.col_hi - self.col_lo


def precompute_tables(problem: Problem, grid: Grid, params: ApproxParams) -> StructuredTables:
    size = grid.n + 1
    abar = problem.alpha_bar
    alpha, scale = row_coefficients(problem, grid)

    m = np.arange(1, size + 1, dtype=float)
    log_m = np.log(m)
    generators = np.empty((params.s + 1, params.k, size))
    for q in range(1, params.k + 1):
        decay = m ** -(abar + 2 * q - 3)
        layer = decay.copy()
        for p in range(params.s + 1):
            generators[p, q - 1] = layer
            layer = layer * log_m

    scalings = np.empty((params.s + 1, params.k, size))
    delta = abar - alpha
    taylor = np.ones(size)
    for p in range(params.s + 1):
        if p > 0:
            taylor = taylor * delta / p
        for q in range(1, params.k + 1):
            scalings[p, q - 1] = 2.0 * scale * taylor * binom_real(3.0 - alpha, 2 * q)

    return StructuredTables(
        alpha_bar=abar,
        generators=generators,
        scalings=scalings,
        alpha_rows=alpha,
        scale_rows=scale,
    )


def t_approx(lag, alpha_i, alpha_bar, s, k):
    """Truncated double expansion of the lag weight (same shape as ``lag``)."""
    lag = np.asarray(lag, dtype=float)
    alpha_i = np.asarray(alpha_i, dtype=float)
    if np.any(lag < 1):
        raise ValueError("t_approx needs lag >= 1")
    log_lag = np.log(lag)
    delta = alpha_bar - alpha_i
    log_sum = np.zeros(np.broadcast(lag, alpha_i).shape)
    term = np.ones_like(log_sum)
    for p in range(s + 1):
        if p > 0:
            term = term * delta * log_lag / p
        log_sum = log_sum + term
    binom_sum = np.zeros_like(log_sum)
    for q in range(1, k + 1):
        binom_sum = binom_sum + binom_real(3.0 - alpha_i, 2 * q) * lag ** (-2.0 * q)
    out = 2.0 * lag ** (3.0 - alpha_bar) * log_sum * binom_sum
    return float(out) if out.ndim == 0 else out


def truncation_surrogate(lag, alpha_i, alpha_bar, s, k):
    """Error bound shape for the truncated expansion, without its constant.

    Log-series part: (s+1)^{-1/2} lag^{1-abar} (e ln lag / (2(s+1)))^{s+1}.
    Binomial part: (2k)^{alpha_i-4} at lag 1, otherwise additionally
    divided by (lag-1)^{2k+alpha_i-1}.
    """
    lag = np.asarray(lag, dtype=float)
    alpha_i = np.asarray(alpha_i, dtype=float)
    log_part = (
        (s + 1) ** -0.5
        * lag ** (1.0 - alpha_bar)
        * (math.e * np.log(lag) / (2.0 * (s + 1))) ** (s + 1)
    )
    binom_part = (2.0 * k) ** (alpha_i - 4.0)
    far = lag >= 2
    tail = np.where(far, np.maximum(lag - 1.0, 1.0) ** -(2 * k + alpha_i - 1.0), 1.0)
    out = log_part + binom_part * tail
    return float(out) if out.ndim == 0 else out


def toeplitz_matvec(first_col, first_row, x):
    """T @ x for the Toeplitz matrix with the given first column and row.

    T may be rectangular (len(first_col) rows, len(first_row) columns).
    Uses circulant embedding, zero-padded to a power of two.
    """
    c = np.asarray(first_col, dtype=float)
    r = np.asarray(first_row, dtype=float)
    x = np.asarray(x, dtype=float)
    if c.ndim != 1 or r.ndim != 1 or x.ndim != 1:
        raise ValueError("first_col, first_row and x must be 1-D")
    if len(x) != len(r) or len(c) == 0:
        raise ValueError(f"x has length {len(x)} but T has {len(r)} columns")
    if c[0] != r[0]:
        raise ValueError("first_col[0] and first_row[0] must agree")
    n_rows, n_cols = len(c), len(r)
    L = _fft_length(n_rows + n_cols)
    embed = np.zeros(L)
    embed[:n_rows] = c
    if n_cols > 1:
        embed[L - n_cols + 1 :] = r[:0:-1]
    workers = fft_workers()
    spec = scipy.fft.rfft(embed, workers=workers) * scipy.fft.rfft(x, n=L, workers=workers)
    return scipy.fft.irfft(spec, n=L, workers=workers)[:n_rows]


@dataclass
class SpectrumCache:
    """Generator spectra for block_matvec, keyed by block shape.

    Every off-diagonal block with the same (rows, cols) has the same lag
    range, so its generator spectra are shared. Owned by a single solve.
    """

    entries: dict = field(default_factory=dict)

    def get(self, tables: StructuredTables, band: int, n_rows: int, n_cols: int):
        key = (n_rows, n_cols, band)
        hit = self.entries.get(key)
        if hit is None:
            hit = _generator_spectra(tables, band, n_rows, n_cols)
            self.entries[key] = hit
        return hit

    @property
    def nbytes(self) -> int:
        return sum(spec.nbytes for _, spec in self.entries.values())


def _generator_spectra(tables, band, n_rows, n_cols):
    # Lags in a block run 1..n_rows+n_cols-1; lag l sits at index l-1.
    n_lags = n_rows + n_cols - 1
    L = _fft_length(n_lags)
    seq = np.zeros((tables.flat_generators.shape[0], L))
    seq[:, :n_lags] = tables.flat_generators[:, :n_lags]
    seq[:, : min(band, n_lags)] = 0.0
    return L, scipy.fft.rfft(seq, axis=-1, workers=fft_workers())


def band_correction(spec: BlockSpec, tables: StructuredTables, band: int, x, trace=None):
    """Exact contribution of entries with lag <= band (the corner near the diagonal)."""
    n_rows, n_cols = spec.n_rows, spec.n_cols
    rows_local, lags = np.meshgrid(
        np.arange(min(band, n_rows)), np.arange(1, band + 1), indexing="ij"
    )
    cols_local = n_cols + rows_local - lags
    keep = (lags > rows_local) & (cols_local >= 0)
    a = rows_local[keep]
    b = cols_local[keep]
    lag = lags[keep]
    out = np.zeros(n_rows)
    if a.size == 0:
        return out
    rows = spec.row_lo + a
    values = tables.scale_rows[rows] * second_difference(lag, 3.0 - tables.alpha_rows[rows])
    if trace is not None:
        trace.record_entries(rows, spec.col_lo + b, values)
    np.add.at(out, a, values * x[b])
    return out


def block_matvec(spec: BlockSpec, tables: StructuredTables, params: ApproxParams, x, cache=None, trace=None):
    """Apply the approximated off-diagonal block (far lags) plus the exact band."""
    x = np.asarray(x, dtype=float)
    if len(x) != spec.n_cols:
        raise ValueError(f"x has length {len(x)}, block has {spec.n_cols} columns")
    if spec.row_hi > tables.size:
        raise ValueError("block exceeds the system size")
    n_rows, n_cols = spec.n_rows, spec.n_cols
    band = params.band
    y = band_correction(spec, tables, band, x, trace)
    if band >= n_rows + n_cols - 1:
        return y
    if cache is None:
        cache = SpectrumCache()
    L, spectra = cache.get(tables, band, n_rows, n_cols)
    workers = fft_workers()
    xs = scipy.fft.rfft(x, n=L, workers=workers)
    conv = scipy.fft.irfft(spectra * xs, n=L, axis=-1, workers=workers)
    # Output row a is the linear convolution at index n_cols - 1 + a.
    window = conv[:, n_cols - 1 : n_cols - 1 + n_rows]
    K = tables.flat_scalings[:, spec.row_lo : spec.row_hi]
    y += np.einsum("pr,pr->r", K, window)
    return y


@dataclass(frozen=True)
class EntryError:
    max_error: float
    row: int  # global row index i (1-based)
    lag: int


def entry_error(problem: Problem, grid: Grid, params: ApproxParams, rows=None, lags=None) -> EntryError:
    """max |A~_ij - A_ij| over entries with lag > band, optionally on a row/lag subset.

    A~ is evaluated from the tables (sum of K * g), the route the solver uses.
    ``rows`` are global indices 1..N+1; ``lags`` restricts the lags examined.
    """
    tables = precompute_tables(problem, grid, params)
    size = tables.size
    rows = np.arange(1, size + 1) if rows is None else np.asarray(rows)
    K = tables.flat_scalings
    G = tables.flat_generators
    best = EntryError(0.0, 0, 0)
    for i in rows:
        r = i - 1
        lag = np.arange(params.band + 1, i) if lags is None else np.asarray([l for l in lags if params.band < l < i])
        if lag.size == 0:
            continue
        approx = K[:, r] @ G[:, lag - 1]
        exact = tables.scale_rows[r] * second_difference(lag, 3.0 - tables.alpha_rows[r])
        err = np.abs(approx - exact)
        at = int(np.argmax(err))
        if err[at] > best.max_error:
            best = EntryError(float(err[at]), int(i), int(lag[at]))
    return best
