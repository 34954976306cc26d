import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from vofde.model import ApproxParams, Problem, binom_real, constant, gamma_fn, make_grid


def test_make_grid_examples():
    g = make_grid(1)
    assert g.h == 0.5
    np.testing.assert_array_equal(g.nodes, [0, 0.5, 1])
    g = make_grid(3)
    np.testing.assert_array_equal(g.nodes, [0, 0.25, 0.5, 0.75, 1])
    g = make_grid(255)
    assert g.h == 1 / 256 and g.nodes[128] == 0.5
    assert g.nodes[-1] == 1.0 and len(g.interior) == 255


@pytest.mark.parametrize("n", [0, -3, 2.5])
def test_make_grid_rejects(n):
    with pytest.raises(ValueError):
        make_grid(n)


def test_grid_nodes_read_only():
    with pytest.raises(ValueError):
        make_grid(4).nodes[1] = 3.0


def test_gamma_examples():
    assert gamma_fn(1) == pytest.approx(1.0, abs=1e-15)
    assert gamma_fn(0.5) == pytest.approx(1.7724538509055160, rel=1e-14)
    assert gamma_fn(2.5) == pytest.approx(1.3293403881791370, rel=1e-14)


@pytest.mark.parametrize("x", [0.0, -1.0, float("nan"), float("inf")])
def test_gamma_rejects(x):
    with pytest.raises(ValueError):
        gamma_fn(x)


def test_gamma_matches_mpmath():
    xs = np.linspace(0.05, 4.0, 400)
    mine = gamma_fn(xs)
    ref = np.array([float(mpmath.gamma(mpmath.mpf(float(x)))) for x in xs])
    assert np.max(np.abs(mine - ref) / ref) <= 1e-13


def test_gamma_recurrence():
    for x in np.arange(1, 30) / 10:
        assert abs(gamma_fn(x + 1) - x * gamma_fn(x)) <= 1e-12 * gamma_fn(x + 1)


def test_binom_examples():
    assert binom_real(0.7, 0) == 1.0
    assert binom_real(1.5, 2) == pytest.approx(0.375, abs=1e-16)
    # 1.6 * 0.6 * (-0.4) * (-1.4) / 24: two negative factors, so positive.
    assert binom_real(1.6, 4) == pytest.approx(0.0224, rel=1e-13)
    assert binom_real(1.5, 4) == pytest.approx(0.0234375, rel=1e-14)


@given(st.integers(0, 30), st.integers(0, 30))
def test_binom_integer_case(a, m):
    assert binom_real(float(a), m) == pytest.approx(math.comb(a, m), rel=1e-12, abs=0)


@given(st.floats(0.05, 5.95).filter(lambda a: abs(a - round(a)) > 1e-6), st.integers(0, 8))
def test_binom_sign_flips_once_a_minus_m_plus_1_negative(a, m):
    # Non-integer a: the product has floor(a)+1 positive factors, the rest negative.
    negatives = max(0, m - (math.floor(a) + 1))
    assert np.sign(binom_real(a, m)) == (-1) ** negatives


def test_binom_array_input():
    a = np.array([1.5, 1.6])
    np.testing.assert_allclose(binom_real(a, 2), [0.375, 0.48])


def test_problem_validation():
    with pytest.raises(ValueError):
        Problem(alpha=constant(2.0), d=constant(1), f=constant(0))
    with pytest.raises(ValueError):
        Problem(alpha=constant(0.9), d=constant(1), f=constant(0))
    with pytest.raises(ValueError):
        Problem(alpha=constant(1.5), d=constant(1), f=constant(0), alpha_min=1.6, alpha_max=1.5)


def test_problem_sampled_extrema():
    p = Problem(alpha=lambda x: 1.2 + 0.3 * np.sin(np.pi * x), d=constant(1), f=constant(0))
    assert p.alpha_sampled
    assert p.alpha_min == pytest.approx(1.2)
    assert p.alpha_max == pytest.approx(1.5, abs=1e-9)
    p = Problem(alpha=constant(1.3), d=constant(1), f=constant(0), alpha_min=1.3, alpha_max=1.3)
    assert not p.alpha_sampled


@given(st.floats(1.0, 1.999), st.floats(0.0, 0.999))
def test_alpha_bar_inside_range(lo, width):
    hi = min(lo + width, 1.999)
    p = Problem(alpha=constant(lo), d=constant(1), f=constant(0), alpha_min=lo, alpha_max=hi)
    assert 1.0 <= p.alpha_bar < 2.0
    if hi > lo:
        assert p.alpha_bar > 1.0


def test_problem_check():
    p = Problem(alpha=constant(1.5), d=constant(-1), f=constant(0), alpha_min=1.5, alpha_max=1.5)
    with pytest.raises(ValueError):
        p.check(np.linspace(0, 1, 5))


def test_default_params():
    p = ApproxParams.default(1024)
    assert (p.s, p.k, p.band, p.base) == (10, 2, 7, 64)
    assert ApproxParams.default(1).band == 1
    assert ApproxParams.default(2**20).base == 64
    assert ApproxParams.default(2**20).s == math.ceil(math.e / 2 * math.log(2**20))


@pytest.mark.parametrize("kw", [dict(s=-1), dict(k=0), dict(band=0), dict(base=0)])
def test_params_validation(kw):
    args = dict(s=2, k=2, band=2, base=8)
    args.update(kw)
    with pytest.raises(ValueError):
        ApproxParams(**args)
