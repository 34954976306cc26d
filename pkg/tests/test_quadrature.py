import math

import numpy as np
import pytest
import scipy.integrate
import scipy.special

from vofde.errors import NumericalAccuracyError, QuadratureError
from vofde.experiments import singular_quad, smooth_quad
from vofde.model import constant
from vofde.quadrature import gauss_legendre01, graded_quad


def linear_alpha(s):
    return 0.4 * np.asarray(s) + 1.2


def test_gauss_legendre_exact_for_polynomials():
    x, w = gauss_legendre01(16)
    for p in range(32):
        assert np.dot(w, x**p) == pytest.approx(1 / (p + 1), rel=1e-14)


def test_beta_closed_form():
    assert singular_quad(1.0, constant(1.5), tol=1e-13) == pytest.approx(math.pi / 2, rel=1e-12)
    for a in (1.1, 1.5, 1.9):
        for x in (0.3, 1.0):
            ref = x ** (4 - 2 * a) * scipy.special.beta(3 - a, 2 - a)
            assert singular_quad(x, constant(a), tol=1e-13) == pytest.approx(ref, rel=1e-11)


def test_small_x_scaling():
    xs = np.array([1e-2, 1e-4, 1e-6])
    vals = singular_quad(xs, linear_alpha, tol=1e-18)
    assert np.all(np.diff(vals) < 0) and vals[-1] < 1e-8
    exponent = 4 - 1.2 - linear_alpha(xs)
    ratio = vals / xs**exponent
    assert ratio[2] == pytest.approx(ratio[1], rel=1e-3)
    assert singular_quad(0.0, linear_alpha) == 0.0


def test_grading_ratios_agree():
    a = singular_quad(0.5, linear_alpha, tol=1e-13, ratio=2.0)
    b = singular_quad(0.5, linear_alpha, tol=1e-13, ratio=3.0)
    assert a == pytest.approx(b, abs=1e-11)


def test_against_qaws():
    # QAWS handles the (x-s)^{1-alpha(x)} weight exactly; the s-power is left in the integrand.
    for x in (0.2, 0.5, 0.9):
        ax = float(linear_alpha(x))
        ref, _ = scipy.integrate.quad(
            lambda s: s ** (2 - linear_alpha(s)) * 1.0, 0, x, weight="alg", wvar=(0.0, 1 - ax),
            epsabs=1e-15, epsrel=1e-14, limit=500,
        )
        assert singular_quad(x, linear_alpha, tol=1e-13) == pytest.approx(ref, abs=1e-11)


def test_smooth_quad_closed_forms():
    assert smooth_quad(1.0, "1-s", constant(1.0)) == pytest.approx(1 / 6, abs=1e-11)
    assert smooth_quad(1.0, "1-s", constant(1.0), tol=1e-14) == pytest.approx(1 / 6, abs=1e-13)
    assert smooth_quad(1.0, "x-s", constant(1.5)) == pytest.approx(4 / 15, abs=1e-11)
    assert smooth_quad(1.0, "x-s", constant(1.5), tol=1e-14) == pytest.approx(4 / 15, abs=1e-13)
    with pytest.raises(ValueError):
        smooth_quad(1.0, "s", constant(1.5))


def test_smooth_quad_refinement_stable():
    coarse = smooth_quad(0.5, "x-s", linear_alpha, tol=1e-11)
    fine = smooth_quad(0.5, "x-s", linear_alpha, tol=1e-14, order=24)
    assert coarse == pytest.approx(fine, abs=1e-11)


def test_budget_exhaustion_raises():
    with pytest.raises(QuadratureError) as info:
        singular_quad(0.7, linear_alpha, tol=1e-30, max_levels=5)
    assert isinstance(info.value, NumericalAccuracyError)
    assert info.value.achieved > 0 and info.value.estimate is not None


def test_graded_quad_validation():
    f = lambda s, t, x: np.ones_like(s)
    with pytest.raises(ValueError):
        graded_quad(f, [-1.0])
    with pytest.raises(ValueError):
        graded_quad(f, [1.0], left_power=-1.0)
    with pytest.raises(ValueError):
        graded_quad(f, [1.0], ratio=1.0)
    np.testing.assert_allclose(graded_quad(f, [0.0, 0.5, 2.0]), [0, 0.5, 2.0], rtol=1e-14)
