import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from airyline import airy
from airyline.airy import (KAPPA, KernelEvaluator, airy_ai, airy_ai_prime, airy_pair,
                           expected_count, expected_count_exact, extended_kernel_eval,
                           kernel_diagonal, kernel_eval, kernel_quadrature, tracy_widom_cdf,
                           tracy_widom_interp, tracy_widom_moments)
from airyline.errors import RangeError

# Reference values, independent of this package.
AI0 = 3 ** (-2 / 3) / math.gamma(2 / 3)
AIP0 = -(3 ** (-1 / 3)) / math.gamma(1 / 3)
TW_MEAN, TW_VAR = -1.7710868074, 0.8131947928


def _maclaurin(x, terms=50):
    """Plain double-precision Maclaurin series; only trusted near 0."""
    c = [0.0] * (3 * terms)
    c[0], c[1] = AI0, AIP0
    for m in range(3, len(c)):
        c[m] = c[m - 3] / ((m - 1) * m)
    return sum(cm * x ** m for m, cm in enumerate(c))


def test_values_at_zero():
    assert airy_ai(0.0) == pytest.approx(0.3550280539, abs=1e-10)
    assert airy_ai_prime(0.0) == pytest.approx(-0.2588194038, abs=1e-10)
    assert abs(airy_ai(0.0) - AI0) < 1e-15
    assert abs(airy_ai_prime(0.0) - AIP0) < 1e-15


@pytest.mark.parametrize("x", [-1.5, -0.7, 0.3, 1.2])
def test_against_series_near_origin(x):
    assert abs(airy_ai(x) - _maclaurin(x)) < 1e-14


def test_against_mpmath_over_range():
    x = np.concatenate([np.linspace(-200, 200, 801), np.linspace(-8.5, -7.5, 41),
                        np.linspace(7.5, 8.5, 41)])
    ai, aip = airy_pair(x)
    ref_ai = np.array([float(mpmath.airyai(v)) for v in x])
    ref_aip = np.array([float(mpmath.airyai(v, derivative=1)) for v in x])
    assert np.max(np.abs(ai - ref_ai)) < 1e-12
    assert np.max(np.abs(aip - ref_aip)) < 1e-12


def test_branches_agree_at_switch():
    for x in (airy.SWITCH, -airy.SWITCH):
        lo = airy._taylor(np.array([x]))
        # the negative-side expansion takes |x| and returns Ai(-|x|), Ai'(-|x|)
        hi = (airy._asymptotic_positive if x > 0 else airy._asymptotic_negative)(np.array([abs(x)]))
        assert abs(lo[0][0] - hi[0][0]) < 1e-12
        assert abs(lo[1][0] - hi[1][0]) < 1e-12


@pytest.mark.parametrize("x", np.arange(-5, 6))
def test_airy_equation(x):
    h = 1e-3
    second = (airy_ai(x + h) - 2 * airy_ai(x) + airy_ai(x - h)) / h ** 2
    assert abs(second - x * airy_ai(x)) < 1e-6


def test_range_errors():
    with pytest.raises(RangeError):
        airy_ai(200.5)
    with pytest.raises(RangeError):
        airy_pair(np.array([0.0, -201.0]))


def test_kernel_examples():
    assert kernel_eval(0.0, 0.0) == pytest.approx(AIP0 ** 2, abs=1e-15)
    assert kernel_eval(0.0, 0.0) == pytest.approx(0.0669875, abs=1e-7)
    assert kernel_eval(5.0, 5.0) < 1e-6
    assert kernel_eval(5.0, 5.0) == pytest.approx(kernel_quadrature(5.0, 5.0), abs=1e-12)


def test_kernel_symmetry(stream):
    xy = stream.generator().uniform(-10, 5, (100, 2))
    a = kernel_eval(xy[:, 0], xy[:, 1])
    b = kernel_eval(xy[:, 1], xy[:, 0])
    assert np.max(np.abs(a - b)) <= 1e-14


def test_kernel_closed_form_against_quadrature(stream):
    xy = stream.generator().uniform(-10, 5, (200, 2))
    xy[:10, 1] = xy[:10, 0] + 1e-7  # near-diagonal branch
    closed = kernel_eval(xy[:, 0], xy[:, 1])
    quad = kernel_quadrature(xy[:, 0], xy[:, 1])
    assert np.max(np.abs(closed - quad)) <= 1e-8


@given(st.floats(-30, 10))
def test_kernel_diagonal_nonnegative(x):
    assert kernel_diagonal(x) >= 0


def test_kernel_integral_matches_closed_form():
    # int_s^inf K(x,x) dx = (2 s^2 Ai^2 - 2 s Ai'^2 - Ai Ai') / 3
    for s in (-6.0, -2.5, 0.0, 1.0):
        a, ap = airy_pair(s)
        assert expected_count_exact(-s) == pytest.approx((2 * s * s * a * a - 2 * s * ap * ap - a * ap) / 3,
                                                         abs=1e-10)


def test_extended_kernel_equal_times():
    for x, y in [(0.0, 0.0), (-2.0, 1.0), (-5.0, -4.5)]:
        assert abs(extended_kernel_eval(x, 0.3, y, 0.3) - kernel_eval(x, y)) <= 1e-8


def test_extended_kernel_oracle():
    want = float(mpmath.quad(lambda l: mpmath.exp(-0.1 * l) * mpmath.airyai(l) ** 2, [0, mpmath.inf]))
    assert abs(extended_kernel_eval(0.0, 0.1, 0.0, 0.0) - want) <= 1e-6 * abs(want)


def test_extended_kernel_lower_branch():
    want = -float(mpmath.quad(lambda l: mpmath.exp(-0.5 * l) * mpmath.airyai(-l) ** 2,
                              mpmath.linspace(0, 200, 201)))
    got = extended_kernel_eval(0.0, 0.0, 0.0, 0.5)
    assert abs(got - want) <= 1e-6 * abs(want)


def test_extended_kernel_truncation_consistency():
    for args in [(1.0, 0.3, -1.0, 0.0), (0.0, 0.0, 0.5, 0.7)]:
        a = extended_kernel_eval(*args)
        b = extended_kernel_eval(*args, tail_scale=1.5)
        assert abs(a - b) <= 1e-6 * max(abs(a), 1e-300)


def test_extended_kernel_outside_region():
    with pytest.raises(RangeError):
        extended_kernel_eval(0.0, 0.0, 0.0, 0.05)


def test_tw_monotone_and_saturated():
    s = np.linspace(-10, 6, 161)
    f = tracy_widom_cdf(s)
    assert np.all(np.diff(f) >= 0)
    assert f[0] < 1e-6 and 1 - f[-1] < 1e-6
    assert np.all((f >= 0) & (f <= 1))


def test_tw_order_doubling():
    a, b = KernelEvaluator(64), KernelEvaluator(128)
    for s in np.arange(-10, 6.01, 1.0):
        assert abs(a.fredholm_det(s) - b.fredholm_det(s)) <= 1e-8


def test_tw_moments():
    m1, v1 = tracy_widom_moments(KernelEvaluator(64))
    m2, v2 = tracy_widom_moments(KernelEvaluator(96), panels=48)
    assert abs(m1 - m2) <= 1e-6
    assert m1 == pytest.approx(TW_MEAN, abs=1e-8)
    assert v1 == pytest.approx(TW_VAR, abs=1e-8)


def test_tw_range():
    with pytest.raises(RangeError):
        tracy_widom_cdf(-10.5)
    with pytest.raises(RangeError):
        tracy_widom_cdf(7.0)


def test_tw_interpolation_off_grid():
    s = np.linspace(-9.993, 5.99, 57)
    assert np.max(np.abs(tracy_widom_interp(s) - tracy_widom_cdf(s))) < 1e-5


def test_expected_count():
    assert expected_count(0.0) == 0.0
    assert expected_count(-3.0) == 0.0
    assert expected_count(10.0) == pytest.approx(2 * 10 ** 1.5 / (3 * math.pi), rel=1e-15)
    assert expected_count(10.0) == pytest.approx(6.71056, abs=1e-5)
    assert abs(expected_count(KAPPA * 100 ** (2 / 3)) - 100) < 1


def test_kappa():
    assert abs(KAPPA - (3 * math.pi / 2) ** (2 / 3)) < 1e-12
