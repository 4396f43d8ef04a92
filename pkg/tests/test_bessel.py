import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special

from kuramoto2c import bessel as b
from kuramoto2c.errors import DomainError

mpmath.mp.dps = 40


def mp_ratio(m, x):
    return float(mpmath.besseli(m, x) / mpmath.besseli(0, x))


@pytest.mark.parametrize("x", [1e-8, 1e-3, 0.5, 1.0, 2.5, 7.0, 14.999, 15.0, 15.001, 30.0, 120.0, 699.0])
@pytest.mark.parametrize("m", [0, 1, 2])
def test_scaled_bessel_matches_mpmath(m, x):
    expected = float(mpmath.besseli(m, x) * mpmath.exp(-x))
    assert b.scaled_bessel_i(m, x) == pytest.approx(expected, rel=1e-13, abs=1e-300)


@pytest.mark.parametrize("x", [0.1, 1.0, 5.0, 14.0, 16.0, 50.0, 400.0, 5000.0])
def test_v_and_s_match_mpmath(x):
    assert b.v_fn(x) == pytest.approx(mp_ratio(1, x), rel=1e-13)
    assert b.s_fn(x) == pytest.approx(mp_ratio(2, x), rel=1e-13)


def test_v_matches_scipy_on_dense_grid():
    x = np.linspace(0.0, 700.0, 20001)
    ref = special.i1e(x) / special.i0e(x)
    assert np.max(np.abs(b.v_fn(x) - ref)) <= 1e-13


def test_bessel_i_small_values():
    assert b.bessel_i(0, 0.0) == 1.0
    assert b.bessel_i(1, 0.0) == 0.0
    assert b.bessel_i(2, 0.0) == 0.0
    assert b.bessel_i(0, 1.0) == pytest.approx(1.2660658777520082, rel=1e-15)


def test_limits_at_zero():
    assert b.v_fn(0.0) == 0.0
    assert b.w_fn(0.0) == 1.0
    assert b.v_prime(0.0) == pytest.approx(0.5, abs=1e-15)
    assert b.s_fn(0.0) == 0.0


def test_scalar_and_array_shapes_agree():
    xs = np.array([[0.3, 4.0], [17.0, 200.0]])
    out = b.v_fn(xs)
    assert out.shape == xs.shape
    for idx in np.ndindex(xs.shape):
        assert out[idx] == b.v_fn(float(xs[idx]))
    assert isinstance(b.v_fn(1.0), float)


def test_overflow_guard():
    with pytest.raises(DomainError):
        b.bessel_i(0, 701.0)
    # the scaled form and the ratios stay finite far beyond
    assert math.isfinite(b.scaled_bessel_i(1, 1e6))
    assert b.v_fn(1e6) == pytest.approx(1 - 0.5e-6, rel=1e-12)


@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
def test_non_finite_rejected(bad):
    with pytest.raises(DomainError):
        b.v_fn(bad)


def test_unsupported_order_and_level():
    with pytest.raises(DomainError):
        b.scaled_bessel_i(3, 1.0)
    with pytest.raises(DomainError):
        b.v_upper_bound(1.0, 3)
    with pytest.raises(DomainError):
        b.w_fn(-1.0)


def test_v_prime_identity_against_mpmath():
    for x in (0.2, 3.0, 12.0, 40.0):
        xm = mpmath.mpf(x)
        exact = float(mpmath.diff(lambda t: mpmath.besseli(1, t) / mpmath.besseli(0, t), xm))
        assert b.v_prime(x) == pytest.approx(exact, rel=1e-12)


def test_concavity_certificate_matches_second_derivative():
    for x in (0.5, 2.0, 8.0, 30.0):
        xm = mpmath.mpf(x)
        exact = float(mpmath.diff(lambda t: mpmath.besseli(1, t) / mpmath.besseli(0, t), xm, 2))
        assert b.concavity_certificate(x) == pytest.approx(exact, rel=1e-7, abs=1e-11)


def test_level_two_bound_formula():
    x = 3.0
    expected = x / (2.0 + x * x / (1.5 + math.sqrt(6.25 + x * x)))
    assert b.v_upper_bound(x, 2) == pytest.approx(expected, rel=1e-15)
    assert b.v_upper_bound(x, 1) == 1.5


def test_segura_lower_bounds_ratio():
    x = np.linspace(0.01, 60, 300)
    ratio = special.ive(2, x) / special.ive(1, x)
    assert np.all(x * b.segura_lower(2, x) <= ratio * (1 + 1e-14))


finite_x = st.floats(min_value=-600.0, max_value=600.0, allow_nan=False, allow_infinity=False)
positive_x = st.floats(min_value=1e-6, max_value=600.0, allow_nan=False, allow_infinity=False)


@given(finite_x)
def test_v_is_odd_and_bounded(x):
    v = b.v_fn(x)
    assert b.v_fn(-x) == -v
    assert abs(v) < 1.0
    assert abs(v) <= abs(x) / 2.0


@given(positive_x, positive_x)
def test_v_monotone(x, y):
    lo, hi = sorted((x, y))
    assert b.v_fn(lo) <= b.v_fn(hi)


@given(positive_x)
def test_derivative_identity(x):
    v = b.v_fn(x)
    assert b.v_prime(x) == pytest.approx(1.0 - v / x - v * v, rel=1e-9, abs=1e-15)
    assert b.v_prime(x) == pytest.approx(0.5 * (1 + b.s_fn(x)) - v * v, rel=1e-9, abs=1e-15)


@given(positive_x)
def test_w_between_zero_and_one(x):
    w = b.w_fn(x)
    assert 0.0 < w < 1.0


@given(st.floats(min_value=0.0, max_value=300.0, allow_nan=False))
def test_bessel_ordering(x):
    i0, i1, i2 = (b.scaled_bessel_i(m, x) for m in (0, 1, 2))
    assert i0 >= i1 >= i2 >= 0.0


@given(positive_x)
def test_upper_bounds_hold(x):
    # for small x the level-2 bound is tight to O(x^5), below one ulp
    v = b.v_fn(x)
    assert v <= b.v_upper_bound(x, 2) * (1 + 4e-16)
    assert b.v_upper_bound(x, 2) <= b.v_upper_bound(x, 1)
