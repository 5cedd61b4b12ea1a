import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import special as sp

from qlab.special import (
    assoc_laguerre,
    assoc_laguerre_zero,
    assoc_laguerre_zeros,
    spherical_bessel_zero,
    spherical_bessel_zeros,
    spherical_harmonic,
    spherical_jn,
)


@pytest.mark.parametrize("l", [0, 1, 2, 5, 12, 30, 50])
def test_spherical_jn_against_mpmath(l):
    xs = [1e-3, 0.4, 0.99, 1.0, 3.7, float(l) + 0.5, 2.0 * l + 7.3, 80.0]
    got = spherical_jn(l, np.array(xs))
    for x, g in zip(xs, got):
        ref = float(mpmath.sqrt(mpmath.pi / (2 * x)) * mpmath.besselj(l + 0.5, x))
        assert g == pytest.approx(ref, rel=1e-12, abs=1e-300)


def test_spherical_jn_at_origin():
    assert spherical_jn(0, 0.0) == 1.0
    assert spherical_jn(3, 0.0) == 0.0


def test_order_out_of_range():
    with pytest.raises(ValueError):
        spherical_jn(51, 1.0)
    with pytest.raises(ValueError):
        spherical_bessel_zero(-1, 1)


@pytest.mark.parametrize("n", range(1, 6))
def test_l0_zeros_are_multiples_of_pi(n):
    assert spherical_bessel_zero(0, n) == pytest.approx(n * math.pi, abs=1e-10)


@pytest.mark.parametrize("l", [1, 2, 7, 20])
def test_bessel_zeros_against_mpmath(l):
    table = spherical_bessel_zeros(l, 4)
    for n, root in enumerate(table.roots, start=1):
        ref = float(mpmath.besseljzero(l + 0.5, n))
        assert root == pytest.approx(ref, rel=1e-12)


@settings(max_examples=15, deadline=None)
@given(l=st.integers(0, 30), n=st.integers(1, 6))
def test_bessel_zeros_interlace(l, n):
    # k_{l,n} < k_{l+1,n} < k_{l,n+1}
    assert spherical_bessel_zero(l, n) < spherical_bessel_zero(l + 1, n) < spherical_bessel_zero(l, n + 1)


@pytest.mark.parametrize("p,alpha", [(0, 0.5), (1, 0.5), (3, 2.5), (7, 0.0), (20, 4.5)])
def test_laguerre_values(p, alpha):
    x = np.linspace(0.0, 30.0, 13)
    ref = sp.eval_genlaguerre(p, alpha, x)
    np.testing.assert_allclose(assoc_laguerre(p, alpha, x), ref, rtol=1e-11, atol=1e-11)


@pytest.mark.parametrize("p,alpha", [(1, 0.5), (2, 0.5), (5, 1.5), (12, 3.5), (40, 0.5)])
def test_laguerre_roots_against_scipy(p, alpha):
    ref, _ = sp.roots_genlaguerre(p, alpha)
    got = assoc_laguerre_zeros(p, alpha).roots
    np.testing.assert_allclose(got, np.sort(ref), rtol=1e-12)


def test_laguerre_closed_forms():
    # L_1^{1/2}(x) = 3/2 - x and L_2^{1/2} roots are (5 -+ sqrt 10)/2
    assert assoc_laguerre_zero(1, 0.5, 1) == pytest.approx(1.5, abs=1e-14)
    assert assoc_laguerre_zero(2, 0.5, 1) == pytest.approx((5 - math.sqrt(10)) / 2, rel=1e-13)
    assert assoc_laguerre_zero(2, 0.5, 2) == pytest.approx((5 + math.sqrt(10)) / 2, rel=1e-13)


def test_laguerre_bad_index():
    with pytest.raises(ValueError):
        assoc_laguerre_zero(2, 0.5, 3)
    with pytest.raises(ValueError):
        assoc_laguerre_zeros(3, -1.5)


@settings(max_examples=25, deadline=None)
@given(p=st.integers(1, 25), alpha=st.floats(-0.9, 6.0))
def test_laguerre_roots_interlace(p, alpha):
    lo = assoc_laguerre_zeros(p, alpha).roots
    hi = assoc_laguerre_zeros(p + 1, alpha).roots
    assert len(lo) == p and len(hi) == p + 1
    for s in range(p):
        assert hi[s] < lo[s] < hi[s + 1]


@pytest.mark.parametrize("l,m", [(0, 0), (1, -1), (1, 1), (3, 2), (6, -4), (10, 10)])
def test_spherical_harmonic_against_scipy(l, m):
    theta = np.linspace(0.0, np.pi, 7)
    phi = np.linspace(0.0, 2 * np.pi, 5)
    T, P = np.meshgrid(theta, phi)
    np.testing.assert_allclose(
        spherical_harmonic(l, m, T, P), sp.sph_harm_y(l, m, T, P), rtol=1e-12, atol=1e-14
    )


def test_spherical_harmonic_bad_m():
    with pytest.raises(ValueError):
        spherical_harmonic(2, 3, 0.1, 0.2)
