import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from dimer_ppwpi.special_functions import (
    NestedIntegralArgs,
    QuadratureError,
    complex_erf,
    faddeeva,
    nested_gaussian_integral,
    nested_gaussian_integral_erf,
    quadrature_oracle,
)
from oracles import maclaurin_erf

finite = st.floats(min_value=-3.0, max_value=3.0, allow_nan=False)


def test_erf_of_i_matches_series():
    ref = maclaurin_erf(1j)
    assert abs(ref - 1.6504257587975428j) < 1e-15
    assert abs(complex_erf(1j) - ref) <= 1e-15 * abs(ref)


def test_erf_real_axis_matches_math():
    for x in (-2.0, -0.3, 0.0, 0.7, 1.9):
        assert complex_erf(x) == pytest.approx(math.erf(x), abs=1e-15)


@given(finite, finite)
@settings(max_examples=200, deadline=None)
def test_erf_matches_series_in_disc(x, y):
    z = complex(x, y)
    ref = maclaurin_erf(z)
    assert abs(complex_erf(z) - ref) <= 1e-12 * max(1.0, abs(ref))


@given(finite, finite)
@settings(max_examples=100, deadline=None)
def test_erf_is_odd_and_conjugate_symmetric(x, y):
    z = complex(x, y)
    assert complex_erf(-z) == -complex_erf(z)
    assert abs(complex_erf(z.conjugate()) - complex_erf(z).conjugate()) <= 1e-15 * max(1, abs(complex_erf(z)))


def test_erf_overflow_is_reported():
    with pytest.raises(OverflowError):
        complex_erf(30j)


def test_erf_broadcasts():
    z = np.array([0.1 + 0.2j, -1.0 + 0.5j, 2.0j])
    out = complex_erf(z)
    assert out.shape == (3,)
    assert np.allclose(out, [maclaurin_erf(v) for v in z], rtol=1e-13)


def test_faddeeva_relation_to_erfc():
    z = 0.3 - 0.8j
    assert faddeeva(z) == pytest.approx(np.exp(-z * z) * (1 - complex_erf(-1j * z)), rel=1e-13)


def test_zero_frequency_value():
    # ordered half of the full square: (2 pi s^2) / 2
    for s in (0.1, 1.0, 2.5):
        assert nested_gaussian_integral(0.0, 0.0, s) == pytest.approx(math.pi * s * s, rel=1e-15)


def test_agrees_with_real_axis_double_quadrature():
    """Plain scipy dblquad on the real time axes, no contour shift."""
    for a, b, s in ((0.4, -0.3, 1.0), (1.2, 0.9, 0.8), (-0.5, 1.5, 0.6)):
        lim = 10 * s

        def part(fn):
            def f(t1, t2):
                return fn(np.exp(-t1**2 / (2 * s * s) + 1j * a * t1 - t2**2 / (2 * s * s) - 1j * b * t2))
            return integrate.dblquad(f, -lim, lim, lambda t2: -lim, lambda t2: t2,
                                     epsabs=1e-13, epsrel=1e-12)[0]

        ref = part(np.real) + 1j * part(np.imag)
        assert abs(nested_gaussian_integral(a, b, s) - ref) <= 1e-9 * abs(ref)


@pytest.mark.parametrize("a,b,s", [(2.0, -1.0, 0.5), (-4.5, 3.0, 1.0), (5.0, 5.0, 2.0), (0.0, -5.0, 0.1)])
def test_closed_form_vs_oracle_points(a, b, s):
    ref = quadrature_oracle(a, b, s)
    assert abs(nested_gaussian_integral(a, b, s) - ref) <= 1e-10 * abs(ref)


def test_swap_identity_on_grid():
    vals = np.arange(-5.0, 5.0001, 0.5)
    a, b = np.meshgrid(vals, vals, indexing="ij")
    for s in (0.1, 0.5, 1.0, 2.0):
        lhs = nested_gaussian_integral(a, b, s) + nested_gaussian_integral(-b, -a, s)
        rhs = 2 * np.pi * s * s * np.exp(-0.5 * s * s * (a**2 + b**2))
        assert np.all(np.abs(lhs - rhs) <= 1e-12 * np.abs(rhs))


@given(finite, finite, st.floats(min_value=0.2, max_value=3.0))
@settings(max_examples=100, deadline=None)
def test_sigma_scaling(a, b, s):
    lhs = nested_gaussian_integral(a, b, s)
    rhs = s * s * nested_gaussian_integral(s * a, s * b, 1.0)
    assert abs(lhs - rhs) <= 1e-13 * max(abs(lhs), 1e-300)


@given(finite, finite)
@settings(max_examples=100, deadline=None)
def test_argument_exchange_symmetry(a, b):
    assert abs(nested_gaussian_integral(a, b, 0.7) - nested_gaussian_integral(b, a, 0.7)) <= 1e-15


def test_literal_erf_form_agrees_where_representable():
    for a, b, s in ((1.0, 2.0, 0.5), (-3.0, 1.0, 1.0), (4.0, 4.0, 1.0)):
        assert nested_gaussian_integral_erf(a, b, s) == pytest.approx(
            nested_gaussian_integral(a, b, s), rel=1e-11)


def test_large_arguments_stay_finite():
    # literal form overflows here; the scaled form does not
    a = b = 60.0
    with pytest.raises(OverflowError):
        nested_gaussian_integral_erf(a, b, 1.0)
    val = nested_gaussian_integral(a, b, 1.0)
    assert np.isfinite(val)
    # w(-y) ~ -i / (sqrt(pi) y) for large real y, so I ~ -i sqrt(pi) s^2 / y with y = s (a + b) / 2
    assert val == pytest.approx(-1j * math.sqrt(math.pi) / 60.0, rel=1e-3)


def test_broadcasting_shapes():
    out = nested_gaussian_integral(np.zeros((3, 1)), np.zeros((1, 4)), 1.0)
    assert out.shape == (3, 4)


@pytest.mark.parametrize("kwargs", [dict(alpha=float("nan"), beta=0, sigma=1),
                                    dict(alpha=0, beta=float("inf"), sigma=1),
                                    dict(alpha=0, beta=0, sigma=0.0),
                                    dict(alpha=0, beta=0, sigma=-1.0)])
def test_argument_validation(kwargs):
    with pytest.raises(ValueError):
        NestedIntegralArgs(**kwargs)


def test_nonpositive_sigma_rejected():
    with pytest.raises(ValueError):
        nested_gaussian_integral(1.0, 1.0, 0.0)


def test_oracle_reports_nonconvergence():
    with pytest.raises(QuadratureError):
        quadrature_oracle(1.0, -1.0, 1.0, n_start=8, n_max=8)
