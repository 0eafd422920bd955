import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pefill.einstein_ode import (PRINTED, SeriesSeed, alternating_row_sum,
                                 combinatorial_identity_check, g_series, integrate_profiles,
                                 ode_residuals, series_seed)
from pefill.errors import SeedOrderTooLow
from pefill.profile import hyperbolic_profile


def _mul(a, b, N):
    return [sum(a[i] * b[k - i] for i in range(k + 1)) for k in range(N)]


def _deriv(a):
    return [k * a[k] for k in range(1, len(a))] + [Fraction(0)]


def _equation_coeff(f, n, k):
    """r^k coefficient of (n-1) F F'' + F'^2 - 1 - n F^2 for F = sum f_m r^m."""
    N = k + 1
    d1 = _deriv(f)
    d2 = _deriv(d1)
    e = [(n - 1) * x + y - n * z for x, y, z in zip(_mul(f, d2, N), _mul(d1, d1, N), _mul(f, f, N))]
    return e[k] - (1 if k == 0 else 0)


def _generic_series(n, M):
    """Order-by-order solve, treating the r^{m-1} coefficient as affine in f_m."""
    f = [Fraction(0), Fraction(1)] + [Fraction(0)] * (M + 2)
    for m in range(2, M + 1):
        f[m] = Fraction(0)
        c0 = _equation_coeff(f, n, m - 1)
        f[m] = Fraction(1)
        c1 = _equation_coeff(f, n, m - 1)
        f[m] = -c0 / (c1 - c0)
    return f[: M + 1]


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_recursion_matches_generic_solver(n):
    seed = series_seed(n, 13)
    assert seed.power_coefficients() == _generic_series(n, 13)


@pytest.mark.parametrize("n", [3, 4, 7])
def test_seed_is_sinh(n):
    seed = series_seed(n, 31)
    assert all(seed.a(m) == (1 if m % 2 else 0) for m in range(1, 32))
    assert all(isinstance(c, Fraction) for c in seed.coeffs)


def test_g_series_is_cosh():
    g = g_series(series_seed(4, 15))
    assert g == [Fraction(1 if k % 2 == 0 else 0, math.factorial(k)) for k in range(len(g))]


def test_seed_validation():
    with pytest.raises(ValueError):
        series_seed(3, 4)
    with pytest.raises(ValueError):
        SeriesSeed(3, 3, (Fraction(2), 0, 0))


def test_identity_rows():
    assert combinatorial_identity_check(60)
    for Q in (2, 5, 17):
        full = alternating_row_sum(Q, 0, 2 * Q)
        assert full == 0  # (1 - 1)^{2Q} / (2Q)!
        assert alternating_row_sum(Q) == Fraction(2 * Q - 2, math.factorial(2 * Q))


def test_n3_matches_sinh_cosh():
    sol = integrate_profiles(3, tol=1e-10)
    p = sol.profile
    assert np.max(np.abs(p.F - np.sinh(p.r)) / np.cosh(p.r)) < 1e-8
    assert np.max(np.abs(p.G - np.cosh(p.r)) / np.cosh(p.r)) < 1e-8
    assert sol.max_residual < 1e-9
    assert sol.constraint_residual < 1e-9


@pytest.mark.parametrize("form", ["geometric", PRINTED])
def test_n5_both_forms(form):
    sol = integrate_profiles(5, series_seed(5, 15), r_max=6, tol=1e-10, form=form)
    p = sol.profile
    assert np.max(np.abs(p.F / np.sinh(np.maximum(p.r, 1e-300)) - 1)[1:]) < 1e-8
    assert sol.max_residual < 1e-8


def test_tighter_tolerance_is_more_accurate():
    devs = []
    for tol in (1e-7, 1e-10):
        p = integrate_profiles(3, tol=tol, r_max=6).profile
        devs.append(np.max(np.abs(p.F - np.sinh(p.r)) / np.cosh(p.r)))
    assert devs[1] < devs[0] / 50


@settings(max_examples=10, deadline=None)
@given(st.floats(0.1, 10.0))
def test_G_linear_in_G0(G0):
    a = integrate_profiles(3, G0=1.0, r_max=3, num=101).profile
    b = integrate_profiles(3, G0=G0, r_max=3, num=101).profile
    np.testing.assert_allclose(b.G, G0 * a.G, rtol=1e-9)
    np.testing.assert_allclose(b.F, a.F, rtol=1e-12)


def test_low_order_seed_rejected():
    with pytest.raises(SeedOrderTooLow):
        integrate_profiles(3, series_seed(3, 3), r0=0.1)


def test_ode_residuals_exact_profile():
    res = ode_residuals(hyperbolic_profile(4, 1.0, r_max=5, num=101))
    assert res.shape == (101, 3)
    assert np.max(np.abs(res)) < 1e-11


def test_printed_form_differs_off_solution():
    # on a non-Einstein profile the two first equations disagree for n != 3
    r = np.linspace(0.2, 2.0, 100)
    from pefill.profile import MetricProfile
    p = MetricProfile.from_samples(5, r, np.sinh(r) * 1.1, np.cosh(r))
    a = ode_residuals(p)[:, 0]
    b = ode_residuals(p, form=PRINTED)[:, 0]
    assert np.max(np.abs(a - b)) > 1e-3
