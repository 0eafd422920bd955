import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pefill import _rk
from pefill.curvature import (FULL, PAIR, curvature_report, plane_multiplicities,
                              ricci_and_residual, sectional_curvatures, weyl_diagonal,
                              weyl_row_sums)
from pefill.errors import EinsteinResidualTooLarge, InvalidProfile
from pefill.profile import (MetricProfile, finite_difference, fd_weights, fit_cap_jet,
                            hyperbolic_profile)


def test_fd_weights_exact_on_polynomials():
    x = np.array([-0.3, -0.1, 0.0, 0.2, 0.5])
    for deg in range(5):
        y = x ** deg
        d1 = fd_weights(0.05, x, 1) @ y
        d2 = fd_weights(0.05, x, 2) @ y
        assert d1 == pytest.approx(deg * 0.05 ** (deg - 1) if deg else 0.0, abs=1e-12)
        assert d2 == pytest.approx(deg * (deg - 1) * 0.05 ** (deg - 2) if deg > 1 else 0.0,
                                   abs=1e-10)


def test_finite_difference_fourth_order():
    errs = []
    for num in (101, 201):
        r = np.linspace(0.5, 2.0, num)
        errs.append(np.max(np.abs(finite_difference(r, np.sin(r), 1) - np.cos(r))))
    assert errs[0] / errs[1] > 12


def test_profile_validation():
    r = np.linspace(0.1, 1.0, 10)
    one = np.ones_like(r)
    with pytest.raises(InvalidProfile):
        MetricProfile(3, r[::-1], one, one, one, one, one, one)
    with pytest.raises(InvalidProfile):
        MetricProfile(3, r, -one, one, one, one, one, one)
    r0 = np.linspace(0, 1, 10)
    with pytest.raises(InvalidProfile, match="cone"):
        MetricProfile(3, r0, 2 * r0, one[:10], 2 * one, 0 * one, 0 * one, 0 * one,
                      cap_kind="sphere-cap")


def test_csv_round_trip(tmp_path):
    p = hyperbolic_profile(3, 0.7, r_max=3, num=61)
    path = tmp_path / "p.csv"
    p.to_csv(path)
    q = MetricProfile.read_csv(path, 3, cap_kind="sphere-cap")
    assert np.array_equal(p.F, q.F) and np.array_equal(p.ddG, q.ddG)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_hyperbolic_constant_curvature(n):
    # (1 - F'^2)/F^2 loses about cosh^2(r) * eps to cancellation
    rep = curvature_report(hyperbolic_profile(n, 0.8, r_max=8, num=801))
    assert rep.sup_sec_plus_one() < 1e-10
    assert rep.einstein_residual < 1e-9
    assert np.max(rep.weyl_norm_sq) < 1e-18


@pytest.mark.parametrize("n", [3, 4, 6])
def test_flat_product_residual_equals_n(n):
    # dr^2 + r^2 g_S + dtheta^2 is flat, so |Ric + n g| = n everywhere
    r = np.linspace(0.1, 2.0, 50)
    p = MetricProfile(n, r, r, np.ones_like(r), np.ones_like(r), 0 * r, 0 * r, 0 * r)
    rep = ricci_and_residual(p)
    assert rep.sup_sec_plus_one() == pytest.approx(1.0)
    np.testing.assert_allclose(rep.residual, n, atol=1e-12)


def _warped(n, num=400):
    r = np.linspace(0.3, 3.0, num)
    F = np.sinh(r) * (1 + 0.1 * np.sin(r))
    G = np.cosh(r) + 0.2 * r**2
    return MetricProfile.from_samples(n, r, F, G)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_shortcut_agrees_with_full_weyl_on_einstein(n):
    rep = ricci_and_residual(hyperbolic_profile(n, 1.3, r_max=5, num=201))
    a = weyl_diagonal(rep, method="einstein")
    b = weyl_diagonal(rep, method="kulkarni-nomizu")
    for k in a.weyl:
        np.testing.assert_allclose(a.weyl[k], b.weyl[k], atol=1e-10)


@pytest.mark.parametrize("n", [3, 4, 5])
def test_weyl_trace_free_for_non_einstein(n):
    rep = weyl_diagonal(ricci_and_residual(_warped(n)), method="kulkarni-nomizu")
    assert np.max(np.abs(weyl_row_sums(rep))) < 1e-11


def test_shortcut_refuses_non_einstein():
    with pytest.raises(EinsteinResidualTooLarge):
        weyl_diagonal(ricci_and_residual(_warped(3)), method="einstein")


def test_full_convention_is_four_times_pair():
    rep = ricci_and_residual(_warped(4))
    a = weyl_diagonal(rep, method="kulkarni-nomizu", convention=PAIR)
    b = weyl_diagonal(rep, method="kulkarni-nomizu", convention=FULL)
    np.testing.assert_allclose(b.weyl_norm_sq, 4 * a.weyl_norm_sq)
    assert sum(plane_multiplicities(4).values()) == 10


@settings(max_examples=25, deadline=None)
@given(st.floats(0.05, 20.0), st.integers(3, 6))
def test_sectionals_invariant_under_circle_scaling(c, n):
    p = hyperbolic_profile(n, 1.0, r_max=4, num=81)
    a = sectional_curvatures(p)
    b = sectional_curvatures(p.with_G_scaled(c))
    for k in a.sectionals:
        np.testing.assert_allclose(a.sectionals[k], b.sectionals[k], atol=1e-12)


def test_cap_series_continuous():
    p = hyperbolic_profile(3, 1.0, r=np.concatenate([[0.0], np.geomspace(1e-6, 0.1, 40)]))
    sec = sectional_curvatures(p, cap_window=1e-3)
    for v in sec.sectionals.values():
        assert np.max(np.abs(v + 1)) < 1e-9


def test_fit_cap_jet_recovers_hyperbolic():
    jet = fit_cap_jet(hyperbolic_profile(3, 2.0, r_max=1, num=401))
    assert jet.slope == 1.0
    assert jet.d3 == pytest.approx(1.0, rel=1e-6)
    assert jet.value == pytest.approx(2.0) and jet.d2 == pytest.approx(2.0, rel=1e-6)


def test_dopri_fifth_order():
    fun = lambda t, y: -y
    errs = []
    for h in (0.1, 0.05):
        y = np.array([1.0])
        for k in range(int(round(1 / h))):
            y = _rk.dopri_step(fun, k * h, y, h)[0]
        errs.append(abs(y[0] - math.exp(-1)))
    assert 25 < errs[0] / errs[1] < 45


def test_adaptive_error_tracks_tolerance():
    fun = lambda t, y: np.array([y[1], -y[0]])
    errs = []
    for tol in (1e-8, 1e-10):
        tr = _rk.integrate(fun, 0, [0.0, 1.0], 10.0, tol)
        errs.append(abs(tr.y[-1, 0] - math.sin(10)))
    assert errs[1] < errs[0] and errs[1] < 1e-8
