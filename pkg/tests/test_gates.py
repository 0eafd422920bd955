import math

import numpy as np
import pytest

from pefill.curvature import curvature_report
from pefill.errors import DeckTruncationTooSmall, NonConvergence
from pefill.gates import (GateThresholds, axis_ball_volume, hyperbolic_ball_volume,
                          quotient_ball_volume, required_deck_copies, theorem_gates,
                          volume_comparison, yamabe_constant_quotient, yamabe_product,
                          yamabe_sphere)
from pefill.profile import hyperbolic_profile


def test_sphere_yamabe_constant():
    assert yamabe_sphere(3) == pytest.approx(6 * (2 * math.pi**2) ** (2 / 3))
    assert yamabe_sphere(4) == pytest.approx(12 * (8 * math.pi**2 / 3) ** 0.5)


def test_constant_quotient_n3():
    lam = 0.3
    assert yamabe_constant_quotient(3, lam) == pytest.approx(2 * (8 * math.pi**2 * lam) ** (2 / 3))


def test_small_lambda_constant_minimizer():
    res = yamabe_product(3, 0.05, N=128)
    assert res.value == pytest.approx(res.y_const, rel=1e-9)
    assert np.ptp(res.minimizer) < 1e-6


@pytest.mark.parametrize("lam", [0.5, 2.0, 10.0])
def test_below_sphere(lam):
    res = yamabe_product(3, lam)
    assert res.value < res.y_sphere
    assert res.value <= res.y_const * (1 + 1e-12)


def test_large_lambda_approaches_sphere():
    res = yamabe_product(3, 10.0)
    assert 0.9 <= res.ratio < 1.0
    assert res.to_dict()["upper_bound_under_symmetry"] is True


def test_grid_refinement_consistent():
    a = yamabe_product(3, 2.0, N=128).value
    b = yamabe_product(3, 2.0, N=256).value
    assert a == pytest.approx(b, rel=1e-9)


def test_underresolved_grid_reports_nonconvergence():
    with pytest.raises(NonConvergence):
        yamabe_product(3, 10.0, N=128)


def test_hyperbolic_ball_volume_formula():
    from scipy.integrate import quad
    for r in (0.3, 1.0, 3.0):
        direct = 2 * math.pi**2 * quad(lambda t: math.sinh(t) ** 3, 0, r)[0]
        assert hyperbolic_ball_volume(r) == pytest.approx(direct, rel=1e-12)
    assert hyperbolic_ball_volume(1.0, n=4) > 0


def test_axis_ball_without_overlap_is_hyperbolic():
    assert axis_ball_volume(1.0, 2.0) == pytest.approx(hyperbolic_ball_volume(2.0), rel=1e-10)
    assert axis_ball_volume(0.5, 3.0) < hyperbolic_ball_volume(3.0)


def test_deck_copies():
    assert required_deck_copies(1.0, 1.0) == 0
    assert required_deck_copies(0.5, 3.0) == 1
    with pytest.raises(DeckTruncationTooSmall):
        quotient_ball_volume(0.5, 0.0, 3.0, 100, K=0)


def test_monte_carlo_matches_axis_oracle():
    for lam, r in ((0.5, 3.0), (1.0, 2.0)):
        est = quotient_ball_volume(lam, 0.0, r, 200_000, seed=7)
        assert abs(est.mean - axis_ball_volume(lam, r)) < 4 * est.stderr


def test_monte_carlo_deterministic_and_stderr_scaling():
    a = quotient_ball_volume(1.0, 0.4, 2.0, 50_000, seed=3, chunk=10_000)
    b = quotient_ball_volume(1.0, 0.4, 2.0, 50_000, seed=3, chunk=10_000, workers=2)
    assert a == b
    c = quotient_ball_volume(1.0, 0.4, 2.0, 200_000, seed=3)
    assert a.stderr / c.stderr == pytest.approx(2.0, rel=0.05)


def test_volume_comparison_sandwich():
    Y = yamabe_product(3, 1.0).value
    out = volume_comparison(1.0, Y, radii=(1.0, 2.0), samples=100_000, seed=1)
    assert out["pass"]
    assert 0 < out["lower_bound"] < 1


def test_theorem_gates_hyperbolic():
    rep = curvature_report(hyperbolic_profile(3, 1.0, r_max=6, num=301))
    entry = {"report": rep, "n": 3, "lambda": 1.0, "weyl_energy": 0.0}
    g = theorem_gates(entry, GateThresholds(delta=0.1, eta=1e-6, epsilon=1e-6, lambda0=2.0), Y=40.0)
    assert g["nonpositive_curvature"] and g["weyl_pinching_holds"] and g["sup_weyl_small"]
    assert g["sec_pinched"] and not g["lambda_large"]
    assert g["vol_comparison_pass"] is None
    assert "weyl_pinching_holds" not in theorem_gates(entry)
