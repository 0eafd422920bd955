"""Geodesic compactification, regularized volumes and the renormalized volume.

For a filling with geodesic distance r from the core (hyperbolic) or the
horizon (Schwarzschild), the defining function x = C e^{-r} satisfies
|dx|_{x^2 g} = 1.  C is fixed by x * s -> 1, so that x^2 g restricts to
lam^2 dtheta^2 + g_{S^{n-1}} on the boundary; for the hyperbolic filling
s = sinh r and C = 2.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import IntegrationWarning, quad, simpson
from scipy.optimize import brentq

from ._util import sphere_volume
from .curvature import PAIR, curvature_report
from .errors import (IllConditionedFit, NormalizationDivergence, QuadratureFailure,
                     UnstableExtraction, UnsupportedDimension)
from .profile import HyperbolicFilling, hyperbolic_profile
from .schwarzschild import (SchwarzschildParams, export_profile, radial_distance,
                            renormalized_volume_closed_form)

HYPERBOLIC_C = 2.0


def _quad(f, a, b, epsrel=1e-13, what="integral"):
    with warnings.catch_warnings():
        warnings.simplefilter("error", IntegrationWarning)
        try:
            val, err = quad(f, a, b, epsabs=0.0, epsrel=epsrel, limit=400)
        except IntegrationWarning as exc:
            raise QuadratureFailure(f"{what}: {exc}") from None
    if not np.isfinite(val):
        raise QuadratureFailure(f"{what} is not finite")
    return val


@dataclass(frozen=True, eq=False)
class CompactificationChart:
    source: object  # HyperbolicFilling or SchwarzschildParams
    n: int
    lam: float
    C: float
    s_inner: float  # s at x = x_max (0 on the core, s_h on the horizon)
    meta: dict = field(default_factory=dict)

    @property
    def kind(self):
        return "hyperbolic" if isinstance(self.source, HyperbolicFilling) else "schwarzschild"

    @property
    def x_max(self):
        return self.C

    @property
    def log_C(self):
        return math.log(self.C)

    def r_of_s(self, s):
        if self.kind == "hyperbolic":
            return math.asinh(s)
        return radial_distance(self.source, s)

    def x_of_s(self, s):
        return self.C * math.exp(-self.r_of_s(s))

    def s_of_x(self, x):
        """Radius of the level set {x = const}."""
        if not 0 < x <= self.x_max:
            raise ValueError(f"x must lie in (0, {self.x_max}]")
        if self.kind == "hyperbolic":
            return 1.0 / x - x / 4.0
        if x == self.x_max:
            return self.s_inner
        target = self.log_C - math.log(x)
        hi = max(4.0 / x, 2.0 * self.s_inner + 2.0)
        return brentq(lambda s: self.r_of_s(s) - target, self.s_inner, hi, xtol=1e-300, rtol=1e-15)

    def V(self, s):
        return 1.0 + s * s if self.kind == "hyperbolic" else float(self.source.V(s))

    def verify(self, xs=(1e-4, 1e-3, 1e-2, 0.1)):
        """Chart defects at the sample points.

        grad: | |dx|_{x^2 g} - 1 | from a centred difference of x(s);
        sphere, circle: x^2 g restricted to the level set against the
        round and lam^2-circle coefficients.
        """
        grad, sphere, circle = [], [], []
        for x in xs:
            s = self.s_of_x(x)
            h = 1e-4 * s
            dxds = (self.x_of_s(s + h) - self.x_of_s(s - h)) / (2.0 * h)
            grad.append(abs(abs(dxds) * math.sqrt(self.V(s)) / x - 1.0))
            sphere.append(abs((x * s) ** 2 - 1.0))
            # x^2 G^2 = lam^2 x^2 V against lam^2
            circle.append(abs(x * x * self.V(s) - 1.0))
        return {"x": list(xs), "grad_defect": grad, "sphere_defect": sphere, "circle_defect": circle}


def _log_C_schwarzschild(params, s_c):
    # log C = lim r(s) - log s, with the tail 1/sqrt(V) - 1/sqrt(1+s^2) integrated exactly
    n, c = params.n, params.c

    def tail(s):
        sv = math.sqrt(float(params.V(s)))
        sh = math.sqrt(1.0 + s * s)
        return (c / s ** (n - 2)) / (sv * sh * (sh + sv))

    return radial_distance(params, s_c) - math.asinh(s_c) + math.log(2.0) + _quad(
        tail, s_c, np.inf, what="normalization tail")


def build_chart(source, tol=1e-11):
    """Compactification chart for a hyperbolic filling or a Schwarzschild parameter set."""
    if isinstance(source, HyperbolicFilling):
        return CompactificationChart(source, source.n, source.lam, HYPERBOLIC_C, 0.0)
    if not isinstance(source, SchwarzschildParams):
        raise TypeError("source must be a HyperbolicFilling or SchwarzschildParams")
    if source.mass == 0:
        return CompactificationChart(source, source.n, source.lam, HYPERBOLIC_C, 0.0)
    s_c = max(2.0, 2.0 * source.s_h)
    values = [_log_C_schwarzschild(source, s_c * f) for f in (1.0, 4.0)]
    if abs(values[0] - values[1]) > tol * max(1.0, abs(values[0])):
        raise NormalizationDivergence(
            f"log C changes by {abs(values[0] - values[1]):.2e} between cutoffs")
    return CompactificationChart(source, source.n, source.lam, math.exp(values[0]), source.s_h,
                                 meta={"log_C_spread": abs(values[0] - values[1])})


def regularized_volume(chart, eps):
    """Vol{x >= eps} by quadrature of the volume density."""
    if not 0 < eps <= chart.x_max:
        raise ValueError(f"eps must lie in (0, {chart.x_max}]")
    n = chart.n
    pref = 2.0 * math.pi * chart.lam * sphere_volume(n - 1)
    if chart.kind == "hyperbolic" or chart.source.mass == 0:
        # sinh^{n-1} r cosh r dr in x = 2 e^{-r}
        def dens(x):
            return (1.0 / x - x / 4.0) ** (n - 1) * (1.0 / x + x / 4.0) / x

        return pref * _quad(dens, eps, chart.x_max, what="hyperbolic volume")
    s_eps = chart.s_of_x(eps)
    return pref * _quad(lambda s: s ** (n - 1), chart.s_inner, s_eps, what="volume")


def hyperbolic_volume_closed_form(lam, eps):
    """n = 3: 8 pi^2 lam (eps^-3/3 - eps^-1/4 + eps/16 - eps^3/192)."""
    return 8.0 * math.pi**2 * lam * (eps**-3 / 3.0 - 1.0 / (4.0 * eps) + eps / 16.0 - eps**3 / 192.0)


def default_eps_grid(num=12, hi=0.2, lo=0.02):
    return np.geomspace(hi, lo, num)


@dataclass(frozen=True, eq=False)
class VolumeExpansion:
    n: int
    epsilons: np.ndarray
    volumes: np.ndarray
    basis: tuple
    coefficients: dict
    v_ren: float
    log_coefficient: float | None
    uncertainty: float
    residual: float
    condition: float

    def to_dict(self):
        return {"n": self.n, "v_ren": self.v_ren, "uncertainty": self.uncertainty,
                "coefficients": self.coefficients, "log_coefficient": self.log_coefficient,
                "residual": self.residual, "condition": self.condition,
                "epsilons": self.epsilons, "volumes": self.volumes}


def _basis(n, n_tail):
    """Exponent labels: ('pow', k) for eps^k, ('log',) for log(1/eps)."""
    terms = [("pow", -k) for k in range(n, 0, -2)]
    if n % 2 == 0:
        terms.append(("log",))
    terms.append(("pow", 0))
    terms += [("pow", k) for k in range(1, n_tail + 1)]
    return tuple(terms)


def _design(eps, terms):
    cols = [np.log(1.0 / eps) if t[0] == "log" else eps ** t[1] for t in terms]
    return np.column_stack(cols)


def _label(t):
    return "log(1/eps)" if t[0] == "log" else f"eps^{t[1]}"


def _fit(eps, vol, terms, n):
    A = _design(eps, terms)
    w = eps**n  # relative weighting: the leading term is eps^-n
    Aw = A * w[:, None]
    scale = np.max(np.abs(Aw), axis=0)
    M = Aw / scale
    coef, _, _, sv = np.linalg.lstsq(M, vol * w, rcond=None)
    coef = coef / scale
    resid = (A @ coef - vol) * w
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else np.inf
    return coef, float(np.sqrt(np.mean(resid**2))), cond


def extract_renormalized_volume(chart, eps_grid=None, n_tail=4, max_condition=1e8,
                                max_spread=None, volumes=None):
    """Least-squares fit of Vol{x >= eps} and its constant term.

    Besides the divergent terms and the constant, ``n_tail`` positive
    powers eps^1.. absorb the vanishing remainder.  The uncertainty is the
    largest change of the constant over leave-one-out refits.
    """
    eps = default_eps_grid() if eps_grid is None else np.asarray(eps_grid, dtype=float)
    eps = np.sort(eps)[::-1]
    n = chart.n
    terms = _basis(n, n_tail)
    if eps.size < len(terms) + 2:
        raise ValueError(f"need at least {len(terms) + 2} eps values for {len(terms)} basis functions")
    if eps[0] / eps[-1] < 10.0 * (1 - 1e-12):
        raise ValueError("eps grid must span at least one decade")
    vol = np.array([regularized_volume(chart, e) for e in eps]) if volumes is None else np.asarray(volumes)
    coef, resid, cond = _fit(eps, vol, terms, n)
    if cond > max_condition:
        raise IllConditionedFit(f"condition number {cond:.2e} exceeds {max_condition:.1e}")
    k0 = terms.index(("pow", 0))
    v_ren = float(coef[k0])
    spread = 0.0
    for i in range(eps.size):
        keep = np.arange(eps.size) != i
        c_i, _, _ = _fit(eps[keep], vol[keep], terms, n)
        spread = max(spread, abs(c_i[k0] - v_ren))
    limit = 1e-3 * (1.0 + abs(v_ren)) if max_spread is None else max_spread
    if spread > limit:
        raise UnstableExtraction(f"leave-one-out spread {spread:.3e} exceeds {limit:.1e}")
    log_coef = float(coef[terms.index(("log",))]) if n % 2 == 0 else None
    return VolumeExpansion(n, eps, vol, tuple(_label(t) for t in terms),
                           {_label(t): float(c) for t, c in zip(terms, coef)},
                           v_ren, log_coef, spread, resid, cond)


def filling_profile(filling, r_max=15.0, num=3001):
    if isinstance(filling, HyperbolicFilling):
        return hyperbolic_profile(filling.n, filling.lam, r_max=r_max, num=num)
    return export_profile(filling, r_max=r_max, num=num)


def weyl_energy(profile, convention=PAIR, report=None):
    """Integral of |W|^2 over the filling by Simpson's rule on the profile grid."""
    if report is None:
        report = curvature_report(profile, convention=convention)
    n = profile.n
    dens = report.weyl_norm_sq * profile.F ** (n - 1) * np.abs(profile.G)
    return 2.0 * math.pi * sphere_volume(n - 1) * float(simpson(dens, x=profile.r))


def default_chi(filling):
    """Euler characteristic: S^1 x D^n has 0, D^2 x S^{n-1} has 1 + (-1)^{n-1}."""
    if isinstance(filling, HyperbolicFilling) or filling.mass == 0:
        return 0
    return 1 + (-1) ** (filling.n - 1)


def gauss_bonnet_check(filling, chi=None, convention=PAIR, method="quadrature-fit", tol=None,
                       r_max=15.0, num=3001, eps_grid=None):
    """Compare 8 pi^2 chi with the Weyl integral plus 6 times the renormalized volume."""
    if filling.n != 3:
        raise UnsupportedDimension("the Gauss-Bonnet identity is checked in dimension four")
    chi = default_chi(filling) if chi is None else chi
    profile = filling_profile(filling, r_max=r_max, num=num)
    w_int = weyl_energy(profile, convention)
    if method == "closed-form":
        if isinstance(filling, HyperbolicFilling) or filling.mass == 0:
            v_ren, unc = 0.0, 0.0
        else:
            v_ren, unc = renormalized_volume_closed_form(3, filling.s_h), 0.0
    elif method == "quadrature-fit":
        ex = extract_renormalized_volume(build_chart(filling), eps_grid)
        v_ren, unc = ex.v_ren, ex.uncertainty
    else:
        raise ValueError(f"unknown method {method!r}")
    lhs = 8.0 * math.pi**2 * chi
    defect = abs(lhs - w_int - 6.0 * v_ren)
    tol = 1e-3 * 16.0 * math.pi**2 if tol is None else tol
    return {"chi": chi, "lhs": lhs, "weyl_integral": w_int, "v_ren": v_ren,
            "v_ren_uncertainty": unc, "defect": defect, "tolerance": tol,
            "convention": convention, "pass": bool(defect <= tol)}


def hyperbolic_renormalized_volume(n, lam):
    """Constant term of 2 pi lam w_{n-1} (1/eps - eps/4)^n / n.

    The binomial constant term only exists for even n, so it vanishes
    for odd n.
    """
    if n % 2:
        return 0.0
    pref = 2.0 * math.pi * lam * sphere_volume(n - 1) / n
    return pref * math.comb(n, n // 2) * (-0.25) ** (n // 2)
