"""AdS-Schwarzschild fillings of S^1 x S^{n-1}.

    g = V(s)^{-1} ds^2 + V(s) dt^2 + s^2 g_{S^{n-1}},   V = 1 + s^2 - w m / s^{n-2}

with t of period 2*pi*lam.  Writing c = w m, the horizon relation is
c = s_h^{n-2} (1 + s_h^2), so every quantity below depends on s_h alone
and the mass normalization w only enters through m = c / w.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.optimize import brentq

from .errors import InvalidProfile, NonPositiveRadius, QuadratureFailure, UnsupportedDimension
from .profile import CIRCLE_CAP, SPHERE_CAP, CapJet, MetricProfile

DEFAULT_OMEGA = 2.0
DOUBLE_ROOT_TOL = 1e-9

# minimum of the Weyl energy over the n = 3 family, 16 pi^2 - 6 * 8 pi^2 / 27
WEYL_ENERGY_MIN = 128.0 * math.pi**2 / 9.0
# the constant printed for the same bound; it does not follow from 16 pi^2 - 6 V_max
PRINTED_WEYL_BOUND = (16.0 - 8.0 / 27.0) * math.pi**2


def horizon_coefficient(n, s_h):
    """c = w m such that V(s_h) = 0."""
    return s_h ** (n - 2) * (1.0 + s_h * s_h)


def lambda_from_horizon(n, s_h):
    """Circle parameter making the horizon smooth: 1/lam = V'(s_h)/2."""
    if not np.all(np.asarray(s_h) > 0):
        raise NonPositiveRadius("horizon radius must be positive")
    return 2.0 * s_h / (n * s_h * s_h + n - 2)


def lambda_max(n):
    return 1.0 / math.sqrt(n * (n - 2))


def critical_horizon(n):
    """s* where lam(s_h) attains its maximum."""
    return math.sqrt((n - 2) / n)


def mass_from_horizon(n, s_h, omega_n=DEFAULT_OMEGA):
    if not s_h > 0:
        raise NonPositiveRadius("horizon radius must be positive")
    return horizon_coefficient(n, s_h) / omega_n


def horizons_from_lambda(n, lam, tol=DOUBLE_ROOT_TOL):
    """Horizon radii with lambda_from_horizon(n, s) = lam, smaller root first.

    Within ``tol`` of lambda_max the double root s* is returned alone.
    """
    if not lam > 0:
        raise ValueError("lambda must be positive")
    lmax = lambda_max(n)
    s_star = critical_horizon(n)
    if abs(lam - lmax) <= tol:
        return (s_star,)
    if lam > lmax:
        return ()

    # lam * (n s^2 + n - 2) - 2 s changes sign at s*, on each side of it
    def f(s):
        return lam * (n * s * s + n - 2) - 2.0 * s

    disc = math.sqrt(max(0.0, 1.0 - lam * lam * n * (n - 2)))
    plus_guess = lam * (n - 2) / (1.0 + disc)
    minus_guess = (1.0 + disc) / (lam * n)
    s_plus = brentq(f, 0.0, s_star, xtol=1e-300, rtol=1e-15) if f(s_star) < 0 else plus_guess
    hi = 2.0 / (lam * n) + 1.0
    s_minus = brentq(f, s_star, hi, xtol=1e-300, rtol=1e-15) if f(s_star) < 0 else minus_guess
    return tuple(_newton_polish(n, lam, s) for s in (s_plus, s_minus))


def _newton_polish(n, lam, s):
    for _ in range(3):
        df = 2.0 * lam * n * s - 2.0
        if df == 0:
            break
        step = (lam * (n * s * s + n - 2) - 2.0 * s) / df
        if not abs(step) < 1e-6 * s:
            break
        s -= step
    return s


def branch_horizons(n, lam, tol=DOUBLE_ROOT_TOL):
    """[(branch label, s_h)]: 'plus' is the small root, 'minus' the large one."""
    roots = horizons_from_lambda(n, lam, tol)
    if len(roots) == 1:
        return [("double", roots[0])]
    return list(zip(("plus", "minus"), roots))


def _require_n3(n):
    if n != 3:
        raise UnsupportedDimension(f"closed form only available for n = 3, got n = {n}")


def renormalized_volume_closed_form(n, s_h):
    _require_n3(n)
    s2 = s_h * s_h
    return (8.0 * math.pi**2 / 3.0) * s2 * (1.0 - s2) / (3.0 * s2 + 1.0)


def weyl_energy_closed_form(n, s_h, chi=2):
    """Integral of |W|^2 from Gauss-Bonnet, 8 pi^2 chi - 6 V."""
    _require_n3(n)
    return 8.0 * math.pi**2 * chi - 6.0 * renormalized_volume_closed_form(n, s_h)


def weyl_energy_direct(n, s_h):
    """(1+s_h^2)^2 form of the same integral, from integrating 12 m^2/s^6 directly."""
    _require_n3(n)
    s2 = s_h * s_h
    return 16.0 * math.pi**2 * (1.0 + s2) ** 2 / (3.0 * s2 + 1.0)


@dataclass(frozen=True)
class SchwarzschildParams:
    n: int
    mass: float
    s_h: float
    lam: float
    omega_n: float = DEFAULT_OMEGA
    tol: float = 1e-10

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 3:
            raise InvalidProfile("n must be an integer >= 3")
        if self.mass < 0:
            raise InvalidProfile("mass must be nonnegative")
        if not self.lam > 0:
            raise InvalidProfile("lambda must be positive")
        if not self.omega_n > 0:
            raise InvalidProfile("mass normalization must be positive")
        if self.mass == 0:
            if self.s_h != 0:
                raise InvalidProfile("the massless metric has no horizon; use s_h = 0")
            return
        if not self.s_h > 0:
            raise InvalidProfile("horizon radius must be positive")
        if abs(self.V(self.s_h)) > self.tol * (1.0 + self.s_h**2):
            raise InvalidProfile(f"V(s_h) = {self.V(self.s_h):.3e}, s_h is not a horizon")
        if abs(self.lam * self.dV(self.s_h) / 2.0 - 1.0) > self.tol:
            raise InvalidProfile("lam * V'(s_h) / 2 must equal 1 for a smooth horizon")

    @classmethod
    def from_horizon(cls, n, s_h, omega_n=DEFAULT_OMEGA):
        return cls(n, mass_from_horizon(n, s_h, omega_n), float(s_h),
                   lambda_from_horizon(n, s_h), omega_n)

    @classmethod
    def massless(cls, n, lam, omega_n=DEFAULT_OMEGA):
        return cls(n, 0.0, 0.0, float(lam), omega_n)

    @property
    def c(self):
        return self.omega_n * self.mass if self.mass else 0.0

    @property
    def k(self):
        return self.n - 2

    def V(self, s):
        return potential(self, s)

    def dV(self, s):
        return potential(self, s, 1)

    def ddV(self, s):
        return potential(self, s, 2)

    def Q(self, s):
        """V(s)/(s - s_h), free of cancellation near the horizon."""
        s = np.asarray(s, dtype=float)
        k, sh, c = self.k, self.s_h, self.c
        geo = sum(s**j * sh ** (k - 1 - j) for j in range(k))
        return (s + sh) + c * geo / (s**k * sh**k)

    def record(self, branch=None):
        rec = {"kind": "schwarzschild", "n": self.n, "branch": branch, "s_h": self.s_h,
               "mass": self.mass, "omega_n": self.omega_n, "lambda": self.lam}
        if self.n == 3 and self.s_h > 0:
            rec["v_ren"] = renormalized_volume_closed_form(3, self.s_h)
            rec["weyl_energy"] = weyl_energy_closed_form(3, self.s_h)
        else:
            rec["v_ren"] = None
            rec["weyl_energy"] = None
        return rec


def potential(params, s, deriv=0):
    """V and its derivatives up to the third at radius s > 0."""
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0):
        raise NonPositiveRadius("the potential is only defined for s > 0")
    k, c = params.k, params.c
    tail = 0.0 if c == 0 else c / s**k
    if deriv == 0:
        out = 1.0 + s * s - tail
    elif deriv == 1:
        out = 2.0 * s + (0.0 if c == 0 else k * tail / s)
    elif deriv == 2:
        out = 2.0 - (0.0 if c == 0 else k * (k + 1) * tail / (s * s))
    elif deriv == 3:
        out = 0.0 * s + (0.0 if c == 0 else k * (k + 1) * (k + 2) * tail / s**3)
    else:
        raise ValueError("derivatives above the third are not provided")
    return out if np.ndim(out) else float(out)


def radial_distance(params, s, epsrel=1e-13):
    """r(s) = integral of 1/sqrt(V) from the axis or horizon, with s = s_h + u^2."""
    s = float(s)
    if params.mass == 0:
        if s < 0:
            raise NonPositiveRadius("s must be nonnegative")
        val, err = quad(lambda x: 1.0 / math.sqrt(1.0 + x * x), 0.0, s, epsabs=0, epsrel=epsrel, limit=200)
    else:
        if s < params.s_h:
            raise NonPositiveRadius("s lies inside the horizon")
        u = math.sqrt(s - params.s_h)
        val, err = quad(lambda w: 2.0 / math.sqrt(params.Q(params.s_h + w * w)), 0.0, u,
                        epsabs=0, epsrel=epsrel, limit=200)
    if not np.isfinite(val) or err > 1e3 * epsrel * max(1.0, abs(val)):
        raise QuadratureFailure(f"radial distance quadrature failed at s = {s}")
    return val


def _circle_cap_jet(params):
    lam = params.lam
    sh = params.s_h
    v1, v2, v3 = params.dV(sh), params.ddV(sh), potential(params, sh, 3)
    half = v1 / 2.0
    return CapJet(
        slope=lam * half,
        d3=lam * v2 * v1 / 4.0,
        d5=lam * half * (0.75 * v3 * v1 + v2 * v2 / 4.0),
        value=sh,
        d2=half,
        d4=v2 * v1 / 4.0,
    )


def export_profile(params, r_max=15.0, num=3001, r=None, rtol=1e-13):
    """Sample the filling in geodesic distance r from the horizon (or axis if m = 0).

    s(r) is obtained from du/dr = sqrt(Q(s_h + u^2))/2, s = s_h + u^2, which
    is regular at the horizon; F, G and their r-derivatives are then exact
    functions of s.
    """
    r = np.linspace(0.0, r_max, num) if r is None else np.asarray(r, dtype=float)
    if r[0] != 0.0:
        raise InvalidProfile("the exported grid must start at r = 0")
    lam = params.lam
    meta = {"kind": "schwarzschild", "s_h": params.s_h, "mass": params.mass, "lambda": lam}
    if params.mass == 0:
        sol = solve_ivp(lambda t, y: [math.sqrt(1.0 + y[0] * y[0])], (0.0, r[-1]), [0.0],
                        method="DOP853", t_eval=r, rtol=rtol, atol=1e-15)
        if not sol.success:
            raise QuadratureFailure(sol.message)
        s = sol.y[0]
        sqV = np.sqrt(1.0 + s * s)
        return MetricProfile(params.n, r, s, lam * sqV, sqV, lam * s, s, lam * sqV,
                             cap_kind=SPHERE_CAP, cap_jet=CapJet(1.0, 1.0, 1.0, lam, lam, lam),
                             analytic=True, meta=meta)

    sh = params.s_h

    def rhs(t, y):
        return [0.5 * math.sqrt(float(params.Q(sh + y[0] * y[0])))]

    sol = solve_ivp(rhs, (0.0, r[-1]), [0.0], method="DOP853", t_eval=r, rtol=rtol, atol=1e-15)
    if not sol.success:
        raise QuadratureFailure(sol.message)
    u = sol.y[0]
    s = sh + u * u
    sqQ = np.sqrt(params.Q(s))
    sqV = u * sqQ
    dV = params.dV(s)
    ddV = params.ddV(s)
    F = s
    dF = sqV
    ddF = dV / 2.0
    G = lam * sqV
    dG = lam * dV / 2.0
    ddG = lam * ddV * sqV / 2.0
    return MetricProfile(params.n, r, F, G, dF, dG, ddF, ddG, cap_kind=CIRCLE_CAP,
                         cap_jet=_circle_cap_jet(params), analytic=True, meta=meta)


def profile_on_s_grid(params, s):
    """Profile sampled at prescribed radii s, with r from radial_distance."""
    s = np.asarray(s, dtype=float)
    r = np.array([radial_distance(params, si) for si in s])
    lam = params.lam
    V = params.V(s)
    sqV = np.sqrt(np.maximum(V, 0.0))
    dV = params.dV(s) if params.mass else 2.0 * s
    ddV = params.ddV(s) if params.mass else 2.0 + 0.0 * s
    return MetricProfile(params.n, r, s, lam * sqV, sqV, lam * dV / 2.0, dV / 2.0,
                         lam * ddV * sqV / 2.0, analytic=True,
                         meta={"kind": "schwarzschild", "s_h": params.s_h, "lambda": lam})


def weyl_norm_sq_n3(params, s):
    """Pair-norm |W|^2 = 12 m'^2/s^6 with m' = c/2, for n = 3."""
    _require_n3(params.n)
    m = params.c / 2.0
    return 12.0 * m * m / np.asarray(s, dtype=float) ** 6
