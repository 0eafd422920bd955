"""Reduced Einstein equations for g = dr^2 + F^2 g_{S^{n-1}} + G^2 Theta^2.

With Ric = -n g the three frame components give

    E1:  F''/F + (n-2)(F'^2 - 1)/F^2 + F'G'/(FG) = n      (X_i direction)
    E2:  (n-1) F''/F + G''/G = n                          (d_r direction)
    E3:  G''/G + (n-1) F'G'/(FG) = n                      (T direction)

E2 - E3 forces F''/F = F'G'/(FG); substituting into E1 leaves a closed
second-order equation for F.  For n = 3 it reads 2FF'' + F'^2 - 1 - 3F^2 = 0.
The alternative ``form="printed"`` swaps the coefficients 1 and (n-2)
in E1, i.e. (n-1)FF'' + F'^2 - 1 - nF^2 = 0; the two agree for n = 3
and both are solved by F = sinh.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _rk
from .curvature import ricci_and_residual, sectional_curvatures
from .errors import SeedOrderTooLow
from .profile import SPHERE_CAP, CapJet, MetricProfile

GEOMETRIC = "geometric"
PRINTED = "printed"
FORMS = (GEOMETRIC, PRINTED)


@dataclass(frozen=True)
class SeriesSeed:
    """Taylor data F(r) = sum_m a_m r^m / m! at the cap, as exact rationals."""

    n: int
    order: int
    coeffs: tuple  # a_1 .. a_order

    def __post_init__(self):
        if len(self.coeffs) != self.order:
            raise ValueError("need exactly `order` coefficients")
        if self.coeffs[0] != 1:
            raise ValueError("a_1 must equal 1 (cap slope)")
        if any(self.coeffs[m - 1] != 0 for m in range(2, self.order + 1, 2)):
            raise ValueError("even-order coefficients must vanish")

    def a(self, m):
        return self.coeffs[m - 1]

    def power_coefficients(self):
        """Ordinary Taylor coefficients f_0 .. f_order (f_m = a_m / m!), exact."""
        return [Fraction(0)] + [Fraction(self.a(m)) / math.factorial(m)
                                for m in range(1, self.order + 1)]

    def evaluate(self, r, deriv=0):
        return _eval_series([float(c) for c in self.power_coefficients()], r, deriv)

    def truncation_estimate(self, r):
        """Relative size of the last retained term in F and in F' at r."""
        M = self.order
        f_M = abs(float(Fraction(self.a(M)) / math.factorial(M)))
        F = abs(self.evaluate(r))
        dF = abs(self.evaluate(r, 1))
        return max(f_M * r**M / F, M * f_M * r ** (M - 1) / dF)


def _eval_series(c, r, deriv=0):
    r = np.asarray(r, dtype=float)
    coeffs = list(c)
    for _ in range(deriv):
        coeffs = [k * coeffs[k] for k in range(1, len(coeffs))] or [0.0]
    out = np.zeros_like(r)
    for ck in reversed(coeffs):
        out = out * r + ck
    return out if out.ndim else float(out)


def series_seed(n, M):
    """Solve the cap recursion for a_3, a_5, .., a_M exactly.

    Comparing the r^{2Q} coefficients of (n-1)FF'' + F'^2 - 1 - nF^2 = 0
    with every a_{2m} = 0 gives, for Q >= 1,

        (2Q(n-1) + 2)/(2Q)! * a_{2Q+1}
            = n ( a_1 a_{2Q-1}/(2Q-1)! + S_3 ) - (n-1) S_1 - S_2

    where S_1, S_2, S_3 are the three convolution sums over 1 <= m <= Q-1
    built from already known coefficients.
    """
    if not isinstance(n, int) or n < 3:
        raise ValueError("n must be an integer >= 3")
    if not isinstance(M, int) or M < 1 or M % 2 == 0:
        raise ValueError("order M must be a positive odd integer")
    fact = [math.factorial(k) for k in range(M + 2)]
    a = {1: Fraction(1)}
    for Q in range(1, (M - 1) // 2 + 1):
        s1 = sum(Fraction(a[2 * m + 1], fact[2 * m + 1]) * Fraction(a[2 * Q + 1 - 2 * m], fact[2 * Q - 1 - 2 * m])
                 for m in range(1, Q))
        s2 = sum(Fraction(a[2 * m + 1], fact[2 * m]) * Fraction(a[2 * Q - 2 * m + 1], fact[2 * Q - 2 * m])
                 for m in range(1, Q))
        s3 = sum(Fraction(a[2 * m + 1], fact[2 * m + 1]) * Fraction(a[2 * Q - 2 * m - 1], fact[2 * Q - 2 * m - 1])
                 for m in range(1, Q))
        rest = (n - 1) * s1 + s2 - n * (a[1] * Fraction(a[2 * Q - 1], fact[2 * Q - 1]) + s3)
        lead = Fraction(2 * Q * (n - 1) + 2, fact[2 * Q])
        a[2 * Q + 1] = -rest / lead
    coeffs = tuple(a.get(m, Fraction(0)) for m in range(1, M + 1))
    return SeriesSeed(n, M, coeffs)


def g_series(seed):
    """Ordinary Taylor coefficients of G with G(0) = 1, G'(0) = 0.

    Obtained order by order from F G'' = n F G - (n-1) F'' G.
    """
    f = seed.power_coefficients()
    n = seed.n
    M = seed.order
    g = [Fraction(1), Fraction(0)]
    for N in range(1, M - 1):
        rhs = n * sum(f[i] * g[N - i] for i in range(1, N + 1))
        rhs -= (n - 1) * sum((i + 2) * (i + 1) * f[i + 2] * g[N - i] for i in range(0, N + 1))
        lhs_known = sum(f[i] * (N - i + 2) * (N - i + 1) * g[N - i + 2] for i in range(2, N + 1))
        g.append((rhs - lhs_known) / (f[1] * (N + 1) * N))
    return g


def alternating_row_sum(Q, k_lo=2, k_hi=None):
    """sum_{k=k_lo}^{k_hi} (-1)^k / (k! (2Q-k)!) as an exact rational."""
    k_hi = 2 * Q - 1 if k_hi is None else k_hi
    return sum(Fraction((-1) ** k, math.factorial(k) * math.factorial(2 * Q - k))
               for k in range(k_lo, k_hi + 1))


def combinatorial_identity_check(Q_max):
    """True iff sum_{k=2}^{2Q-1} (-1)^k/(k!(2Q-k)!) = (2Q-2)/(2Q)! for 2 <= Q <= Q_max."""
    if Q_max < 2:
        raise ValueError("Q_max must be at least 2")
    return all(alternating_row_sum(Q) == Fraction(2 * Q - 2, math.factorial(2 * Q))
               for Q in range(2, Q_max + 1))


def reduced_ddF(n, F, dF, form=GEOMETRIC):
    if form == GEOMETRIC:
        return (n * F * F - (n - 2) * (dF * dF - 1.0)) / (2.0 * F)
    if form == PRINTED:
        return (1.0 + n * F * F - dF * dF) / ((n - 1) * F)
    raise ValueError(f"unknown reduced-equation form {form!r}")


def _rhs(n, form):
    def fun(r, y):
        F, dF, G, dG = y
        ddF = reduced_ddF(n, F, dF, form)
        ddG = G * (n - (n - 1) * ddF / F)
        return np.array([dF, ddF, dG, ddG])
    return fun


def frame_residuals(n, F, dF, ddF, G, dG, ddG, form=GEOMETRIC):
    """(E1 - n, E2 - n, E3 - n) from pointwise values away from the cap."""
    ratio_F = ddF / F
    cross = dF * dG / (F * G)
    tang = (dF * dF - 1.0) / (F * F)
    if form == GEOMETRIC:
        e1 = ratio_F + (n - 2) * tang + cross
    else:
        e1 = (n - 2) * ratio_F + tang + cross
    e2 = (n - 1) * ratio_F + ddG / G
    e3 = ddG / G + (n - 1) * cross
    return np.stack([e1 - n, e2 - n, e3 - n], axis=-1)


@dataclass(frozen=True, eq=False)
class ProfileSolution:
    profile: MetricProfile
    residuals: np.ndarray  # (points, 3) on the profile grid
    step_r: np.ndarray
    step_h: np.ndarray
    step_error: np.ndarray  # embedded local error estimate per accepted step
    step_residuals: np.ndarray  # (steps, 3) at accepted states
    tol: float
    r0: float
    rejected_steps: int

    @property
    def max_residual(self):
        return float(np.max(np.abs(self.residuals)))

    @property
    def max_step_residual(self):
        return float(np.max(np.abs(self.step_residuals)))

    @property
    def constraint_residual(self):
        """Largest |E1 - n| and |E3 - n|, the equations not used by the integrator."""
        return float(max(np.max(np.abs(self.residuals[:, [0, 2]])),
                         np.max(np.abs(self.step_residuals[:, [0, 2]]))))

    def summary(self):
        return {
            "n": self.profile.n,
            "tol": self.tol,
            "r0": self.r0,
            "r_max": float(self.profile.r[-1]),
            "points": int(self.profile.size),
            "accepted_steps": int(self.step_h.size),
            "rejected_steps": int(self.rejected_steps),
            "max_local_error": float(np.max(self.step_error)) if self.step_error.size else 0.0,
            "max_residual": self.max_residual,
            "max_residual_per_equation": np.max(np.abs(self.residuals), axis=0).tolist(),
            "max_step_residual": self.max_step_residual,
            "constraint_residual": self.constraint_residual,
        }


def integrate_profiles(n, seed=None, G0=1.0, r_max=10.0, tol=1e-10, r0=1e-2, num=1001,
                       r=None, form=GEOMETRIC, cap_window=1e-3):
    """Integrate the reduced system from the series hand-off radius r0 to r_max.

    F, F', G, G' are integrated as a first-order system; [0, r0] is filled
    from the series.  The unused equations E1, E3 are evaluated as
    constraint monitors.
    """
    if seed is None:
        seed = series_seed(n, 15)
    if seed.n != n:
        raise ValueError("seed was built for a different n")
    if not G0 > 0:
        raise ValueError("G0 must be positive")
    trunc = seed.truncation_estimate(r0)
    if trunc > tol / 10:
        raise SeedOrderTooLow(f"series truncation {trunc:.2e} at r0 = {r0} exceeds tol/10")

    g = g_series(seed)
    f_float = [float(c) for c in seed.power_coefficients()]
    g_float = [float(G0 * c) for c in g]

    fun = _rhs(n, form)
    y0 = np.array([_eval_series(f_float, r0), _eval_series(f_float, r0, 1),
                   _eval_series(g_float, r0), _eval_series(g_float, r0, 1)])
    traj = _rk.integrate(fun, r0, y0, r_max, tol)

    grid = np.linspace(0.0, r_max, num) if r is None else np.asarray(r, dtype=float)
    inner = grid <= r0
    Y = np.empty((grid.size, 4))
    ri = grid[inner]
    Y[inner] = np.column_stack([_eval_series(f_float, ri), _eval_series(f_float, ri, 1),
                                _eval_series(g_float, ri), _eval_series(g_float, ri, 1)])
    Y[~inner] = _rk.sample(fun, traj, grid[~inner])

    F, dF, G, dG = Y.T
    ddF = np.empty_like(F)
    ddF[inner] = _eval_series(f_float, ri, 2)
    ddF[~inner] = reduced_ddF(n, F[~inner], dF[~inner], form)
    ddG = np.empty_like(G)
    ddG[inner] = _eval_series(g_float, ri, 2)
    ddG[~inner] = G[~inner] * (n - (n - 1) * ddF[~inner] / F[~inner])

    jet = CapJet(float(seed.a(1)), float(seed.a(3)) if seed.order >= 3 else 0.0,
                 float(seed.a(5)) if seed.order >= 5 else 0.0,
                 G0, float(G0 * 2 * g[2]) if len(g) > 2 else 0.0,
                 float(G0 * 24 * g[4]) if len(g) > 4 else 0.0)
    profile = MetricProfile(n, grid, F, G, dF, dG, ddF, ddG, cap_kind=SPHERE_CAP, cap_jet=jet,
                            meta={"kind": "ode", "G0": G0, "form": form})

    Ys = traj.y
    dds = np.array([fun(t, y) for t, y in zip(traj.t, Ys)])
    step_res = frame_residuals(n, Ys[:, 0], Ys[:, 1], dds[:, 1], Ys[:, 2], Ys[:, 3], dds[:, 3], form)
    return ProfileSolution(profile, ode_residuals(profile, n, form, cap_window=cap_window),
                           traj.t[1:], traj.h, traj.err, step_res[1:], tol, r0, traj.rejected)


def ode_residuals(profile, n=None, form=GEOMETRIC, cap_window=1e-3):
    """Residual triple (E1 - n, E2 - n, E3 - n) per grid point, cap-safe.

    Works through the sectional curvatures so the cap point is handled by
    the same series fallback as the curvature engine.
    """
    n = profile.n if n is None else n
    rep = ricci_and_residual(sectional_curvatures(profile, cap_window=cap_window))
    if form == GEOMETRIC:
        e1 = -rep.ric_X
    elif form == PRINTED:
        e1 = -((n - 2) * rep.sec_rX + rep.sec_XX + rep.sec_XT)
    else:
        raise ValueError(f"unknown reduced-equation form {form!r}")
    return np.stack([e1 - n, -rep.ric_r - n, -rep.ric_T - n], axis=-1)
