"""Yamabe constants, ball-volume comparison and theorem hypothesis gates."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from ._util import sphere_volume
from .errors import DeckTruncationTooSmall, NonConvergence

SYMMETRY_NOTE = ("infimum over circle-dependent conformal factors u(t); "
                 "an upper bound for the Yamabe constant under this symmetry reduction")


def yamabe_sphere(n):
    """Yamabe constant of the round n-sphere, n(n-1) Vol(S^n)^{2/n}."""
    if n < 3:
        raise ValueError("n must be at least 3")
    return n * (n - 1) * sphere_volume(n) ** (2.0 / n)


def yamabe_constant_quotient(n, lam):
    """Yamabe quotient of S^1(2 pi lam) x S^{n-1} at u = 1."""
    return (n - 1) * (n - 2) * (2.0 * math.pi * lam * sphere_volume(n - 1)) ** (2.0 / n)


@dataclass(frozen=True, eq=False)
class YamabeResult:
    n: int
    lam: float
    N: int
    value: float
    y_const: float
    y_sphere: float
    minimizer: np.ndarray
    t: np.ndarray
    gradient_norm: float
    iterations: int
    start: str
    runs: dict = field(default_factory=dict)
    note: str = SYMMETRY_NOTE

    @property
    def ratio(self):
        return self.value / self.y_sphere

    def to_dict(self, minimizer=False):
        out = {"n": self.n, "lambda": self.lam, "N": self.N, "Y": self.value,
               "y_const": self.y_const, "y_sphere": self.y_sphere, "ratio": self.ratio,
               "gradient_norm": self.gradient_norm, "iterations": self.iterations,
               "start": self.start, "runs": self.runs, "upper_bound_under_symmetry": True,
               "note": self.note}
        if minimizer:
            out["t"] = self.t
            out["minimizer"] = self.minimizer
        return out


class _Quotient:
    """Spectrally discretized Yamabe quotient on the circle of length 2 pi lam."""

    def __init__(self, n, lam, N):
        self.n, self.N = n, N
        self.L = 2.0 * math.pi * lam
        self.h = self.L / N
        self.t = np.arange(N) * self.h
        self.a = 4.0 * (n - 1) / (n - 2)
        self.R = (n - 1) * (n - 2)
        self.p = 2.0 * n / (n - 2)
        self.omega = sphere_volume(n - 1)
        self.k = 2.0 * math.pi * np.fft.rfftfreq(N, d=self.h)
        self.symbol = self.a * self.k**2 + self.R

    def energy(self, u):
        du = np.fft.irfft(1j * self.k * np.fft.rfft(u), n=self.N)
        return self.h * float(np.sum(self.a * du * du + self.R * u * u))

    def mass(self, u):
        return self.h * float(np.sum(u**self.p))

    def value(self, u):
        return self.omega ** (2.0 / self.n) * self.energy(u) / self.mass(u) ** (2.0 / self.p)

    def preconditioned_gradient(self, u):
        e, d = self.energy(u), self.mass(u)
        w = np.fft.irfft(np.fft.rfft(u ** (self.p - 1.0)) / self.symbol, n=self.N)
        return u - (e / d) * w

    def norm(self, v):
        return math.sqrt(self.h * float(np.sum(v * v)))


def _descend(Q, u, gtol, max_iter):
    q = Q.value(u)
    gn = np.inf
    for it in range(max_iter):
        g = Q.preconditioned_gradient(u)
        gn = Q.norm(g) / Q.norm(u)
        if gn < gtol:
            return u, q, gn, it
        tau = 1.0
        while True:
            trial = u - tau * g
            if trial.min() > 0:
                qt = Q.value(trial)
                if qt <= q:
                    break
            tau *= 0.5
            if tau < 1e-12:
                return u, q, gn, it
        u = trial / np.max(trial)
        q = qt
    return u, q, gn, max_iter


def _newton(Q, u, iters=30):
    """Solve L u = u^{p-1} from a nearby positive u; None if it does not settle.

    The descent cannot resolve quotient differences below rounding, so the
    last digits of the critical point come from the Euler-Lagrange equation.
    """
    N, p = Q.N, Q.p
    Lmat = np.fft.irfft(Q.symbol[:, None] * np.fft.rfft(np.eye(N), axis=0), n=N, axis=0)
    c = (float(u @ (Lmat @ u)) / float(np.sum(u**p))) ** (1.0 / (p - 2.0))
    v = c * u
    prev = np.inf
    for _ in range(iters):
        res = Lmat @ v - v ** (p - 1.0)
        size = np.linalg.norm(res) / np.linalg.norm(v ** (p - 1.0))
        if size < 1e-14:
            return v
        if size > 0.5 * prev:
            # stagnation at the rounding floor of the spectral operator
            return v if prev < 1e-8 else None
        prev = size
        J = Lmat - (p - 1.0) * np.diag(v ** (p - 2.0))
        # translations along the circle are a zero mode of J; take the minimal step
        v = v - np.linalg.lstsq(J, res, rcond=1e-10)[0]
        if v.min() <= 0:
            return None
    return v if prev < 1e-8 else None


def _minimize(Q, u0, gtol, max_iter):
    u, q, gn, it = _descend(Q, u0, max(gtol, 1e-7), max_iter)
    v = _newton(Q, u)
    if v is not None:
        qv = Q.value(v)
        # accept only the same critical point, never a jump upward
        if qv <= q * (1.0 + 1e-10):
            u, q = v / np.max(v), qv
            gn = Q.norm(Q.preconditioned_gradient(u)) / Q.norm(u)
    if gn >= gtol:
        u, q, gn, extra = _descend(Q, u, gtol, max_iter)
        it += extra
    return u, q, gn, it, gn < gtol


def yamabe_product(n, lam, N=256, gtol=1e-10, max_iter=5000):
    """Minimize the Yamabe quotient of S^1(2 pi lam) x S^{n-1} over positive u(t).

    Runs a Sobolev-preconditioned descent, polished by Newton's method, from
    u = 1 and from a bump and reports the lower value.
    """
    if N < 64:
        raise ValueError("N must be at least 64")
    if not lam > 0:
        raise ValueError("lambda must be positive")
    Q = _Quotient(n, lam, N)
    t = Q.t
    bump = np.cosh(t - Q.L / 2.0) ** (-(n - 2) / 2.0) + 0.05
    runs = {}
    results = []
    for name, u0 in (("constant", np.ones(N)), ("bump", bump)):
        u, q, gn, it, ok = _minimize(Q, u0, gtol, max_iter)
        runs[name] = {"value": q, "gradient_norm": gn, "iterations": it, "converged": ok}
        results.append((q, name, u, gn, it, ok))
    converged = [r for r in results if r[5]]
    if not converged:
        raise NonConvergence(f"descent stalled: gradient norms {[r[3] for r in results]}")
    best = min(results, key=lambda r: r[0])
    best_conv = min(converged, key=lambda r: r[0])
    if not best[5]:
        # an unconverged run only matters if it undercuts the converged one
        if best[0] < best_conv[0] - 1e-10 * abs(best_conv[0]):
            raise NonConvergence(
                f"lowest run ({best[1]}) has gradient norm {best[3]:.2e} above {gtol:.1e}")
        best = best_conv
    q, name, u, gn, it, _ = best
    return YamabeResult(n, float(lam), N, float(q), yamabe_constant_quotient(n, lam),
                        yamabe_sphere(n), u / np.max(u), t, float(gn), it, name, runs)


def hyperbolic_ball_volume(r, n=3):
    """Volume of a geodesic r-ball in hyperbolic (n+1)-space."""
    if r < 0:
        raise ValueError("radius must be nonnegative")
    if n == 3:
        # integral of sinh^3 = cosh^3/3 - cosh + 2/3 = (cosh - 1)^2 (cosh + 2)/3
        cm1 = 2.0 * math.sinh(r / 2.0) ** 2
        val = cm1 * cm1 * (cm1 + 3.0) / 3.0
        return sphere_volume(3) * val
    return sphere_volume(n) * quad(lambda t: math.sinh(t) ** n, 0.0, r, epsabs=0, epsrel=1e-13)[0]


def axis_ball_volume(lam, r, n=3):
    """Ball volume in the hyperbolic filling for a centre on the core geodesic.

    The ball consists of the points with cosh(rho) cosh(t) <= cosh(r), |t| <= pi lam.
    """
    ell = 2.0 * math.pi * lam
    t_max = min(r, ell / 2.0)
    chr_ = math.cosh(r)

    def slab(t):
        c = chr_ / math.cosh(t)
        if c <= 1.0:
            return 0.0
        return math.sqrt(c * c - 1.0) ** n

    val = quad(slab, 0.0, t_max, epsabs=0, epsrel=1e-12, limit=200)[0]
    return 2.0 * sphere_volume(n - 1) / n * val


@dataclass(frozen=True)
class BallVolumeEstimate:
    lam: float
    center_distance: float
    r: float
    mean: float
    stderr: float
    samples: int
    seed: int
    K: int
    n: int = 3

    @property
    def hyperbolic_volume(self):
        return hyperbolic_ball_volume(self.r, self.n)

    def to_dict(self):
        hv = self.hyperbolic_volume
        return {"n": self.n, "lambda": self.lam, "center_distance": self.center_distance,
                "r": self.r, "volume": self.mean, "stderr": self.stderr,
                "samples": self.samples, "seed": self.seed, "deck_copies": self.K,
                "hyperbolic_volume": hv, "ratio": self.mean / hv, "ratio_stderr": self.stderr / hv}


def required_deck_copies(lam, r, margin=1e-6):
    """Smallest K such that translates beyond |k| = K lie farther than r + margin.

    Projection to the core axis is 1-Lipschitz, so d(p, gamma^k q) >= |k| ell - ell/2
    for p on the slice t = 0 and q in the window |t| <= ell/2.
    """
    ell = 2.0 * math.pi * lam
    return max(0, math.ceil((r + margin) / ell - 0.5))


def _ball_chunk(rng, count, n, lam, rho_p, r, K):
    ell = 2.0 * math.pi * lam
    rho_max = rho_p + r
    u = rng.random(count)
    rho = np.arcsinh(math.sinh(rho_max) * u ** (1.0 / n))
    t = (rng.random(count) - 0.5) * ell
    omega = rng.standard_normal((count, n))
    omega /= np.linalg.norm(omega, axis=1, keepdims=True)
    # centre at (rho_p, e_1, t = 0)
    cosang = omega[:, 0]
    base = np.cosh(rho_p) * np.cosh(rho)
    cross = np.sinh(rho_p) * np.sinh(rho) * cosang
    best = np.full(count, np.inf)
    for k in range(-K, K + 1):
        best = np.minimum(best, base * np.cosh(t + k * ell) - cross)
    return np.count_nonzero(best <= math.cosh(r))


def quotient_ball_volume(lam, center_distance, r, samples=100_000, seed=0, K=None, n=3,
                         chunk=100_000, workers=1):
    """Monte-Carlo volume of B_r(p) in the hyperbolic filling S^1 x D^n.

    Points are drawn uniformly in the Fermi tube {rho <= rho_p + r} over one
    period of the core axis; membership uses the hyperboloid distance to
    the nearest deck translate.
    """
    if samples < 1:
        raise ValueError("samples must be positive")
    if r < 0 or center_distance < 0:
        raise ValueError("radius and centre distance must be nonnegative")
    K_req = required_deck_copies(lam, r)
    if K is None:
        K = K_req
    elif K < K_req:
        raise DeckTruncationTooSmall(f"K = {K} misses translates; need K >= {K_req}")
    ell = 2.0 * math.pi * lam
    region = ell * sphere_volume(n - 1) * math.sinh(center_distance + r) ** n / n
    sizes = [chunk] * (samples // chunk) + ([samples % chunk] if samples % chunk else [])
    streams = np.random.SeedSequence(seed).spawn(len(sizes))

    def run(args):
        ss, size = args
        return _ball_chunk(np.random.default_rng(ss), size, n, lam, center_distance, r, K)

    jobs = list(zip(streams, sizes))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            hits = list(pool.map(run, jobs))
    else:
        hits = [run(j) for j in jobs]
    total = sum(hits)
    frac = total / samples
    mean = region * frac
    stderr = region * math.sqrt(max(frac * (1.0 - frac), 0.0) / samples)
    return BallVolumeEstimate(float(lam), float(center_distance), float(r), mean, stderr,
                              int(samples), int(seed), int(K), n)


@dataclass
class GateThresholds:
    """User-supplied constants; the theorems only assert that some exist."""

    delta: float | None = None
    eta: float | None = None
    epsilon: float | None = None
    lambda0: float | None = None


def volume_comparison(lam, Y, radii=(1.0, 2.0, 3.0), samples=100_000, seed=0, n=3,
                      center_distance=0.0, sigmas=3.0, workers=1):
    """(Y/Y0)^{n/2} - k sigma <= Vol(B_r)/Vol_{-1}(B_r) <= 1 + k sigma at each radius."""
    lower = (Y / yamabe_sphere(n)) ** (n / 2.0)
    rows = []
    for i, r in enumerate(radii):
        est = quotient_ball_volume(lam, center_distance, r, samples, seed + i, n=n, workers=workers)
        hv = hyperbolic_ball_volume(r, n)
        ratio, sig = est.mean / hv, est.stderr / hv
        ok = lower - sigmas * sig <= ratio <= 1.0 + sigmas * sig
        rows.append({"r": r, "ratio": ratio, "ratio_stderr": sig, "lower": lower, "pass": bool(ok)})
    return {"lambda": lam, "Y": Y, "lower_bound": lower, "radii": rows,
            "pass": all(row["pass"] for row in rows)}


def theorem_gates(entry, thresholds=None, Y=None, volume=None):
    """Hypothesis verdicts for one filling.

    ``entry`` carries kind, lambda, n, curvature report and weyl energy;
    ``Y`` is the boundary Yamabe constant and ``volume`` an optional
    volume-comparison result.  Only hypotheses are evaluated.
    """
    th = thresholds or GateThresholds()
    rep = entry["report"]
    n = entry["n"]
    sup_weyl = float(np.max(rep.weyl_norm)) if rep.weyl_norm_sq is not None else None
    max_sec = rep.max_sectional()
    pinch = None
    if Y is not None and entry["weyl_energy"] is not None:
        pinch = entry["weyl_energy"] / Y ** (n / 2.0)
    verdict = {
        "nonpositive_curvature": bool(max_sec <= 1e-9),
        "max_sectional": max_sec,
        "sup_sec_plus_one": rep.sup_sec_plus_one(),
        "sup_weyl": sup_weyl,
        "weyl_energy": entry["weyl_energy"],
        "yamabe": Y,
        "pinching_lhs_over_Y_pow": pinch,
        "vol_comparison_pass": None if volume is None else bool(volume["pass"]),
    }
    if th.delta is not None and pinch is not None:
        verdict["weyl_pinching_holds"] = bool(pinch <= th.delta)
    if th.eta is not None and sup_weyl is not None:
        verdict["sup_weyl_small"] = bool(sup_weyl <= th.eta)
    if th.epsilon is not None:
        verdict["sec_pinched"] = bool(rep.sup_sec_plus_one() <= th.epsilon)
    if th.lambda0 is not None:
        verdict["lambda_large"] = bool(entry["lambda"] >= th.lambda0)
    return verdict
