"""Sampled warped-product profiles.

A profile describes the cohomogeneity-one metric

    g = dr^2 + F(r)^2 g_{S^{n-1}} + G(r)^2 Theta^2

on an (n+1)-manifold, where Theta is the unit-speed form on a circle of
period 2*pi.  At most one factor closes off at r = 0: ``"sphere-cap"``
means F(0) = 0 (the hyperbolic filling S^1 x D^n), ``"circle-cap"``
means G(0) = 0 (the AdS-Schwarzschild filling D^2 x S^{n-1}).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._util import fmt_float
from .errors import CapSingularity, InvalidProfile

SPHERE_CAP = "sphere-cap"
CIRCLE_CAP = "circle-cap"
CAP_KINDS = (SPHERE_CAP, CIRCLE_CAP)

CSV_COLUMNS = ("r", "F", "G", "dF", "dG", "ddF", "ddG")


@dataclass(frozen=True)
class CapJet:
    """Taylor data at r = 0 for the capping factor P and the other factor Q.

    P is odd in r (P'(0) = slope, P'''(0) = d3, P^(5)(0) = d5); Q is even
    (Q(0) = value, Q''(0) = d2, Q''''(0) = d4).
    """

    slope: float
    d3: float
    d5: float
    value: float
    d2: float
    d4: float


@dataclass(frozen=True, eq=False)
class MetricProfile:
    n: int
    r: np.ndarray
    F: np.ndarray
    G: np.ndarray
    dF: np.ndarray
    dG: np.ndarray
    ddF: np.ndarray
    ddG: np.ndarray
    cap_kind: str | None = None
    cap_jet: CapJet | None = None
    analytic: bool = False
    cap_tol: float = 1e-6
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        arrays = {}
        for name in CSV_COLUMNS:
            a = np.asarray(getattr(self, name), dtype=float)
            if a.ndim != 1:
                raise InvalidProfile(f"{name} must be one-dimensional")
            arrays[name] = a
            object.__setattr__(self, name, a)
        size = arrays["r"].size
        if any(a.size != size for a in arrays.values()):
            raise InvalidProfile("all profile arrays must have the same length")
        if size < 2:
            raise InvalidProfile("a profile needs at least two grid points")
        if self.n < 3:
            raise InvalidProfile("boundary dimension n must be at least 3")
        r = arrays["r"]
        if not np.all(np.isfinite(r)) or np.any(np.diff(r) <= 0):
            raise InvalidProfile("r grid must be finite and strictly increasing")
        if r[0] < 0:
            raise InvalidProfile("r grid must be non-negative")
        if self.cap_kind is None:
            if np.any(arrays["F"] <= 0) or np.any(arrays["G"] <= 0):
                raise InvalidProfile("warping factors must be positive on an uncapped profile")
            return
        if self.cap_kind not in CAP_KINDS:
            raise InvalidProfile(f"unknown cap kind {self.cap_kind!r}")
        if r[0] != 0.0:
            raise InvalidProfile("a capped profile must start at r = 0")
        P, Q = (arrays["F"], arrays["G"]) if self.cap_kind == SPHERE_CAP else (arrays["G"], arrays["F"])
        dP = arrays["dF"] if self.cap_kind == SPHERE_CAP else arrays["dG"]
        scale = max(1.0, float(np.max(np.abs(P[: min(size, 4)]))))
        if abs(P[0]) > self.cap_tol * scale:
            raise InvalidProfile(f"capping factor is {P[0]:.3e} at r = 0, expected 0")
        if abs(dP[0] - 1.0) > self.cap_tol:
            raise InvalidProfile(f"cap slope {dP[0]:.12g} differs from 1 (cone singularity)")
        if np.any(P[1:] <= 0):
            raise InvalidProfile("capping factor must be positive away from r = 0")
        if np.any(Q <= 0):
            raise InvalidProfile("non-capping factor must be strictly positive")

    @property
    def size(self):
        return self.r.size

    @property
    def cap_slope(self):
        if self.cap_kind == SPHERE_CAP:
            return float(self.dF[0])
        if self.cap_kind == CIRCLE_CAP:
            return float(self.dG[0])
        return None

    @property
    def capping(self):
        """(P, dP, ddP, Q, dQ, ddQ) ordered so that P is the factor that closes."""
        if self.cap_kind == CIRCLE_CAP:
            return self.G, self.dG, self.ddG, self.F, self.dF, self.ddF
        return self.F, self.dF, self.ddF, self.G, self.dG, self.ddG

    def with_G_scaled(self, c):
        """Same profile with the circle factor multiplied by the constant c."""
        jet = self.cap_jet
        if jet is not None and self.cap_kind == SPHERE_CAP:
            jet = CapJet(jet.slope, jet.d3, jet.d5, c * jet.value, c * jet.d2, c * jet.d4)
        elif self.cap_kind == CIRCLE_CAP:
            raise InvalidProfile("scaling the capping circle factor breaks the cap slope")
        return MetricProfile(
            self.n, self.r, self.F, c * self.G, self.dF, c * self.dG, self.ddF, c * self.ddG,
            cap_kind=self.cap_kind, cap_jet=jet, analytic=self.analytic, cap_tol=self.cap_tol,
            meta=dict(self.meta),
        )

    @classmethod
    def from_samples(cls, n, r, F, G, dF=None, dG=None, ddF=None, ddG=None,
                     cap_kind=None, cap_jet=None, cap_tol=1e-6, meta=None):
        """Build a profile, filling missing derivatives by 5-point finite differences."""
        r = np.asarray(r, dtype=float)
        F = np.asarray(F, dtype=float)
        G = np.asarray(G, dtype=float)
        given = [d is not None for d in (dF, dG, ddF, ddG)]
        if r.size < 5 and not all(given):
            raise InvalidProfile("finite differences need at least 5 grid points")
        dF = finite_difference(r, F, 1) if dF is None else dF
        dG = finite_difference(r, G, 1) if dG is None else dG
        ddF = finite_difference(r, F, 2) if ddF is None else ddF
        ddG = finite_difference(r, G, 2) if ddG is None else ddG
        return cls(n, r, F, G, dF, dG, ddF, ddG, cap_kind=cap_kind, cap_jet=cap_jet,
                   analytic=all(given), cap_tol=cap_tol, meta=dict(meta or {}))

    def to_csv(self, path=None, derivatives=True):
        """Write the profile CSV; returns the text when ``path`` is None."""
        cols = CSV_COLUMNS if derivatives else CSV_COLUMNS[:3]
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(cols)
        data = [getattr(self, c) for c in cols]
        for row in zip(*data):
            writer.writerow([fmt_float(v) for v in row])
        text = buf.getvalue()
        if path is None:
            return text
        Path(path).write_text(text, encoding="utf-8")
        return text

    @classmethod
    def read_csv(cls, path_or_text, n, cap_kind=None, cap_tol=1e-6):
        if isinstance(path_or_text, Path) or (
            isinstance(path_or_text, str) and "\n" not in path_or_text
        ):
            text = Path(path_or_text).read_text(encoding="utf-8")
        else:
            text = path_or_text
        reader = csv.reader(io.StringIO(text))
        header = [h.strip() for h in next(reader)]
        if header[:3] != ["r", "F", "G"] or any(h not in CSV_COLUMNS for h in header):
            raise InvalidProfile(f"bad profile CSV header: {','.join(header)}")
        rows = [[float(v) for v in row] for row in reader if row]
        data = np.array(rows, dtype=float).T
        cols = dict(zip(header, data))
        return cls.from_samples(
            n, cols["r"], cols["F"], cols["G"], cols.get("dF"), cols.get("dG"),
            cols.get("ddF"), cols.get("ddG"), cap_kind=cap_kind, cap_tol=cap_tol,
        )


def fd_weights(x0, x, order):
    """Finite-difference weights at x0 for the stencil x (Fornberg's recursion)."""
    x = np.asarray(x, dtype=float)
    m = x.size
    c = np.zeros((m, order + 1))
    c1 = 1.0
    c4 = x[0] - x0
    c[0, 0] = 1.0
    for i in range(1, m):
        mn = min(i, order)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - x0
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[i, k] = c1 * (k * c[i - 1, k - 1] - c5 * c[i - 1, k]) / c2
                c[i, 0] = -c1 * c5 * c[i - 1, 0] / c2
            for k in range(mn, 0, -1):
                c[j, k] = (c4 * c[j, k] - k * c[j, k - 1]) / c3
            c[j, 0] = c4 * c[j, 0] / c3
        c1 = c2
    return c[:, order]


def finite_difference(r, y, order, width=5):
    """Derivative of sampled data: centred 5-point stencils, one-sided at the ends."""
    r = np.asarray(r, dtype=float)
    y = np.asarray(y, dtype=float)
    size = r.size
    if size < width:
        raise InvalidProfile(f"need at least {width} points for finite differences")
    out = np.empty(size)
    half = width // 2
    for i in range(size):
        lo = min(max(i - half, 0), size - width)
        idx = slice(lo, lo + width)
        out[i] = fd_weights(r[i], r[idx], order) @ y[idx]
    return out


def fit_cap_jet(profile, points=8):
    """Estimate cap Taylor data from the derivative samples nearest r = 0.

    The second derivative of the odd capping factor is fitted by
    d3*r + d5*r^3/6 + d7*r^5/120, that of the even factor by
    d2 + d4*r^2/2 + d6*r^4/24.
    """
    if profile.cap_kind is None:
        return None
    P, dP, ddP, Q, dQ, ddQ = profile.capping
    r = profile.r
    if r.size < points + 1:
        raise CapSingularity("too few grid points to build the cap series")
    rs = r[:points + 1]
    odd = np.column_stack([rs, rs**3 / 6.0, rs**5 / 120.0])
    even = np.column_stack([np.ones_like(rs), rs**2 / 2.0, rs**4 / 24.0])
    d3, d5, _ = np.linalg.lstsq(odd, ddP[:points + 1], rcond=None)[0]
    d2, d4, _ = np.linalg.lstsq(even, ddQ[:points + 1], rcond=None)[0]
    return CapJet(float(dP[0]), float(d3), float(d5), float(Q[0]), float(d2), float(d4))


@dataclass(frozen=True)
class HyperbolicFilling:
    """The constant-curvature filling of (S^1 x S^{n-1}, lam^2 tau^2 + g_c)."""

    n: int
    lam: float

    def __post_init__(self):
        if self.n < 3:
            raise InvalidProfile("n must be at least 3")
        if not self.lam > 0:
            raise InvalidProfile("lambda must be positive")


def hyperbolic_profile(n, lam, r_max=15.0, num=3001, r=None):
    """g_lam = dr^2 + sinh^2 r g_c + lam^2 cosh^2 r dtheta^2 with exact derivatives."""
    r = np.linspace(0.0, r_max, num) if r is None else np.asarray(r, dtype=float)
    sh, ch = np.sinh(r), np.cosh(r)
    return MetricProfile(
        n, r, sh, lam * ch, ch, lam * sh, sh, lam * ch,
        cap_kind=SPHERE_CAP if r[0] == 0.0 else None,
        cap_jet=CapJet(1.0, 1.0, 1.0, lam, lam, lam),
        analytic=True,
        meta={"kind": "hyperbolic", "lambda": lam},
    )
