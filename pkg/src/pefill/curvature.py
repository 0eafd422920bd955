"""Curvature of diagonal cohomogeneity-one metrics.

Everything is expressed in the orthonormal frame {d_r, X_1..X_{n-1}, T}.
For this ansatz the curvature operator is diagonal on the coordinate
2-planes, so the four sectional families determine the whole Riemann
tensor:

    sec(d_r ^ X) = -F''/F          sec(d_r ^ T) = -G''/G
    sec(X ^ X)   = (1 - F'^2)/F^2  sec(X ^ T)   = -F'G'/(FG)
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import CapSingularity, EinsteinResidualTooLarge, InvalidProfile
from .profile import CIRCLE_CAP, SPHERE_CAP, fit_cap_jet

PAIR = "pair"
FULL = "full"

PLANES = ("rX", "rT", "XX", "XT")


def plane_multiplicities(n):
    """Number of unordered frame planes in each family."""
    return {"rX": n - 1, "rT": 1, "XX": (n - 1) * (n - 2) // 2, "XT": n - 1}


@dataclass(frozen=True, eq=False)
class CurvatureReport:
    n: int
    r: np.ndarray
    sec_rX: np.ndarray
    sec_rT: np.ndarray
    sec_XX: np.ndarray
    sec_XT: np.ndarray
    ric_r: np.ndarray | None = None
    ric_X: np.ndarray | None = None
    ric_T: np.ndarray | None = None
    scal: np.ndarray | None = None
    einstein_target: float | None = None
    residual: np.ndarray | None = None
    weyl_rX: np.ndarray | None = None
    weyl_rT: np.ndarray | None = None
    weyl_XX: np.ndarray | None = None
    weyl_XT: np.ndarray | None = None
    weyl_norm_sq: np.ndarray | None = None
    weyl_convention: str | None = None

    @property
    def einstein_residual(self):
        if self.residual is None:
            return None
        return float(np.max(self.residual))

    @property
    def sectionals(self):
        return {"rX": self.sec_rX, "rT": self.sec_rT, "XX": self.sec_XX, "XT": self.sec_XT}

    @property
    def weyl(self):
        if self.weyl_rX is None:
            return None
        return {"rX": self.weyl_rX, "rT": self.weyl_rT, "XX": self.weyl_XX, "XT": self.weyl_XT}

    @property
    def weyl_norm(self):
        """Pointwise |W| under the report's convention."""
        return np.sqrt(self.weyl_norm_sq)

    def max_sectional(self):
        return float(max(np.max(v) for v in self.sectionals.values()))

    def sup_sec_plus_one(self):
        return float(max(np.max(np.abs(v + 1.0)) for v in self.sectionals.values()))

    def to_dict(self):
        out = {"n": self.n, "r": self.r}
        for name in PLANES:
            out["sec_" + name] = getattr(self, "sec_" + name)
        if self.ric_r is not None:
            out.update(ric_r=self.ric_r, ric_X=self.ric_X, ric_T=self.ric_T, scal=self.scal,
                       einstein_target=self.einstein_target, residual=self.residual,
                       einstein_residual=self.einstein_residual)
        if self.weyl_rX is not None:
            for name in PLANES:
                out["weyl_" + name] = getattr(self, "weyl_" + name)
            out["weyl_norm_sq"] = self.weyl_norm_sq
            out["weyl_convention"] = self.weyl_convention
            out["sup_weyl"] = float(np.max(self.weyl_norm))
        out["max_sectional"] = self.max_sectional()
        return out


def _cap_series(r, jet, kind):
    """Even Taylor expansions (through r^2) of the ratios that are 0/0 at the cap."""
    a1, a3, a5 = jet.slope, jet.d3, jet.d5
    q2, q4 = jet.d2, jet.d4
    r2 = r * r
    ddP_over_P = a3 / a1 + r2 * (a5 / (6.0 * a1) - a3 * a3 / (6.0 * a1 * a1))
    # P'Q'/P, regular because Q is even
    cross_num = q2 + r2 * (q4 / 6.0 + a3 * q2 / (3.0 * a1))
    out = {"ddP_over_P": ddP_over_P, "cross_num": cross_num}
    if kind == SPHERE_CAP:
        out["XX"] = -a3 + r2 * (a3 * a3 - a5) / 12.0
    return out


def sectional_curvatures(profile, cap_window=1e-3):
    """Sectional curvatures of the four plane families on the profile grid."""
    F, G, dF, dG, ddF, ddG = (profile.F, profile.G, profile.dF, profile.dG,
                              profile.ddF, profile.ddG)
    r = profile.r
    if profile.cap_kind is None:
        if np.any(F == 0) or np.any(G == 0):
            raise CapSingularity("warping factor vanishes on a profile with no declared cap")
        near = np.zeros(r.size, dtype=bool)
    else:
        near = r < cap_window
        P = profile.capping[0]
        if np.any(P[~near] == 0):
            raise CapSingularity("capping factor vanishes outside the cap window")
    if np.any(profile.capping[3] <= 0):
        raise InvalidProfile("non-capping factor must be positive")

    with np.errstate(divide="ignore", invalid="ignore"):
        sec_rX = -ddF / F
        sec_rT = -ddG / G
        sec_XX = (1.0 - dF * dF) / (F * F)
        sec_XT = -(dF * dG) / (F * G)

    if np.any(near):
        jet = profile.cap_jet if profile.cap_jet is not None else fit_cap_jet(profile)
        if abs(jet.slope - 1.0) > profile.cap_tol:
            raise CapSingularity(f"cap slope {jet.slope:.12g} is not 1; curvature is singular")
        rn = r[near]
        ser = _cap_series(rn, jet, profile.cap_kind)
        if profile.cap_kind == SPHERE_CAP:
            sec_rX[near] = -ser["ddP_over_P"]
            sec_XX[near] = ser["XX"]
            sec_XT[near] = -ser["cross_num"] / G[near]
        else:
            sec_rT[near] = -ser["ddP_over_P"]
            sec_XT[near] = -ser["cross_num"] / F[near]

    for name, arr in (("rX", sec_rX), ("rT", sec_rT), ("XX", sec_XX), ("XT", sec_XT)):
        if not np.all(np.isfinite(arr)):
            raise CapSingularity(f"non-finite sectional curvature in family {name}")
    return CurvatureReport(profile.n, r.copy(), sec_rX, sec_rT, sec_XX, sec_XT)


def _ricci_from_sectionals(report):
    n = report.n
    ric_r = (n - 1) * report.sec_rX + report.sec_rT
    ric_X = report.sec_rX + (n - 2) * report.sec_XX + report.sec_XT
    ric_T = report.sec_rT + (n - 1) * report.sec_XT
    return ric_r, ric_X, ric_T


def ricci_and_residual(profile_or_report, target_einstein_const=None, cap_window=1e-3):
    """Ricci diagonal, scalar curvature and the Einstein residual max_a |Ric_aa - c|.

    ``target_einstein_const`` defaults to -n (Poincare-Einstein normalization).
    """
    if isinstance(profile_or_report, CurvatureReport):
        report = profile_or_report
    else:
        report = sectional_curvatures(profile_or_report, cap_window=cap_window)
    n = report.n
    target = -float(n) if target_einstein_const is None else float(target_einstein_const)
    ric_r, ric_X, ric_T = _ricci_from_sectionals(report)
    scal = ric_r + (n - 1) * ric_X + ric_T
    residual = np.max(np.abs(np.stack([ric_r, ric_X, ric_T]) - target), axis=0)
    return replace(report, ric_r=ric_r, ric_X=ric_X, ric_T=ric_T, scal=scal,
                   einstein_target=target, residual=residual)


def weyl_norm_sq(weyl, n, convention=PAIR):
    """|W|^2 from the diagonal components.

    ``pair`` sums over unordered planes; ``full`` sums over all four indices
    and is four times larger.
    """
    mult = plane_multiplicities(n)
    total = sum(mult[k] * weyl[k] ** 2 for k in PLANES)
    if convention == PAIR:
        return total
    if convention == FULL:
        return 4.0 * total
    raise ValueError(f"unknown Weyl norm convention {convention!r}")


def frame_riemann(report):
    """Full Riemann tensor R[a,b,c,d] per grid point, shape (points, N, N, N, N)."""
    n = report.n
    N = n + 1
    pts = report.r.size
    K = np.zeros((pts, N, N))
    # index 0 = d_r, 1..n-1 = X_i, n = T
    for i in range(1, n):
        K[:, 0, i] = K[:, i, 0] = report.sec_rX
        K[:, i, n] = K[:, n, i] = report.sec_XT
        for j in range(1, n):
            if i != j:
                K[:, i, j] = report.sec_XX
    K[:, 0, n] = K[:, n, 0] = report.sec_rT
    eye = np.eye(N)
    # R_abcd = K_ab (d_ac d_bd - d_ad d_bc) for a diagonal curvature operator
    R = K[:, :, :, None, None] * (
        eye[None, :, None, :, None] * eye[None, None, :, None, :]
        - eye[None, :, None, None, :] * eye[None, None, :, :, None]
    )
    return R


def kulkarni_nomizu(A, B):
    """(A o B)_abcd = A_ac B_bd + A_bd B_ac - A_ad B_bc - A_bc B_ad (batched)."""
    return (np.einsum("...ac,...bd->...abcd", A, B) + np.einsum("...bd,...ac->...abcd", A, B)
            - np.einsum("...ad,...bc->...abcd", A, B) - np.einsum("...bc,...ad->...abcd", A, B))


def weyl_tensor_kn(report):
    """W = Rm - P o g with the Schouten tensor P, assembled index by index."""
    R = frame_riemann(report)
    N = report.n + 1
    ric = np.einsum("...acbc->...ab", R)
    scal = np.einsum("...aa->...", ric)
    g = np.broadcast_to(np.eye(N), ric.shape)
    schouten = (ric - scal[..., None, None] / (2.0 * (N - 1)) * g) / (N - 2)
    return R - kulkarni_nomizu(schouten, g)


def weyl_diagonal(report, n=None, method="einstein", tol=1e-8, convention=PAIR):
    """Diagonal Weyl components and |W|^2.

    ``method="einstein"`` uses W_abab = sec_ab + 1, valid when Ric = -n g;
    ``method="kulkarni-nomizu"`` assembles the tensor in full and works for
    any input.
    """
    n = report.n if n is None else n
    if method == "einstein":
        if report.residual is None:
            report = ricci_and_residual(report)
        if report.einstein_target != -float(n):
            raise EinsteinResidualTooLarge("the shortcut assumes the target Ric = -n g")
        if report.einstein_residual > tol:
            raise EinsteinResidualTooLarge(
                f"Einstein residual {report.einstein_residual:.3e} exceeds {tol:.1e}")
        weyl = {k: v + 1.0 for k, v in report.sectionals.items()}
    elif method == "kulkarni-nomizu":
        W = weyl_tensor_kn(report)
        weyl = {"rX": W[:, 0, 1, 0, 1], "rT": W[:, 0, n, 0, n]}
        weyl["XX"] = W[:, 1, 2, 1, 2] if n >= 3 else np.zeros_like(report.r)
        weyl["XT"] = W[:, 1, n, 1, n]
    else:
        raise ValueError(f"unknown Weyl method {method!r}")
    return replace(report, weyl_rX=weyl["rX"], weyl_rT=weyl["rT"], weyl_XX=weyl["XX"],
                   weyl_XT=weyl["XT"], weyl_norm_sq=weyl_norm_sq(weyl, n, convention),
                   weyl_convention=convention)


def weyl_row_sums(report):
    """sum_b W_abab for a = d_r, X, T; each vanishes for a trace-free W."""
    n = report.n
    w = report.weyl
    row_r = (n - 1) * w["rX"] + w["rT"]
    row_X = w["rX"] + (n - 2) * w["XX"] + w["XT"]
    row_T = w["rT"] + (n - 1) * w["XT"]
    return np.stack([row_r, row_X, row_T])


def curvature_report(profile, cap_window=1e-3, tol=1e-8, convention=PAIR):
    """Sectional, Ricci and Weyl data in one pass.

    The Einstein shortcut is used when the residual allows it, otherwise
    the full tensor assembly.
    """
    rep = ricci_and_residual(profile, cap_window=cap_window)
    method = "einstein" if rep.einstein_residual <= tol else "kulkarni-nomizu"
    return weyl_diagonal(rep, method=method, tol=tol, convention=convention)
