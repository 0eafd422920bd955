"""Embedded Dormand-Prince 5(4) stepping with per-step error estimates.

scipy's ``solve_ivp`` does not expose the embedded error estimate of each
accepted step, which we report alongside the solution, so the pair is
stepped here directly.  The step controller bounds the error per unit
step, which makes the global error proportional to the tolerance.
"""

from dataclasses import dataclass

import numpy as np

from .errors import StepFailure

_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = np.zeros((7, 7))
_A[1, :1] = [1 / 5]
_A[2, :2] = [3 / 40, 9 / 40]
_A[3, :3] = [44 / 45, -56 / 15, 32 / 9]
_A[4, :4] = [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]
_A[5, :5] = [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]
_A[6, :6] = [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]
_B5 = _A[6].copy()
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


def dopri_step(fun, t, y, h):
    """One Dormand-Prince step; returns (5th-order update, embedded error vector)."""
    K = np.empty((7, y.size))
    K[0] = fun(t, y)
    for i in range(1, 7):
        K[i] = fun(t + _C[i] * h, y + h * (_A[i, :i] @ K[:i]))
    return y + h * (_B5 @ K), h * (_E @ K)


@dataclass
class Trajectory:
    t: np.ndarray
    y: np.ndarray
    h: np.ndarray
    err: np.ndarray
    rejected: int


def integrate(fun, t0, y0, t_end, tol, atol=None, h0=1e-3, max_steps=200_000):
    """Adaptive integration from t0 to t_end with relative tolerance ``tol``."""
    atol = tol * 1e-3 if atol is None else atol
    t = float(t0)
    y = np.asarray(y0, dtype=float)
    ts, ys, hs, errs = [t], [y], [], []
    h = min(h0, t_end - t)
    rejected = 0
    h_min = 1e-13 * max(1.0, abs(t_end))
    while t < t_end:
        if len(hs) + rejected > max_steps:
            raise StepFailure(f"exceeded {max_steps} steps at t = {t:.6g}")
        h = min(h, t_end - t)
        y_new, err = dopri_step(fun, t, y, h)
        if not np.all(np.isfinite(y_new)):
            en = np.inf
        else:
            scale = atol + tol * np.maximum(np.abs(y), np.abs(y_new))
            en = float(np.sqrt(np.mean((err / scale) ** 2))) / h
        if en <= 1.0:
            t = t + h if t_end - t > h else t_end
            y = y_new
            ts.append(t)
            ys.append(y)
            hs.append(h)
            errs.append(float(np.max(np.abs(err))))
            factor = 5.0 if en == 0 else min(5.0, max(0.2, 0.9 * en ** -0.25))
        else:
            rejected += 1
            factor = 0.2 if not np.isfinite(en) else max(0.2, 0.9 * en ** -0.25)
        h *= factor
        if h < h_min and t < t_end:
            raise StepFailure(f"step size underflow at t = {t:.6g}")
    return Trajectory(np.array(ts), np.array(ys), np.array(hs), np.array(errs), rejected)


def sample(fun, traj, t_out):
    """Values at ``t_out`` by a single sub-step from the preceding accepted state."""
    t_out = np.asarray(t_out, dtype=float)
    if t_out.size and (t_out[0] < traj.t[0] or t_out[-1] > traj.t[-1] * (1 + 1e-15)):
        raise ValueError("sample points lie outside the integrated interval")
    idx = np.clip(np.searchsorted(traj.t, t_out, side="right") - 1, 0, traj.t.size - 1)
    out = np.empty((t_out.size, traj.y.shape[1]))
    for k, (i, t) in enumerate(zip(idx, t_out)):
        h = t - traj.t[i]
        out[k] = traj.y[i] if h == 0 else dopri_step(fun, traj.t[i], traj.y[i], h)[0]
    return out
