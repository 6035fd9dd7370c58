"""Adaptive Dormand-Prince 5(4) integrator with a quartic dense output.

Compiled with numba; the right-hand side is an njit function with signature
``rhs(t, y, pp, aux, out)``. The generic routines are marked inline so the
per-model entry points (which reference their RHS as a module global) stay
disk-cacheable; numba cannot cache specializations keyed on function-valued
arguments. Integration is restarted from scratch on every
segment between release times, so state jumps are applied exactly and never
smeared across a step. The dense-output coefficients are the classic ones
(identical to scipy's RK45 interpolant).
"""

from __future__ import annotations

import numpy as np
from numba import njit

__all__ = ["integrate_segment", "eval_dense", "STATUS_OK", "STATUS_STEP_UNDERFLOW"]

STATUS_OK = 0
STATUS_STEP_UNDERFLOW = 1

# Dormand-Prince 5(4) tableau
_C2, _C3, _C4, _C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
_A61, _A62, _A63, _A64, _A65 = (
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
)
_B1, _B3, _B4, _B5, _B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
_E1, _E3, _E4, _E5, _E6, _E7 = (
    -71.0 / 57600.0,
    71.0 / 16695.0,
    -71.0 / 1920.0,
    17253.0 / 339200.0,
    -22.0 / 525.0,
    1.0 / 40.0,
)
# dense-output polynomial: y(t0 + s*h) = y0 + h * sum_j Q[:, j] s^(j+1);
# scalar constants (not an array) so the jitted integrator stays disk-cacheable
_P10 = 1.0
_P11 = -8048581381.0 / 2820520608.0
_P12 = 8663915743.0 / 2820520608.0
_P13 = -12715105075.0 / 11282082432.0
_P31 = 131558114200.0 / 32700410799.0
_P32 = -68118460800.0 / 10900136933.0
_P33 = 87487479700.0 / 32700410799.0
_P41 = -1754552775.0 / 470086768.0
_P42 = 14199869525.0 / 1410260304.0
_P43 = -10690763975.0 / 1880347072.0
_P51 = 127303824393.0 / 49829197408.0
_P52 = -318862633887.0 / 49829197408.0
_P53 = 701980252875.0 / 199316789632.0
_P61 = -282668133.0 / 205662961.0
_P62 = 2019193451.0 / 616988883.0
_P63 = -1453857185.0 / 822651844.0
_P71 = 40617522.0 / 29380423.0
_P72 = -110615467.0 / 29380423.0
_P73 = 69997945.0 / 29380423.0

_SAFETY = 0.9
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0


@njit(inline="always")
def _initial_step(rhs, t0, y0, k1, pp, aux, rtol, atol, span):
    d = y0.shape[0]
    d0 = 0.0
    d1 = 0.0
    for i in range(d):
        w = atol[i] + rtol * abs(y0[i])
        d0 += (y0[i] / w) ** 2
        d1 += (k1[i] / w) ** 2
    d0 = np.sqrt(d0 / d)
    d1 = np.sqrt(d1 / d)
    if d0 < 1e-5 or d1 < 1e-5:
        h = 1e-6
    else:
        h = 0.01 * d0 / d1
    h = min(h, span)
    ytmp = np.empty(d)
    k2 = np.empty(d)
    for i in range(d):
        ytmp[i] = y0[i] + h * k1[i]
    rhs(t0 + h, ytmp, pp, aux, k2)
    d2 = 0.0
    for i in range(d):
        w = atol[i] + rtol * abs(y0[i])
        d2 += ((k2[i] - k1[i]) / w) ** 2
    d2 = np.sqrt(d2 / d) / h
    dm = max(d1, d2)
    if dm <= 1e-15:
        h1 = max(1e-6, h * 1e-3)
    else:
        h1 = (0.01 / dm) ** 0.2
    return min(100.0 * h, h1, span)


@njit(inline="always")
def integrate_segment(rhs, t0, t1, y0, pp, aux, rtol, atol, h0, max_step, dense):
    """Integrate ``y' = rhs(t, y)`` over [t0, t1].

    Returns ``(status, ts, ys, qs, h_next)`` where ``ts``/``ys`` hold the
    accepted steps (including both endpoints), ``qs`` the dense-output
    coefficients of each step (shape ``(len(ts)-1, d, 4)``, empty when
    ``dense`` is false) and ``h_next`` a step-size suggestion for a
    follow-up segment.
    """
    d = y0.shape[0]
    cap = 1024
    ts = np.empty(cap)
    ys = np.empty((cap, d))
    qs = np.empty((cap - 1, d, 4)) if dense else np.empty((0, d, 4))
    k1 = np.empty(d)
    k2 = np.empty(d)
    k3 = np.empty(d)
    k4 = np.empty(d)
    k5 = np.empty(d)
    k6 = np.empty(d)
    k7 = np.empty(d)
    ytmp = np.empty(d)
    ynew = np.empty(d)

    t = t0
    y = y0.copy()
    ts[0] = t
    ys[0, :] = y
    n = 0
    span = t1 - t0
    if span <= 0.0:
        return STATUS_OK, ts[: n + 1], ys[: n + 1], qs[:n], h0

    rhs(t, y, pp, aux, k1)
    h = h0 if h0 > 0.0 else _initial_step(rhs, t, y, k1, pp, aux, rtol, atol, span)
    if h > max_step:
        h = max_step
    rejected = False
    while t < t1:
        if h < 1e-14 * max(1.0, abs(t)):
            return STATUS_STEP_UNDERFLOW, ts[: n + 1], ys[: n + 1], qs[:n], h
        clipped = False
        if t + h >= t1:
            h = t1 - t
            clipped = True
        for i in range(d):
            ytmp[i] = y[i] + h * (_A21 * k1[i])
        rhs(t + _C2 * h, ytmp, pp, aux, k2)
        for i in range(d):
            ytmp[i] = y[i] + h * (_A31 * k1[i] + _A32 * k2[i])
        rhs(t + _C3 * h, ytmp, pp, aux, k3)
        for i in range(d):
            ytmp[i] = y[i] + h * (_A41 * k1[i] + _A42 * k2[i] + _A43 * k3[i])
        rhs(t + _C4 * h, ytmp, pp, aux, k4)
        for i in range(d):
            ytmp[i] = y[i] + h * (_A51 * k1[i] + _A52 * k2[i] + _A53 * k3[i] + _A54 * k4[i])
        rhs(t + _C5 * h, ytmp, pp, aux, k5)
        for i in range(d):
            ytmp[i] = y[i] + h * (_A61 * k1[i] + _A62 * k2[i] + _A63 * k3[i] + _A64 * k4[i] + _A65 * k5[i])
        rhs(t + h, ytmp, pp, aux, k6)
        for i in range(d):
            ynew[i] = y[i] + h * (_B1 * k1[i] + _B3 * k3[i] + _B4 * k4[i] + _B5 * k5[i] + _B6 * k6[i])
        rhs(t + h, ynew, pp, aux, k7)

        err = 0.0
        finite = True
        for i in range(d):
            e = h * (_E1 * k1[i] + _E3 * k3[i] + _E4 * k4[i] + _E5 * k5[i] + _E6 * k6[i] + _E7 * k7[i])
            ay = abs(y[i])
            ay1 = abs(ynew[i])
            w = atol[i] + rtol * (ay if ay > ay1 else ay1)
            q = e / w
            err += q * q
            if not np.isfinite(ynew[i]):
                finite = False
        err = np.sqrt(err / d)

        if not finite:
            h *= 0.5
            rejected = True
            continue
        if err <= 1.0:
            if dense:
                for i in range(d):
                    qs[n, i, 0] = h * (k1[i] * _P10)
                    qs[n, i, 1] = h * (k1[i] * _P11 + k3[i] * _P31 + k4[i] * _P41 + k5[i] * _P51 + k6[i] * _P61 + k7[i] * _P71)
                    qs[n, i, 2] = h * (k1[i] * _P12 + k3[i] * _P32 + k4[i] * _P42 + k5[i] * _P52 + k6[i] * _P62 + k7[i] * _P72)
                    qs[n, i, 3] = h * (k1[i] * _P13 + k3[i] * _P33 + k4[i] * _P43 + k5[i] * _P53 + k6[i] * _P63 + k7[i] * _P73)
            t = t1 if clipped else t + h
            n += 1
            for i in range(d):
                y[i] = ynew[i]
                k1[i] = k7[i]
            if n + 1 >= cap:
                newcap = cap * 2
                ts2 = np.empty(newcap)
                ys2 = np.empty((newcap, d))
                ts2[:cap] = ts
                ys2[:cap] = ys
                ts = ts2
                ys = ys2
                if dense:
                    qs2 = np.empty((newcap - 1, d, 4))
                    qs2[: cap - 1] = qs
                    qs = qs2
                cap = newcap
            ts[n] = t
            ys[n, :] = y
            if err == 0.0:
                fac = _MAX_FACTOR
            else:
                fac = _SAFETY * err ** -0.2
                if fac > _MAX_FACTOR:
                    fac = _MAX_FACTOR
                elif fac < _MIN_FACTOR:
                    fac = _MIN_FACTOR
            if rejected and fac > 1.0:
                fac = 1.0
            h *= fac
            if h > max_step:
                h = max_step
            rejected = False
        else:
            fac = _SAFETY * err ** -0.2
            if fac < _MIN_FACTOR:
                fac = _MIN_FACTOR
            h *= fac
            rejected = True
    return STATUS_OK, ts[: n + 1], ys[: n + 1], qs[:n], h


@njit(cache=True)
def eval_dense(ts, ys, qs, t):
    """Evaluate the dense output at time ``t`` inside [ts[0], ts[-1]]."""
    n = ts.shape[0] - 1
    if t <= ts[0]:
        return ys[0].copy()
    if t >= ts[n]:
        return ys[n].copy()
    lo, hi = 0, n
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ts[mid] <= t:
            lo = mid
        else:
            hi = mid
    h = ts[lo + 1] - ts[lo]
    s = (t - ts[lo]) / h
    d = ys.shape[1]
    out = np.empty(d)
    for i in range(d):
        out[i] = ys[lo, i] + qs[lo, i, 0] * s + qs[lo, i, 1] * s**2 + qs[lo, i, 2] * s**3 + qs[lo, i, 3] * s**4
    return out
