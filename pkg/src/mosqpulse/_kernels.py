"""Compiled right-hand sides for the three models and their variational systems.

State layouts (one trailing quadrature channel accumulates the running cost
integral of infected humans):

  seir: [S_H, E_H, I_H, S_M, E_M, I_M, J]                      dim 7
  sit:  [S_H, E_H, I_H, S_M, E_M, I_M, M_S, J]                 dim 8
  wb:   [S_H, E_H, I_H, E_M, I_M, E_W, I_W, p, J]              dim 9

``aux[0]`` carries a constant release rate u (zero for the impulsive
formulation; nonzero only in the box-pulse diagnostic).

The variational kernels append per-release sensitivity columns behind the
base state; column bookkeeping (activation, jump initialisation, crossing
factors) happens in the Python driver between segments.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# indices into EpiParams.as_array(); order must match params.PARAM_KEYS
B_M, B_W, D_M, D_W, D_S, S_H_CI, S_C, KCAP, B_H, SIG_H, HPOP = 0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10
BETA_HM, BETA_MH, BETA_HW, BETA_WH, GAM_M, GAM_W, GAM_H = 11, 12, 13, 14, 15, 16, 17

SEIR_DIM = 7
SIT_DIM = 8
WB_DIM = 9
SIT_NCOMP = 6  # epidemiological block entering the variational system
WB_NCOMP = 7
SIT_COL = SIT_NCOMP + 1  # sensitivity column: dX block + dJ quadrature
WB_COL = WB_NCOMP + 2  # dX block + dp + dJ

# aux layout for the variational kernels
VAR_MODE_PRODUCT = 0.0
VAR_MODE_INTEGRATE = 1.0


@njit(cache=True)
def f_invasion(p, pp):
    num = p * (1.0 - p) * (pp[D_M] * pp[B_W] - pp[D_W] * pp[B_M] * (1.0 - pp[S_H_CI] * p))
    den = pp[B_M] * (1.0 - p) * (1.0 - pp[S_H_CI] * p) + pp[B_W] * p
    return num / den


@njit(cache=True)
def f_invasion_deriv(p, pp):
    N = pp[D_M] * pp[B_W] - pp[D_W] * pp[B_M] * (1.0 - pp[S_H_CI] * p)
    Np = pp[D_W] * pp[B_M] * pp[S_H_CI]
    D = pp[B_M] * (1.0 - p) * (1.0 - pp[S_H_CI] * p) + pp[B_W] * p
    Dp = pp[B_M] * (2.0 * pp[S_H_CI] * p - 1.0 - pp[S_H_CI]) + pp[B_W]
    u = p * (1.0 - p) * N
    up = (1.0 - 2.0 * p) * N + p * (1.0 - p) * Np
    return (up * D - u * Dp) / (D * D)


@njit(cache=True)
def g_efficiency(p, pp):
    num = pp[B_M] * (1.0 - p) * (1.0 - pp[S_H_CI] * p)
    return num / (pp[KCAP] * (num + pp[B_W] * p))


@njit(cache=True)
def rhs_seir(t, y, pp, aux, out):
    S_H, E_H, I_H, S_M, E_M, I_M = y[0], y[1], y[2], y[3], y[4], y[5]
    M = S_M + E_M + I_M
    if M < 0.0:
        M = 0.0
    foi_h = pp[BETA_MH] / pp[HPOP] * I_M * S_H
    foi_m = pp[BETA_HM] / pp[HPOP] * S_M * I_H
    out[0] = pp[B_H] * pp[HPOP] - foi_h - pp[B_H] * S_H
    out[1] = foi_h - (pp[GAM_H] + pp[B_H]) * E_H
    out[2] = pp[GAM_H] * E_H - (pp[SIG_H] + pp[B_H]) * I_H
    out[3] = pp[B_M] * M * (1.0 - M / pp[KCAP]) - foi_m - pp[D_M] * S_M
    out[4] = foi_m - (pp[GAM_M] + pp[D_M]) * E_M
    out[5] = pp[GAM_M] * E_M - pp[D_M] * I_M
    out[6] = I_H


@njit(cache=True)
def rhs_sit(t, y, pp, aux, out):
    S_H, E_H, I_H, S_M, E_M, I_M, M_S = y[0], y[1], y[2], y[3], y[4], y[5], y[6]
    M = S_M + E_M + I_M
    if M < 0.0:
        M = 0.0
    den = M + pp[S_C] * M_S
    birth = 0.0
    if den > 0.0:
        birth = pp[B_M] * M * (1.0 - M / pp[KCAP]) * (M / den)
    foi_h = pp[BETA_MH] / pp[HPOP] * I_M * S_H
    foi_m = pp[BETA_HM] / pp[HPOP] * S_M * I_H
    out[0] = pp[B_H] * pp[HPOP] - foi_h - pp[B_H] * S_H
    out[1] = foi_h - (pp[GAM_H] + pp[B_H]) * E_H
    out[2] = pp[GAM_H] * E_H - (pp[SIG_H] + pp[B_H]) * I_H
    out[3] = birth - foi_m - pp[D_M] * S_M
    out[4] = foi_m - (pp[GAM_M] + pp[D_M]) * E_M
    out[5] = pp[GAM_M] * E_M - pp[D_M] * I_M
    out[6] = aux[0] - pp[D_S] * M_S
    out[7] = I_H


@njit(cache=True)
def rhs_wb(t, y, pp, aux, out):
    S_H, E_H, I_H, E_M, I_M, E_W, I_W, p = y[0], y[1], y[2], y[3], y[4], y[5], y[6], y[7]
    foi_h = (pp[BETA_MH] * I_M + pp[BETA_WH] * I_W) * S_H / pp[HPOP]
    out[0] = pp[B_H] * pp[HPOP] - foi_h - pp[B_H] * S_H
    out[1] = foi_h - (pp[GAM_H] + pp[B_H]) * E_H
    out[2] = pp[GAM_H] * E_H - (pp[SIG_H] + pp[B_H]) * I_H
    out[3] = pp[BETA_HM] / pp[HPOP] * (pp[KCAP] * (1.0 - p) - E_M - I_M) * I_H - (pp[GAM_M] + pp[D_M]) * E_M
    out[4] = pp[GAM_M] * E_M - pp[D_M] * I_M
    out[5] = pp[BETA_HW] / pp[HPOP] * (pp[KCAP] * p - E_W - I_W) * I_H - (pp[GAM_W] + pp[D_W]) * E_W
    out[6] = pp[GAM_W] * E_W - pp[D_W] * I_W
    out[7] = f_invasion(p, pp) + aux[0] * g_efficiency(p, pp)
    out[8] = I_H


@njit(cache=True)
def rhs_sit_var(t, y, pp, aux, out):
    """Sterile-male system with forward-sensitivity columns.

    y = [base (8) | n_cols columns of (dX(6), dJ)].
    aux = [0.0 (u), n_cols, then per column (active, t_k, amp)]; the
    sterile-count sensitivity is the closed form amp * exp(-d_S (t - t_k))
    with amp = d_S c_k for release-time columns and the column scale for
    release-weight columns. Columns carry no dM_S state.
    """
    rhs_sit(t, y[:SIT_DIM], pp, aux, out[:SIT_DIM])
    S_H, E_H, I_H, S_M, E_M, I_M, M_S = y[0], y[1], y[2], y[3], y[4], y[5], y[6]
    M = S_M + E_M + I_M
    if M < 0.0:
        M = 0.0
    den = M + pp[S_C] * M_S
    if den > 0.0:
        poly = pp[B_M] * (M * M - M * M * M / pp[KCAP])
        dbirth_dM = pp[B_M] * (2.0 * M - 3.0 * M * M / pp[KCAP]) / den - poly / (den * den)
        dbirth_dMs = -pp[S_C] * poly / (den * den)
    else:
        dbirth_dM = 0.0
        dbirth_dMs = 0.0
    lam = pp[BETA_MH] / pp[HPOP]
    mu = pp[BETA_HM] / pp[HPOP]
    n_cols = int(aux[1])
    for c in range(n_cols):
        base = SIT_DIM + c * SIT_COL
        meta = 2 + 3 * c
        active = aux[meta]
        for i in range(SIT_COL):
            out[base + i] = 0.0
        if active == 0.0:
            continue
        t_k = aux[meta + 1]
        amp = aux[meta + 2]
        dy = amp * np.exp(-pp[D_S] * (t - t_k))
        v0, v1, v2 = y[base], y[base + 1], y[base + 2]
        v3, v4, v5 = y[base + 3], y[base + 4], y[base + 5]
        out[base] = -(lam * I_M + pp[B_H]) * v0 - lam * S_H * v5
        out[base + 1] = lam * I_M * v0 - (pp[GAM_H] + pp[B_H]) * v1 + lam * S_H * v5
        out[base + 2] = pp[GAM_H] * v1 - (pp[SIG_H] + pp[B_H]) * v2
        out[base + 3] = (
            -mu * S_M * v2
            + (dbirth_dM - mu * I_H - pp[D_M]) * v3
            + dbirth_dM * v4
            + dbirth_dM * v5
            + dbirth_dMs * dy
        )
        out[base + 4] = mu * S_M * v2 + mu * I_H * v3 - (pp[GAM_M] + pp[D_M]) * v4
        out[base + 5] = pp[GAM_M] * v4 - pp[D_M] * v5
        out[base + 6] = v2


@njit(cache=True)
def rhs_wb_var(t, y, pp, aux, out):
    """Wolbachia system with forward-sensitivity columns.

    y = [base (9) | n_cols columns of (dX(7), dp, dJ)].
    aux = [0.0 (u), n_cols, mode, then per column (active, D)].

    In product mode the proportion sensitivity is D * f(p) with D a
    per-segment constant (dp slot unused); in integrate mode the dp slot is
    integrated as dp' = f'(p) dp, which stays well defined when a post-jump
    proportion sits at a zero of f.
    """
    rhs_wb(t, y[:WB_DIM], pp, aux, out[:WB_DIM])
    S_H, E_H, I_H, E_M, I_M, E_W, I_W, p = y[0], y[1], y[2], y[3], y[4], y[5], y[6], y[7]
    lam_m = pp[BETA_MH] / pp[HPOP]
    lam_w = pp[BETA_WH] / pp[HPOP]
    mu_m = pp[BETA_HM] / pp[HPOP]
    mu_w = pp[BETA_HW] / pp[HPOP]
    foi = lam_m * I_M + lam_w * I_W
    fp = f_invasion(p, pp)
    fpd = f_invasion_deriv(p, pp)
    bm = -mu_m * pp[KCAP] * I_H
    bw = mu_w * pp[KCAP] * I_H
    n_cols = int(aux[1])
    mode = aux[2]
    for c in range(n_cols):
        base = WB_DIM + c * WB_COL
        meta = 3 + 2 * c
        active = aux[meta]
        for i in range(WB_COL):
            out[base + i] = 0.0
        if active == 0.0:
            continue
        if mode == VAR_MODE_PRODUCT:
            dp = aux[meta + 1] * fp
        else:
            dp = y[base + 7]
            out[base + 7] = fpd * dp
        v0, v1, v2 = y[base], y[base + 1], y[base + 2]
        v3, v4, v5, v6 = y[base + 3], y[base + 4], y[base + 5], y[base + 6]
        out[base] = -(foi + pp[B_H]) * v0 - lam_m * S_H * v4 - lam_w * S_H * v6
        out[base + 1] = foi * v0 - (pp[GAM_H] + pp[B_H]) * v1 + lam_m * S_H * v4 + lam_w * S_H * v6
        out[base + 2] = pp[GAM_H] * v1 - (pp[SIG_H] + pp[B_H]) * v2
        out[base + 3] = (
            mu_m * (pp[KCAP] * (1.0 - p) - E_M - I_M) * v2
            - (mu_m * I_H + pp[GAM_M] + pp[D_M]) * v3
            - mu_m * I_H * v4
            + bm * dp
        )
        out[base + 4] = pp[GAM_M] * v3 - pp[D_M] * v4
        out[base + 5] = (
            mu_w * (pp[KCAP] * p - E_W - I_W) * v2
            - (mu_w * I_H + pp[GAM_W] + pp[D_W]) * v5
            - mu_w * I_H * v6
            + bw * dp
        )
        out[base + 6] = pp[GAM_W] * v5 - pp[D_W] * v6
        out[base + 8] = v2


# Cached integrator entry points: numba cannot disk-cache specializations
# keyed on dispatcher-valued arguments, but calls through module globals
# cache fine, so each model gets a thin wrapper.
from ._rk import integrate_segment as _integrate


@njit(cache=True)
def integrate_seir(t0, t1, y0, pp, aux, rtol, atol, h0, max_step, dense):
    return _integrate(rhs_seir, t0, t1, y0, pp, aux, rtol, atol, h0, max_step, dense)


@njit(cache=True)
def integrate_sit(t0, t1, y0, pp, aux, rtol, atol, h0, max_step, dense):
    return _integrate(rhs_sit, t0, t1, y0, pp, aux, rtol, atol, h0, max_step, dense)


@njit(cache=True)
def integrate_wb(t0, t1, y0, pp, aux, rtol, atol, h0, max_step, dense):
    return _integrate(rhs_wb, t0, t1, y0, pp, aux, rtol, atol, h0, max_step, dense)


@njit(cache=True)
def integrate_sit_var(t0, t1, y0, pp, aux, rtol, atol, h0, max_step, dense):
    return _integrate(rhs_sit_var, t0, t1, y0, pp, aux, rtol, atol, h0, max_step, dense)


@njit(cache=True)
def integrate_wb_var(t0, t1, y0, pp, aux, rtol, atol, h0, max_step, dense):
    return _integrate(rhs_wb_var, t0, t1, y0, pp, aux, rtol, atol, h0, max_step, dense)
