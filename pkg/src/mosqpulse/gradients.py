"""Sensitivities of the infected-human cost to release times and weights.

For each release k the linearized (variational) dynamics of the
epidemiological block are integrated forward from t_k to the horizon,

    dX' = J_X(X, y) dX + dPhi/dy(X, y) * dy_k(t),

where y is the jumping channel (sterile count M_S or proportion p) and
dy_k(t) its own sensitivity. Moving a release time injects the initial jump
Phi(X, y^-) - Phi(X, y^+); growing a release weight starts from zero. The
sterile-count sensitivities are closed-form exponentials; the proportion
sensitivities follow the product formula built from the left/right limits of
p at the jumps, with a direct integration fallback when a post-jump
proportion lands on a zero of the invasion rate (where the product formula
degenerates). dJ/dt_k and dJ/dc_k are the integrals of the I_H component of
the corresponding column, accumulated as quadrature states.

A central finite-difference oracle over re-simulation is provided for
verification.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels as _k
from ._rk import STATUS_OK
from .dynamics import (
    invasion_rate,
    invasion_threshold,
    release_efficiency,
    release_mass,
    release_mass_inverse,
)
from .params import EpiParams
from .simulate import MODELS, ReleaseSchedule, SimulationError, Trajectory, default_init, simulate

__all__ = [
    "GradientReport",
    "DegenerateJumpError",
    "StepCollisionError",
    "sterile_count_wrt_time",
    "sterile_count_wrt_weight",
    "proportion_wrt_time",
    "proportion_wrt_weight",
    "grad_J",
    "grad_J_fd",
]

GRAD_RTOL = 1e-10
# the finite-difference oracle needs a tighter trajectory tolerance: at 1e-10
# the cost integral can carry a bias that drifts with the release times fast
# enough to pollute small gradient entries
FD_RTOL = 1e-11
COLUMN_ATOL_FACTOR = 1e-4  # sensitivity-column absolute floor vs state scale
FD_TIME_STEP = 1e-4  # days
FD_WEIGHT_STEP_REL = 1e-4  # of max(c_k, 1)
THETA_GUARD = 1e-9  # closeness of a post-jump proportion to the threshold
F_ZERO_GUARD = 1e-12  # |f(p+)| below this degenerates the product formula


class DegenerateJumpError(ValueError):
    """A post-jump proportion sits on a zero of the invasion rate."""


class StepCollisionError(ValueError):
    """A finite-difference step would reorder the release times."""


@dataclass(frozen=True)
class GradientReport:
    """Sensitivities of the cost to every release time and weight."""

    dJ_dt: np.ndarray  # person-days per day, length n
    dJ_dc: np.ndarray  # person-days per mosquito, length n
    method: str  # variational | finite-difference
    trajectory_tol: float

    def __post_init__(self):
        if self.dJ_dt.shape != self.dJ_dc.shape:
            raise ValueError("sensitivity vectors must have equal length")
        if not (np.all(np.isfinite(self.dJ_dt)) and np.all(np.isfinite(self.dJ_dc))):
            raise ValueError("sensitivities must be finite")


def sterile_count_wrt_time(schedule: ReleaseSchedule, d_S: float, k: int, t):
    """Sensitivity of the sterile count to release time t_k (count per day).

    Zero up to and including t_k, then d_S c_k exp(-d_S (t - t_k)).
    """
    t_k, c_k = schedule.times[k], schedule.weights[k]
    t_arr = np.asarray(t, dtype=float)
    out = np.where(t_arr > t_k, d_S * c_k * np.exp(-d_S * np.clip(t_arr - t_k, 0.0, None)), 0.0)
    return float(out) if t_arr.ndim == 0 else out


def sterile_count_wrt_weight(schedule: ReleaseSchedule, d_S: float, k: int, t):
    """Sensitivity of the sterile count to release weight c_k (dimensionless)."""
    t_k = schedule.times[k]
    t_arr = np.asarray(t, dtype=float)
    out = np.where(t_arr > t_k, np.exp(-d_S * np.clip(t_arr - t_k, 0.0, None)), 0.0)
    return float(out) if t_arr.ndim == 0 else out


def _jump_limits(traj: Trajectory) -> list[tuple[float, float, float]]:
    if traj.model != "wb":
        raise ValueError("proportion sensitivities require a Wolbachia trajectory")
    return [(r.time, float(r.before[7]), float(r.after[7])) for r in traj.releases]


def _is_degenerate(params: EpiParams, p_plus: float) -> bool:
    try:
        theta = invasion_threshold(params)
    except ValueError:
        theta = None
    if theta is not None and abs(p_plus - theta) < THETA_GUARD:
        return True
    return abs(invasion_rate(p_plus, params)) < F_ZERO_GUARD


def _guard_degenerate(params: EpiParams, p_plus: float) -> None:
    if _is_degenerate(params, p_plus):
        raise DegenerateJumpError(
            f"post-jump proportion {p_plus!r} sits on (or within {THETA_GUARD} of) a zero "
            "of the invasion rate; the product formula degenerates"
        )


def _product_coefficient(traj: Trajectory, k: int, t: float, weight: bool) -> float:
    """Piecewise-constant coefficient D with delta p(t) = D * f(p(t))."""
    params = traj.params
    jumps = _jump_limits(traj)
    t_k, pm, pp = jumps[k]
    if t <= t_k:
        return 0.0
    _guard_degenerate(params, pp)
    f = lambda p: invasion_rate(p, params)
    g = lambda p: release_efficiency(p, params)
    if weight:
        coeff = g(pp) / f(pp)
    else:
        coeff = (f(pm) * g(pp) - f(pp) * g(pm)) / (g(pm) * f(pp))
    for t_j, pmj, ppj in jumps[k + 1 :]:
        if t_j >= t:
            break
        _guard_degenerate(params, ppj)
        coeff *= (f(pmj) / f(ppj)) * (g(ppj) / g(pmj))
    return coeff


def proportion_wrt_time(traj: Trajectory, k: int, t: float) -> float:
    """Sensitivity of the proportion p(t) to release time t_k (per day).

    Product formula over the jumps between t_k and t; zero for t <= t_k. At
    a release instant the left limit of p is used, matching the formula's
    validity on half-open intervals between jumps.

    Raises:
        DegenerateJumpError: when a relevant post-jump proportion sits on a
            zero of the invasion rate (e.g. exactly at the threshold).
    """
    coeff = _product_coefficient(traj, k, t, weight=False)
    if coeff == 0.0:
        return 0.0
    return coeff * invasion_rate(float(traj.state_at(t, side="left")[7]), traj.params)


def proportion_wrt_weight(traj: Trajectory, k: int, t: float) -> float:
    """Sensitivity of the proportion p(t) to release weight c_k (per mosquito)."""
    coeff = _product_coefficient(traj, k, t, weight=True)
    if coeff == 0.0:
        return 0.0
    return coeff * invasion_rate(float(traj.state_at(t, side="left")[7]), traj.params)


def _sit_rate_jump(y: np.ndarray, c: float, params: EpiParams) -> np.ndarray:
    """RHS difference Phi(X, M_S) - Phi(X, M_S + c): the time-column seed."""
    q = params
    S_M, E_M, I_M, M_S = y[3], y[4], y[5], y[6]
    M = max(S_M + E_M + I_M, 0.0)
    den0 = M + q.s_c * M_S
    den1 = M + q.s_c * (M_S + c)
    poly = q.b_M * M * (1.0 - M / q.K) * M
    b0 = poly / den0 if den0 > 0.0 else 0.0
    b1 = poly / den1 if den1 > 0.0 else 0.0
    seed = np.zeros(_k.SIT_NCOMP)
    seed[3] = b0 - b1
    return seed


def _wb_rate_jump(y: np.ndarray, p_minus: float, p_plus: float, params: EpiParams) -> np.ndarray:
    q = params
    I_H = y[2]
    seed = np.zeros(_k.WB_NCOMP)
    seed[3] = -q.beta_HM / q.H * q.K * I_H * (p_minus - p_plus)
    seed[5] = q.beta_HW / q.H * q.K * I_H * (p_minus - p_plus)
    return seed


def grad_J(
    model: str,
    params: EpiParams,
    schedule: ReleaseSchedule,
    init: np.ndarray | None = None,
    rtol: float = GRAD_RTOL,
    atol_scale: float = 1e-10,
) -> GradientReport:
    """Variational gradient of the cost with respect to all t_k and c_k.

    All sensitivity columns are integrated together with the base state in a
    single augmented system, restarted at every release. Releases scheduled
    at or beyond the horizon contribute exactly zero.

    Raises:
        SimulationError: propagated from the underlying integration.
    """
    if model not in ("sit", "wb"):
        raise ValueError("gradients are defined for the controlled models only")
    spec = MODELS[model]
    if init is None:
        init = default_init(model, params)
    init = np.asarray(init, dtype=float)
    n = schedule.n
    if n == 0:
        return GradientReport(np.zeros(0), np.zeros(0), "variational", rtol)
    pp = params.as_array()
    T = schedule.horizon
    times = np.asarray(schedule.times)
    weights = np.asarray(schedule.weights)
    c_scale = np.maximum(weights, 1.0)  # weight columns integrate scaled sensitivities

    wb_mode = _k.VAR_MODE_PRODUCT
    if model == "wb":
        base_traj = simulate(model, params, schedule, init=init, rtol=rtol,
                             atol_scale=atol_scale, dense=False)
        if any(_is_degenerate(params, p_plus) for _, _, p_plus in _jump_limits(base_traj)):
            wb_mode = _k.VAR_MODE_INTEGRATE
        col_len = _k.WB_COL
        meta0, meta_per = 3, 2
    else:
        col_len = _k.SIT_COL
        meta0, meta_per = 2, 3

    n_cols = 2 * n
    dim = spec.dim + n_cols * col_len
    y = np.zeros(dim)
    y[: spec.dim - 1] = init
    aux = np.zeros(meta0 + meta_per * n_cols)
    aux[1] = float(n_cols)
    if model == "wb":
        aux[2] = wb_mode
    else:
        for c in range(n_cols):
            k = c % n
            aux[meta0 + meta_per * c + 1] = times[k]
            # closed-form decay amplitude: d_S c_k for time columns, the
            # column scale for weight columns
            aux[meta0 + meta_per * c + 2] = params.d_S * weights[k] if c < n else c_scale[k]

    scale_base = spec.scale(params)
    col_scale = np.empty(col_len)
    if model == "wb":
        col_scale[:7] = scale_base[:7]
        col_scale[7] = 1.0
        col_scale[8] = scale_base[-1]
    else:
        col_scale[:6] = scale_base[:6]
        col_scale[6] = scale_base[-1]
    # sensitivity columns of late or weak releases are much smaller than the
    # state scale, so their absolute floor is tightened to keep them under
    # effective relative control
    col_scale *= COLUMN_ATOL_FACTOR
    atol = atol_scale * np.concatenate([scale_base, np.tile(col_scale, n_cols)])

    f = lambda p: invasion_rate(p, params)
    g = lambda p: release_efficiency(p, params)

    order = [i for i in range(n) if times[i] <= T]
    cuts = sorted({T, *(times[i] for i in order)})
    t_prev = 0.0
    h_next = 0.0
    rel_idx = 0

    def col_slice(c):
        start = spec.dim + c * col_len
        return slice(start, start + col_len)

    for t_cut in cuts:
        if t_cut > t_prev:
            status, ts, ys, _, h_next = spec.integrate_var(
                t_prev, t_cut, y, pp, aux, rtol, atol, h_next, np.inf, False
            )
            if status != STATUS_OK:
                raise SimulationError("integrator step size underflow in variational system", ts[-1])
            y = ys[-1].copy()
            t_prev = t_cut
        while rel_idx < len(order) and times[order[rel_idx]] == t_cut:
            k = order[rel_idx]
            c_k = weights[k]
            if model == "sit":
                seed = _sit_rate_jump(y, c_k, params)
                y[6] += c_k
                tc = col_slice(k)
                y[tc][: _k.SIT_NCOMP] = seed
                aux[meta0 + meta_per * k] = 1.0  # activate time column
                aux[meta0 + meta_per * (n + k)] = 1.0  # weight column starts at zero
            else:
                p_minus = y[7]
                p_plus = release_mass_inverse(release_mass(min(p_minus, 1.0 - 1e-12), params) + c_k, params)
                y[7] = p_plus
                ratio = g(p_plus) / g(p_minus)
                for c in range(n_cols):
                    if aux[meta0 + meta_per * c] == 1.0:
                        if wb_mode == _k.VAR_MODE_PRODUCT:
                            aux[meta0 + meta_per * c + 1] *= (f(p_minus) / f(p_plus)) * ratio
                        else:
                            y[col_slice(c)][7] *= ratio
                seed = _wb_rate_jump(y, p_minus, p_plus, params)
                tc = col_slice(k)
                y[tc][: _k.WB_NCOMP] = seed
                wc = col_slice(n + k)
                if wb_mode == _k.VAR_MODE_PRODUCT:
                    aux[meta0 + meta_per * k + 1] = (
                        (f(p_minus) * g(p_plus) - f(p_plus) * g(p_minus)) / (g(p_minus) * f(p_plus))
                    )
                    aux[meta0 + meta_per * (n + k) + 1] = g(p_plus) / f(p_plus) * c_scale[k]
                else:
                    y[tc][7] = (g(p_plus) / g(p_minus)) * f(p_minus) - f(p_plus)
                    y[wc][7] = g(p_plus) * c_scale[k]
                aux[meta0 + meta_per * k] = 1.0
                aux[meta0 + meta_per * (n + k)] = 1.0
            rel_idx += 1

    dJ_dt = np.zeros(n)
    dJ_dc = np.zeros(n)
    for k in range(n):
        dJ_dt[k] = y[col_slice(k)][col_len - 1]
        dJ_dc[k] = y[col_slice(n + k)][col_len - 1] / c_scale[k]
    return GradientReport(dJ_dt, dJ_dc, "variational", rtol)


def _cost(model, params, times, weights, horizon, init, rtol, atol_scale) -> float:
    sched = ReleaseSchedule(tuple(times), tuple(weights), budget=None, horizon=horizon)
    return simulate(model, params, sched, init=init, rtol=rtol, atol_scale=atol_scale, dense=False).cost


def grad_J_fd(
    model: str,
    params: EpiParams,
    schedule: ReleaseSchedule,
    h_t: float = FD_TIME_STEP,
    h_c_rel: float = FD_WEIGHT_STEP_REL,
    init: np.ndarray | None = None,
    rtol: float = FD_RTOL,
    atol_scale: float = FD_RTOL,
) -> GradientReport:
    """Finite-difference gradient oracle by re-simulation.

    Central differences in the interior; second-order one-sided differences
    at the domain boundaries (t_k at 0 or the horizon, c_k near 0). The
    budget constraint is deliberately not enforced: each weight is perturbed
    independently.

    Raises:
        StepCollisionError: if a time step of +-h_t would cross a neighbouring
            release time.
    """
    n = schedule.n
    times = list(schedule.times)
    weights = list(schedule.weights)
    T = schedule.horizon
    J = lambda ts, cs: _cost(model, params, ts, cs, T, init, rtol, atol_scale)
    dJ_dt = np.zeros(n)
    dJ_dc = np.zeros(n)
    J0 = None
    for k in range(n):
        lo = times[k - 1] if k > 0 else 0.0
        hi = times[k + 1] if k < n - 1 else T
        t_k = times[k]
        left_room = t_k - h_t > lo
        right_room = t_k + h_t < hi
        if left_room and right_room:
            tp = times.copy()
            tm = times.copy()
            tp[k] = t_k + h_t
            tm[k] = t_k - h_t
            dJ_dt[k] = (J(tp, weights) - J(tm, weights)) / (2.0 * h_t)
        elif not left_room and t_k + 2.0 * h_t < hi:
            # release at (or against) the left boundary: one-sided forward
            if J0 is None:
                J0 = J(times, weights)
            t1 = times.copy()
            t2 = times.copy()
            t1[k] = t_k + h_t
            t2[k] = t_k + 2.0 * h_t
            dJ_dt[k] = (-3.0 * J0 + 4.0 * J(t1, weights) - J(t2, weights)) / (2.0 * h_t)
        elif not right_room and t_k - 2.0 * h_t > lo:
            if J0 is None:
                J0 = J(times, weights)
            t1 = times.copy()
            t2 = times.copy()
            t1[k] = t_k - h_t
            t2[k] = t_k - 2.0 * h_t
            dJ_dt[k] = (3.0 * J0 - 4.0 * J(t1, weights) + J(t2, weights)) / (2.0 * h_t)
        else:
            raise StepCollisionError(
                f"finite-difference step {h_t} collides with neighbouring releases around t_{k}"
            )
        h_c = h_c_rel * max(weights[k], 1.0)
        if weights[k] - h_c >= 0.0:
            cp = weights.copy()
            cm = weights.copy()
            cp[k] = weights[k] + h_c
            cm[k] = weights[k] - h_c
            dJ_dc[k] = (J(times, cp) - J(times, cm)) / (2.0 * h_c)
        else:
            if J0 is None:
                J0 = J(times, weights)
            c1 = weights.copy()
            c2 = weights.copy()
            c1[k] = weights[k] + h_c
            c2[k] = weights[k] + 2.0 * h_c
            dJ_dc[k] = (-3.0 * J0 + 4.0 * J(times, c1) - J(times, c2)) / (2.0 * h_c)
    return GradientReport(dJ_dt, dJ_dc, "finite-difference", rtol)
