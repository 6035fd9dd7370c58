"""Piecewise integration of the release models with exact state jumps.

A release schedule is a finite list of (time, weight) impulses. Between
releases the autonomous dynamics are integrated with an adaptive
Dormand-Prince 5(4) scheme; at each release the integration is hard-restarted
and the jump map is applied exactly: M_S += c for sterile males,
p -> G^-1(G(p) + c) for Wolbachia. The running cost integral of infected
humans is carried as an extra quadrature state so it inherits the
integrator's error control.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from . import _kernels as _k
from ._rk import STATUS_OK, eval_dense
from .dynamics import (
    SitState,
    WbState,
    release_mass,
    release_mass_inverse,
    P_MAX,
)
from .params import EpiParams

__all__ = [
    "ReleaseSchedule",
    "Release",
    "Trajectory",
    "SimulationError",
    "simulate",
    "simulate_box_pulse",
    "apply_jump_sit",
    "apply_jump_wb",
    "sterile_population",
    "cost_J",
    "default_init",
    "MODELS",
]

FEASIBILITY_RTOL = 1e-6
# tolerated undershoot relative to the component scale: local errors near an
# extinct compartment are proportional to the absolute tolerance, so the
# guard follows it, with the tight floor active at strict tolerances
NEGATIVE_GUARD_FLOOR = 1e-9
NEGATIVE_GUARD_ATOL_FACTOR = 10.0
DEFAULT_RTOL = 1e-8
DEFAULT_ATOL_SCALE = 1e-8


class SimulationError(RuntimeError):
    """Integration failed; carries the time at which it failed."""

    def __init__(self, message: str, time: float):
        super().__init__(f"{message} (t = {time:g})")
        self.time = time


@dataclass(frozen=True)
class ReleaseSchedule:
    """Ordered impulsive releases with a total budget and a time horizon.

    ``times`` must be nondecreasing and nonnegative; ``weights`` are the
    released amounts (mosquito counts, >= 0). Releases scheduled beyond the
    horizon are valid but inert: they are never applied. ``budget`` defaults
    to the sum of the weights.
    """

    times: tuple[float, ...]
    weights: tuple[float, ...]
    budget: float | None = None
    horizon: float = 450.0

    def __post_init__(self):
        object.__setattr__(self, "times", tuple(float(t) for t in self.times))
        object.__setattr__(self, "weights", tuple(float(c) for c in self.weights))
        if len(self.times) != len(self.weights):
            raise ValueError("times and weights must have equal length")
        if any(t < 0.0 or not np.isfinite(t) for t in self.times):
            raise ValueError("release times must be finite and nonnegative")
        if any(t2 < t1 for t1, t2 in zip(self.times, self.times[1:])):
            raise ValueError("release times must be nondecreasing")
        if any(c < 0.0 or not np.isfinite(c) for c in self.weights):
            raise ValueError("release weights must be finite and nonnegative")
        if self.horizon <= 0.0:
            raise ValueError("horizon must be positive")
        if self.budget is None:
            object.__setattr__(self, "budget", float(sum(self.weights)))

    @classmethod
    def empty(cls, horizon: float = 450.0) -> "ReleaseSchedule":
        return cls(times=(), weights=(), budget=0.0, horizon=horizon)

    @property
    def n(self) -> int:
        return len(self.times)

    @property
    def total_released(self) -> float:
        return float(sum(self.weights))

    @property
    def is_feasible(self) -> bool:
        """Whether the weights exhaust the budget to relative accuracy 1e-6."""
        if self.budget == 0.0:
            return self.total_released == 0.0
        return abs(self.total_released - self.budget) <= FEASIBILITY_RTOL * self.budget

    def replace(self, **kw) -> "ReleaseSchedule":
        return replace(self, **kw)


@dataclass(frozen=True)
class Release:
    """Left/right state limits around one applied release."""

    index: int
    time: float
    weight: float
    before: np.ndarray  # full integration state, cost channel included
    after: np.ndarray


@dataclass(frozen=True)
class _ModelSpec:
    name: str
    dim: int  # integration dimension, cost channel included
    ncomp: int  # epidemiological block size (gradient columns)
    control: int | None  # index of the jumping channel
    integrate: Callable
    integrate_var: Callable | None
    state_names: tuple[str, ...]

    def scale(self, params: EpiParams) -> np.ndarray:
        s = []
        for name in self.state_names:
            if name.endswith("_H"):
                s.append(params.H)
            elif name == "p":
                s.append(1.0)
            else:
                s.append(params.K)
        s.append(params.H)  # cost channel
        return np.array(s)


MODELS: dict[str, _ModelSpec] = {
    "seir": _ModelSpec(
        "seir", _k.SEIR_DIM, 6, None, _k.integrate_seir, None,
        ("S_H", "E_H", "I_H", "S_M", "E_M", "I_M"),
    ),
    "sit": _ModelSpec(
        "sit", _k.SIT_DIM, _k.SIT_NCOMP, 6, _k.integrate_sit, _k.integrate_sit_var,
        ("S_H", "E_H", "I_H", "S_M", "E_M", "I_M", "M_S"),
    ),
    "wb": _ModelSpec(
        "wb", _k.WB_DIM, _k.WB_NCOMP, 7, _k.integrate_wb, _k.integrate_wb_var,
        ("S_H", "E_H", "I_H", "E_M", "I_M", "E_W", "I_W", "p"),
    ),
}


def default_init(model: str, params: EpiParams, i_h0: float = 20.0, i_m0: float = 20.0) -> np.ndarray:
    """Outbreak initial condition: mosquitoes at equilibrium, small seeds.

    Humans start at (H - i_h0, 0, i_h0); wild mosquitoes at their equilibrium
    minus the seeded infecteds; every control channel starts at zero.
    """
    q = params
    if model == "seir":
        return np.array([q.H - i_h0, 0.0, i_h0, q.K_star - i_m0, 0.0, i_m0])
    if model == "sit":
        return np.array([q.H - i_h0, 0.0, i_h0, q.K_star - i_m0, 0.0, i_m0, 0.0])
    if model == "wb":
        return np.array([q.H - i_h0, 0.0, i_h0, 0.0, i_m0, 0.0, 0.0, 0.0])
    raise ValueError(f"unknown model {model!r}")


def apply_jump_sit(state: SitState, c: float) -> SitState:
    """Instantaneous sterile-male release: M_S increases by c."""
    if c < 0.0:
        raise ValueError(f"release weight must be nonnegative, got {c!r}")
    return state._replace(M_S=state.M_S + c)


def apply_jump_wb(state: WbState, c: float, params: EpiParams) -> WbState:
    """Instantaneous Wolbachia release: p -> G^-1(G(p) + c)."""
    if c < 0.0:
        raise ValueError(f"release weight must be nonnegative, got {c!r}")
    if state.p >= 1.0:
        raise ValueError("jump undefined at full invasion p = 1")
    return state._replace(p=release_mass_inverse(release_mass(state.p, params) + c, params))


def _jump_array(model: str, y: np.ndarray, c: float, params: EpiParams) -> np.ndarray:
    out = y.copy()
    if model == "sit":
        out[6] += c
    elif model == "wb":
        out[7] = release_mass_inverse(release_mass(min(out[7], P_MAX), params) + c, params)
    else:
        raise ValueError(f"model {model!r} has no release channel")
    return out


def sterile_population(schedule: ReleaseSchedule, d_S: float, t) -> float | np.ndarray:
    """Closed-form sterile-male count: sum of exponentially decayed releases.

    Right-continuous at release instants. Accepts scalar or array times.
    """
    t_arr = np.asarray(t, dtype=float)
    out = np.zeros_like(t_arr)
    for tj, cj in zip(schedule.times, schedule.weights):
        out = out + np.where(t_arr >= tj, cj * np.exp(-d_S * np.clip(t_arr - tj, 0.0, None)), 0.0)
    return float(out) if np.isscalar(t) or t_arr.ndim == 0 else out


class Trajectory:
    """Piecewise-smooth solution with exact left/right limits at releases.

    The state vector layout follows ``MODELS[model].state_names`` plus a
    trailing accumulated-cost channel (integral of I_H since t = 0).
    """

    def __init__(self, model, params, schedule, segments, releases, final_state, notes=()):
        self.model = model
        self.params = params
        self.schedule = schedule
        self.segments = segments  # list of (ts, ys, qs)
        self.releases: list[Release] = releases
        self._final = final_state
        self.notes = list(notes)
        self._seg_starts = [s[0][0] for s in segments]

    @property
    def horizon(self) -> float:
        return self.schedule.horizon

    @property
    def cost(self) -> float:
        """Accumulated infected-human days over the full horizon."""
        return float(self._final[-1])

    @property
    def final_state(self) -> np.ndarray:
        return self._final.copy()

    @property
    def state_names(self) -> tuple[str, ...]:
        return MODELS[self.model].state_names

    def state_at(self, t: float, side: str = "right") -> np.ndarray:
        """Dense-output state at time ``t`` (cost channel included).

        At a release instant the ``side`` argument picks the left or right
        limit; everywhere else both sides agree.
        """
        if not 0.0 <= t <= self.horizon:
            raise ValueError(f"time {t!r} outside [0, {self.horizon}]")
        if side not in ("left", "right"):
            raise ValueError("side must be 'left' or 'right'")
        hits = [r for r in self.releases if r.time == t]
        if hits:
            return hits[0].before.copy() if side == "left" else hits[-1].after.copy()
        idx = bisect_right(self._seg_starts, t) - 1
        idx = max(idx, 0)
        ts, ys, qs = self.segments[idx]
        if qs.shape[0] == 0 and not (t == ts[0] or t == ts[-1]):
            raise ValueError("trajectory was integrated without dense output; "
                             "rerun simulate with dense=True to evaluate interior times")
        return eval_dense(ts, ys, qs, t)

    def sample(self, times: Iterable[float]) -> np.ndarray:
        return np.array([self.state_at(float(t)) for t in times])

    def grid(self) -> tuple[np.ndarray, np.ndarray]:
        """All accepted integrator steps as (times, states)."""
        ts = np.concatenate([s[0] for s in self.segments])
        ys = np.concatenate([s[1] for s in self.segments])
        return ts, ys

    def to_csv(self, target) -> None:
        """Write one row per accepted step plus left/right rows per release."""
        close = False
        if isinstance(target, (str, Path)):
            fh = open(target, "w", encoding="utf-8")
            close = True
        else:
            fh = target
        try:
            fh.write(",".join(["time", *self.state_names, "cost"]) + "\n")

            def row(t, y):
                fh.write(",".join(repr(float(v)) for v in (t, *y)) + "\n")

            rel_by_time: dict[float, list[Release]] = {}
            for r in self.releases:
                rel_by_time.setdefault(r.time, []).append(r)
            if 0.0 not in rel_by_time and self.segments:
                row(self.segments[0][0][0], self.segments[0][1][0])
            emitted_final = False
            events: list[tuple[float, int, object]] = []
            for tr, rs in rel_by_time.items():
                events.append((tr, 0, rs))  # release rows precede the following segment
            for seg in self.segments:
                events.append((seg[0][0], 1, seg))
            events.sort(key=lambda e: (e[0], e[1]))
            for t0, kind, payload in events:
                if kind == 1:
                    ts, ys, _ = payload
                    for i in range(1, len(ts) - 1):
                        row(ts[i], ys[i])
                    if ts[-1] == self.horizon and self.horizon not in rel_by_time:
                        row(ts[-1], ys[-1])
                        emitted_final = True
                else:
                    rs = payload
                    row(rs[0].time, rs[0].before)
                    row(rs[-1].time, rs[-1].after)
                    if rs[0].time == self.horizon:
                        emitted_final = True
            if not emitted_final and not self.segments:
                row(0.0, self._final)
        finally:
            if close:
                fh.close()


def cost_J(traj: Trajectory) -> float:
    """Terminal value of the accumulated-cost channel, i.e. the integral of I_H."""
    return traj.cost


def _effective_releases(schedule: ReleaseSchedule) -> list[tuple[float, float]]:
    return [(t, c) for t, c in zip(schedule.times, schedule.weights) if t <= schedule.horizon]


def _run(model, params, schedule, init, rtol, atol_scale, dense, u_windows=None):
    """Shared segment loop. ``u_windows`` maps (start, end, rate) box pulses."""
    spec = MODELS[model]
    pp = params.as_array()
    y = np.zeros(spec.dim)
    y[: spec.dim - 1] = init
    atol = atol_scale * spec.scale(params)
    T = schedule.horizon
    # segment boundaries: release times plus box-pulse window edges
    releases = _effective_releases(schedule)
    cuts = sorted({T, *(t for t, _ in releases), *(e for w in (u_windows or []) for e in w[:2] if e < T)})
    segments = []
    recs: list[Release] = []
    notes: list[str] = []
    aux = np.zeros(1)
    t_prev = 0.0
    h_next = 0.0
    rel_idx = 0
    scale = spec.scale(params)

    def integrate_to(t_end):
        nonlocal t_prev, y, h_next
        if t_end <= t_prev:
            return
        u = 0.0
        for w in u_windows or []:
            if w[0] <= t_prev and t_end <= w[1]:
                u += w[2]
        aux[0] = u
        status, ts, ys, qs, h_next = spec.integrate(
            t_prev, t_end, y, pp, aux, rtol, atol, h_next, np.inf, dense
        )
        if status != STATUS_OK:
            raise SimulationError("integrator step size underflow", ts[-1])
        guard = max(NEGATIVE_GUARD_FLOOR, NEGATIVE_GUARD_ATOL_FACTOR * atol_scale)
        worst = np.min(ys / scale)
        if worst < -guard:
            i, j = np.unravel_index(np.argmin(ys / scale), ys.shape)
            raise SimulationError(
                f"state component {j} fell below the negative-state guard ({ys[i, j]:.3e})", ts[i]
            )
        segments.append((ts, ys, qs))
        y = ys[-1].copy()
        t_prev = t_end

    for t_cut in cuts:
        integrate_to(t_cut)
        while rel_idx < len(releases) and releases[rel_idx][0] == t_cut:
            t_r, c_r = releases[rel_idx]
            if u_windows is not None:
                rel_idx += 1
                continue  # box-pulse mode: impulses replaced by the windows
            before = y.copy()
            y = _jump_array(model, y, c_r, params)
            if model == "wb" and y[7] >= P_MAX:
                notes.append(f"p clamped to {P_MAX} after release {rel_idx}")
            recs.append(Release(rel_idx, t_r, c_r, before, y.copy()))
            rel_idx += 1
    return Trajectory(model, params, schedule, segments, recs, y, notes)


def simulate(
    model: str,
    params: EpiParams,
    schedule: ReleaseSchedule,
    init: np.ndarray | None = None,
    rtol: float = DEFAULT_RTOL,
    atol_scale: float = DEFAULT_ATOL_SCALE,
    dense: bool = True,
) -> Trajectory:
    """Integrate ``model`` under an impulsive release schedule.

    Args:
        model: one of ``"seir"``, ``"sit"``, ``"wb"``.
        params: parameter set.
        schedule: releases and horizon; coincident release times compose in
            index order.
        init: initial epidemiological state (cost channel excluded); defaults
            to :func:`default_init`.
        rtol: relative local error tolerance.
        atol_scale: absolute tolerance as a fraction of each component scale.
        dense: store dense-output coefficients for interpolation.

    Returns:
        A :class:`Trajectory` with per-release left/right limits and the
        accumulated cost channel.

    Raises:
        SimulationError: on integrator failure or a negative-state violation.
    """
    if model not in MODELS:
        raise ValueError(f"unknown model {model!r}; expected one of {sorted(MODELS)}")
    if model == "seir" and schedule.n:
        raise ValueError("the uncontrolled SEIR model takes an empty schedule")
    if init is None:
        init = default_init(model, params)
    init = np.asarray(init, dtype=float)
    expected = MODELS[model].dim - 1
    if init.shape != (expected,):
        raise ValueError(f"init must have shape ({expected},) for model {model!r}")
    return _run(model, params, schedule, init, rtol, atol_scale, dense)


def simulate_box_pulse(
    model: str,
    params: EpiParams,
    schedule: ReleaseSchedule,
    eps: float,
    init: np.ndarray | None = None,
    rtol: float = DEFAULT_RTOL,
    atol_scale: float = DEFAULT_ATOL_SCALE,
) -> Trajectory:
    """Diagnostic: replace each impulse by a box pulse of width ``eps``.

    Each release (t_i, c_i) becomes a constant release rate c_i/eps on
    [t_i, t_i + eps] fed through the control term of the continuous system.
    As eps -> 0 the solution converges to the impulsive trajectory.
    """
    if eps <= 0.0:
        raise ValueError("box width eps must be positive")
    if model not in ("sit", "wb"):
        raise ValueError("box pulses are defined for the controlled models only")
    if init is None:
        init = default_init(model, params)
    windows = [
        (t, min(t + eps, schedule.horizon), c / eps)
        for t, c in _effective_releases(schedule)
    ]
    return _run(model, params, schedule, np.asarray(init, float), rtol, atol_scale, True, u_windows=windows)
