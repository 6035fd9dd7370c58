"""Release-schedule optimization under a total-budget constraint.

Alternates two phases, mirroring a standard saddle-point treatment of the
budget equality:

  * times: projected gradient descent t <- Pi_T(t - eps_t grad_t J) with a
    backtracking step size, where Pi_T clamps into [0, horizon] and restores
    ordering (weights travel with their times when reordering);
  * weights: one-step augmented-Lagrangian iterations
        c   <- max(c - eps_c (grad_c J + lam + rho (sum c - C)), 0)
        lam <- max(lam + rho (sum c - C), 0)
    with eps_c backtracked on the augmented Lagrangian
        L(c, lam) = J + lam (sum c - C) + rho/2 (sum c - C)^2.

Releases that drift together are merged (weights summed), shrinking the
effective number of pulses. Step sizes are scale-normalized: the initial
trial step is sized from the gradient so the first move spans a few days
(times) or a few percent of the mean weight, then adapts multiplicatively.
The optimization is nonconvex, so ``optimize`` supports deterministic
multistart with best-of selection.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .gradients import grad_J
from .params import EpiParams
from .simulate import ReleaseSchedule, simulate

__all__ = [
    "IterationRecord",
    "StartSummary",
    "OptimizationResult",
    "project_times",
    "merge_coincident",
    "descend_times",
    "update_weights",
    "optimize",
]

FEAS_TOL = 1e-6
FLAT_TOL = 1e-8
PATIENCE = 25
NOISE_SLACK = 1e-9  # accepted steps may increase J by at most this fraction
STEP_FLOOR_DAYS = 1e-10
FIRST_MOVE_DAYS = 5.0
FIRST_MOVE_WEIGHT_FRAC = 0.05
STEP_GROWTH = 1.5
MAX_BACKTRACKS = 40


@dataclass(frozen=True)
class IterationRecord:
    phase: str  # "times" | "weights"
    iteration: int
    cost: float
    feasibility_gap: float
    step: float
    lam: float
    n_releases: int


@dataclass(frozen=True)
class StartSummary:
    seed: int
    cost: float
    converged: bool
    reason: str
    iterations: int


@dataclass
class OptimizationResult:
    schedule: ReleaseSchedule
    cost: float
    lam: float
    rho: float
    history: list[IterationRecord]
    converged: bool
    reason: str
    seed: int
    starts: list[StartSummary] = field(default_factory=list)


def project_times(times, horizon: float):
    """Clamp times into [0, horizon] and sort nondecreasing (idempotent)."""
    arr = np.clip(np.asarray(times, dtype=float), 0.0, horizon)
    return tuple(np.sort(arr))


def merge_coincident(schedule: ReleaseSchedule, eps_t: float) -> ReleaseSchedule:
    """Merge releases closer than ``eps_t`` days into one with summed weight.

    The merged release sits at the weight-averaged time (plain average for
    zero total weight); the weight sum, budget and horizon are preserved.
    """
    if schedule.n <= 1:
        return schedule
    groups: list[list[int]] = [[0]]
    for i in range(1, schedule.n):
        if schedule.times[i] - schedule.times[groups[-1][-1]] <= eps_t:
            groups[-1].append(i)
        else:
            groups.append([i])
    if all(len(g) == 1 for g in groups):
        return schedule
    times = []
    weights = []
    for g in groups:
        w = sum(schedule.weights[i] for i in g)
        if w > 0.0:
            t = sum(schedule.times[i] * schedule.weights[i] for i in g) / w
        else:
            t = sum(schedule.times[i] for i in g) / len(g)
        times.append(t)
        weights.append(w)
    return ReleaseSchedule(tuple(times), tuple(weights), budget=schedule.budget, horizon=schedule.horizon)


def _cost(model, params, schedule, rtol) -> float:
    return simulate(model, params, schedule, rtol=rtol, dense=False).cost


def _reorder(times: np.ndarray, weights: np.ndarray, horizon: float):
    clamped = np.clip(times, 0.0, horizon)
    order = np.argsort(clamped, kind="stable")
    return clamped[order], weights[order]


def descend_times(
    model: str,
    params: EpiParams,
    schedule: ReleaseSchedule,
    step: float,
    rtol: float = 1e-6,
    cost_current: float | None = None,
    gradient: np.ndarray | None = None,
):
    """One projected-gradient iteration on the release times.

    Backtracks by halving from ``step`` until the cost does not increase
    (within integrator noise) or the step floor is reached.

    Returns:
        ``(schedule, cost, step_used, stalled)``; on a stall the input
        schedule and cost are returned unchanged with ``stalled`` True.
    """
    if cost_current is None:
        cost_current = _cost(model, params, schedule, rtol)
    if gradient is None:
        gradient = grad_J(model, params, schedule, rtol=rtol, atol_scale=rtol).dJ_dt
    times = np.asarray(schedule.times)
    weights = np.asarray(schedule.weights)
    gnorm = float(np.max(np.abs(gradient))) if gradient.size else 0.0
    if gnorm == 0.0:
        return schedule, cost_current, step, False
    eps = step
    for _ in range(MAX_BACKTRACKS):
        if eps * gnorm < STEP_FLOOR_DAYS:
            return schedule, cost_current, eps, True
        t_new, w_new = _reorder(times - eps * gradient, weights, schedule.horizon)
        cand = ReleaseSchedule(tuple(t_new), tuple(w_new), budget=schedule.budget, horizon=schedule.horizon)
        cost_new = _cost(model, params, cand, rtol)
        if cost_new <= cost_current * (1.0 + NOISE_SLACK):
            return cand, cost_new, eps, False
        eps *= 0.5
    return schedule, cost_current, eps, True


def update_weights(
    model: str,
    params: EpiParams,
    schedule: ReleaseSchedule,
    lam: float,
    rho: float,
    eps_c: float,
    rtol: float = 1e-6,
    gradient: np.ndarray | None = None,
):
    """One augmented-Lagrangian step on the weights plus the multiplier update.

    Weights are clamped to be nonnegative after the step; the multiplier
    update uses the constraint residual of the new weights.
    """
    if gradient is None:
        gradient = grad_J(model, params, schedule, rtol=rtol, atol_scale=rtol).dJ_dc
    weights = np.asarray(schedule.weights)
    gap = float(weights.sum() - schedule.budget)
    new_w = np.clip(weights - eps_c * (gradient + lam + rho * gap), 0.0, None)
    new_gap = float(new_w.sum() - schedule.budget)
    new_lam = max(lam + rho * new_gap, 0.0)
    out = schedule.replace(weights=tuple(new_w))
    return out, new_lam


def _flat(window: list[float], tol: float) -> bool:
    if len(window) < PATIENCE:
        return False
    ref = window[-PATIENCE]
    return (ref - window[-1]) < tol * max(abs(window[-1]), 1.0)


def _optimize_single(
    model: str,
    params: EpiParams,
    n: int,
    budget: float,
    horizon: float,
    mode: str,
    seed: int,
    rtol: float,
    final_rtol: float,
    max_cycles: int,
    max_time_iters: int,
    max_weight_iters: int,
    merge_eps: float,
    rho_scale: float,
    init_times=None,
) -> OptimizationResult:
    rng = np.random.default_rng([seed, 0xC0FFEE])
    if init_times is None:
        times = np.sort(rng.uniform(0.0, horizon, size=n))
    else:
        times = np.sort(np.asarray(init_times, dtype=float))
    weights = np.full(n, budget / n)
    sched = ReleaseSchedule(tuple(times), tuple(weights), budget=budget, horizon=horizon)
    cost = _cost(model, params, sched, rtol)
    rho = rho_scale * max(cost, 1.0) / budget**2
    lam = 0.0
    history: list[IterationRecord] = []
    it_count = 0
    eps_t = None
    eps_c = None
    converged = False
    reason = "iteration cap reached"

    for _cycle in range(max_cycles):
        cost_cycle_start = cost
        # --- times phase
        window = [cost]
        stalled = False
        for _ in range(max_time_iters):
            g = grad_J(model, params, sched, rtol=rtol, atol_scale=rtol).dJ_dt
            gnorm = float(np.max(np.abs(g))) if g.size else 0.0
            if gnorm == 0.0:
                break
            if eps_t is None:
                eps_t = FIRST_MOVE_DAYS / gnorm
            sched, cost, used, stalled = descend_times(
                model, params, sched, eps_t, rtol, cost_current=cost, gradient=g
            )
            it_count += 1
            history.append(
                IterationRecord("times", it_count, cost, sched.total_released - budget, used, lam, sched.n)
            )
            if stalled:
                break
            eps_t = used * STEP_GROWTH if used == eps_t else used
            window.append(cost)
            if _flat(window, FLAT_TOL):
                break
        merged = merge_coincident(sched, merge_eps)
        if merged.n != sched.n:
            sched = merged
            cost = _cost(model, params, sched, rtol)
        # --- weights phase
        if mode == "times-and-weights" and sched.n >= 1:
            wins = [cost]
            for _ in range(max_weight_iters):
                g_c = grad_J(model, params, sched, rtol=rtol, atol_scale=rtol).dJ_dc
                w = np.asarray(sched.weights)
                gap = float(w.sum() - budget)
                direction = g_c + lam + rho * gap
                dnorm = float(np.max(np.abs(direction))) if direction.size else 0.0
                if dnorm == 0.0:
                    break
                if eps_c is None:
                    eps_c = FIRST_MOVE_WEIGHT_FRAC * (budget / max(sched.n, 1)) / dnorm
                L_cur = cost + lam * gap + 0.5 * rho * gap * gap
                accepted = False
                eps_try = eps_c
                for _bt in range(MAX_BACKTRACKS):
                    cand_w = np.clip(w - eps_try * direction, 0.0, None)
                    if float(np.max(np.abs(cand_w - w))) < 1e-12 * max(budget, 1.0):
                        break
                    cand = sched.replace(weights=tuple(cand_w))
                    cand_cost = _cost(model, params, cand, rtol)
                    cand_gap = float(cand_w.sum() - budget)
                    L_cand = cand_cost + lam * cand_gap + 0.5 * rho * cand_gap * cand_gap
                    if L_cand <= L_cur * (1.0 + NOISE_SLACK) + NOISE_SLACK:
                        accepted = True
                        break
                    eps_try *= 0.5
                if not accepted:
                    break
                sched, lam = update_weights(model, params, sched, lam, rho, eps_try, rtol, gradient=g_c)
                cost = _cost(model, params, sched, rtol)
                eps_c = eps_try * STEP_GROWTH if eps_try == eps_c else eps_try
                it_count += 1
                history.append(
                    IterationRecord("weights", it_count, cost, sched.total_released - budget, eps_try, lam, sched.n)
                )
                wins.append(cost + lam * (sched.total_released - budget))
                if _flat(wins, FLAT_TOL):
                    break
        improvement = cost_cycle_start - cost
        if improvement < FLAT_TOL * max(abs(cost), 1.0):
            converged = True
            reason = "functional flatness" if not stalled else "step floor (stall)"
            break

    # restore exact feasibility and evaluate at the reporting tolerance
    w = np.asarray(sched.weights)
    total = float(w.sum())
    if total > 0.0:
        sched = sched.replace(weights=tuple(w * (budget / total)))
    else:
        converged = False
        reason = "all weights collapsed to zero"
    t_proj, w_proj = _reorder(np.asarray(sched.times), np.asarray(sched.weights), horizon)
    sched = ReleaseSchedule(tuple(t_proj), tuple(w_proj), budget=budget, horizon=horizon)
    cost = _cost(model, params, sched, final_rtol)
    if converged and not sched.is_feasible:
        converged = False
        reason = "budget infeasible after rescaling"
    return OptimizationResult(sched, cost, lam, rho, history, converged, reason, seed)


def optimize(
    model: str,
    params: EpiParams,
    n: int,
    budget: float,
    horizon: float = 450.0,
    mode: str = "times-and-weights",
    seed: int = 0,
    starts: int = 5,
    rtol: float = 1e-6,
    final_rtol: float = 1e-8,
    max_cycles: int = 12,
    max_time_iters: int = 300,
    max_weight_iters: int = 120,
    merge_eps: float = 1e-6,
    rho_scale: float = 1.0,
    init_times=None,
) -> OptimizationResult:
    """Optimize an n-release schedule for ``model`` under a total budget.

    Args:
        model: ``"sit"`` or ``"wb"``.
        n: number of releases (may shrink through merging).
        budget: total amount of mosquitoes to release.
        mode: ``"times-only"`` keeps all weights at budget/n; or
            ``"times-and-weights"``.
        seed: base seed; start ``i`` uses seed + i.
        starts: multistart count, best final cost wins (deterministic).
        rtol: integration tolerance during optimization.
        final_rtol: tolerance for the reported final cost.
        init_times: optional explicit initial times (disables randomness;
            applies to the first start only).

    Returns:
        The best :class:`OptimizationResult`; per-start outcomes are listed
        in ``result.starts``.
    """
    if model not in ("sit", "wb"):
        raise ValueError("optimize supports the controlled models only")
    if mode not in ("times-only", "times-and-weights"):
        raise ValueError(f"unknown mode {mode!r}")
    if n < 1:
        raise ValueError("need at least one release")
    if budget <= 0.0:
        raise ValueError("budget must be positive")
    best: OptimizationResult | None = None
    summaries: list[StartSummary] = []
    for i in range(starts):
        res = _optimize_single(
            model, params, n, budget, horizon, mode, seed + i, rtol, final_rtol,
            max_cycles, max_time_iters, max_weight_iters, merge_eps, rho_scale,
            init_times=init_times if i == 0 else None,
        )
        summaries.append(StartSummary(seed + i, res.cost, res.converged, res.reason, len(res.history)))
        if best is None or res.cost < best.cost:
            best = res
    assert best is not None
    best.starts = summaries
    return best
