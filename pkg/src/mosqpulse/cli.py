"""Command-line front end.

Subcommands: ``simulate``, ``optimize``, ``analyze``, ``gradcheck``,
``reproduce``, ``plots``. Exit codes: 0 on success, 1 on validation or
configuration failure (including failed reproduction / gradient checks), 2
on numerical failure. JSON outputs carry a ``spec_version`` field.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .analysis import equilibria_seir, equilibria_wb, r0_sit, r0_wb
from .dynamics import invasion_threshold, release_mass
from .gradients import grad_J, grad_J_fd
from .optimizer import optimize
from .params import EpiParams, load_params
from .reference import BENCHMARKS, TABLE_KEYS, optimizer_tolerance, replay_tolerance
from .scenario import Scenario, ScenarioError, load_scenario
from .simulate import ReleaseSchedule, SimulationError, simulate
from .plots import emit_plots

SPEC_VERSION = "1"

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2


def _dump_json(payload: dict, path: str | None) -> None:
    payload = {"spec_version": SPEC_VERSION, **payload}
    text = json.dumps(payload, indent=2, sort_keys=True, default=_json_default)
    if path:
        Path(path).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _load_effective_params(path: str | None) -> EpiParams:
    return load_params(path) if path else EpiParams()


def _schedule_payload(schedule: ReleaseSchedule) -> dict:
    return {
        "times": list(schedule.times),
        "weights": list(schedule.weights),
        "budget": schedule.budget,
        "horizon": schedule.horizon,
    }


def _cmd_simulate(args) -> int:
    scenario = load_scenario(args.config)
    schedule = scenario.schedule()
    init = scenario.initial_state()
    traj = simulate(scenario.model, scenario.params, schedule, init=init, rtol=args.rtol)
    out_csv = args.out_csv or scenario.out_csv or f"{scenario.model}_trajectory.csv"
    traj.to_csv(out_csv)
    baseline_csv = None
    reduction = 0.0
    baseline_cost = traj.cost
    if scenario.model in ("sit", "wb"):
        baseline = simulate(
            scenario.model,
            scenario.params,
            ReleaseSchedule.empty(schedule.horizon),
            init=init,
            rtol=args.rtol,
        )
        baseline_cost = baseline.cost
        reduction = (baseline.cost - traj.cost) / baseline.cost * 100.0 if baseline.cost else 0.0
        baseline_csv = str(Path(out_csv).with_suffix("")) + "_uncontrolled.csv"
        baseline.to_csv(baseline_csv)
    payload = {
        "model": scenario.model,
        "cost": traj.cost,
        "uncontrolled_cost": baseline_cost,
        "reduction_percent": reduction,
        "schedule": _schedule_payload(schedule),
        "trajectory_csv": str(out_csv),
        "uncontrolled_csv": baseline_csv,
        "notes": traj.notes,
    }
    _dump_json(payload, args.out_json or scenario.out_json)
    print(f"cost {traj.cost:.1f} | uncontrolled {baseline_cost:.1f} | reduction {reduction:.1f}%")
    return EXIT_OK


def _cmd_optimize(args) -> int:
    if args.config:
        scenario = load_scenario(args.config)
        if scenario.optimize is None:
            raise ScenarioError(f"{args.config}: no [optimize] section")
        model, params, horizon = scenario.model, scenario.params, scenario.horizon
        req = scenario.optimize
        n, budget, mode, seed, starts = req.n, req.budget, req.mode, req.seed, req.starts
    else:
        if not (args.model and args.n and args.budget):
            raise ScenarioError("optimize needs --config or --model/--n/--budget")
        model, params, horizon = args.model, _load_effective_params(args.params), args.horizon
        n, budget, mode, seed, starts = args.n, args.budget, args.mode, args.seed, args.starts
    res = optimize(model, params, n=n, budget=budget, horizon=horizon, mode=mode,
                   seed=seed, starts=starts, rtol=args.rtol)
    if args.history_csv:
        with open(args.history_csv, "w", encoding="utf-8") as fh:
            fh.write("iteration,phase,cost,feasibility_gap,step,lam,n_releases\n")
            for rec in res.history:
                fh.write(
                    f"{rec.iteration},{rec.phase},{rec.cost!r},{rec.feasibility_gap!r},"
                    f"{rec.step!r},{rec.lam!r},{rec.n_releases}\n"
                )
    payload = {
        "model": model,
        "mode": mode,
        "cost": res.cost,
        "converged": res.converged,
        "reason": res.reason,
        "lambda": res.lam,
        "rho": res.rho,
        "seed": res.seed,
        "schedule": _schedule_payload(res.schedule),
        "starts": [asdict(s) for s in res.starts],
        "iterations": len(res.history),
    }
    _dump_json(payload, args.out_json)
    print(
        f"best cost {res.cost:.1f} (seed {res.seed}, {'converged' if res.converged else 'not converged'}: "
        f"{res.reason}); times {np.round(res.schedule.times, 2).tolist()}"
    )
    return EXIT_OK


def _eq_payload(eqset) -> list[dict]:
    out = []
    for eq in eqset.equilibria:
        out.append(
            {
                "label": eq.label,
                "exists": eq.exists,
                "residual": None if not eq.exists else eq.residual,
                "state": None if eq.state is None else eq.state.tolist(),
            }
        )
    return out


def _cmd_analyze(args) -> int:
    params = _load_effective_params(args.params)
    theta = invasion_threshold(params)
    sit = r0_sit(params)
    wild, inv = r0_wb(params)
    payload = {
        "theta": theta,
        "release_mass_at_theta": release_mass(theta, params),
        "r0": {
            "sit": {"r0": sit.r0, "basic": sit.basic},
            "wb_wolbachia_free": {"r0": wild.r0, "basic": wild.basic},
            "wb_full_invasion": {"r0": inv.r0, "basic": inv.basic},
        },
        "equilibria": {
            "seir": _eq_payload(equilibria_seir(params)),
            "wb": {
                f"p_star={label}": _eq_payload(equilibria_wb(params, p_star))
                for label, p_star in (("0", 0.0), ("theta", theta), ("1", 1.0))
            },
        },
    }
    _dump_json(payload, args.out_json)
    return EXIT_OK


def _cmd_gradcheck(args) -> int:
    params = _load_effective_params(args.params)
    rng = np.random.default_rng(args.seed)
    lo, hi = 5.0, args.horizon - 5.0
    times = np.sort(rng.uniform(lo, hi, size=args.n))
    while args.n > 1 and np.min(np.diff(times)) < 10.0 * args.h:
        times = np.sort(rng.uniform(lo, hi, size=args.n))
    weights = rng.uniform(0.5, 1.5, size=args.n)
    weights *= args.budget / weights.sum()
    schedule = ReleaseSchedule(tuple(times), tuple(weights), horizon=args.horizon)
    var = grad_J(args.model, params, schedule, rtol=args.rtol, atol_scale=args.rtol)
    fd = grad_J_fd(args.model, params, schedule, h_t=args.h, rtol=args.rtol, atol_scale=args.rtol)
    print(f"{'k':>3} {'kind':>6} {'variational':>18} {'finite-diff':>18} {'rel.err':>10}")
    worst = 0.0
    for kind, v, f in (("time", var.dJ_dt, fd.dJ_dt), ("weight", var.dJ_dc, fd.dJ_dc)):
        for k in range(schedule.n):
            denom = max(abs(f[k]), args.abs_floor / args.tol)
            rel = abs(v[k] - f[k]) / denom
            worst = max(worst, rel)
            print(f"{k:>3} {kind:>6} {v[k]:>18.10g} {f[k]:>18.10g} {rel:>10.2e}")
    print(f"worst relative error {worst:.2e} (threshold {args.tol:g})")
    return EXIT_OK if worst <= args.tol else EXIT_VALIDATION


def _cmd_reproduce(args) -> int:
    params = _load_effective_params(args.params)
    tables = args.tables or list(TABLE_KEYS)
    unknown = sorted(set(tables) - set(TABLE_KEYS))
    if unknown:
        raise ScenarioError(f"unknown tables: {', '.join(unknown)}")
    rows = []
    failures = 0
    for bench in BENCHMARKS:
        if bench.table not in tables:
            continue
        traj = simulate(bench.model, params, bench.schedule(), rtol=args.rtol)
        tol = replay_tolerance(bench.expected_cost)
        dev = traj.cost - bench.expected_cost
        ok = abs(dev) <= tol
        failures += 0 if ok else 1
        row = {
            "key": bench.key,
            "kind": "replay",
            "cost": traj.cost,
            "expected": bench.expected_cost,
            "deviation": dev,
            "tolerance": tol,
            "pass": ok,
        }
        rows.append(row)
        print(
            f"REPLAY {bench.key:<16} J={traj.cost:>10.1f} expected {bench.expected_cost:>10.1f} "
            f"dev {dev:>+9.1f} (tol {tol:.1f})  {'PASS' if ok else 'FAIL'}"
        )
        if args.optimize:
            res = optimize(
                bench.model,
                params,
                n=bench.n,
                budget=bench.budget,
                horizon=450.0,
                mode=bench.mode,
                seed=args.seed,
                starts=args.starts,
                rtol=args.opt_rtol,
            )
            base = simulate(bench.model, params, ReleaseSchedule.empty(450.0), rtol=args.rtol).cost
            reduction = (base - res.cost) / base * 100.0
            otol = optimizer_tolerance(bench.expected_cost)
            red_tol = 5.0 if bench.key in ("sit10/6e7", "sit10-fixed/6e7") else 3.0
            ok_cost = abs(res.cost - bench.expected_cost) <= otol
            ok_red = abs(reduction - bench.expected_reduction) <= red_tol
            failures += 0 if (ok_cost and ok_red) else 1
            rows.append(
                {
                    "key": bench.key,
                    "kind": "optimize",
                    "cost": res.cost,
                    "expected": bench.expected_cost,
                    "reduction_percent": reduction,
                    "expected_reduction": bench.expected_reduction,
                    "tolerance": otol,
                    "reduction_tolerance_pp": red_tol,
                    "converged": res.converged,
                    "pass": ok_cost and ok_red,
                }
            )
            print(
                f"OPTIM  {bench.key:<16} J={res.cost:>10.1f} expected {bench.expected_cost:>10.1f} "
                f"red {reduction:>5.1f}% vs {bench.expected_reduction:>5.1f}%  "
                f"{'PASS' if ok_cost and ok_red else 'FAIL'}"
            )
    if args.out_json:
        _dump_json({"rows": rows, "failures": failures}, args.out_json)
    print(f"{len(rows)} checks, {failures} failures")
    return EXIT_OK if failures == 0 else EXIT_VALIDATION


def _cmd_plots(args) -> int:
    written = emit_plots(args.csvs, out_dir=args.out_dir, baseline_csv=args.baseline)
    for p in written:
        print(p)
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mosqpulse", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a scenario with a literal schedule")
    p.add_argument("--config", required=True, help="scenario INI file")
    p.add_argument("--rtol", type=float, default=1e-8)
    p.add_argument("--out-csv", default=None)
    p.add_argument("--out-json", default=None)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("optimize", help="optimize a release schedule")
    p.add_argument("--config", default=None, help="scenario INI file with an [optimize] section")
    p.add_argument("--model", choices=("sit", "wb"), default=None)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--budget", type=float, default=None)
    p.add_argument("--horizon", type=float, default=450.0)
    p.add_argument("--mode", choices=("times-only", "times-and-weights"), default="times-and-weights")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--starts", type=int, default=5)
    p.add_argument("--rtol", type=float, default=1e-6)
    p.add_argument("--params", default=None, help="INI file with a [params] section")
    p.add_argument("--history-csv", default=None)
    p.add_argument("--out-json", default=None)
    p.set_defaults(func=_cmd_optimize)

    p = sub.add_parser("analyze", help="reproduction numbers, threshold and equilibria")
    p.add_argument("--params", default=None, help="INI file with a [params] section")
    p.add_argument("--out-json", default=None)
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("gradcheck", help="compare variational and finite-difference gradients")
    p.add_argument("--model", choices=("sit", "wb"), required=True)
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--budget", type=float, default=None)
    p.add_argument("--horizon", type=float, default=450.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rtol", type=float, default=1e-10)
    p.add_argument("--h", type=float, default=1e-4, help="finite-difference time step (days)")
    p.add_argument("--tol", type=float, default=1e-4, help="relative agreement threshold")
    p.add_argument("--abs-floor", type=float, default=1e-6)
    p.add_argument("--params", default=None)
    p.set_defaults(func=_cmd_gradcheck)

    p = sub.add_parser("reproduce", help="replay benchmark schedules and compare costs")
    p.add_argument("--tables", nargs="*", choices=TABLE_KEYS, default=None)
    p.add_argument("--optimize", action="store_true", help="also rerun the optimizer per row")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--starts", type=int, default=5)
    p.add_argument("--rtol", type=float, default=1e-8)
    p.add_argument("--opt-rtol", type=float, default=1e-6)
    p.add_argument("--params", default=None)
    p.add_argument("--out-json", default=None)
    p.set_defaults(func=_cmd_reproduce)

    p = sub.add_parser("plots", help="emit gnuplot scripts for trajectory CSVs")
    p.add_argument("csvs", nargs="+")
    p.add_argument("--baseline", default=None, help="uncontrolled trajectory CSV overlay")
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=_cmd_plots)
    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if getattr(args, "command", None) == "gradcheck" and args.budget is None:
        args.budget = 1e7 if args.model == "sit" else 1.2e4
    try:
        return args.func(args)
    except (ScenarioError, ValueError, KeyError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (SimulationError, ArithmeticError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
