"""Scenario configuration: a human-editable INI file per simulation request.

A scenario file has a ``[scenario]`` section (model, horizon, initial
infecteds, optional output paths), an optional ``[params]`` section with
parameter overrides keyed by their symbol names, and either a ``[schedule]``
section (literal releases) or an ``[optimize]`` section (schedule to be
found by the optimizer). Unknown keys anywhere are hard errors.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from pathlib import Path

from .params import EpiParams, PARAM_KEYS, params_from_mapping
from .simulate import MODELS, ReleaseSchedule

__all__ = ["Scenario", "OptimizeRequest", "load_scenario", "save_scenario", "ScenarioError"]


class ScenarioError(ValueError):
    """Configuration could not be resolved into a valid request."""


_SCENARIO_KEYS = ("model", "horizon", "i_h0", "i_m0", "out_csv", "out_json")
_SCHEDULE_KEYS = ("times", "weights", "budget")
_OPTIMIZE_KEYS = ("n", "budget", "mode", "seed", "starts")


@dataclass(frozen=True)
class OptimizeRequest:
    n: int
    budget: float
    mode: str = "times-and-weights"
    seed: int = 0
    starts: int = 5

    def __post_init__(self):
        if self.mode not in ("times-only", "times-and-weights"):
            raise ScenarioError(f"unknown optimization mode {self.mode!r}")
        if self.n < 1 or self.budget <= 0 or self.starts < 1:
            raise ScenarioError("optimize request needs n >= 1, budget > 0, starts >= 1")


@dataclass(frozen=True)
class Scenario:
    """A complete simulation or optimization request."""

    model: str
    params: EpiParams = field(default_factory=EpiParams)
    horizon: float = 450.0
    i_h0: float = 20.0
    i_m0: float = 20.0
    times: tuple[float, ...] = ()
    weights: tuple[float, ...] = ()
    budget: float | None = None
    optimize: OptimizeRequest | None = None
    out_csv: str | None = None
    out_json: str | None = None

    def __post_init__(self):
        if self.model not in MODELS:
            raise ScenarioError(f"unknown model {self.model!r}; expected one of {sorted(MODELS)}")
        if self.optimize is not None and self.times:
            raise ScenarioError("a scenario carries either a literal schedule or an optimize request")
        if len(self.times) != len(self.weights):
            raise ScenarioError("times and weights must have equal length")

    def schedule(self) -> ReleaseSchedule:
        """The literal schedule (empty means an uncontrolled run)."""
        if self.optimize is not None:
            raise ScenarioError("scenario requests optimization; no literal schedule")
        return ReleaseSchedule(self.times, self.weights, budget=self.budget, horizon=self.horizon)

    def initial_state(self):
        from .simulate import default_init

        return default_init(self.model, self.params, i_h0=self.i_h0, i_m0=self.i_m0)


def _check_keys(section: str, present, allowed) -> None:
    unknown = sorted(set(present) - set(allowed))
    if unknown:
        raise ScenarioError(f"unknown keys in [{section}]: {', '.join(unknown)}")


def _floats(text: str) -> tuple[float, ...]:
    text = text.strip()
    if not text:
        return ()
    return tuple(float(x) for x in text.split(","))


def load_scenario(path: str | Path) -> Scenario:
    """Parse a scenario file; unknown sections or keys raise ScenarioError."""
    cp = configparser.ConfigParser()
    cp.optionxform = str  # parameter keys are case-sensitive symbol names
    read = cp.read(path)
    if not read:
        raise FileNotFoundError(path)
    known_sections = {"scenario", "params", "schedule", "optimize"}
    unknown = sorted(set(cp.sections()) - known_sections)
    if unknown:
        raise ScenarioError(f"unknown sections: {', '.join(unknown)}")
    if "scenario" not in cp:
        raise ScenarioError("missing [scenario] section")
    sc = cp["scenario"]
    _check_keys("scenario", sc.keys(), _SCENARIO_KEYS)
    if "model" not in sc:
        raise ScenarioError("[scenario] must set a model")

    params = EpiParams()
    if "params" in cp:
        _check_keys("params", cp["params"].keys(), PARAM_KEYS)
        try:
            params = params_from_mapping(dict(cp["params"]))
        except (KeyError, ValueError) as exc:
            raise ScenarioError(str(exc)) from exc

    times: tuple[float, ...] = ()
    weights: tuple[float, ...] = ()
    budget = None
    opt = None
    if "schedule" in cp and "optimize" in cp:
        raise ScenarioError("provide either [schedule] or [optimize], not both")
    if "schedule" in cp:
        sec = cp["schedule"]
        _check_keys("schedule", sec.keys(), _SCHEDULE_KEYS)
        times = _floats(sec.get("times", ""))
        weights = _floats(sec.get("weights", ""))
        budget = float(sec["budget"]) if "budget" in sec else None
    if "optimize" in cp:
        sec = cp["optimize"]
        _check_keys("optimize", sec.keys(), _OPTIMIZE_KEYS)
        try:
            opt = OptimizeRequest(
                n=int(sec["n"]),
                budget=float(sec["budget"]),
                mode=sec.get("mode", "times-and-weights"),
                seed=int(sec.get("seed", "0")),
                starts=int(sec.get("starts", "5")),
            )
        except KeyError as exc:
            raise ScenarioError(f"[optimize] is missing required key {exc}") from exc

    try:
        return Scenario(
            model=sc["model"],
            params=params,
            horizon=float(sc.get("horizon", "450")),
            i_h0=float(sc.get("i_h0", "20")),
            i_m0=float(sc.get("i_m0", "20")),
            times=times,
            weights=weights,
            budget=budget,
            optimize=opt,
            out_csv=sc.get("out_csv") or None,
            out_json=sc.get("out_json") or None,
        )
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc


def save_scenario(scenario: Scenario, path: str | Path) -> None:
    """Write a scenario file that ``load_scenario`` reads back identically."""
    cp = configparser.ConfigParser()
    cp.optionxform = str
    cp["scenario"] = {
        "model": scenario.model,
        "horizon": repr(scenario.horizon),
        "i_h0": repr(scenario.i_h0),
        "i_m0": repr(scenario.i_m0),
    }
    if scenario.out_csv:
        cp["scenario"]["out_csv"] = scenario.out_csv
    if scenario.out_json:
        cp["scenario"]["out_json"] = scenario.out_json
    cp["params"] = {k: repr(getattr(scenario.params, k)) for k in PARAM_KEYS}
    if scenario.optimize is not None:
        o = scenario.optimize
        cp["optimize"] = {
            "n": str(o.n),
            "budget": repr(o.budget),
            "mode": o.mode,
            "seed": str(o.seed),
            "starts": str(o.starts),
        }
    else:
        cp["schedule"] = {
            "times": ", ".join(repr(t) for t in scenario.times),
            "weights": ", ".join(repr(c) for c in scenario.weights),
        }
        if scenario.budget is not None:
            cp["schedule"]["budget"] = repr(scenario.budget)
    with open(path, "w", encoding="utf-8") as fh:
        cp.write(fh)
