"""Biological and epidemiological parameters of the dengue release models.

All rates are per day, populations are head counts and the cytoplasmic
incompatibility / competitiveness levels are dimensionless fractions.
Defaults correspond to the bundled dengue scenario; the carrying capacity
default is chosen so that the wild-mosquito equilibrium K*(= K(1-d_M/b_M))
equals the human population size.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Mapping

import numpy as np

__all__ = ["EpiParams", "PARAM_KEYS", "load_params", "params_from_mapping"]

_HUMANS = 65000.0
# K such that K(1 - d_M/b_M) == H for the default death/birth rates below
_K_DEFAULT = _HUMANS * 110.0 / 109.0


@dataclass(frozen=True)
class EpiParams:
    """Parameter set shared by the SEIR, sterile-male and Wolbachia models.

    Attributes:
        b_M, b_W: wild / Wolbachia-infected mosquito birth rates (1/day).
        d_M, d_W, d_S: wild / Wolbachia / sterile-male death rates (1/day).
        s_h: cytoplasmic incompatibility level in [0, 1].
        s_c: sterile-male competitiveness in (0, 1].
        K: mosquito carrying capacity (count).
        b_H: human birth = death rate (1/day).
        sigma_H: human recovery rate (1/day).
        H: total human population (count).
        beta_HM, beta_MH, beta_HW, beta_WH: transmission rates between
            humans and wild (M) or Wolbachia-carrying (W) mosquitoes (1/day).
        gamma_M, gamma_W, gamma_H: incubation progression rates (1/day).
    """

    b_M: float = 4.4
    b_W: float = 3.96
    d_M: float = 0.04
    d_W: float = 0.044
    d_S: float = 0.12
    s_h: float = 0.9
    s_c: float = 0.9
    K: float = _K_DEFAULT
    b_H: float = 0.013 / 365.0  # 0.013 per year
    sigma_H: float = 0.2
    H: float = _HUMANS
    beta_HM: float = 0.1647
    beta_MH: float = 0.1647
    beta_HW: float = 0.157
    beta_WH: float = 0.0785
    gamma_M: float = 0.186
    gamma_W: float = 0.146
    gamma_H: float = 0.17

    def __post_init__(self) -> None:
        for f in fields(self):
            v = getattr(self, f.name)
            if not np.isfinite(v):
                raise ValueError(f"parameter {f.name} must be finite, got {v!r}")
            if f.name not in ("s_h",) and v <= 0.0:
                raise ValueError(f"parameter {f.name} must be positive, got {v!r}")
        if not 0.0 <= self.s_h <= 1.0:
            raise ValueError(f"s_h must lie in [0, 1], got {self.s_h!r}")
        if not 0.0 < self.s_c <= 1.0:
            raise ValueError(f"s_c must lie in (0, 1], got {self.s_c!r}")
        if not self.beta_WH < self.beta_HW < self.beta_HM:
            raise ValueError(
                "transmission rates must satisfy beta_WH < beta_HW < beta_HM, got "
                f"{self.beta_WH!r}, {self.beta_HW!r}, {self.beta_HM!r}"
            )
        if self.d_M >= self.b_M:
            raise ValueError("wild equilibrium requires d_M < b_M")

    @property
    def K_star(self) -> float:
        """Wild-mosquito population at the logistic equilibrium, K(1 - d_M/b_M)."""
        return self.K * (1.0 - self.d_M / self.b_M)

    def as_array(self) -> np.ndarray:
        """Pack into the flat float64 layout used by the compiled kernels."""
        return np.array([getattr(self, k) for k in PARAM_KEYS], dtype=np.float64)

    def with_updates(self, **kwargs: float) -> "EpiParams":
        return replace(self, **kwargs)


PARAM_KEYS: tuple[str, ...] = tuple(f.name for f in fields(EpiParams))

# indices into EpiParams.as_array(), shared with the numba kernels
PP_INDEX: dict[str, int] = {k: i for i, k in enumerate(PARAM_KEYS)}


def params_from_mapping(mapping: Mapping[str, object], base: EpiParams | None = None) -> EpiParams:
    """Build parameters from a flat key -> value mapping.

    Unknown keys raise ``KeyError`` so configuration typos cannot pass
    silently. Values may be strings; they are converted with ``float``.
    """
    base = base if base is not None else EpiParams()
    unknown = sorted(set(mapping) - set(PARAM_KEYS))
    if unknown:
        raise KeyError(f"unknown parameter keys: {', '.join(unknown)}")
    updates = {k: float(v) for k, v in mapping.items()}  # type: ignore[arg-type]
    return replace(base, **updates)


def load_params(path: str | Path, base: EpiParams | None = None) -> EpiParams:
    """Load parameters from an INI file with a single ``[params]`` section."""
    cp = configparser.ConfigParser()
    cp.optionxform = str  # keys are case-sensitive symbol names
    read = cp.read(path)
    if not read:
        raise FileNotFoundError(path)
    if "params" not in cp:
        raise ValueError(f"{path}: expected a [params] section")
    return params_from_mapping(dict(cp["params"]), base=base)
