"""Right-hand sides and mosquito-population primitives of the three models.

Three dynamical systems are covered:

  * ``seir``: dengue between humans (SEIR, recovered implicit) and wild
    mosquitoes (SEI) with logistic mosquito growth;
  * ``sit``: the same plus a sterile-male compartment M_S that degrades
    wild fertility through the mating factor M/(M + s_c*M_S);
  * ``wb``: wild and Wolbachia-carrying mosquitoes in the high-birth-rate
    limit, where the total population sits at carrying capacity and the
    Wolbachia proportion p follows the scalar bistable law p' = f(p).

The scalar functions here (``invasion_rate`` f, ``release_efficiency`` g,
``release_mass`` G, its inverse, and ``invasion_threshold`` theta) drive both
the p-dynamics and the exact jump map applied at a release instant.
"""

from __future__ import annotations

import math
import warnings
from typing import NamedTuple

import numpy as np

from .params import EpiParams

__all__ = [
    "SeirState",
    "SitState",
    "WbState",
    "rhs_seir",
    "rhs_sit",
    "rhs_wb",
    "invasion_rate",
    "invasion_rate_deriv",
    "release_efficiency",
    "release_mass",
    "release_mass_inverse",
    "invasion_threshold",
    "sit_jacobian",
    "wb_jacobian",
    "ClampWarning",
    "P_MAX",
]

# upper end of the domain handled by the release-mass inverse; G diverges at 1
P_MAX = 1.0 - 1e-12


class ClampWarning(UserWarning):
    """A state component was clamped back into its admissible range."""


class SeirState(NamedTuple):
    S_H: float
    E_H: float
    I_H: float
    S_M: float
    E_M: float
    I_M: float


class SitState(NamedTuple):
    S_H: float
    E_H: float
    I_H: float
    S_M: float
    E_M: float
    I_M: float
    M_S: float


class WbState(NamedTuple):
    S_H: float
    E_H: float
    I_H: float
    E_M: float
    I_M: float
    E_W: float
    I_W: float
    p: float


def rhs_seir(state: SeirState, params: EpiParams) -> SeirState:
    """Time derivatives of the uncontrolled SEIR/SEI system."""
    S_H, E_H, I_H, S_M, E_M, I_M = state
    q = params
    M = max(S_M + E_M + I_M, 0.0)
    foi_h = q.beta_MH / q.H * I_M * S_H
    foi_m = q.beta_HM / q.H * S_M * I_H
    return SeirState(
        S_H=q.b_H * q.H - foi_h - q.b_H * S_H,
        E_H=foi_h - (q.gamma_H + q.b_H) * E_H,
        I_H=q.gamma_H * E_H - (q.sigma_H + q.b_H) * I_H,
        S_M=q.b_M * M * (1.0 - M / q.K) - foi_m - q.d_M * S_M,
        E_M=foi_m - (q.gamma_M + q.d_M) * E_M,
        I_M=q.gamma_M * E_M - q.d_M * I_M,
    )


def _mating_factor(M: float, M_S: float, s_c: float) -> float:
    # probability that a female finds a fertile mate; 0 when no males at all
    den = M + s_c * M_S
    return M / den if den > 0.0 else 0.0


def rhs_sit(state: SitState, params: EpiParams) -> SitState:
    """Time derivatives of the sterile-male system (no release term).

    Releases are impulsive and applied by the simulator as jumps of M_S;
    between releases the control term is identically zero.
    """
    S_H, E_H, I_H, S_M, E_M, I_M, M_S = state
    q = params
    M = max(S_M + E_M + I_M, 0.0)
    birth = q.b_M * M * (1.0 - M / q.K) * _mating_factor(M, M_S, q.s_c)
    foi_h = q.beta_MH / q.H * I_M * S_H
    foi_m = q.beta_HM / q.H * S_M * I_H
    return SitState(
        S_H=q.b_H * q.H - foi_h - q.b_H * S_H,
        E_H=foi_h - (q.gamma_H + q.b_H) * E_H,
        I_H=q.gamma_H * E_H - (q.sigma_H + q.b_H) * I_H,
        S_M=birth - foi_m - q.d_M * S_M,
        E_M=foi_m - (q.gamma_M + q.d_M) * E_M,
        I_M=q.gamma_M * E_M - q.d_M * I_M,
        M_S=-q.d_S * M_S,
    )


def rhs_wb(state: WbState, params: EpiParams) -> WbState:
    """Time derivatives of the Wolbachia-replacement system (no release term).

    Susceptible mosquito pools are implicit: S_M = K(1-p) - E_M - I_M and
    S_W = K p - E_W - I_W. The proportion p evolves autonomously as f(p).
    """
    S_H, E_H, I_H, E_M, I_M, E_W, I_W, p = state
    q = params
    foi_h = (q.beta_MH * I_M + q.beta_WH * I_W) * S_H / q.H
    return WbState(
        S_H=q.b_H * q.H - foi_h - q.b_H * S_H,
        E_H=foi_h - (q.gamma_H + q.b_H) * E_H,
        I_H=q.gamma_H * E_H - (q.sigma_H + q.b_H) * I_H,
        E_M=q.beta_HM / q.H * (q.K * (1.0 - p) - E_M - I_M) * I_H - (q.gamma_M + q.d_M) * E_M,
        I_M=q.gamma_M * E_M - q.d_M * I_M,
        E_W=q.beta_HW / q.H * (q.K * p - E_W - I_W) * I_H - (q.gamma_W + q.d_W) * E_W,
        I_W=q.gamma_W * E_W - q.d_W * I_W,
        p=invasion_rate(p, params),
    )


def invasion_rate(p: float, params: EpiParams) -> float:
    """Autonomous growth rate of the Wolbachia proportion, f(p) (1/day).

    Bistable for the default parameters: negative on (0, theta), positive on
    (theta, 1), zero at p in {0, theta, 1}.
    """
    q = params
    num = p * (1.0 - p) * (q.d_M * q.b_W - q.d_W * q.b_M * (1.0 - q.s_h * p))
    den = q.b_M * (1.0 - p) * (1.0 - q.s_h * p) + q.b_W * p
    return num / den


def invasion_rate_deriv(p: float, params: EpiParams) -> float:
    """d f / d p, used by the variational fallback near the threshold."""
    q = params
    N = q.d_M * q.b_W - q.d_W * q.b_M * (1.0 - q.s_h * p)
    Np = q.d_W * q.b_M * q.s_h
    D = q.b_M * (1.0 - p) * (1.0 - q.s_h * p) + q.b_W * p
    Dp = q.b_M * (2.0 * q.s_h * p - 1.0 - q.s_h) + q.b_W
    u = p * (1.0 - p) * N
    up = (1.0 - 2.0 * p) * N + p * (1.0 - p) * Np
    return (up * D - u * Dp) / (D * D)


def release_efficiency(p: float, params: EpiParams) -> float:
    """Marginal effect g(p) of one released mosquito on the proportion p.

    Strictly positive on [0, 1), zero at p = 1; g(0) = 1/K.
    """
    q = params
    num = q.b_M * (1.0 - p) * (1.0 - q.s_h * p)
    return num / (q.K * (num + q.b_W * p))


def release_mass(p: float, params: EpiParams) -> float:
    """Cumulative release mass G(p) needed to lift the proportion 0 -> p.

    Antiderivative of 1/g vanishing at zero, in closed form via partial
    fractions. Strictly increasing on [0, 1) and divergent at p = 1.

    Raises:
        ValueError: if ``p`` is outside [0, 1).
    """
    if not 0.0 <= p < 1.0:
        raise ValueError(f"release mass is only defined for p in [0, 1), got {p!r}")
    q = params
    ratio = q.b_W / q.b_M
    if q.s_h < 1e-12:
        tail = -p - math.log1p(-p)
    elif q.s_h > 1.0 - 1e-12:
        tail = 1.0 / (1.0 - p) - 1.0 + math.log1p(-p)
    else:
        tail = (-math.log1p(-p) + math.log1p(-q.s_h * p) / q.s_h) / (1.0 - q.s_h)
    return q.K * (p + ratio * tail)


def release_mass_inverse(v: float, params: EpiParams) -> float:
    """Unique p in [0, 1) with G(p) = v, to 1e-12 absolute accuracy in p.

    Safeguarded Newton iteration (G' = 1/g is available analytically)
    bracketed by bisection. Masses beyond G(P_MAX) clamp to P_MAX with a
    ``ClampWarning``; negative masses are rejected.
    """
    if v < 0.0:
        raise ValueError(f"release mass must be nonnegative, got {v!r}")
    if v == 0.0:
        return 0.0
    if v >= release_mass(P_MAX, params):
        warnings.warn(
            f"release mass {v:g} exceeds the invertible range; proportion clamped to {P_MAX}",
            ClampWarning,
            stacklevel=2,
        )
        return P_MAX
    lo, hi = 0.0, P_MAX
    p = min(v / params.K, 0.5)  # initial guess from G'(0) = K
    for _ in range(200):
        gp = release_mass(p, params) - v
        if gp > 0.0:
            hi = p
        else:
            lo = p
        step = gp * release_efficiency(p, params)  # Newton: dG/dp = 1/g
        p_new = p - step
        if not lo < p_new < hi:
            p_new = 0.5 * (lo + hi)
        if abs(p_new - p) < 1e-13:
            p = p_new
            break
        p = p_new
    return min(max(p, 0.0), P_MAX)


def invasion_threshold(params: EpiParams) -> float:
    """Unstable interior zero theta of f; above it Wolbachia invades alone.

    Requires 1 - s_h <= d_M b_W / (d_W b_M) < 1; the left boundary maps to
    theta = 1 (threshold at full invasion).

    Raises:
        ValueError: if no interior root exists for these parameters.
    """
    q = params
    ratio = q.d_M * q.b_W / (q.d_W * q.b_M)
    if ratio >= 1.0 or ratio < 1.0 - q.s_h or q.s_h == 0.0:
        raise ValueError(
            "no interior invasion threshold: need 1 - s_h <= d_M*b_W/(d_W*b_M) < 1, "
            f"got ratio {ratio!r} with s_h {q.s_h!r}"
        )
    return (1.0 - ratio) / q.s_h


def sit_jacobian(state: np.ndarray, params: EpiParams) -> tuple[np.ndarray, np.ndarray]:
    """Linearization of the sterile-male system around ``state``.

    Args:
        state: full state ``(S_H, E_H, I_H, S_M, E_M, I_M, M_S)``.

    Returns:
        ``(A, b)`` with ``A`` the 6x6 Jacobian of the epidemiological block
        with respect to itself and ``b`` its derivative with respect to M_S.
    """
    q = params
    S_H, E_H, I_H, S_M, E_M, I_M, M_S = state[:7]
    M = max(S_M + E_M + I_M, 0.0)
    den = M + q.s_c * M_S
    A = np.zeros((6, 6))
    b = np.zeros(6)
    lam = q.beta_MH / q.H
    mu = q.beta_HM / q.H
    A[0, 0] = -lam * I_M - q.b_H
    A[0, 5] = -lam * S_H
    A[1, 0] = lam * I_M
    A[1, 1] = -(q.gamma_H + q.b_H)
    A[1, 5] = lam * S_H
    A[2, 1] = q.gamma_H
    A[2, 2] = -(q.sigma_H + q.b_H)
    if den > 0.0:
        poly = q.b_M * (M * M - M**3 / q.K)
        dpoly = q.b_M * (2.0 * M - 3.0 * M * M / q.K)
        dbirth_dM = dpoly / den - poly / den**2
        b[3] = -q.s_c * poly / den**2
    else:
        dbirth_dM = 0.0
    A[3, 2] = -mu * S_M
    A[3, 3] = dbirth_dM - mu * I_H - q.d_M
    A[3, 4] = dbirth_dM
    A[3, 5] = dbirth_dM
    A[4, 2] = mu * S_M
    A[4, 3] = mu * I_H
    A[4, 4] = -(q.gamma_M + q.d_M)
    A[5, 4] = q.gamma_M
    A[5, 5] = -q.d_M
    return A, b


def wb_jacobian(state: np.ndarray, params: EpiParams) -> tuple[np.ndarray, np.ndarray]:
    """Linearization of the Wolbachia system around ``state``.

    Args:
        state: full state ``(S_H, E_H, I_H, E_M, I_M, E_W, I_W, p)``.

    Returns:
        ``(A, b)`` with ``A`` the 7x7 Jacobian of the epidemiological block
        and ``b`` its derivative with respect to the proportion p.
    """
    q = params
    S_H, E_H, I_H, E_M, I_M, E_W, I_W, p = state[:8]
    A = np.zeros((7, 7))
    b = np.zeros(7)
    lam_m = q.beta_MH / q.H
    lam_w = q.beta_WH / q.H
    mu_m = q.beta_HM / q.H
    mu_w = q.beta_HW / q.H
    foi = lam_m * I_M + lam_w * I_W
    A[0, 0] = -foi - q.b_H
    A[0, 4] = -lam_m * S_H
    A[0, 6] = -lam_w * S_H
    A[1, 0] = foi
    A[1, 1] = -(q.gamma_H + q.b_H)
    A[1, 4] = lam_m * S_H
    A[1, 6] = lam_w * S_H
    A[2, 1] = q.gamma_H
    A[2, 2] = -(q.sigma_H + q.b_H)
    A[3, 2] = mu_m * (q.K * (1.0 - p) - E_M - I_M)
    A[3, 3] = -mu_m * I_H - (q.gamma_M + q.d_M)
    A[3, 4] = -mu_m * I_H
    A[4, 3] = q.gamma_M
    A[4, 4] = -q.d_M
    A[5, 2] = mu_w * (q.K * p - E_W - I_W)
    A[5, 5] = -mu_w * I_H - (q.gamma_W + q.d_W)
    A[5, 6] = -mu_w * I_H
    A[6, 5] = q.gamma_W
    A[6, 6] = -q.d_W
    b[3] = -mu_m * q.K * I_H
    b[5] = mu_w * q.K * I_H
    return A, b
