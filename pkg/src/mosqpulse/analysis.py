"""Equilibria and reproduction numbers of the uncontrolled systems.

Per-stage reproduction numbers come from the next-generation method: with F
holding the new-infection rates and V the transfer rates linearized at a
disease-free equilibrium, R0 is the spectral radius of F V^-1. Each closed
form is cross-validated against the spectral computation at call time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import SeirState, WbState, invasion_rate, rhs_seir, rhs_wb
from .params import EpiParams

__all__ = [
    "R0Report",
    "Equilibrium",
    "EquilibriumSet",
    "r0_sit",
    "r0_wb",
    "r_pstar",
    "equilibria_seir",
    "equilibria_wb",
    "spectral_radius",
    "persistence_probe",
]

_SPECTRAL_AGREEMENT_RTOL = 1e-10


@dataclass(frozen=True)
class R0Report:
    """Per-stage reproduction number at one disease-free equilibrium."""

    r0: float
    basic: float  # r0 squared
    equilibrium_label: str  # wolbachia-free | full-invasion | sit-baseline
    F: np.ndarray
    V: np.ndarray


@dataclass(frozen=True)
class Equilibrium:
    label: str
    state: np.ndarray | None  # None when the equilibrium does not exist
    exists: bool
    residual: float  # scaled max-norm RHS residual; nan when absent


@dataclass(frozen=True)
class EquilibriumSet:
    model: str
    equilibria: tuple[Equilibrium, ...]
    p_star: float | None = None

    def get(self, label: str) -> Equilibrium:
        for eq in self.equilibria:
            if eq.label == label:
                return eq
        raise KeyError(label)


def spectral_radius(mat: np.ndarray, tol: float = 1e-12, max_iter: int = 100_000) -> float:
    """Spectral radius of a small nonnegative matrix by power iteration.

    Iterates on mat @ mat: the host-vector next-generation matrices have
    spectrum {+r0, -r0, 0, ...}, so the squared matrix has the simple
    dominant eigenvalue r0^2 and a nilpotent remainder that dies out after
    at most n steps, making the iteration robust even for r0 near zero.
    """
    sq = np.ascontiguousarray(mat @ mat)
    n = sq.shape[0]
    x = np.full(n, 1.0 / math.sqrt(n))
    lam = None
    for it in range(max_iter):
        y = sq @ x
        norm = float(np.linalg.norm(y))
        if norm == 0.0:
            return 0.0
        lam_new = norm  # ||sq x|| with ||x|| = 1
        x = y / norm
        if lam is not None and it >= n and abs(lam_new - lam) <= tol * max(1.0, lam_new):
            return math.sqrt(lam_new)
        lam = lam_new
    raise RuntimeError("power iteration failed to converge")


def _ngm_sit(params: EpiParams) -> tuple[np.ndarray, np.ndarray]:
    """F, V for infected compartments (E_H, I_H, E_M, I_M) at (H, 0, ..., K*, 0, 0)."""
    q = params
    F = np.zeros((4, 4))
    F[0, 3] = q.beta_MH
    F[2, 1] = q.beta_HM / q.H * q.K_star
    V = np.array(
        [
            [q.gamma_H + q.b_H, 0.0, 0.0, 0.0],
            [-q.gamma_H, q.sigma_H + q.b_H, 0.0, 0.0],
            [0.0, 0.0, q.gamma_M + q.d_M, 0.0],
            [0.0, 0.0, -q.gamma_M, q.d_M],
        ]
    )
    return F, V


def _ngm_wb(params: EpiParams) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """F at both disease-free equilibria and the shared V.

    Infected compartments are ordered (E_H, I_H, E_M, I_M, E_W, I_W); the
    mosquito population sits at carrying capacity K in this model.
    """
    q = params
    F_free = np.zeros((6, 6))
    F_free[0, 3] = q.beta_MH
    F_free[0, 5] = q.beta_WH
    F_free[2, 1] = q.beta_HM / q.H * q.K
    F_inv = np.zeros((6, 6))
    F_inv[0, 3] = q.beta_MH
    F_inv[0, 5] = q.beta_WH
    F_inv[4, 1] = q.beta_HW / q.H * q.K
    V = np.zeros((6, 6))
    V[0, 0] = q.gamma_H + q.b_H
    V[1, 0] = -q.gamma_H
    V[1, 1] = q.sigma_H + q.b_H
    V[2, 2] = q.gamma_M + q.d_M
    V[3, 2] = -q.gamma_M
    V[3, 3] = q.d_M
    V[4, 4] = q.gamma_W + q.d_W
    V[5, 4] = -q.gamma_W
    V[5, 5] = q.d_W
    return F_free, F_inv, V


def _report(r0_closed: float, F: np.ndarray, V: np.ndarray, label: str) -> R0Report:
    ngm = F @ np.linalg.inv(V)
    r0_spectral = spectral_radius(ngm)
    ref = max(abs(r0_closed), 1e-30)
    if abs(r0_spectral - r0_closed) > _SPECTRAL_AGREEMENT_RTOL * max(ref, 1.0):
        raise RuntimeError(
            f"closed-form and spectral R0 disagree at {label}: {r0_closed!r} vs {r0_spectral!r}"
        )
    return R0Report(r0=r0_closed, basic=r0_closed**2, equilibrium_label=label, F=F, V=V)


def _r0_closed(params: EpiParams, k_eff: float, beta_hv: float, beta_vh: float,
               d_v: float, gamma_v: float) -> float:
    q = params
    num = beta_hv * beta_vh * k_eff * gamma_v * q.gamma_H
    den = q.H * d_v * (q.b_H + q.sigma_H) * (gamma_v + d_v) * (q.gamma_H + q.b_H)
    return math.sqrt(num / den)


def r0_sit(params: EpiParams) -> R0Report:
    """Reproduction number of the baseline SEIR system (mosquitoes at K*)."""
    q = params
    closed = _r0_closed(q, q.K_star, q.beta_HM, q.beta_MH, q.d_M, q.gamma_M)
    F, V = _ngm_sit(q)
    return _report(closed, F, V, "sit-baseline")


def r0_wb(params: EpiParams) -> tuple[R0Report, R0Report]:
    """Reproduction numbers of the Wolbachia system.

    Returns the report at the Wolbachia-free equilibrium (wild mosquitoes at
    K) and at full invasion (Wolbachia mosquitoes at K).
    """
    q = params
    F_free, F_inv, V = _ngm_wb(q)
    wild = _report(_r0_closed(q, q.K, q.beta_HM, q.beta_MH, q.d_M, q.gamma_M), F_free, V, "wolbachia-free")
    inv = _report(_r0_closed(q, q.K, q.beta_HW, q.beta_WH, q.d_W, q.gamma_W), F_inv, V, "full-invasion")
    return wild, inv


def r_pstar(params: EpiParams, p_star: float) -> float:
    """Interpolated reproduction number at mosquito equilibrium proportion p*.

    The square interpolates affinely between the squared reproduction numbers
    of the fully wild and fully invaded populations.
    """
    wild, inv = r0_wb(params)
    return math.sqrt(inv.basic * p_star + wild.basic * (1.0 - p_star))


def _scaled_residual(rhs_vals, state) -> float:
    scale = max(1.0, float(np.max(np.abs(state))))
    return float(np.max(np.abs(rhs_vals)) / scale)


def equilibria_seir(params: EpiParams) -> EquilibriumSet:
    """Extinction, disease-free and (when R0 > 1) endemic equilibria."""
    q = params
    ks = q.K_star
    extinction = np.array([q.H, 0.0, 0.0, 0.0, 0.0, 0.0])
    free = np.array([q.H, 0.0, 0.0, ks, 0.0, 0.0])
    out = [
        Equilibrium("extinction", extinction, True,
                    _scaled_residual(rhs_seir(SeirState(*extinction), q), extinction)),
        Equilibrium("disease-free", free, True,
                    _scaled_residual(rhs_seir(SeirState(*free), q), free)),
    ]
    r0 = r0_sit(q).r0
    if r0 > 1.0:
        a_H = (q.gamma_H + q.b_H) * (q.sigma_H + q.b_H) / (q.b_H * q.gamma_H)
        a_M = (q.gamma_M + q.d_M) / q.gamma_M
        frac = 1.0 - 1.0 / r0**2
        i_h = ks * q.beta_MH / (q.H * q.b_H * a_M + ks * q.beta_MH) * frac * q.H / a_H
        i_m = q.beta_HM / (a_H * q.d_M + q.beta_HM) * frac * ks / a_M
        endemic = np.array(
            [
                q.H - a_H * i_h,
                (q.sigma_H + q.b_H) / q.gamma_H * i_h,
                i_h,
                ks - a_M * i_m,
                q.d_M / q.gamma_M * i_m,
                i_m,
            ]
        )
        out.append(
            Equilibrium("endemic", endemic, True,
                        _scaled_residual(rhs_seir(SeirState(*endemic), q), endemic))
        )
    else:
        out.append(Equilibrium("endemic", None, False, float("nan")))
    return EquilibriumSet("seir", tuple(out))


def _positive_root(a: float, b: float, c: float) -> float:
    """The unique positive root of a z^2 + b z + c; errors if not unique."""
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        raise ArithmeticError("endemic-equilibrium polynomial has no real root")
    sq = math.sqrt(disc)
    # numerically stable split: q = -(b + sign(b) sqrt(disc)) / 2
    qv = -0.5 * (b + math.copysign(sq, b)) if b != 0.0 else 0.5 * sq
    roots = []
    if a != 0.0:
        roots.append(qv / a)
    if qv != 0.0:
        roots.append(c / qv)
    pos = sorted({r for r in roots if r > 0.0})
    if len(pos) != 1:
        raise ArithmeticError(f"expected exactly one positive root, got {pos}")
    return pos[0]


def equilibria_wb(params: EpiParams, p_star: float) -> EquilibriumSet:
    """Disease-free and (when R_p* > 1) endemic equilibria at proportion p*.

    ``p_star`` should be a zero of the invasion rate f (0, theta or 1) for
    the returned states to be genuine equilibria of the full system.
    """
    q = params
    free = np.array([q.H, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, p_star])
    out = [
        Equilibrium("disease-free", free, True,
                    _scaled_residual(rhs_wb(WbState(*free), q), free)),
    ]
    wild, inv = r0_wb(q)
    rp2 = inv.basic * p_star + wild.basic * (1.0 - p_star)
    if rp2 > 1.0:
        a_H = (q.gamma_H + q.b_H) * (q.sigma_H + q.b_H) / (q.b_H * q.gamma_H)
        a_M = (q.gamma_M + q.d_M) / q.gamma_M
        a_W = (q.gamma_W + q.d_W) / q.gamma_W
        # quadratic for the infected-human fraction r = I_H*/H, collected from
        # the per-species balance I_v = beta K r (share)/(a_v (d_v + beta r))
        # and the human balance phi/(b_H + phi) = a_H r
        wild_term = q.beta_HW * q.d_M * wild.basic * (1.0 - p_star)
        inv_term = q.beta_HM * q.d_W * inv.basic * p_star
        A = q.beta_HM * q.beta_HW + a_H * (wild_term + inv_term)
        B = (
            (q.beta_HM * q.d_W + q.beta_HW * q.d_M)
            + rp2 * a_H * q.d_M * q.d_W
            - wild_term
            - inv_term
        )
        C = -(rp2 - 1.0) * q.d_M * q.d_W
        r = _positive_root(A, B, C)
        i_h = q.H * r
        i_m = q.K / a_M * (q.beta_HM * r / (q.d_M + q.beta_HM * r)) * (1.0 - p_star)
        i_w = q.K / a_W * (q.beta_HW * r / (q.d_W + q.beta_HW * r)) * p_star
        endemic = np.array(
            [
                q.H - a_H * i_h,
                (q.sigma_H + q.b_H) / q.gamma_H * i_h,
                i_h,
                q.d_M / q.gamma_M * i_m,
                i_m,
                q.d_W / q.gamma_W * i_w,
                i_w,
                p_star,
            ]
        )
        out.append(
            Equilibrium("endemic", endemic, True,
                        _scaled_residual(rhs_wb(WbState(*endemic), q), endemic))
        )
    else:
        out.append(Equilibrium("endemic", None, False, float("nan")))
    return EquilibriumSet("wb", tuple(out), p_star=p_star)


def persistence_probe(params: EpiParams, p0: float, horizon: float = 5000.0,
                      tail_fraction: float = 0.2) -> float:
    """Long-horizon diagnostic: smallest infected aggregate over the tail.

    Simulates the Wolbachia system from the default outbreak seeds with the
    proportion started at ``p0`` and returns min over the trailing fraction
    of the horizon of E_H + I_H + E_M + I_M + E_W + I_W. Positive values
    indicate persistence of the disease along that trajectory.
    """
    from .simulate import ReleaseSchedule, default_init, simulate

    init = default_init("wb", params)
    init[7] = p0
    traj = simulate("wb", params, ReleaseSchedule.empty(horizon), init=init,
                    rtol=1e-10, atol_scale=1e-12)
    ts = np.linspace(horizon * (1.0 - tail_fraction), horizon, 200)
    states = traj.sample(ts)
    infected = states[:, 1:7].sum(axis=1)
    return float(infected.min())
