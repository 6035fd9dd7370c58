"""Shared fixtures: default parameters, kernel warmup, random parameter draws."""

from __future__ import annotations

import numpy as np
import pytest

from mosqpulse import EpiParams, ReleaseSchedule, grad_J, simulate


@pytest.fixture(scope="session")
def params() -> EpiParams:
    return EpiParams()


@pytest.fixture(scope="session", autouse=True)
def _warm_kernels(params):
    """Compile every jitted entry point once so timed tests measure compute."""
    sched = ReleaseSchedule((10.0,), (1000.0,), horizon=30.0)
    simulate("seir", params, ReleaseSchedule.empty(30.0), rtol=1e-6)
    simulate("sit", params, sched, rtol=1e-6)
    simulate("wb", params, sched, rtol=1e-6)
    grad_J("sit", params, sched, rtol=1e-6, atol_scale=1e-6)
    grad_J("wb", params, sched, rtol=1e-6, atol_scale=1e-6)


def random_params(rng: np.random.Generator) -> EpiParams:
    """A random valid parameter set, loosely scattered around the defaults."""
    def jitter(x, lo=0.5, hi=1.8):
        return float(x * rng.uniform(lo, hi))

    base = EpiParams()
    beta_hm = jitter(base.beta_HM)
    beta_hw = beta_hm * rng.uniform(0.4, 0.95)
    beta_wh = beta_hw * rng.uniform(0.3, 0.9)
    b_m = jitter(base.b_M)
    return EpiParams(
        b_M=b_m,
        b_W=b_m * rng.uniform(0.7, 0.99),
        d_M=jitter(base.d_M, 0.6, 1.4),
        d_W=jitter(base.d_W, 0.8, 1.6),
        d_S=jitter(base.d_S),
        s_h=float(rng.uniform(0.6, 1.0)),
        s_c=float(rng.uniform(0.4, 1.0)),
        K=jitter(base.K),
        b_H=jitter(base.b_H),
        sigma_H=jitter(base.sigma_H),
        H=jitter(base.H),
        beta_HM=beta_hm,
        beta_MH=jitter(base.beta_MH),
        beta_HW=beta_hw,
        beta_WH=beta_wh,
        gamma_M=jitter(base.gamma_M),
        gamma_W=jitter(base.gamma_W),
        gamma_H=jitter(base.gamma_H),
    )
