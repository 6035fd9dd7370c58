"""Integrator validation against scipy's Dormand-Prince implementation."""

import numpy as np
import pytest
from scipy.integrate import RK45 as ScipyRK45
from scipy.integrate import solve_ivp

from mosqpulse import EpiParams, ReleaseSchedule
from mosqpulse._kernels import integrate_sit, rhs_sit
from mosqpulse._rk import STATUS_OK, eval_dense


@pytest.fixture(scope="module")
def pp(params):
    return params.as_array()


AUX = np.zeros(1)


def rhs_py(t, y, pp):
    out = np.empty(8)
    rhs_sit.py_func(t, y, pp, AUX, out)
    return out


def sit_init(params):
    q = params
    return np.array([q.H - 20, 0.0, 20.0, q.K_star - 20, 0.0, 20.0, 5e5, 0.0])


def test_single_step_matches_scipy_rk45_exactly(params, pp):
    """One forced step must reproduce scipy's RK45 update and interpolant.

    scipy's RK45 is the same Dormand-Prince pair with the same dense-output
    coefficients, so a single identical step is a bitwise-level oracle.
    """
    y0 = sit_init(params)
    h = 0.37
    s = ScipyRK45(lambda t, y: rhs_py(t, y, pp), 0.0, y0, t_bound=h,
                  first_step=h, rtol=1e30, atol=1e30)
    s.step()
    interp = s.dense_output()
    status, ts, ys, qs, _ = integrate_sit(0.0, h, y0, pp, AUX, 1e30, np.full(8, 1e30), h, np.inf, True)
    assert status == STATUS_OK
    assert len(ts) == 2
    assert np.allclose(ys[1], s.y, rtol=0, atol=1e-8)
    for sigma in np.linspace(0.0, 1.0, 9):
        ours = eval_dense(ts, ys, qs, sigma * h)
        assert np.allclose(ours, interp(sigma * h), rtol=0, atol=1e-7)


def test_full_horizon_matches_tight_reference(params, pp):
    y0 = sit_init(params)
    atol = 1e-8 * np.array([params.H] * 3 + [params.K] * 4 + [params.H])
    status, ts, ys, qs, _ = integrate_sit(0.0, 450.0, y0, pp, AUX, 1e-8, atol, 0.0, np.inf, True)
    assert status == STATUS_OK
    ref = solve_ivp(lambda t, y: rhs_py(t, y, pp), (0, 450), y0, method="DOP853",
                    rtol=1e-12, atol=1e-9)
    assert np.allclose(ys[-1], ref.y[:, -1], rtol=1e-7, atol=1e-6)


def test_dense_output_accuracy_between_steps(params, pp):
    y0 = sit_init(params)
    atol = 1e-8 * np.array([params.H] * 3 + [params.K] * 4 + [params.H])
    status, ts, ys, qs, _ = integrate_sit(0.0, 60.0, y0, pp, AUX, 1e-8, atol, 0.0, np.inf, True)
    assert status == STATUS_OK
    rng = np.random.default_rng(0)
    for t in rng.uniform(0.0, 60.0, size=25):
        ref = solve_ivp(lambda tt, y: rhs_py(tt, y, pp), (0, t), y0, method="DOP853",
                        rtol=1e-12, atol=1e-9).y[:, -1]
        ours = eval_dense(ts, ys, qs, float(t))
        assert np.allclose(ours, ref, rtol=2e-7, atol=1e-5)


def test_dense_output_exact_at_knots(params, pp):
    y0 = sit_init(params)
    atol = 1e-6 * np.array([params.H] * 3 + [params.K] * 4 + [params.H])
    _, ts, ys, qs, _ = integrate_sit(0.0, 30.0, y0, pp, AUX, 1e-6, atol, 0.0, np.inf, True)
    for i in (0, len(ts) // 2, len(ts) - 1):
        assert np.allclose(eval_dense(ts, ys, qs, ts[i]), ys[i], rtol=1e-12, atol=1e-12)


def test_tolerance_controls_error(params, pp):
    y0 = sit_init(params)
    ref = solve_ivp(lambda t, y: rhs_py(t, y, pp), (0, 450), y0, method="DOP853",
                    rtol=1e-13, atol=1e-10).y[:, -1]
    errs = []
    for rtol in (1e-4, 1e-6, 1e-8):
        atol = rtol * np.array([params.H] * 3 + [params.K] * 4 + [params.H])
        _, _, ys, _, _ = integrate_sit(0.0, 450.0, y0, pp, AUX, rtol, atol, 0.0, np.inf, False)
        errs.append(abs(ys[-1, -1] - ref[-1]) / abs(ref[-1]))
    assert errs[0] > errs[2]
    assert errs[2] < 1e-8


def test_zero_length_segment(params, pp):
    y0 = sit_init(params)
    status, ts, ys, qs, _ = integrate_sit(5.0, 5.0, y0, pp, AUX, 1e-8, np.full(8, 1e-6), 0.0, np.inf, True)
    assert status == STATUS_OK
    assert len(ts) == 1 and np.array_equal(ys[0], y0)
