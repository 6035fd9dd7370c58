import numpy as np
import pytest

from mosqpulse import ReleaseSchedule, grad_J, merge_coincident, optimize, project_times, simulate
from mosqpulse.optimizer import descend_times, update_weights

T = 450.0


class TestProjectTimes:
    def test_admissible_unchanged(self):
        assert project_times((10.0, 20.0, 30.0), T) == (10.0, 20.0, 30.0)

    def test_clamp_then_sort(self):
        assert project_times((-5.0, 300.0, 200.0), T) == (0.0, 200.0, 300.0)

    def test_beyond_horizon(self):
        assert project_times((500.0, 460.0), T) == (450.0, 450.0)

    def test_idempotent(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            t = tuple(rng.uniform(-100, 600, size=6))
            once = project_times(t, T)
            assert project_times(once, T) == once


class TestMergeCoincident:
    def test_no_merge_needed(self):
        s = ReleaseSchedule((10.0, 20.0), (1.0, 2.0), horizon=T)
        assert merge_coincident(s, 0.5) is s

    def test_merges_equal_times(self):
        s = ReleaseSchedule((100.0, 100.0), (5.0, 7.0), horizon=T)
        m = merge_coincident(s, 1e-9)
        assert m.times == (100.0,) and m.weights == (12.0,)

    def test_weight_sum_preserved_exactly(self):
        rng = np.random.default_rng(1)
        times = tuple(np.sort(rng.uniform(0, 10, size=8)))
        weights = tuple(rng.uniform(0, 5, size=8))
        s = ReleaseSchedule(times, weights, horizon=T)
        m = merge_coincident(s, 2.0)
        assert m.n < s.n
        assert sum(m.weights) == pytest.approx(sum(weights), rel=1e-15)
        assert m.budget == s.budget and m.horizon == s.horizon

    def test_zero_weight_group_keeps_mean_time(self):
        s = ReleaseSchedule((10.0, 10.4), (0.0, 0.0), horizon=T)
        m = merge_coincident(s, 1.0)
        assert m.times == (pytest.approx(10.2),) and m.weights == (0.0,)


class TestDescendTimes:
    def test_zero_gradient_keeps_schedule(self, params):
        sched = ReleaseSchedule((100.0,), (5000.0,), horizon=T)
        out, cost, step, stalled = descend_times(
            "wb", params, sched, step=1.0, cost_current=1.0, gradient=np.zeros(1)
        )
        assert out is sched and not stalled

    def test_accepted_steps_never_increase_cost(self, params):
        sched = ReleaseSchedule((320.0,), (10000.0,), budget=10000.0, horizon=T)
        cost = simulate("wb", params, sched, rtol=1e-6, dense=False).cost
        costs = [cost]
        step = 0.5
        for _ in range(10):
            sched, cost, step, stalled = descend_times("wb", params, sched, step, rtol=1e-6,
                                                       cost_current=cost)
            if stalled:
                break
            costs.append(cost)
            step *= 1.5
        assert len(costs) > 3
        assert all(b <= a * (1 + 1e-9) for a, b in zip(costs, costs[1:]))
        assert sched.times[0] < 320.0  # moved towards the optimum


class TestUpdateWeights:
    def test_stationary_point_is_fixed(self, params):
        sched = ReleaseSchedule((50.0, 100.0), (600.0, 400.0), budget=1000.0, horizon=T)
        lam = 3.0
        grad = -lam * np.ones(2)  # grad_c J = -lambda at feasibility: stationary
        out, new_lam = update_weights("wb", params, sched, lam, rho=1e-3, eps_c=10.0, gradient=grad)
        assert out.weights == sched.weights
        assert new_lam == lam

    def test_overspent_budget_contracts(self, params):
        sched = ReleaseSchedule((50.0, 100.0), (800.0, 400.0), budget=1000.0, horizon=T)
        lam, rho, eps = 2.0, 1e-2, 5.0
        out, new_lam = update_weights("wb", params, sched, lam, rho, eps, gradient=np.zeros(2))
        gap = 200.0
        expected = np.array([800.0, 400.0]) - eps * (lam + rho * gap)
        assert np.allclose(out.weights, expected)
        assert new_lam == pytest.approx(max(lam + rho * (expected.sum() - 1000.0), 0.0))

    def test_weights_clamped_nonnegative(self, params):
        sched = ReleaseSchedule((50.0,), (10.0,), budget=10.0, horizon=T)
        out, _ = update_weights("wb", params, sched, lam=1e6, rho=1.0, eps_c=1.0,
                                gradient=np.zeros(1))
        assert out.weights[0] == 0.0


class TestOptimize:
    def test_validation(self, params):
        with pytest.raises(ValueError):
            optimize("seir", params, n=1, budget=1.0)
        with pytest.raises(ValueError):
            optimize("wb", params, n=0, budget=1.0)
        with pytest.raises(ValueError):
            optimize("wb", params, n=1, budget=-1.0)
        with pytest.raises(ValueError):
            optimize("wb", params, n=1, budget=1.0, mode="nope")

    def test_wb_above_threshold_releases_immediately(self, params):
        res = optimize("wb", params, n=1, budget=2e4, seed=0, starts=2)
        assert res.schedule.times[0] == 0.0
        assert res.cost == pytest.approx(128899.1, rel=0.02)
        assert res.schedule.is_feasible
        assert res.converged

    def test_deterministic_given_seed(self, params):
        a = optimize("wb", params, n=1, budget=2e4, seed=3, starts=2)
        b = optimize("wb", params, n=1, budget=2e4, seed=3, starts=2)
        assert a.cost == b.cost and a.schedule.times == b.schedule.times

    def test_history_and_feasibility(self, params):
        res = optimize("wb", params, n=2, budget=1.5e4, seed=1, starts=1,
                       max_time_iters=60, max_weight_iters=30, max_cycles=3)
        assert res.history
        time_costs = [r.cost for r in res.history if r.phase == "times"]
        assert all(b <= a * (1 + 1e-9) for a, b in zip(time_costs, time_costs[1:]))
        assert abs(res.schedule.total_released - 1.5e4) <= 1e-6 * 1.5e4
        assert min(res.schedule.weights) >= 0.0

    def test_times_only_keeps_equal_weights(self, params):
        res = optimize("wb", params, n=2, budget=1e4, seed=0, starts=1, mode="times-only",
                       max_time_iters=40, max_cycles=2, merge_eps=0.0)
        if res.schedule.n == 2:  # unless merged into one pulse
            assert res.schedule.weights[0] == pytest.approx(res.schedule.weights[1])
