import math

import numpy as np
import pytest

from actuator_opt.actuator_path import ActuatorPath, WorldPose
from actuator_opt.speed_planner import (
    SpeedParams,
    SpeedProfile,
    accel_limit,
    curvature_speeds,
    plan_speeds,
)


def path_with_phis(phis, dr=1.0):
    return ActuatorPath.with_constant_dr(WorldPose(0, 0, 0), phis, dr)


def decel_tail_oracle(n_entries, d_max, dr, v_cap):
    """Recurrence walked back from the zero terminal entry:
    v_k = sqrt(2*d_max*dr*k), capped."""
    ks = np.arange(n_entries)[::-1]
    return np.minimum(np.sqrt(2.0 * d_max * dr * ks), v_cap)


class TestCurvatureSpeeds:
    def params(self):
        return SpeedParams(v_min=2.0, v_max=5.0, gamma=0.1)

    def test_zero_phi_gives_v_max(self):
        v = curvature_speeds(path_with_phis([0.0, 0.0]), self.params())
        assert v[0] == 5.0 and v[1] == 5.0

    def test_gamma_and_beyond_give_v_min(self):
        p = self.params()
        v = curvature_speeds(path_with_phis([0.1, -0.2, 0.35]), p)
        assert np.array_equal(v[:3], [2.0, 2.0, 2.0])

    def test_midpoint_is_linear(self):
        v = curvature_speeds(path_with_phis([0.05]), self.params())
        assert v[0] == pytest.approx(3.5)

    def test_final_pose_reads_zero(self):
        v = curvature_speeds(path_with_phis([0.0, 0.0, 0.0]), self.params())
        assert v[-1] == 0.0
        assert len(v) == 4


class TestAccelLimit:
    def test_decel_tail_matches_recurrence_oracle(self):
        # d_max * dr = 1 gives the sqrt(2k) staircase: ..., sqrt(6), 2, sqrt(2), 0
        params = SpeedParams(v_min=2.0, v_max=5.0, a_max=2.0, d_max=1.0)
        v = np.concatenate([np.full(9, 5.0), [0.0]])
        out = accel_limit(v, 1.0, params)
        assert out[-1] == 0.0
        assert out[-2] == pytest.approx(math.sqrt(2.0))
        assert out[-3] == pytest.approx(2.0)
        assert out[-4] == pytest.approx(math.sqrt(6.0))
        assert np.allclose(out, decel_tail_oracle(10, 1.0, 1.0, 5.0))

    def test_decel_tail_other_limits(self):
        params = SpeedParams(v_min=2.0, v_max=5.0, a_max=2.0, d_max=2.0)
        v = np.concatenate([np.full(12, 5.0), [0.0]])
        out = accel_limit(v, 1.0, params)
        assert np.allclose(out, decel_tail_oracle(13, 2.0, 1.0, 5.0))

    def test_feasible_profile_unchanged(self):
        params = SpeedParams(v_min=1.0, v_max=5.0, a_max=2.0, d_max=3.0)
        v = np.array([1.0, 1.5, 2.0, 1.8, 1.2, 0.0])
        out = accel_limit(v, 1.0, params)
        assert np.array_equal(out, v)

    def test_standing_start_ramp(self):
        # a_max = 1, dr = 0.5: forward ramp v_k = sqrt(k), capped at v_max
        params = SpeedParams(v_min=1.0, v_max=5.0, a_max=1.0, d_max=50.0)
        v = np.full(30, 5.0)
        v[0] = 0.0
        out = accel_limit(v, 0.5, params)
        ks = np.arange(30)
        assert np.allclose(out, np.minimum(np.sqrt(ks), 5.0))

    def test_output_pointwise_at_most_input(self):
        rng = np.random.default_rng(3)
        params = SpeedParams(v_min=0.5, v_max=6.0, a_max=1.5, d_max=2.5)
        for _ in range(20):
            v = rng.uniform(0, 6, size=rng.integers(2, 40))
            out = accel_limit(v, float(rng.uniform(0.2, 1.0)), params)
            assert (out <= v + 1e-12).all()

    def test_idempotent(self):
        rng = np.random.default_rng(4)
        params = SpeedParams(v_min=0.5, v_max=6.0, a_max=1.5, d_max=2.5)
        v = rng.uniform(0, 6, size=25)
        once = accel_limit(v, 0.7, params)
        twice = accel_limit(once, 0.7, params)
        assert np.array_equal(once, twice)

    def test_per_step_dr_array(self):
        params = SpeedParams(v_min=1.0, v_max=5.0, a_max=2.0, d_max=2.0)
        drs = np.array([0.5, 1.0, 0.25, 0.75])
        v = np.array([5.0, 5.0, 5.0, 5.0, 0.0])
        out = accel_limit(v, drs, params)
        for i in range(4):
            assert out[i] <= math.sqrt(out[i + 1] ** 2 + 2 * params.d_max * drs[i]) + 1e-12
            assert out[i + 1] <= math.sqrt(out[i] ** 2 + 2 * params.a_max * drs[i]) + 1e-12

    def test_bad_dr(self):
        with pytest.raises(ValueError):
            accel_limit(np.array([1.0, 0.0]), 0.0, SpeedParams())


class TestPlanSpeeds:
    def test_trapezoid_from_standing_start(self):
        params = SpeedParams(v_min=2.0, v_max=5.0, gamma=0.1, a_max=2.0, d_max=3.0)
        n, dr = 60, 0.5
        profile = plan_speeds(path_with_phis([0.0] * n, dr), params, initial_speed=0.0)
        v = profile.speeds
        ks = np.arange(n + 1)
        expected = np.minimum.reduce([
            np.full(n + 1, 5.0),
            np.sqrt(2.0 * params.a_max * dr * ks),        # ramp up from rest
            np.sqrt(2.0 * params.d_max * dr * (n - ks)),  # ramp down into the goal
        ])
        assert np.allclose(v, expected)
        assert (v == 5.0).sum() > 10  # an actual cruise section exists

    def test_all_sharp_turns_floor_plus_terminal_ramp(self):
        params = SpeedParams(v_min=2.0, v_max=5.0, gamma=0.1, a_max=2.0, d_max=3.0)
        n, dr = 20, 0.5
        profile = plan_speeds(path_with_phis([0.2] * n, dr), params)
        v = profile.speeds
        expected = np.minimum(decel_tail_oracle(n + 1, params.d_max, dr, params.v_max),
                              2.0)
        assert np.allclose(v, expected)

    def test_single_step_path(self):
        params = SpeedParams(v_min=2.0, v_max=5.0, gamma=0.1, a_max=2.0, d_max=3.0)
        dr = 0.4
        profile = plan_speeds(path_with_phis([0.0], dr), params)
        assert profile.speeds[1] == 0.0
        assert profile.speeds[0] == pytest.approx(
            min(5.0, math.sqrt(2 * params.d_max * dr)))

    def test_terminal_speed_exactly_zero(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            phis = rng.uniform(-0.3, 0.3, size=rng.integers(1, 30))
            profile = plan_speeds(path_with_phis(phis, 0.4), SpeedParams())
            assert profile.speeds[-1] == 0.0

    def test_output_never_exceeds_curvature_law(self):
        rng = np.random.default_rng(6)
        params = SpeedParams()
        for _ in range(10):
            path = path_with_phis(rng.uniform(-0.3, 0.3, size=25), 0.4)
            profile = plan_speeds(path, params)
            assert (profile.speeds <= curvature_speeds(path, params) + 1e-12).all()

    def test_feasibility_bounds_hold_everywhere(self):
        rng = np.random.default_rng(7)
        params = SpeedParams()
        for _ in range(10):
            dr = float(rng.uniform(0.2, 1.0))
            path = path_with_phis(rng.uniform(-0.4, 0.4, size=40), dr)
            v = plan_speeds(path, params, initial_speed=float(rng.uniform(0, 5))).speeds
            accel = np.diff(v**2)
            assert (accel <= 2 * params.a_max * dr + 1e-9).all()
            assert (-accel <= 2 * params.d_max * dr + 1e-9).all()

    def test_monotone_response_to_sharper_steering(self):
        params = SpeedParams()
        rng = np.random.default_rng(8)
        phis = rng.uniform(-0.08, 0.08, size=30)
        mild = plan_speeds(path_with_phis(phis, 0.4), params).speeds
        sharp = plan_speeds(path_with_phis(phis * 2.0, 0.4), params).speeds
        assert (sharp <= mild + 1e-12).all()

    def test_initial_speed_clamped(self):
        params = SpeedParams(v_min=2.0, v_max=5.0, gamma=0.1, a_max=50.0, d_max=50.0)
        profile = plan_speeds(path_with_phis([0.0] * 5, 0.5), params, initial_speed=9.0)
        assert profile.speeds[0] == 5.0
        profile = plan_speeds(path_with_phis([0.0] * 5, 0.5), params, initial_speed=-1.0)
        assert profile.speeds[0] == 0.0


def test_profile_validation():
    with pytest.raises(ValueError):
        SpeedProfile(np.array([1.0, 0.5]))  # nonzero terminal
    with pytest.raises(ValueError):
        SpeedProfile(np.array([-1.0, 0.0]))
    with pytest.raises(ValueError):
        SpeedProfile(np.array([0.0]))


def test_params_validation():
    with pytest.raises(ValueError):
        SpeedParams(v_min=0.0)
    with pytest.raises(ValueError):
        SpeedParams(v_min=3.0, v_max=2.0)
    with pytest.raises(ValueError):
        SpeedParams(gamma=0.0)
    with pytest.raises(ValueError):
        SpeedParams(a_max=-1.0)
