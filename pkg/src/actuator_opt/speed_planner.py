"""Per-point target speeds from steering, limited by acceleration.

Each step's steering delta maps linearly to a speed: v_max at zero
steering down to v_min at (or beyond) the angle gamma.  The goal point
gets speed zero.  Backward and forward passes then cap the speeds so
every consecutive pair respects the v'^2 = v^2 + 2*a*d relation over the
step length, deceleration feasibility first (walking back from the
goal), acceleration feasibility second (walking forward from the start).
The ramp into the goal dips below v_min by construction; v_min is a
floor for the steering law, not for the stopping ramp.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .actuator_path import ActuatorPath

__all__ = ["SpeedParams", "SpeedProfile", "curvature_speeds", "accel_limit", "plan_speeds"]


@dataclass(frozen=True)
class SpeedParams:
    """Speed band, full-slowdown steering angle, and acceleration limits."""

    v_min: float = 2.0
    v_max: float = 5.0
    gamma: float = 0.1
    a_max: float = 2.0
    d_max: float = 3.0

    def __post_init__(self):
        if not 0 < self.v_min <= self.v_max:
            raise ValueError("need 0 < v_min <= v_max")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.a_max <= 0 or self.d_max <= 0:
            raise ValueError("acceleration limits must be positive")


@dataclass
class SpeedProfile:
    """One speed per path pose; the final entry is exactly zero."""

    speeds: np.ndarray

    def __post_init__(self):
        self.speeds = np.asarray(self.speeds, dtype=np.float64)
        if self.speeds.ndim != 1 or self.speeds.size < 2:
            raise ValueError("a profile needs at least two entries")
        if not np.isfinite(self.speeds).all() or (self.speeds < 0).any():
            raise ValueError("speeds must be finite and non-negative")
        if self.speeds[-1] != 0.0:
            raise ValueError("terminal speed must be exactly zero")

    def __len__(self) -> int:
        return self.speeds.size


def curvature_speeds(path: ActuatorPath, params: SpeedParams) -> np.ndarray:
    """Steering-based speed per pose (pose i reads step i's steering);
    the final pose reads zero."""
    frac = np.minimum(np.abs(path.phis) / params.gamma, 1.0)
    v = params.v_min + (params.v_max - params.v_min) * (1.0 - frac)
    return np.concatenate([v, [0.0]])


def accel_limit(speeds: np.ndarray, dr, params: SpeedParams) -> np.ndarray:
    """Cap speeds so consecutive pairs respect the acceleration limits.

    Backward pass from the terminal entry enforces
    v[i] <= sqrt(v[i+1]^2 + 2*d_max*dr), forward pass from the first
    entry enforces v[i+1] <= sqrt(v[i]^2 + 2*a_max*dr).  ``dr`` may be a
    scalar or one length per step.  Output is pointwise <= input.
    """
    v = np.asarray(speeds, dtype=np.float64).copy()
    if v.size < 2:
        return v
    drs = np.broadcast_to(np.asarray(dr, dtype=np.float64), (v.size - 1,))
    if (drs <= 0).any():
        raise ValueError("step lengths must be positive")
    two_d = 2.0 * params.d_max * drs
    two_a = 2.0 * params.a_max * drs
    for i in range(v.size - 2, -1, -1):
        v[i] = min(v[i], math.sqrt(v[i + 1] ** 2 + two_d[i]))
    for i in range(v.size - 1):
        v[i + 1] = min(v[i + 1], math.sqrt(v[i] ** 2 + two_a[i]))
    return v


def plan_speeds(path: ActuatorPath, params: SpeedParams | None = None,
                initial_speed: float | None = None) -> SpeedProfile:
    """Steering-based speeds followed by both acceleration passes.

    When ``initial_speed`` is given (the vehicle's current speed) it
    seeds the first entry, clamped into [0, v_max]; otherwise the first
    entry is the steering-based value of step 0.
    """
    params = params or SpeedParams()
    v = curvature_speeds(path, params)
    if initial_speed is not None:
        v[0] = min(max(float(initial_speed), 0.0), params.v_max)
    return SpeedProfile(accel_limit(v, path.drs, params))
