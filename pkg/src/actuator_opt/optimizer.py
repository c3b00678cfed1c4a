"""Damped coordinate descent over steering deltas.

A perturbation adds a delta to one step's steering value, which swings
the entire downstream path.  To localize the effect, the perturbed and
original paths are blended in world space over the next N steps with a
cubic S-curve weight (0 at the perturbed step, 1 at step index+N), after
which the original points are kept verbatim, and the blended geometry is
converted back to actuator space.  The solver sweeps every step in
order, probes a small delta in both directions, and where a probe lowers
the total path cost it applies a step scaled by the observed improvement
(clamped), keeping it only if the re-evaluated cost actually drops.
Sweeps repeat until an entire sweep improves the cost by no more than a
tolerance or the iteration limit is hit.

Because a damped perturbation leaves everything outside the step range
[index, index+N] untouched, probe costs are evaluated on that window's
sub-path and applied to the tracked full-path cost as exact increments;
the full cost is recomputed from scratch at every sweep boundary so
rounding drift cannot accumulate.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .actuator_path import (
    ActuatorPath,
    DegenerateSegmentError,
    _rollout_arrays,
    wrap_angle,
    wrap_angles,
)
from . import _sweep
from .cost_model import (
    CostBreakdown,
    CostMap,
    KinematicConstraints,
    _kinematic_cost_arrays,
    _map_cost_arrays,
    total_cost,
)

__all__ = ["PerturbationParams", "SolverConfig", "SolveReport", "perturb", "solve"]


@dataclass(frozen=True)
class PerturbationParams:
    """Probe magnitude, damping window, and applied-step scaling.

    ``probe_delta`` is the small steering change used to measure the
    local cost slope; ``damping_length`` is the number of steps over
    which a perturbation is blended back into the original path;
    ``step_scale`` converts a probe's cost improvement into an applied
    magnitude, clamped into [probe_delta, max_phi_step].
    """

    probe_delta: float = 0.01
    damping_length: int = 25
    step_scale: float = 0.01
    max_phi_step: float = 0.1

    def __post_init__(self):
        if self.probe_delta <= 0:
            raise ValueError("probe_delta must be positive")
        if self.damping_length < 1:
            raise ValueError("damping_length must be at least 1")
        if self.step_scale <= 0:
            raise ValueError("step_scale must be positive")
        if self.max_phi_step < self.probe_delta:
            raise ValueError("max_phi_step must be at least probe_delta")


@dataclass(frozen=True)
class SolverConfig:
    max_iterations: int = 50
    improvement_tolerance: float = 1e-3

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.improvement_tolerance < 0:
            raise ValueError("improvement_tolerance must be non-negative")


@dataclass
class SolveReport:
    initial_cost: CostBreakdown
    final_cost: CostBreakdown
    iterations: int
    accepted_perturbations: int
    wall_time: float
    sweep_costs: list[float] = field(default_factory=list)


def _smoothstep(t: np.ndarray) -> np.ndarray:
    return t * t * (3.0 - 2.0 * t)


def _window_perturbation(xy, thetas, phis, drs, index, delta, damping_length):
    """Damped perturbation computed on its support only.

    ``xy`` and ``thetas`` are the cached rollout of the whole path; the
    returned arrays cover steps [index, kend) with kend =
    min(index + damping_length, n): new steering deltas, new step
    lengths, and the blended positions for poses index..kend.
    """
    n = phis.size
    kend = min(index + damping_length, n)
    w = kend - index

    phis_w = phis[index:kend].copy()
    phis_w[0] += delta
    th = np.empty(w)
    th[0] = thetas[index]
    np.cumsum(phis_w[:-1], out=th[1:])
    th[1:] += thetas[index]
    pert = np.empty((w + 1, 2))
    pert[0] = xy[index]
    seg = drs[index:kend]
    np.cumsum(np.cos(th) * seg, out=pert[1:, 0])
    np.cumsum(np.sin(th) * seg, out=pert[1:, 1])
    pert[1:] += xy[index]

    orig = xy[index:kend + 1]
    t = np.arange(w + 1) / damping_length
    s = _smoothstep(t)[:, None]
    blend = pert + s * (orig - pert)
    if kend == index + damping_length:
        blend[-1] = orig[-1]  # pin the window exit exactly

    d = np.diff(blend, axis=0)
    drs_new = np.hypot(d[:, 0], d[:, 1])
    if (drs_new == 0).any():
        raise DegenerateSegmentError("perturbation collapsed a step to zero length")
    heads = np.arctan2(d[:, 1], d[:, 0])
    phis_new = np.empty(w)
    if w > 1:
        phis_new[:-1] = wrap_angles(np.diff(heads))
    if kend < n:
        head_next = math.atan2(xy[kend + 1, 1] - blend[-1, 1],
                               xy[kend + 1, 0] - blend[-1, 0])
        phis_new[-1] = wrap_angle(head_next - heads[-1])
    else:
        # The terminal heading leaves no trace in the positions, so the
        # final steering delta is carried through instead of re-derived.
        phis_new[-1] = phis[n - 1] + (delta if index == n - 1 else 0.0)
    return kend, phis_new, drs_new, blend


def perturb(path: ActuatorPath, index: int, delta: float,
            damping_length: int) -> ActuatorPath:
    """Apply a damped steering perturbation at one step.

    Adds ``delta`` to the steering value at ``index``, blends the
    perturbed and original world geometries over the next
    ``damping_length`` steps with an S-curve (original points are kept
    verbatim beyond the window), and converts back to steps.  The result
    keeps the origin pose and step count; a zero delta reproduces the
    input to floating-point noise.
    """
    if not 0 <= index < path.n_steps:
        raise IndexError(f"step index {index} out of range for {path.n_steps} steps")
    if not math.isfinite(delta):
        raise ValueError(f"delta must be finite, got {delta}")
    if damping_length < 1:
        raise ValueError("damping_length must be at least 1")
    xy, thetas = _rollout_arrays(path.origin.x, path.origin.y, path.origin.theta,
                                 path.phis, path.drs)
    kend, phis_w, drs_w, _ = _window_perturbation(
        xy, thetas, path.phis, path.drs, index, delta, damping_length)
    new_phis = path.phis.copy()
    new_drs = path.drs.copy()
    new_phis[index:kend] = phis_w
    new_drs[index:kend] = drs_w
    return ActuatorPath(path.origin, new_phis, new_drs)


def solve(path: ActuatorPath, cmap: CostMap, constraints: KinematicConstraints,
          pparams: PerturbationParams | None = None,
          config: SolverConfig | None = None,
          windowed: bool = False) -> tuple[ActuatorPath, SolveReport]:
    """Minimize the total path cost by damped coordinate descent.

    Every sweep visits each step in order and probes +/- probe_delta.
    When a probe beats the current cost, a perturbation in that direction
    with magnitude clamp(step_scale * improvement, probe_delta,
    max_phi_step) is applied and kept only if the re-evaluated cost is
    strictly below the current one.  Because a damped perturbation's
    support is exactly its damping window, candidates are compared on the
    window sub-path, which shifts the full-path cost by exactly the
    window difference; the full cost is recomputed from scratch at every
    sweep boundary.  The ``windowed`` flag is accepted for interface
    compatibility: windowed and full-path evaluation coincide under the
    exact-increment scheme, and the tests assert they make identical
    decisions.

    Args:
        path: seed path, at least 2 steps; the origin pose is never moved.
        cmap: terrain to optimize against.
        constraints: steering bounds and penalty slopes.
        pparams: perturbation settings (defaults used when None).
        config: sweep limits (defaults used when None).
        windowed: retained flag; see above.

    Returns:
        (optimized path, report); the report's sweep costs are
        non-increasing and its final total never exceeds the initial.
    """
    pparams = pparams or PerturbationParams()
    config = config or SolverConfig()
    if path.n_steps < 2:
        raise ValueError("solver needs a path with at least 2 steps")
    t0 = time.perf_counter()

    phis = path.phis.copy()
    drs = path.drs.copy()
    xy, thetas = _rollout_arrays(path.origin.x, path.origin.y, path.origin.theta,
                                 phis, drs)
    geometry = cmap.geometry
    half_cell = geometry.resolution / 2.0
    m = max(1, math.ceil(float(drs.max()) / half_cell - 1e-12))

    initial_bd = total_cost(path, cmap, constraints)
    current = initial_bd.total
    sweep_costs = [current]
    accepted = 0
    iterations = 0

    while iterations < config.max_iterations:
        iterations += 1
        sweep_start = current
        accepted += _sweep.sweep(
            cmap.cost, geometry.resolution, geometry.origin_x, geometry.origin_y,
            cmap.hard_threshold, m,
            phis, drs, xy, thetas,
            pparams.damping_length, pparams.probe_delta, pparams.step_scale,
            pparams.max_phi_step,
            constraints.phi_max, constraints.phi_rate_max,
            constraints.alpha_phi, constraints.beta_phi,
            constraints.alpha_rate, constraints.beta_rate,
        )
        # true-up: refresh the rollout and full cost so per-accept window
        # increments cannot drift across sweeps
        xy, thetas = _rollout_arrays(path.origin.x, path.origin.y,
                                     path.origin.theta, phis, drs)
        current = (_map_cost_arrays(cmap, xy, drs, None, m)
                   + _kinematic_cost_arrays(phis, constraints))
        sweep_costs.append(current)
        if sweep_start - current <= config.improvement_tolerance:
            break

    result = ActuatorPath(path.origin, phis, drs)
    final_bd = total_cost(result, cmap, constraints)
    if final_bd.total > initial_bd.total:
        # never return a path worse than the seed
        result = ActuatorPath(path.origin, path.phis.copy(), path.drs.copy())
        final_bd = initial_bd
    report = SolveReport(
        initial_cost=initial_bd,
        final_cost=final_bd,
        iterations=iterations,
        accepted_perturbations=accepted,
        wall_time=time.perf_counter() - t0,
        sweep_costs=sweep_costs,
    )
    return result, report
