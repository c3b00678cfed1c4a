"""Path objective: terrain cost plus kinematic penalties.

The total cost of a path is the sum of a map term and a kinematic term.
The map term samples the cost field (bilinear interpolation) at every
pose, plus intermediate points along each step whenever the step length
exceeds half a cell, so thin obstacles cannot slip between samples; the
intermediate samples of a step are averaged into that step's
contribution.  The kinematic term applies a two-slope penalty to each
steering delta and to each per-step change of steering delta: a gentle
slope alpha inside the bound keeps paths smooth, a steep slope beta
outside the bound acts as a soft constraint wall.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .actuator_path import ActuatorPath, _rollout_arrays
from .costmap import CostMap

__all__ = [
    "KinematicConstraints",
    "CostBreakdown",
    "penalty",
    "sample_cost",
    "map_cost",
    "kinematic_cost",
    "total_cost",
]


@dataclass(frozen=True)
class KinematicConstraints:
    """Steering bounds and penalty slopes.

    phi_max bounds the per-step steering delta (rad/step) and
    phi_rate_max bounds its per-step change (rad/step^2).  The beta
    slopes must exceed the alphas so that leaving the feasible box costs
    steeply more than moving inside it.
    """

    phi_max: float = 0.15
    phi_rate_max: float = 0.05
    alpha_phi: float = 1.0
    beta_phi: float = 100.0
    alpha_rate: float = 2.0
    beta_rate: float = 200.0

    def __post_init__(self):
        if not (self.phi_max > 0 and self.phi_rate_max > 0):
            raise ValueError("phi_max and phi_rate_max must be positive")
        if not (self.beta_phi > self.alpha_phi >= 0):
            raise ValueError("beta_phi must exceed alpha_phi (both non-negative)")
        if not (self.beta_rate > self.alpha_rate >= 0):
            raise ValueError("beta_rate must exceed alpha_rate (both non-negative)")


@dataclass(frozen=True)
class CostBreakdown:
    map_cost: float
    kinematic_cost: float
    total: float


def penalty(value, bound: float, alpha: float, beta: float):
    """Two-slope even penalty: alpha*|v| inside the bound, then
    alpha*bound + beta*(|v| - bound) beyond it (continuous at |v|=bound)."""
    if bound <= 0:
        raise ValueError(f"bound must be positive, got {bound}")
    mag = np.abs(value)
    out = np.where(mag < bound, alpha * mag, alpha * bound + beta * (mag - bound))
    return float(out) if np.isscalar(value) else out


def sample_cost(cmap: CostMap, points: np.ndarray,
                out_of_map_cost: float | None = None) -> np.ndarray:
    """Bilinear cost samples at world points, shape (..., 2).

    Points beyond the map's metric footprint (cell extents, so half a
    cell past the border centers) read ``out_of_map_cost``, which
    defaults to the map's lethal threshold.  Inside the border half-cells
    the interpolation clamps to the edge centers, keeping the field
    continuous up to the physical map edge.
    """
    if out_of_map_cost is None:
        out_of_map_cost = cmap.hard_threshold
    g = cmap.geometry
    pts = np.asarray(points, dtype=np.float64)
    u = (pts[..., 0] - g.origin_x) / g.resolution
    v = (pts[..., 1] - g.origin_y) / g.resolution
    inside = (u >= -0.5) & (u <= g.width - 0.5) & (v >= -0.5) & (v <= g.height - 0.5)

    uc = np.clip(u, 0.0, g.width - 1.0)
    vc = np.clip(v, 0.0, g.height - 1.0)
    c0 = np.clip(np.floor(uc).astype(np.int64), 0, g.width - 2) if g.width > 1 else np.zeros_like(uc, dtype=np.int64)
    r0 = np.clip(np.floor(vc).astype(np.int64), 0, g.height - 2) if g.height > 1 else np.zeros_like(vc, dtype=np.int64)
    c1 = np.minimum(c0 + 1, g.width - 1)
    r1 = np.minimum(r0 + 1, g.height - 1)
    fu = uc - c0
    fv = vc - r0

    cost = cmap.cost
    v00 = cost[r0, c0]
    v01 = cost[r0, c1]
    v10 = cost[r1, c0]
    v11 = cost[r1, c1]
    interp = (v00 * (1 - fu) + v01 * fu) * (1 - fv) + (v10 * (1 - fu) + v11 * fu) * fv
    return np.where(inside, interp, out_of_map_cost)


def _map_cost_arrays(cmap: CostMap, xy: np.ndarray, drs: np.ndarray,
                     out_of_map_cost: float | None, m: int | None = None) -> float:
    if m is None:
        half_cell = cmap.geometry.resolution / 2.0
        m = max(1, math.ceil(float(drs.max()) / half_cell - 1e-12))
    if m == 1:
        return float(sample_cost(cmap, xy, out_of_map_cost).sum())
    seg = xy[1:] - xy[:-1]
    t = (np.arange(m) / m)[None, :, None]
    pts = xy[:-1, None, :] + t * seg[:, None, :]
    vals = sample_cost(cmap, pts.reshape(-1, 2), out_of_map_cost).reshape(-1, m)
    final = sample_cost(cmap, xy[-1], out_of_map_cost)
    return float(vals.mean(axis=1).sum() + final)


def map_cost(path: ActuatorPath, cmap: CostMap,
             out_of_map_cost: float | None = None) -> float:
    """Terrain cost of a path: one bilinear sample per pose, each step's
    pose sample averaged with that step's intermediate samples (spacing
    at most half a cell)."""
    xy, _ = _rollout_arrays(path.origin.x, path.origin.y, path.origin.theta,
                            path.phis, path.drs)
    return _map_cost_arrays(cmap, xy, path.drs, out_of_map_cost)


def _kinematic_cost_arrays(phis: np.ndarray, k: KinematicConstraints) -> float:
    c = penalty(phis, k.phi_max, k.alpha_phi, k.beta_phi).sum()
    if phis.size > 1:
        c += penalty(np.diff(phis), k.phi_rate_max, k.alpha_rate, k.beta_rate).sum()
    return float(c)


def kinematic_cost(path: ActuatorPath, constraints: KinematicConstraints) -> float:
    """Sum of steering-delta penalties plus, from the second step on,
    penalties on the per-step change of steering delta."""
    return _kinematic_cost_arrays(path.phis, constraints)


def total_cost(path: ActuatorPath, cmap: CostMap, constraints: KinematicConstraints,
               out_of_map_cost: float | None = None) -> CostBreakdown:
    m = map_cost(path, cmap, out_of_map_cost)
    k = kinematic_cost(path, constraints)
    return CostBreakdown(m, k, m + k)
