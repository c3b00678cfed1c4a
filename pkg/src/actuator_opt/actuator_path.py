"""World-space and actuator-space path representations and transforms.

A world path is a list of planar poses (x, y, theta).  An actuator path
is the same geometry expressed as control inputs: an origin pose plus a
list of steps (phi, dr), where phi is the heading change applied over
the step and dr is the distance traveled.  The forward model integrates
steps from the origin:

    theta' = theta + phi
    x'     = x + cos(theta) * dr
    y'     = y + sin(theta) * dr

so each translation uses the heading *before* that step's phi is
applied.  The inverse model takes per-step heading differences (wrapped
into (-pi, pi]) and chord lengths.  Headings absent from a position
sequence are back-calculated from successive position differences, the
final heading copying the one before it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .base_planner import CellPath
from .costmap import GridGeometry

__all__ = [
    "DegenerateSegmentError",
    "wrap_angle",
    "wrap_angles",
    "WorldPose",
    "WorldPath",
    "ActuatorStep",
    "ActuatorPath",
    "headings_from_positions",
    "world_path_to_dict",
    "world_path_from_dict",
    "actuator_path_to_dict",
    "actuator_path_from_dict",
    "world_to_actuator",
    "actuator_to_world",
    "resample_cell_path",
]

_TAU = 2.0 * math.pi


class DegenerateSegmentError(ValueError):
    """Consecutive path points coincide (zero-length step)."""


def wrap_angle(theta: float) -> float:
    """Normalize an angle into (-pi, pi]; exact identity when already there."""
    if -math.pi < theta <= math.pi:
        return theta
    w = (theta + math.pi) % _TAU - math.pi
    if w <= -math.pi:
        w += _TAU
    return w


def wrap_angles(thetas: np.ndarray) -> np.ndarray:
    """Vectorized :func:`wrap_angle`."""
    thetas = np.asarray(thetas, dtype=np.float64)
    w = np.mod(thetas + np.pi, _TAU) - np.pi
    w = np.where(w <= -np.pi, w + _TAU, w)
    return np.where((thetas > -np.pi) & (thetas <= np.pi), thetas, w)


@dataclass(frozen=True)
class WorldPose:
    """Planar pose; theta is normalized into (-pi, pi] on construction."""

    x: float
    y: float
    theta: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.theta)):
            raise ValueError(f"pose values must be finite, got {(self.x, self.y, self.theta)}")
        object.__setattr__(self, "theta", wrap_angle(self.theta))


@dataclass
class WorldPath:
    """Sequence of at least two world poses with positive step lengths.

    Positions are stored as an (n+1, 2) array and headings as an (n+1,)
    array for cheap numeric work; ``poses()`` materializes WorldPose
    objects on demand.
    """

    xy: np.ndarray
    thetas: np.ndarray

    def __post_init__(self):
        self.xy = np.asarray(self.xy, dtype=np.float64)
        self.thetas = wrap_angles(np.asarray(self.thetas, dtype=np.float64))
        if self.xy.ndim != 2 or self.xy.shape[1] != 2 or self.xy.shape[0] < 2:
            raise ValueError(f"expected an (n>=2, 2) position array, got shape {self.xy.shape}")
        if self.thetas.shape != (self.xy.shape[0],):
            raise ValueError("one heading per pose is required")
        if not (np.isfinite(self.xy).all() and np.isfinite(self.thetas).all()):
            raise ValueError("path values must be finite")
        steps = np.hypot(*np.diff(self.xy, axis=0).T)
        if (steps == 0).any():
            raise DegenerateSegmentError("consecutive poses coincide")

    @classmethod
    def from_poses(cls, poses: Sequence[WorldPose]) -> "WorldPath":
        xy = np.array([(p.x, p.y) for p in poses], dtype=np.float64)
        thetas = np.array([p.theta for p in poses], dtype=np.float64)
        return cls(xy, thetas)

    def poses(self) -> list[WorldPose]:
        return [WorldPose(x, y, t) for (x, y), t in zip(self.xy, self.thetas)]

    def pose(self, i: int) -> WorldPose:
        return WorldPose(self.xy[i, 0], self.xy[i, 1], self.thetas[i])

    def length(self) -> float:
        return float(np.hypot(*np.diff(self.xy, axis=0).T).sum())

    def __len__(self) -> int:
        return self.xy.shape[0]


class ActuatorStep(NamedTuple):
    phi: float
    dr: float


@dataclass
class ActuatorPath:
    """Origin pose plus per-step (phi, dr) control inputs.

    Step lengths are nominally a single shared dr (paths are built by
    constant-arc-length resampling); they are stored per step because
    damped perturbations during optimization bend chords by tiny
    second-order amounts that a lone scalar could not represent.
    """

    origin: WorldPose
    phis: np.ndarray
    drs: np.ndarray

    def __post_init__(self):
        self.phis = np.atleast_1d(np.asarray(self.phis, dtype=np.float64))
        self.drs = np.atleast_1d(np.asarray(self.drs, dtype=np.float64))
        if self.phis.ndim != 1 or self.phis.size < 1:
            raise ValueError("at least one step is required")
        if self.drs.shape != self.phis.shape:
            raise ValueError("phis and drs must have matching lengths")
        if not np.isfinite(self.phis).all():
            raise ValueError("phi values must be finite")
        if not ((self.drs > 0).all() and np.isfinite(self.drs).all()):
            raise ValueError("step lengths must be positive and finite")

    @classmethod
    def with_constant_dr(cls, origin: WorldPose, phis, dr: float) -> "ActuatorPath":
        phis = np.atleast_1d(np.asarray(phis, dtype=np.float64))
        return cls(origin, phis, np.full(phis.shape, float(dr)))

    @property
    def n_steps(self) -> int:
        return self.phis.size

    @property
    def dr(self) -> float:
        """Nominal shared step length (exact when truly constant, else
        the mean over steps)."""
        first = float(self.drs[0])
        if (self.drs == first).all():
            return first
        return float(self.drs.mean())

    @property
    def steps(self) -> list[ActuatorStep]:
        return [ActuatorStep(float(p), float(d)) for p, d in zip(self.phis, self.drs)]


# ---------------------------------------------------------------------------
# Transforms
# ---------------------------------------------------------------------------

def world_path_to_dict(path: WorldPath) -> dict:
    """JSON form of a world path: ``{"poses": [[x, y, theta], ...]}``."""
    return {"poses": [[float(x), float(y), float(t)]
                      for (x, y), t in zip(path.xy, path.thetas)]}


def world_path_from_dict(data: dict) -> WorldPath:
    poses = np.asarray(data["poses"], dtype=np.float64)
    return WorldPath(poses[:, :2], poses[:, 2])


def actuator_path_to_dict(path: ActuatorPath) -> dict:
    """JSON form of an actuator path:
    ``{"origin": [x, y, theta], "dr": v, "phi": [...]}``.

    The scalar ``dr`` is the nominal shared step length; per-step
    variation below the serialization's purpose (solver-internal
    second-order bending) is not preserved.
    """
    return {
        "origin": [path.origin.x, path.origin.y, path.origin.theta],
        "dr": path.dr,
        "phi": [float(p) for p in path.phis],
    }


def actuator_path_from_dict(data: dict) -> ActuatorPath:
    x, y, theta = data["origin"]
    return ActuatorPath.with_constant_dr(
        WorldPose(x, y, theta), np.asarray(data["phi"], dtype=np.float64),
        float(data["dr"]))


def headings_from_positions(xy: np.ndarray) -> np.ndarray:
    """Back-calculate headings from a position sequence.

    heading[i] = atan2 of the segment i -> i+1; the final entry copies
    the previous heading since the last point has no outgoing segment.
    """
    xy = np.asarray(xy, dtype=np.float64)
    if xy.ndim != 2 or xy.shape[1] != 2 or xy.shape[0] < 2:
        raise ValueError(f"expected an (n>=2, 2) position array, got shape {xy.shape}")
    d = np.diff(xy, axis=0)
    if (np.hypot(d[:, 0], d[:, 1]) == 0).any():
        raise DegenerateSegmentError("consecutive points coincide")
    headings = np.arctan2(d[:, 1], d[:, 0])
    return np.concatenate([headings, headings[-1:]])


def world_to_actuator(path: WorldPath) -> ActuatorPath:
    """Inverse model: per-step heading deltas (wrapped into (-pi, pi])
    and chord lengths, with the first pose as the origin."""
    phis = wrap_angles(np.diff(path.thetas))
    d = np.diff(path.xy, axis=0)
    drs = np.hypot(d[:, 0], d[:, 1])
    return ActuatorPath(path.pose(0), phis, drs)


def _rollout_arrays(x0: float, y0: float, theta0: float,
                    phis: np.ndarray, drs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Integrate the forward model; returns ((n+1, 2) positions,
    (n+1,) unwrapped headings)."""
    n = phis.size
    thetas = np.empty(n + 1)
    thetas[0] = theta0
    np.cumsum(phis, out=thetas[1:])
    thetas[1:] += theta0
    xy = np.empty((n + 1, 2))
    xy[0, 0] = x0
    xy[0, 1] = y0
    np.cumsum(np.cos(thetas[:-1]) * drs, out=xy[1:, 0])
    np.cumsum(np.sin(thetas[:-1]) * drs, out=xy[1:, 1])
    xy[1:, 0] += x0
    xy[1:, 1] += y0
    return xy, thetas


def actuator_to_world(path: ActuatorPath) -> WorldPath:
    """Forward model: integrate steps from the origin pose."""
    xy, thetas = _rollout_arrays(
        path.origin.x, path.origin.y, path.origin.theta, path.phis, path.drs
    )
    return WorldPath(xy, wrap_angles(thetas))


def resample_cell_path(path: CellPath, geometry: GridGeometry, dr: float) -> WorldPath:
    """Convert grid cells to a world path sampled at constant arc length.

    Cell centers form a polyline which is walked at a uniform spacing as
    close to ``dr`` as possible while landing exactly on the polyline
    endpoint: the step count is ceil(length / dr), so the realized
    spacing is length / count <= dr.  Headings come from
    :func:`headings_from_positions`.
    """
    if dr <= 0:
        raise ValueError(f"dr must be positive, got {dr}")
    pts = np.array([geometry.cell_center(c, r) for c, r in path.cells], dtype=np.float64)
    if pts.shape[0] >= 2:
        keep = np.ones(pts.shape[0], dtype=bool)
        keep[1:] = (np.diff(pts, axis=0) != 0).any(axis=1)
        pts = pts[keep]
    if pts.shape[0] < 2:
        raise DegenerateSegmentError("cell path collapses to a single point")
    seg_lengths = np.hypot(*np.diff(pts, axis=0).T)
    total = float(seg_lengths.sum())
    n = max(1, math.ceil(total / dr - 1e-9))
    stations = np.linspace(0.0, total, n + 1)
    cum = np.concatenate([[0.0], np.cumsum(seg_lengths)])
    xy = np.column_stack([
        np.interp(stations, cum, pts[:, 0]),
        np.interp(stations, cum, pts[:, 1]),
    ])
    return WorldPath(xy, headings_from_positions(xy))
