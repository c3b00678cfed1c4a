"""Seed path search: 8-connected A* over the cost map.

The search pays for distance and for terrain: stepping into a cell costs
step_length * (1 + traversal_weight * cell_cost), so the Euclidean
heuristic stays admissible.  Cells at or above the lethal threshold are
removed from the graph entirely, and a diagonal move may not squeeze
between two diagonally touching lethal cells.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .costmap import CostMap, GridGeometry

__all__ = [
    "PlanningError",
    "InvalidEndpointError",
    "NoPathError",
    "CellIndex",
    "CellPath",
    "clip_goal",
    "astar",
    "plan_base_path",
]


class PlanningError(Exception):
    """Base class for path search failures."""


class InvalidEndpointError(PlanningError):
    """Start or goal cell is outside the map or lethal."""


class NoPathError(PlanningError):
    """Goal is unreachable from the start."""


class CellIndex(NamedTuple):
    col: int
    row: int


@dataclass
class CellPath:
    """Ordered run of 8-adjacent cells."""

    cells: list[CellIndex]

    def __post_init__(self):
        self.cells = [CellIndex(int(c), int(r)) for c, r in self.cells]
        if not self.cells:
            raise ValueError("cell path must contain at least one cell")
        for a, b in zip(self.cells, self.cells[1:]):
            if max(abs(a.col - b.col), abs(a.row - b.row)) != 1:
                raise ValueError(f"cells {a} and {b} are not 8-adjacent")

    def __len__(self) -> int:
        return len(self.cells)


def clip_goal(goal: tuple[float, float], geometry: GridGeometry) -> CellIndex:
    """Cell containing the goal, or the cell containing the closest
    in-map point when the goal lies beyond the map edge."""
    col, row = geometry.cell_of(goal[0], goal[1])
    return CellIndex(
        min(max(col, 0), geometry.width - 1),
        min(max(row, 0), geometry.height - 1),
    )


_SQRT2 = math.sqrt(2.0)
# (dcol, drow, unit step length); straight moves before diagonals.
_MOVES = (
    (1, 0, 1.0), (-1, 0, 1.0), (0, 1, 1.0), (0, -1, 1.0),
    (1, 1, _SQRT2), (1, -1, _SQRT2), (-1, 1, _SQRT2), (-1, -1, _SQRT2),
)


def _check_endpoint(name: str, cell: CellIndex, geometry: GridGeometry, lethal: np.ndarray):
    if not geometry.contains_cell(cell.col, cell.row):
        raise InvalidEndpointError(f"{name} cell {tuple(cell)} is outside the map")
    if lethal[cell.row, cell.col]:
        raise InvalidEndpointError(f"{name} cell {tuple(cell)} is lethal")


def astar(cmap: CostMap, start: CellIndex, goal: CellIndex,
          traversal_weight: float = 1.0) -> CellPath:
    """Minimum-cost 8-connected path from start to goal.

    Edge cost into a destination cell is
    ``step_meters * (1 + traversal_weight * cost[dest])``; the heuristic
    is the plain Euclidean metric distance.  Ties in f-score expand in
    lexicographic (row, col) order, so results are reproducible.

    Raises:
        InvalidEndpointError: either endpoint is off-map or lethal.
        NoPathError: the goal is unreachable.
    """
    start = CellIndex(*start)
    goal = CellIndex(*goal)
    geometry = cmap.geometry
    cost = cmap.cost
    lethal = cmap.lethal_mask()
    _check_endpoint("start", start, geometry, lethal)
    _check_endpoint("goal", goal, geometry, lethal)
    if start == goal:
        return CellPath([start])

    res = geometry.resolution
    height, width = cost.shape
    g = np.full((height, width), np.inf)
    parent = np.full((height, width), -1, dtype=np.int64)
    closed = np.zeros((height, width), dtype=bool)

    gc, gr = goal.col, goal.row
    g[start.row, start.col] = 0.0
    h0 = res * math.hypot(start.col - gc, start.row - gr)
    heap: list[tuple[float, int, int]] = [(h0, start.row, start.col)]

    while heap:
        _, r, c = heapq.heappop(heap)
        if closed[r, c]:
            continue
        closed[r, c] = True
        if r == gr and c == gc:
            return CellPath(_reconstruct(parent, start, goal, width))
        g_here = g[r, c]
        for dc, dr, step in _MOVES:
            nc = c + dc
            nr = r + dr
            if not (0 <= nc < width and 0 <= nr < height):
                continue
            if lethal[nr, nc] or closed[nr, nc]:
                continue
            if dc and dr and lethal[r, nc] and lethal[nr, c]:
                continue
            ng = g_here + step * res * (1.0 + traversal_weight * cost[nr, nc])
            if ng < g[nr, nc]:
                g[nr, nc] = ng
                parent[nr, nc] = r * width + c
                f = ng + res * math.hypot(nc - gc, nr - gr)
                heapq.heappush(heap, (f, nr, nc))

    raise NoPathError(f"no path from {tuple(start)} to {tuple(goal)}")


def _reconstruct(parent: np.ndarray, start: CellIndex, goal: CellIndex, width: int):
    cells = [goal]
    r, c = goal.row, goal.col
    while (c, r) != (start.col, start.row):
        packed = parent[r, c]
        r, c = divmod(int(packed), width)
        cells.append(CellIndex(c, r))
    cells.reverse()
    return cells


def plan_base_path(cmap: CostMap, start_pose, goal: tuple[float, float],
                   traversal_weight: float = 1.0) -> CellPath:
    """Plan from a world-frame start pose toward a world goal point.

    The goal is clipped to the closest in-map cell when it lies beyond
    the map; the start must lie inside the map.
    """
    geometry = cmap.geometry
    col, row = geometry.cell_of(start_pose.x, start_pose.y)
    if not geometry.contains_cell(col, row):
        raise InvalidEndpointError(
            f"start pose ({start_pose.x}, {start_pose.y}) is outside the map"
        )
    return astar(cmap, CellIndex(col, row), clip_goal(goal, geometry), traversal_weight)
