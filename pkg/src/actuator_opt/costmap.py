"""Cost fields from binary obstacle grids.

Two obstacle layers are kept apart: hard obstacles (trees, rocks) must
never be driven through, soft obstacles (bushes, tall grass) are
traversable but penalized.  Each layer is expanded by the robot radius,
filled with an interior distance gradient that grows toward the region
center, and surrounded by a linearly decaying repulsive halo.  The final
cost map is the per-cell sum of both sub-maps, which keeps both the
strong interior gradients and the continuity of the halos.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

__all__ = [
    "GridFormatError",
    "GridGeometry",
    "OccupancyGrid",
    "CostMap",
    "CostMapParams",
    "load_obstacle_grid",
    "dump_costmap",
    "dilate",
    "interior_distance",
    "halo_field",
    "build_costmap",
]


class GridFormatError(ValueError):
    """Malformed obstacle grid or cost map text."""


@dataclass(frozen=True)
class GridGeometry:
    """Metric layout of a grid.

    ``origin_x``/``origin_y`` are the world coordinates of the center of
    cell (col=0, row=0).  Row 0 is the minimum-y row; columns grow with x.
    """

    width: int
    height: int
    resolution: float
    origin_x: float = 0.0
    origin_y: float = 0.0

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"grid dimensions must be positive, got {self.width}x{self.height}")
        if not (self.resolution > 0.0 and math.isfinite(self.resolution)):
            raise ValueError(f"resolution must be positive and finite, got {self.resolution}")
        if not (math.isfinite(self.origin_x) and math.isfinite(self.origin_y)):
            raise ValueError("grid origin must be finite")

    def cell_center(self, col: int, row: int) -> tuple[float, float]:
        return (self.origin_x + col * self.resolution, self.origin_y + row * self.resolution)

    def cell_of(self, x: float, y: float) -> tuple[int, int]:
        """Cell containing a world point; may be out of range for points off the map."""
        col = math.floor((x - self.origin_x) / self.resolution + 0.5)
        row = math.floor((y - self.origin_y) / self.resolution + 0.5)
        return (col, row)

    def contains_cell(self, col: int, row: int) -> bool:
        return 0 <= col < self.width and 0 <= row < self.height


def _as_layer(values, geometry: GridGeometry, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=bool)
    if arr.shape != (geometry.height, geometry.width):
        raise ValueError(
            f"{name} layer shape {arr.shape} does not match geometry "
            f"({geometry.height}, {geometry.width})"
        )
    return arr


@dataclass
class OccupancyGrid:
    """Binary hard/soft obstacle layers on a shared metric grid.

    A cell may be flagged in both layers; the hard layer dominates once
    the cost map is built because its costs are far larger.
    """

    geometry: GridGeometry
    hard: np.ndarray
    soft: np.ndarray

    def __post_init__(self):
        self.hard = _as_layer(self.hard, self.geometry, "hard")
        self.soft = _as_layer(self.soft, self.geometry, "soft")


@dataclass
class CostMap:
    """Non-negative scalar cost field; cells at or above ``hard_threshold``
    count as lethal for collision checks."""

    geometry: GridGeometry
    cost: np.ndarray
    hard_threshold: float

    def __post_init__(self):
        cost = np.asarray(self.cost, dtype=np.float64)
        if cost.shape != (self.geometry.height, self.geometry.width):
            raise ValueError(
                f"cost shape {cost.shape} does not match geometry "
                f"({self.geometry.height}, {self.geometry.width})"
            )
        if not np.isfinite(cost).all() or (cost < 0).any():
            raise ValueError("cost values must be finite and non-negative")
        self.cost = cost

    def lethal_mask(self) -> np.ndarray:
        return self.cost >= self.hard_threshold


@dataclass(frozen=True)
class CostMapParams:
    """Cost magnitudes for the two obstacle layers.

    Hard costs must dominate every kinematic penalty so the solver never
    trades a collision for smoothness; soft costs stay small enough to be
    escapable.  Distance gains are per meter of obstacle interior depth,
    halo gains scale the 1-at-boundary / 0-at-``halo_radius`` decay band.
    """

    robot_radius: float = 0.5
    halo_radius: float = 2.0
    hard_base: float = 1000.0
    hard_distance_gain: float = 500.0
    soft_base: float = 50.0
    soft_distance_gain: float = 25.0
    halo_gain_hard: float = 100.0
    halo_gain_soft: float = 10.0

    def __post_init__(self):
        if self.robot_radius < 0 or self.halo_radius < 0:
            raise ValueError("radii must be non-negative")
        if not self.hard_base > self.soft_base >= 0:
            raise ValueError("hard_base must exceed soft_base (both non-negative)")
        gains = (self.hard_distance_gain, self.soft_distance_gain,
                 self.halo_gain_hard, self.halo_gain_soft)
        if any(g < 0 for g in gains):
            raise ValueError("gains must be non-negative")


# ---------------------------------------------------------------------------
# Grid text format
# ---------------------------------------------------------------------------

_CELL_FREE = ord(".")
_CELL_SOFT = ord("s")
_CELL_HARD = ord("h")


def load_obstacle_grid(stream, expected_geometry: GridGeometry | None = None) -> OccupancyGrid:
    """Parse an ASCII obstacle grid.

    Format: a header line ``grid <width> <height> <resolution_m>
    <origin_x_m> <origin_y_m>`` followed by ``height`` rows of ``width``
    characters from ``.`` (free), ``s`` (soft), ``h`` (hard).  The first
    data row is row 0, the minimum-y row.  Lines starting with ``#`` and
    blank lines are ignored.

    Raises:
        GridFormatError: malformed header, wrong row length or count, or
            an unknown cell character (the message names line/column).
    """
    text = stream.read()
    if isinstance(text, bytes):
        text = text.decode("utf-8")

    geometry: GridGeometry | None = None
    hard: np.ndarray | None = None
    soft: np.ndarray | None = None
    row = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if geometry is None:
            tokens = line.split()
            if len(tokens) != 6 or tokens[0] != "grid":
                raise GridFormatError(
                    f"line {lineno}: expected header 'grid <width> <height> "
                    f"<resolution> <origin_x> <origin_y>', got {line!r}"
                )
            try:
                width, height = int(tokens[1]), int(tokens[2])
                res, ox, oy = (float(t) for t in tokens[3:6])
            except ValueError as exc:
                raise GridFormatError(f"line {lineno}: bad header value: {exc}") from None
            try:
                geometry = GridGeometry(width, height, res, ox, oy)
            except ValueError as exc:
                raise GridFormatError(f"line {lineno}: {exc}") from None
            hard = np.zeros((height, width), dtype=bool)
            soft = np.zeros((height, width), dtype=bool)
            continue
        if row >= geometry.height:
            raise GridFormatError(f"line {lineno}: more than {geometry.height} data rows")
        if len(line) != geometry.width:
            raise GridFormatError(
                f"line {lineno}: row has {len(line)} cells, expected {geometry.width}"
            )
        try:
            codes = np.frombuffer(line.encode("ascii"), dtype=np.uint8)
        except UnicodeEncodeError:
            codes = None
        if codes is None or not np.isin(codes, (_CELL_FREE, _CELL_SOFT, _CELL_HARD)).all():
            if codes is None:
                col = next(i for i, ch in enumerate(line) if ord(ch) > 127)
            else:
                col = int(np.nonzero(~np.isin(codes, (_CELL_FREE, _CELL_SOFT, _CELL_HARD)))[0][0])
            raise GridFormatError(
                f"line {lineno}, column {col + 1}: unknown cell character {line[col]!r}"
            )
        hard[row] = codes == _CELL_HARD
        soft[row] = codes == _CELL_SOFT
        row += 1

    if geometry is None:
        raise GridFormatError("empty grid: missing header line")
    if row != geometry.height:
        raise GridFormatError(f"expected {geometry.height} data rows, got {row}")
    if expected_geometry is not None and geometry != expected_geometry:
        raise GridFormatError(f"grid geometry {geometry} does not match expected {expected_geometry}")
    return OccupancyGrid(geometry, hard, soft)


def dump_costmap(cmap: CostMap, stream) -> None:
    """Write a cost map as text: a ``costmap`` header in the obstacle-grid
    layout followed by one space-separated row of values per grid row."""
    g = cmap.geometry
    stream.write(
        f"costmap {g.width} {g.height} {g.resolution!r} {g.origin_x!r} {g.origin_y!r}\n"
    )
    for row in cmap.cost:
        stream.write(" ".join(repr(float(v)) for v in row))
        stream.write("\n")


# ---------------------------------------------------------------------------
# Field construction
# ---------------------------------------------------------------------------

def dilate(layer: np.ndarray, radius: float, geometry: GridGeometry) -> np.ndarray:
    """Expand set cells by a metric radius with a Euclidean disk element.

    A cell is set in the output iff some input set cell lies within
    ``radius`` meters, center to center.  Radius 0 returns a copy.
    """
    if radius < 0:
        raise ValueError(f"dilation radius must be non-negative, got {radius}")
    layer = np.asarray(layer, dtype=bool)
    if radius == 0 or not layer.any():
        return layer.copy()
    dist = ndimage.distance_transform_edt(~layer)
    return dist * geometry.resolution <= radius


def interior_distance(layer: np.ndarray, geometry: GridGeometry) -> np.ndarray:
    """Distance (meters) from each set cell to the nearest unset cell.

    Unset cells are 0.  Off-grid cells count as unset, so regions touching
    the border still carry a finite interior distance.
    """
    layer = np.asarray(layer, dtype=bool)
    if not layer.any():
        return np.zeros(layer.shape, dtype=np.float64)
    padded = np.pad(layer, 1, constant_values=False)
    dist = ndimage.distance_transform_edt(padded)[1:-1, 1:-1]
    return dist * geometry.resolution


def halo_field(layer: np.ndarray, halo_radius: float, geometry: GridGeometry) -> np.ndarray:
    """Linearly decaying repulsion band around set cells.

    Set cells read 1.  An unset cell at metric distance d from the nearest
    set cell reads 1 - d/halo_radius, clipped at 0, so the band reaches
    exactly 0 at ``halo_radius``.
    """
    if halo_radius < 0:
        raise ValueError(f"halo radius must be non-negative, got {halo_radius}")
    layer = np.asarray(layer, dtype=bool)
    field = layer.astype(np.float64)
    if halo_radius == 0 or not layer.any():
        return field
    dist = ndimage.distance_transform_edt(~layer) * geometry.resolution
    decay = np.maximum(1.0 - dist / halo_radius, 0.0)
    return np.where(layer, 1.0, decay)


def _sub_map(layer, robot_radius, halo_radius, base, distance_gain, halo_gain, geometry):
    region = dilate(layer, robot_radius, geometry)
    inside = base + distance_gain * interior_distance(region, geometry)
    halo = halo_gain * halo_field(region, halo_radius, geometry)
    return region, np.where(region, inside, halo)


def build_costmap(grid: OccupancyGrid, params: CostMapParams | None = None) -> CostMap:
    """Build the summed hard+soft cost field for an obstacle grid.

    Each layer is dilated by the robot radius; inside the dilated region
    the cost is base + distance_gain * interior depth, outside it is
    halo_gain * halo decay.  The lethal threshold equals ``hard_base``:
    every cell of a dilated hard region is lethal, nothing else is
    (unless soft/halo terms stack past it, which the default magnitudes
    make impossible for shallow soft regions).
    """
    params = params or CostMapParams()
    geometry = grid.geometry
    _, hard_sub = _sub_map(
        grid.hard, params.robot_radius, params.halo_radius,
        params.hard_base, params.hard_distance_gain, params.halo_gain_hard, geometry,
    )
    _, soft_sub = _sub_map(
        grid.soft, params.robot_radius, params.halo_radius,
        params.soft_base, params.soft_distance_gain, params.halo_gain_soft, geometry,
    )
    return CostMap(geometry, hard_sub + soft_sub, hard_threshold=params.hard_base)
