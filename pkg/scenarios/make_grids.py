#!/usr/bin/env python3
"""Regenerate the obstacle grids for the bundled scenarios.

Run from this directory: python make_grids.py
"""

from pathlib import Path

import numpy as np

HERE = Path(__file__).parent
GRIDS = HERE / "grids"


def write_grid(name, resolution, hard, soft, origin=(0.0, 0.0)):
    height, width = hard.shape
    rows = np.full((height, width), ord("."), dtype=np.uint8)
    rows[soft] = ord("s")
    rows[hard] = ord("h")
    lines = [f"# {name}",
             f"grid {width} {height} {resolution} {origin[0]} {origin[1]}"]
    lines += [bytes(row).decode("ascii") for row in rows]
    (GRIDS / f"{name}.grid").write_text("\n".join(lines) + "\n")
    print(f"wrote grids/{name}.grid ({width}x{height})")


def disc(xx, yy, cx, cy, r):
    return (xx - cx) ** 2 + (yy - cy) ** 2 <= r ** 2


def straight_line():
    width, height, res = 120, 40, 0.25
    empty = np.zeros((height, width), dtype=bool)
    write_grid("straight_line", res, empty, empty)


def narrow_gap():
    # a fence crossing the map with one 5 m opening; goal on the far side
    width, height, res = 200, 120, 0.25
    hard = np.zeros((height, width), dtype=bool)
    col = int(25.0 / res)
    y = np.arange(height) * res
    fence = (y < 12.0) | (y > 17.0)
    hard[fence, col - 1:col + 2] = True
    write_grid("narrow_gap", res, hard, np.zeros_like(hard))


def rock_pile():
    # a hard rock mound wrapped in a ring of vegetation
    width = height = 160
    res = 0.25
    yy, xx = np.meshgrid(np.arange(height) * res, np.arange(width) * res,
                         indexing="ij")
    hard = disc(xx, yy, 20.0, 20.0, 3.0)
    soft = disc(xx, yy, 20.0, 20.0, 4.2) & ~hard
    write_grid("rock_pile", res, hard, soft)


if __name__ == "__main__":
    GRIDS.mkdir(exist_ok=True)
    straight_line()
    narrow_gap()
    rock_pile()
