"""Debug SVG emitter for scenario results.

Draws the cost map as a grayscale raster underlay (embedded PNG, darker
is costlier, lethal is black), the seed path in red, the optimized path
in blue with per-pose speed markers colormapped from dark (slow) to
light (fast), and the goal as a pink disc.  Output bytes are fully
deterministic for identical inputs.
"""

from __future__ import annotations

import base64
import struct
import zlib

import numpy as np

from .costmap import CostMap
from .scenario import RunResult

__all__ = ["render_svg"]

_BASE_COLOR = "#d62728"
_OPT_COLOR = "#1f4fd6"
_GOAL_COLOR = "#ff69b4"
_SPEED_SLOW = (16, 44, 84)
_SPEED_FAST = (142, 202, 230)


def _png_gray(img: np.ndarray) -> bytes:
    """Minimal 8-bit grayscale PNG encoder (deterministic bytes)."""
    height, width = img.shape
    raw = b"".join(b"\x00" + row.tobytes() for row in img)

    def chunk(tag: bytes, payload: bytes) -> bytes:
        body = tag + payload
        return struct.pack(">I", len(payload)) + body + struct.pack(">I", zlib.crc32(body))

    ihdr = struct.pack(">IIBBBBB", width, height, 8, 0, 0, 0, 0)
    return b"".join([
        b"\x89PNG\r\n\x1a\n",
        chunk(b"IHDR", ihdr),
        chunk(b"IDAT", zlib.compress(raw, 9)),
        chunk(b"IEND", b""),
    ])


def _fmt(v: float) -> str:
    return f"{v:.4f}"


def _lerp_color(a, b, t: float) -> str:
    return "#" + "".join(f"{round(ca + (cb - ca) * t):02x}" for ca, cb in zip(a, b))


def render_svg(result: RunResult, cmap: CostMap, out) -> None:
    """Write a standalone SVG for a run to a text stream."""
    g = cmap.geometry
    res = g.resolution
    width_m = g.width * res
    height_m = g.height * res
    # World -> SVG: x shifts by the map's lower-left corner, y flips so
    # the minimum-y row lands at the bottom of the image.
    min_x = g.origin_x - res / 2.0
    max_y = g.origin_y + (g.height - 0.5) * res

    def sx(x: float) -> float:
        return x - min_x

    def sy(y: float) -> float:
        return max_y - y

    shade = np.clip(cmap.cost / cmap.hard_threshold, 0.0, 1.0)
    gray = np.round(255.0 * (1.0 - shade)).astype(np.uint8)
    png = base64.b64encode(_png_gray(np.flipud(gray))).decode("ascii")

    out.write('<?xml version="1.0" encoding="UTF-8"?>\n')
    out.write(
        f'<svg xmlns="http://www.w3.org/2000/svg" '
        f'xmlns:xlink="http://www.w3.org/1999/xlink" '
        f'viewBox="0 0 {_fmt(width_m)} {_fmt(height_m)}" '
        f'width="{g.width * 2}" height="{g.height * 2}">\n'
    )
    out.write(
        f'<image x="0" y="0" width="{_fmt(width_m)}" height="{_fmt(height_m)}" '
        f'image-rendering="pixelated" xlink:href="data:image/png;base64,{png}"/>\n'
    )

    stroke = max(res * 0.6, 0.05)
    for path, color in ((result.base_path, _BASE_COLOR), (result.optimized_path, _OPT_COLOR)):
        points = " ".join(f"{_fmt(sx(x))},{_fmt(sy(y))}" for x, y in path.xy)
        out.write(
            f'<polyline points="{points}" fill="none" stroke="{color}" '
            f'stroke-width="{_fmt(stroke)}"/>\n'
        )

    speeds = result.profile.speeds
    v_top = float(speeds.max()) or 1.0
    marker_r = stroke * 0.9
    for (x, y), v in zip(result.optimized_path.xy, speeds):
        color = _lerp_color(_SPEED_SLOW, _SPEED_FAST, float(v) / v_top)
        out.write(
            f'<circle cx="{_fmt(sx(x))}" cy="{_fmt(sy(y))}" r="{_fmt(marker_r)}" '
            f'fill="{color}"/>\n'
        )

    gx, gy = result.goal
    out.write(
        f'<circle cx="{_fmt(sx(gx))}" cy="{_fmt(sy(gy))}" r="{_fmt(stroke * 2.5)}" '
        f'fill="{_GOAL_COLOR}" fill-opacity="0.8"/>\n'
    )
    out.write("</svg>\n")
