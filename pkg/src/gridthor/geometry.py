"""Integer grid geometry: headings, field-of-view cones and line of sight.

All visibility math is exact integer arithmetic so results are identical
across runs and platforms. Cells are unit squares; cell (x, y) spans
[x, x+1) x [y, y+1) with its center at (x+0.5, y+0.5). x grows to the
right (columns), y grows downward (rows).
"""

from __future__ import annotations

import numpy as np

CELL_SIZE_M = 0.25

HEADINGS = (0, 45, 90, 135, 180, 225, 270, 315)

# heading 0 points +x (east), 90 points +y (down the grid).
HEADING_VECS = {
    0: (1, 0),
    45: (1, 1),
    90: (0, 1),
    135: (-1, 1),
    180: (-1, 0),
    225: (-1, -1),
    270: (0, -1),
    315: (1, -1),
}


def meters_to_cells(m: float) -> int:
    """Quantize a length in meters to whole cells; raises on misalignment."""
    q = m / CELL_SIZE_M
    r = round(q)
    if abs(q - r) > 1e-9:
        raise ValueError(f"{m} m is not a whole number of {CELL_SIZE_M} m cells")
    return int(r)


def in_fov(heading: int, dx: int, dy: int) -> bool:
    """True when offset (dx, dy) lies within a 90 degree cone about heading.

    Boundary rays (exactly 45 degrees off-axis) count as inside. Exact:
    cos(angle) >= cos(45) is compared via cross-multiplied squares.
    """
    if dx == 0 and dy == 0:
        return True
    hx, hy = HEADING_VECS[heading]
    dot = hx * dx + hy * dy
    if dot < 0:
        return False
    return 2 * dot * dot >= (hx * hx + hy * hy) * (dx * dx + dy * dy)


def ray_cells(dx: int, dy: int) -> list[tuple[int, int]]:
    """Cells strictly between (0,0) and (dx,dy) along a center-to-center ray.

    Supercover walk with integer boundary-crossing comparisons. When the
    segment passes exactly through a cell corner the walk steps diagonally,
    skipping both side cells, so corner touches never block and the visited
    set is symmetric under ray reversal.
    """
    cells: list[tuple[int, int]] = []
    adx, ady = abs(dx), abs(dy)
    sx = 1 if dx > 0 else -1
    sy = 1 if dy > 0 else -1
    x = y = 0
    kx = ky = 1  # next boundary index in each axis
    while (x, y) != (dx, dy):
        if kx > adx:
            y += sy
            ky += 1
        elif ky > ady:
            x += sx
            kx += 1
        else:
            # crossing times: (2k-1)/(2*adx) vs (2k-1)/(2*ady)
            cx = (2 * kx - 1) * ady
            cy = (2 * ky - 1) * adx
            if cx < cy:
                x += sx
                kx += 1
            elif cx > cy:
                y += sy
                ky += 1
            else:
                x += sx
                y += sy
                kx += 1
                ky += 1
        if (x, y) != (dx, dy):
            cells.append((x, y))
    return cells


class VisField:
    """Precomputed ray templates for every offset within a square window.

    For an agent at the window center, `visible(blocked)` answers, for all
    (2r+1)^2 offsets at once, whether line of sight reaches that cell given
    a boolean blocked-patch (walls and out-of-bounds cells are blockers;
    the center cell itself never blocks).
    """

    def __init__(self, radius: int):
        self.radius = radius
        side = 2 * radius + 1
        self.side = side
        center = radius * side + radius
        n = side * side
        max_len = 1
        rays: list[list[int]] = []
        for dy in range(-radius, radius + 1):
            for dx in range(-radius, radius + 1):
                idx = [
                    (cy + radius) * side + (cx + radius)
                    for cx, cy in ray_cells(dx, dy)
                ]
                rays.append(idx)
                max_len = max(max_len, len(idx))
        # pad with the center index: the agent's own cell is never a wall
        tmpl = np.full((n, max_len), center, dtype=np.int32)
        for i, idx in enumerate(rays):
            if idx:
                tmpl[i, : len(idx)] = idx
        self.template = tmpl

    def visible(self, blocked: np.ndarray) -> np.ndarray:
        """blocked: (side, side) bool array -> (side, side) visibility."""
        flat = blocked.reshape(-1)
        vis = ~flat[self.template].any(axis=1)
        return vis.reshape(self.side, self.side)


_vis_cache: dict[int, VisField] = {}


def vis_field(radius: int) -> VisField:
    f = _vis_cache.get(radius)
    if f is None:
        f = _vis_cache[radius] = VisField(radius)
    return f


def line_of_sight(walls: np.ndarray, a: tuple[int, int], b: tuple[int, int]) -> bool:
    """Single-pair LOS on a wall grid (True in `walls` blocks). Symmetric."""
    ax, ay = a
    bx, by = b
    h, w = walls.shape
    for cx, cy in ray_cells(bx - ax, by - ay):
        x, y = ax + cx, ay + cy
        if x < 0 or y < 0 or x >= w or y >= h or walls[y, x]:
            return False
    return True
