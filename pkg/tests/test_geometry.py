"""Line-of-sight and field-of-view geometry."""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gridthor.geometry import (HEADING_VECS, in_fov, line_of_sight, meters_to_cells,
                               ray_cells, vis_field)


def crossed_cells_oracle(dx: int, dy: int) -> set:
    """Cells whose square the center-to-center segment crosses with positive
    length; corner touches excluded. Exact rational interval clipping."""

    def axis_interval(d: int, c: int):
        # t range where coordinate 0.5 + t*d lies in [c, c+1]
        if d == 0:
            return (Fraction(0), Fraction(1)) if c <= Fraction(1, 2) <= c + 1 else None
        lo = Fraction(2 * c - 1, 2 * d)
        hi = Fraction(2 * c + 1, 2 * d)
        return (min(lo, hi), max(lo, hi))

    cells = set()
    for cx in range(min(0, dx), max(0, dx) + 1):
        for cy in range(min(0, dy), max(0, dy) + 1):
            ix = axis_interval(dx, cx)
            iy = axis_interval(dy, cy)
            if ix is None or iy is None:
                continue
            lo = max(ix[0], iy[0], Fraction(0))
            hi = min(ix[1], iy[1], Fraction(1))
            if lo < hi:  # positive-length crossing (a corner touch is lo == hi)
                cells.add((cx, cy))
    cells.discard((0, 0))
    cells.discard((dx, dy))
    return cells


@pytest.mark.parametrize("dx,dy", [(3, 1), (5, 2), (-4, 3), (2, 2), (6, -4), (0, 5), (7, 0)])
def test_ray_cells_match_rational_sweep(dx, dy):
    assert set(ray_cells(dx, dy)) == crossed_cells_oracle(dx, dy)


@given(st.integers(-12, 12), st.integers(-12, 12))
@settings(max_examples=300, deadline=None)
def test_ray_cells_symmetric_and_exact(dx, dy):
    forward = {(x, y) for x, y in ray_cells(dx, dy)}
    backward = {(dx + x, dy + y) for x, y in ray_cells(-dx, -dy)}
    assert forward == backward
    assert forward == crossed_cells_oracle(dx, dy)


def test_diagonal_corner_does_not_block():
    # exact corner crossing steps diagonally: no intermediate cells
    assert ray_cells(1, 1) == []
    assert ray_cells(2, 2) == [(1, 1)]


def test_line_of_sight_symmetry_random():
    rng = np.random.RandomState(7)
    walls = rng.rand(15, 15) < 0.25
    cells = [(x, y) for x in range(15) for y in range(15) if not walls[y, x]]
    for i in range(0, len(cells) - 1, 7):
        a, b = cells[i], cells[i + 1]
        assert line_of_sight(walls, a, b) == line_of_sight(walls, b, a)


def test_vis_field_agrees_with_single_pair():
    rng = np.random.RandomState(3)
    walls = rng.rand(31, 31) < 0.2
    r = 6
    field = vis_field(r)
    ax, ay = 15, 15
    walls[ay, ax] = False
    blocked = walls[ay - r:ay + r + 1, ax - r:ax + r + 1].copy()
    vis = field.visible(blocked)
    for dy in range(-r, r + 1):
        for dx in range(-r, r + 1):
            expect = line_of_sight(walls, (ax, ay), (ax + dx, ay + dy))
            # out-of-patch walls cannot matter within the radius window
            assert vis[dy + r, dx + r] == expect, (dx, dy)


def test_fov_cone_east():
    # heading 0 covers the 90-degree cone about +x, boundary inclusive
    assert in_fov(0, 5, 5) and in_fov(0, 5, -5)
    assert in_fov(0, 1, 0) and in_fov(0, 0, 0)
    assert not in_fov(0, 4, 5) and not in_fov(0, -1, 0) and not in_fov(0, 0, 3)


def test_fov_cone_diagonal():
    # heading 45 covers dx,dy >= 0 quadrant edges
    assert in_fov(45, 1, 0) and in_fov(45, 0, 1) and in_fov(45, 3, 3)
    assert not in_fov(45, 2, -1) and not in_fov(45, -1, 2)


def test_meters_quantization():
    assert meters_to_cells(0.5) == 2
    assert meters_to_cells(-0.25) == -1
    with pytest.raises(ValueError):
        meters_to_cells(0.1)


def test_heading_vectors_cover_compass():
    assert set(HEADING_VECS) == {0, 45, 90, 135, 180, 225, 270, 315}
    assert HEADING_VECS[0] == (1, 0) and HEADING_VECS[270] == (0, -1)
