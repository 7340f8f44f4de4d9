#!/usr/bin/env python3
"""Render the shipped scene set from explicit room layouts.

Each house is specified as full-span wall lines, carved door gaps,
interior obstacles, receptacle rectangles and spawn regions; this script
rasterizes them to the ASCII .scene format and validates every invariant
via the package parser. Run from the repo root:

    python tools/build_scenes.py [--check] [--show]

Scenes are sized so a solo sweep of the whole house presses against the
90 s episode budget; that headroom is what makes robot assistance
measurable in the benchmark.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from gridthor.scene import parse_scene  # noqa: E402

OPENABLE = {"fridge", "cabinet", "box"}

OUT_DIR = Path(__file__).resolve().parents[1] / "src" / "gridthor" / "data" / "scenes"


class Builder:
    def __init__(self, width, height):
        self.w, self.h = width, height
        self.grid = [["." for _ in range(width)] for _ in range(height)]
        for x in range(width):
            self.grid[0][x] = self.grid[height - 1][x] = "#"
        for y in range(height):
            self.grid[y][0] = self.grid[y][width - 1] = "#"
        self.receptacles = []
        self.spawns = {}

    def rooms(self, vxs, hys, vdoors, hdoors):
        """Wall lines at vxs/hys; vdoors[i] and hdoors[j] list the door
        positions (one per band crossed by that line), 2 cells wide."""
        for x in vxs:
            for y in range(1, self.h - 1):
                self.grid[y][x] = "#"
        for y in hys:
            for x in range(1, self.w - 1):
                self.grid[y][x] = "#"
        for x, ys in zip(vxs, vdoors):
            for y in ys:
                self.grid[y][x] = self.grid[y + 1][x] = "."
        for y, xs in zip(hys, hdoors):
            for x in xs:
                self.grid[y][x] = self.grid[y][x + 1] = "."

    def block(self, x0, y0, x1, y1):
        for y in range(y0, y1 + 1):
            for x in range(x0, x1 + 1):
                self.grid[y][x] = "#"

    def rec(self, category, x0, y0, x1, y1):
        self.receptacles.append((category, x0, y0, x1, y1, category in OPENABLE))

    def spawn(self, role, x0, y0, x1, y1):
        self.spawns[role] = (x0, y0, x1, y1)

    def render(self, scene_id, name):
        lines = [f"scene_id: {scene_id}", f"name: {name}", "cell_size: 0.25", "", "[grid]"]
        lines += ["".join(row) for row in self.grid]
        lines += ["", "[receptacles]", "# category x0 y0 x1 y1 openable"]
        for cat, x0, y0, x1, y1, op in self.receptacles:
            lines.append(f"{cat} {x0} {y0} {x1} {y1} {'yes' if op else 'no'}")
        lines += ["", "[spawns]"]
        for role, (x0, y0, x1, y1) in sorted(self.spawns.items()):
            lines.append(f"{role} {x0} {y0} {x1} {y1}")
        return "\n".join(lines) + "\n"


def house_01():
    b = Builder(60, 42)
    b.rooms(vxs=(15, 30, 45), hys=(14, 28),
            vdoors=[(5, 18, 33), (9, 22, 36), (4, 20, 31)],
            hdoors=[(7, 22, 37, 52), (10, 25, 40, 50)])
    b.block(7, 6, 9, 7); b.block(22, 20, 24, 21); b.block(51, 33, 52, 35)
    b.block(37, 5, 38, 7); b.block(8, 33, 10, 34)
    b.rec("fridge", 2, 2, 2, 3)
    b.rec("table", 21, 3, 22, 4)
    b.rec("bed", 52, 2, 54, 3)
    b.rec("sofa", 2, 32, 4, 32)
    b.rec("shelf", 57, 31, 57, 32)
    b.spawn("human", 21, 18, 23, 19)
    b.spawn("robot", 5, 18, 7, 19)
    return b, "Nine-room flat"


def house_02():
    b = Builder(64, 40)
    b.rooms(vxs=(13, 26, 39, 52), hys=(13, 27),
            vdoors=[(5, 17, 31), (8, 20, 34), (3, 22, 29), (10, 16, 35)],
            hdoors=[(5, 18, 31, 44, 57), (7, 20, 33, 46, 58)])
    b.block(6, 5, 7, 7); b.block(31, 4, 33, 5); b.block(45, 19, 46, 21)
    b.block(18, 32, 20, 33); b.block(58, 33, 59, 34)
    b.rec("fridge", 2, 2, 2, 3)
    b.rec("sink", 9, 2, 9, 2)
    b.rec("cabinet", 33, 2, 34, 2)
    b.rec("table", 56, 18, 57, 19)
    b.rec("box", 61, 37, 61, 37)
    b.spawn("human", 18, 18, 20, 19)
    b.spawn("robot", 42, 31, 44, 32)
    return b, "Galley manor"


def house_03():
    b = Builder(66, 36)
    b.rooms(vxs=(13, 26, 39, 52), hys=(12, 24),
            vdoors=[(4, 15, 28), (8, 18, 31), (3, 20, 26), (9, 14, 30)],
            hdoors=[(6, 19, 32, 45, 58), (5, 21, 34, 47, 59)])
    b.block(6, 5, 8, 6); b.block(32, 4, 33, 6); b.block(20, 28, 22, 29)
    b.block(46, 17, 47, 18); b.block(57, 28, 59, 29)
    b.rec("bed", 2, 2, 4, 3)
    b.rec("table", 19, 4, 20, 5)
    b.rec("sofa", 55, 2, 57, 2)
    b.rec("shelf", 64, 21, 64, 22)
    b.rec("cabinet", 2, 33, 3, 33)
    b.spawn("human", 28, 16, 30, 17)
    b.spawn("robot", 55, 31, 57, 32)
    return b, "Long bungalow"


def house_04():
    b = Builder(52, 50)
    b.rooms(vxs=(17, 34), hys=(12, 25, 38),
            vdoors=[(5, 16, 29, 42), (8, 20, 33, 44)],
            hdoors=[(8, 25, 42), (10, 27, 44), (6, 23, 40)])
    b.block(8, 5, 10, 6); b.block(28, 20, 30, 21); b.block(8, 31, 9, 33)
    b.block(42, 32, 44, 33); b.block(24, 43, 26, 44)
    b.rec("fridge", 2, 2, 2, 3)
    b.rec("sink", 9, 2, 9, 2)
    b.rec("table", 43, 4, 44, 5)
    b.rec("bed", 2, 45, 4, 46)
    b.rec("box", 48, 46, 48, 46)
    b.spawn("human", 23, 18, 25, 19)
    b.spawn("robot", 40, 43, 42, 44)
    return b, "Tower house"


def house_05():
    b = Builder(62, 42)
    b.rooms(vxs=(12, 24, 37, 50), hys=(14, 28),
            vdoors=[(6, 18, 32), (9, 21, 35), (4, 24, 30), (11, 17, 36)],
            hdoors=[(5, 17, 30, 43, 55), (6, 18, 31, 44, 56)])
    b.block(17, 4, 18, 5); b.block(43, 19, 45, 20); b.block(16, 33, 17, 35)
    b.block(55, 5, 56, 7); b.block(30, 33, 32, 34)
    b.rec("cabinet", 2, 2, 3, 2)
    b.rec("shelf", 10, 4, 10, 5)
    b.rec("sofa", 27, 2, 29, 2)
    b.rec("table", 54, 3, 55, 4)
    b.rec("sink", 59, 32, 59, 32)
    b.spawn("human", 28, 18, 30, 19)
    b.spawn("robot", 4, 32, 6, 33)
    return b, "Courtyard flat"


def house_06():
    b = Builder(68, 38)
    b.rooms(vxs=(11, 22, 33, 44, 55), hys=(13, 26),
            vdoors=[(6, 17, 30), (3, 20, 33), (9, 15, 28), (5, 22, 31), (8, 18, 34)],
            hdoors=[(5, 16, 27, 38, 49, 60), (6, 17, 28, 39, 50, 61)])
    b.block(5, 4, 6, 5); b.block(27, 5, 28, 7); b.block(61, 3, 62, 4)
    b.block(16, 30, 18, 31); b.block(49, 30, 50, 31); b.block(38, 5, 39, 6)
    b.rec("fridge", 2, 2, 2, 3)
    b.rec("bed", 13, 2, 15, 3)
    b.rec("sofa", 47, 2, 49, 2)
    b.rec("box", 65, 2, 65, 2)
    b.rec("shelf", 2, 34, 2, 35)
    b.spawn("human", 47, 18, 49, 19)
    b.spawn("robot", 13, 18, 15, 19)
    return b, "Corridor villa"


def house_07():
    b = Builder(54, 48)
    b.rooms(vxs=(18, 36), hys=(12, 24, 36),
            vdoors=[(5, 16, 28, 41), (8, 19, 31, 43)],
            hdoors=[(9, 26, 44), (11, 28, 46), (7, 24, 42)])
    b.block(9, 16, 11, 17); b.block(30, 8, 31, 9); b.block(8, 41, 9, 43)
    b.block(43, 28, 45, 29); b.block(26, 30, 28, 31)
    b.rec("sink", 2, 2, 2, 2)
    b.rec("cabinet", 7, 2, 8, 2)
    b.rec("table", 25, 16, 26, 17)
    b.rec("bed", 2, 43, 4, 44)
    b.rec("sofa", 49, 44, 51, 44)
    b.spawn("human", 25, 5, 27, 6)
    b.spawn("robot", 4, 29, 6, 30)
    return b, "Stacked flat"


def house_08():
    b = Builder(60, 46)
    b.rooms(vxs=(15, 30, 45), hys=(11, 23, 35),
            vdoors=[(5, 16, 27, 39), (7, 18, 29, 41), (4, 15, 28, 40)],
            hdoors=[(6, 21, 36, 51), (8, 23, 38, 53), (5, 20, 35, 50)])
    b.block(6, 5, 8, 6); b.block(21, 16, 22, 18); b.block(37, 39, 39, 40)
    b.block(51, 5, 52, 6); b.block(7, 28, 8, 30); b.block(51, 28, 53, 29)
    b.rec("fridge", 2, 2, 2, 3)
    b.rec("shelf", 13, 13, 13, 14)
    b.rec("box", 2, 42, 2, 42)
    b.rec("table", 21, 3, 22, 4)
    b.rec("sink", 57, 2, 57, 2)
    b.spawn("human", 21, 28, 23, 29)
    b.spawn("robot", 37, 16, 39, 17)
    return b, "Sixteen rooms"


def house_09():
    b = Builder(64, 34)
    b.rooms(vxs=(13, 26, 39, 52), hys=(17,),
            vdoors=[(6, 22), (10, 25), (4, 27), (8, 24)],
            hdoors=[(6, 19, 32, 45, 58)])
    b.block(6, 5, 7, 7); b.block(31, 4, 33, 5); b.block(18, 24, 19, 26)
    b.block(45, 23, 46, 24); b.block(57, 8, 58, 10); b.block(32, 25, 34, 26)
    b.rec("bed", 2, 2, 4, 3)
    b.rec("cabinet", 9, 20, 10, 20)
    b.rec("sofa", 16, 2, 18, 2)
    b.rec("shelf", 61, 2, 61, 3)
    b.rec("box", 61, 31, 61, 31)
    b.spawn("human", 16, 21, 18, 22)
    b.spawn("robot", 41, 21, 43, 22)
    return b, "Wide cottage"


def house_10():
    b = Builder(66, 48)
    b.rooms(vxs=(16, 32, 48), hys=(12, 24, 36),
            vdoors=[(5, 16, 28, 40), (8, 19, 31, 43), (3, 17, 29, 41)],
            hdoors=[(7, 22, 38, 55), (9, 24, 40, 57), (6, 21, 37, 54)])
    b.block(7, 5, 8, 7); b.block(39, 5, 41, 6); b.block(20, 20, 21, 22)
    b.block(55, 17, 56, 19); b.block(8, 40, 10, 41); b.block(40, 40, 41, 42)
    b.block(24, 40, 25, 41)
    b.rec("fridge", 2, 2, 2, 3)
    b.rec("sink", 10, 2, 10, 2)
    b.rec("table", 22, 3, 23, 4)
    b.rec("bed", 56, 2, 58, 3)
    b.rec("cabinet", 2, 45, 3, 45)
    b.rec("sofa", 56, 45, 58, 45)
    b.spawn("human", 23, 16, 25, 17)
    b.spawn("robot", 7, 28, 9, 29)
    return b, "Large manor"


HOUSES = [house_01, house_02, house_03, house_04, house_05,
          house_06, house_07, house_08, house_09, house_10]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--check", action="store_true", help="validate only, no writes")
    parser.add_argument("--show", action="store_true", help="print the rendered maps")
    args = parser.parse_args()

    OUT_DIR.mkdir(parents=True, exist_ok=True)
    for i, build in enumerate(HOUSES, start=1):
        scene_id = f"house_{i:02d}"
        b, name = build()
        text = b.render(scene_id, name)
        spec = parse_scene(text)  # raises on any invariant violation
        if args.show:
            print(f"--- {scene_id} ({spec.width}x{spec.height})")
            print("\n".join(spec.rows))
        if not args.check:
            (OUT_DIR / f"{scene_id}.scene").write_text(text, encoding="utf-8")
            print(f"wrote {scene_id}: {spec.width}x{spec.height}, "
                  f"{len(spec.receptacle_anchors)} receptacles")


if __name__ == "__main__":
    main()
