"""Scene files: an ASCII grid plus receptacle anchors and spawn regions.

Format (one scene per file)::

    scene_id: house_01
    name: Two-room flat
    cell_size: 0.25

    [grid]
    ##########
    #........#
    ##########

    [receptacles]
    # category x0 y0 x1 y1 openable
    fridge 2 1 3 1 yes

    [spawns]
    human 5 1 7 1
    robot 1 1 1 1

'#' is wall, '.' is floor. Rectangles are inclusive cell ranges.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import E_BAD_SCENE, SimError

Rect = tuple[int, int, int, int]  # x0, y0, x1, y1 inclusive


@dataclass(frozen=True)
class ReceptacleAnchor:
    category: str
    rect: Rect
    openable: bool


@dataclass
class SceneSpec:
    scene_id: str
    name: str
    cell_size: float
    rows: list[str]
    receptacle_anchors: list[ReceptacleAnchor]
    spawn_regions: dict[str, Rect]
    walls: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not self.rows or any(len(r) != len(self.rows[0]) for r in self.rows):
            raise SimError(E_BAD_SCENE, "grid is empty or not rectangular")
        grid = np.array([[c == "#" for c in row] for row in self.rows], dtype=bool)
        object.__setattr__(self, "walls", grid)

    @property
    def height(self) -> int:
        return len(self.rows)

    @property
    def width(self) -> int:
        return len(self.rows[0]) if self.rows else 0

    def is_floor(self, x: int, y: int) -> bool:
        return 0 <= x < self.width and 0 <= y < self.height and not self.walls[y, x]

    def rect_cells(self, rect: Rect) -> list[tuple[int, int]]:
        x0, y0, x1, y1 = rect
        return [(x, y) for y in range(y0, y1 + 1) for x in range(x0, x1 + 1)]

    def to_dict(self) -> dict:
        return {
            "scene_id": self.scene_id,
            "name": self.name,
            "cell_size": self.cell_size,
            "rows": list(self.rows),
            "receptacles": [
                {"category": a.category, "rect": list(a.rect), "openable": a.openable}
                for a in self.receptacle_anchors
            ],
            "spawns": {k: list(v) for k, v in sorted(self.spawn_regions.items())},
        }

    @staticmethod
    def from_dict(d: dict) -> "SceneSpec":
        return SceneSpec(
            scene_id=d["scene_id"],
            name=d["name"],
            cell_size=d["cell_size"],
            rows=list(d["rows"]),
            receptacle_anchors=[
                ReceptacleAnchor(r["category"], tuple(r["rect"]), r["openable"])
                for r in d["receptacles"]
            ],
            spawn_regions={k: tuple(v) for k, v in d["spawns"].items()},
        )


def parse_scene(text: str) -> SceneSpec:
    """Parse and validate one scene document. Raises SimError(E_BAD_SCENE)."""
    header: dict[str, str] = {}
    sections: dict[str, list[str]] = {"grid": [], "receptacles": [], "spawns": []}
    current: str | None = None
    for raw in text.splitlines():
        stripped = raw.strip()
        if not stripped:
            continue
        if stripped.startswith("[") and stripped.endswith("]"):
            current = stripped[1:-1]
            if current not in sections:
                raise SimError(E_BAD_SCENE, f"unknown section [{current}]")
            continue
        if current == "grid":
            sections["grid"].append(stripped)
            continue
        # '#' starts a comment everywhere except inside the grid
        if stripped.startswith("#"):
            continue
        if current is None:
            if ":" not in stripped:
                raise SimError(E_BAD_SCENE, f"bad header line {stripped!r}")
            k, v = stripped.split(":", 1)
            header[k.strip()] = v.strip()
            continue
        sections[current].append(stripped)

    for key in ("scene_id", "cell_size"):
        if key not in header:
            raise SimError(E_BAD_SCENE, f"missing header field '{key}'")
    try:
        cell_size = float(header["cell_size"])
    except ValueError:
        raise SimError(E_BAD_SCENE, f"bad cell_size {header['cell_size']!r}")

    rows = sections["grid"]
    anchors = []
    for line in sections["receptacles"]:
        parts = line.split()
        if len(parts) != 6:
            raise SimError(E_BAD_SCENE, f"bad receptacle row {line!r}")
        cat, x0, y0, x1, y1, openable = parts
        anchors.append(
            ReceptacleAnchor(cat, (int(x0), int(y0), int(x1), int(y1)), openable == "yes")
        )
    spawns = {}
    for line in sections["spawns"]:
        parts = line.split()
        if len(parts) != 5:
            raise SimError(E_BAD_SCENE, f"bad spawn row {line!r}")
        spawns[parts[0]] = tuple(int(p) for p in parts[1:])

    spec = SceneSpec(
        scene_id=header["scene_id"],
        name=header.get("name", header["scene_id"]),
        cell_size=cell_size,
        rows=rows,
        receptacle_anchors=anchors,
        spawn_regions=spawns,
    )
    validate_scene(spec)
    return spec


def validate_scene(spec: SceneSpec) -> None:
    if spec.cell_size <= 0:
        raise SimError(E_BAD_SCENE, "cell_size must be positive")
    if spec.height < 10 or spec.width < 10:
        raise SimError(E_BAD_SCENE, f"grid {spec.width}x{spec.height} below 10x10 minimum")
    if any(len(r) != spec.width for r in spec.rows):
        raise SimError(E_BAD_SCENE, "grid is not rectangular")
    if any(c not in "#." for r in spec.rows for c in r):
        raise SimError(E_BAD_SCENE, "grid contains cells other than '#' and '.'")

    def check_rect(name: str, rect: Rect, must_be_floor: bool):
        x0, y0, x1, y1 = rect
        if not (0 <= x0 <= x1 < spec.width and 0 <= y0 <= y1 < spec.height):
            raise SimError(E_BAD_SCENE, f"{name} rect {rect} out of bounds")
        if must_be_floor:
            for x, y in spec.rect_cells(rect):
                if not spec.is_floor(x, y):
                    raise SimError(E_BAD_SCENE, f"{name} rect {rect} covers wall cell ({x},{y})")

    for i, a in enumerate(spec.receptacle_anchors):
        check_rect(f"receptacle {a.category}[{i}]", a.rect, must_be_floor=True)
    for role, rect in spec.spawn_regions.items():
        check_rect(f"spawn '{role}'", rect, must_be_floor=True)

    # floor must be a single 4-connected component
    floors = [(x, y) for y in range(spec.height) for x in range(spec.width) if spec.is_floor(x, y)]
    if not floors:
        raise SimError(E_BAD_SCENE, "scene has no floor cells")
    seen = {floors[0]}
    queue = deque([floors[0]])
    while queue:
        x, y = queue.popleft()
        for nx, ny in ((x - 1, y), (x, y - 1), (x, y + 1), (x + 1, y)):
            if spec.is_floor(nx, ny) and (nx, ny) not in seen:
                seen.add((nx, ny))
                queue.append((nx, ny))
    if len(seen) != len(floors):
        orphan = next(c for c in floors if c not in seen)
        raise SimError(E_BAD_SCENE, f"floor is disconnected; cell {orphan} unreachable")


def load_scene_file(path) -> SceneSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scene(fh.read())
