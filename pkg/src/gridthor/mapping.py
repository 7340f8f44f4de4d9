"""Occupancy mapping, frontier detection and grid pathfinding."""

from __future__ import annotations

from collections import deque

import numpy as np
from scipy import ndimage

UNKNOWN, FREE, OCCUPIED = 0, 1, 2

_EIGHT = np.ones((3, 3), dtype=int)


class OccupancyGrid:
    """Per-cell belief map built from an agent's observations.

    Cells only ever transition unknown -> {free, occupied}; a known cell
    never reverts, so the map stays sound as long as observations are.
    """

    def __init__(self, width: int, height: int):
        self.width = width
        self.height = height
        self.cells = np.full((height, width), UNKNOWN, dtype=np.uint8)
        self.updated_tick = np.full((height, width), -1, dtype=np.int32)

    def update_from_observation(self, obs: dict) -> int:
        """Merge one local patch; returns the number of newly known cells."""
        ox, oy = obs["patch_origin"]
        rows = obs["local_patch"]
        tick = obs["tick"]
        newly = 0
        for py, row in enumerate(rows):
            y = oy + py
            if y < 0 or y >= self.height:
                continue
            for px, ch in enumerate(row):
                if ch == "?":
                    continue
                x = ox + px
                if x < 0 or x >= self.width:
                    continue
                if self.cells[y, x] == UNKNOWN:
                    self.cells[y, x] = FREE if ch == "." else OCCUPIED
                    self.updated_tick[y, x] = tick
                    newly += 1
        return newly

    def known_free(self) -> np.ndarray:
        return self.cells == FREE

    def fraction_known_of(self, truth_free: np.ndarray) -> float:
        known = (self.cells != UNKNOWN) & truth_free
        total = int(truth_free.sum())
        return float(known.sum()) / total if total else 1.0


def detect_frontiers(grid: OccupancyGrid) -> list[dict]:
    """Frontier clusters of the current map.

    A frontier cell is a known-free cell 4-adjacent to at least one
    unknown cell; clusters are 8-connected components, each reported with
    its centroid-nearest member as `representative`. Output order is
    deterministic (row-major representative).
    """
    free = grid.cells == FREE
    unknown = grid.cells == UNKNOWN
    near_unknown = np.zeros_like(free)
    near_unknown[1:, :] |= unknown[:-1, :]
    near_unknown[:-1, :] |= unknown[1:, :]
    near_unknown[:, 1:] |= unknown[:, :-1]
    near_unknown[:, :-1] |= unknown[:, 1:]
    frontier = free & near_unknown
    if not frontier.any():
        return []
    labels, count = ndimage.label(frontier, structure=_EIGHT)
    clusters = []
    for lbl in range(1, count + 1):
        ys, xs = np.nonzero(labels == lbl)
        cx, cy = xs.mean(), ys.mean()
        d2 = (xs - cx) ** 2 + (ys - cy) ** 2
        order = np.lexsort((xs, ys, d2))  # nearest to centroid, ties row-major
        best = order[0]
        clusters.append({
            "cells": [(int(x), int(y)) for x, y in sorted(zip(xs, ys), key=lambda c: (c[1], c[0]))],
            "representative": (int(xs[best]), int(ys[best])),
        })
    clusters.sort(key=lambda c: (c["representative"][1], c["representative"][0]))
    return clusters


def plan_path(traversable: np.ndarray, start: tuple[int, int],
              goal: tuple[int, int]) -> list[tuple[int, int]] | None:
    """Shortest 4-connected path from start to goal, inclusive of both.

    Breadth-first by cell count; neighbor expansion in lexicographic
    (x, y) order makes tie-breaking deterministic. Returns None when the
    goal is unreachable. `traversable` is a (height, width) bool array;
    start must be traversable, the goal cell itself need not be checked
    by callers that only want adjacency.
    """
    h, w = traversable.shape
    sx, sy = start
    gx, gy = goal
    if not (0 <= sx < w and 0 <= sy < h and traversable[sy, sx]):
        return None
    if start == goal:
        return [start]
    parent: dict[tuple[int, int], tuple[int, int]] = {start: start}
    queue = deque([start])
    while queue:
        x, y = queue.popleft()
        for nx, ny in ((x - 1, y), (x, y - 1), (x, y + 1), (x + 1, y)):
            if not (0 <= nx < w and 0 <= ny < h):
                continue
            if (nx, ny) in parent or not traversable[ny, nx]:
                continue
            parent[(nx, ny)] = (x, y)
            if (nx, ny) == goal:
                path = [(nx, ny)]
                cur = (x, y)
                while cur != start:
                    path.append(cur)
                    cur = parent[cur]
                path.append(start)
                path.reverse()
                return path
            queue.append((nx, ny))
    return None


def distance_map(traversable: np.ndarray, sources: list[tuple[int, int]]) -> np.ndarray:
    """Multi-source BFS distances; unreachable cells get -1."""
    h, w = traversable.shape
    dist = np.full((h, w), -1, dtype=np.int32)
    queue = deque()
    for x, y in sources:
        if 0 <= x < w and 0 <= y < h and traversable[y, x] and dist[y, x] < 0:
            dist[y, x] = 0
            queue.append((x, y))
    while queue:
        x, y = queue.popleft()
        d = dist[y, x] + 1
        for nx, ny in ((x - 1, y), (x, y - 1), (x, y + 1), (x + 1, y)):
            if 0 <= nx < w and 0 <= ny < h and traversable[ny, nx] and dist[ny, nx] < 0:
                dist[ny, nx] = d
                queue.append((nx, ny))
    return dist
