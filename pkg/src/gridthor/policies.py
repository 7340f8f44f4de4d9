"""Baseline agent policies: frontier explorer, oracle, scripted human proxy.

Policies are pure state machines: they consume one observation per tick
(plus message pushes for the human) and emit at most one action command
and one message command. They never touch the world directly, so the same
objects drive both in-process simulations and protocol clients.
"""

from __future__ import annotations

import random

import numpy as np

from .geometry import ray_cells
from .mapping import FREE, OCCUPIED, UNKNOWN, OccupancyGrid, detect_frontiers, distance_map, plan_path
from .world import INTERACTION_RANGE_CELLS

PASS = {"action": "pass"}


def _delta_m(step: tuple[int, int]) -> list[float]:
    return [step[0] * 0.25, step[1] * 0.25]


def _compose_move(path: list[tuple[int, int]], pos: tuple[int, int],
                  blocked, max_step: int = 2) -> tuple[dict | None, list[tuple[int, int]]]:
    """Take up to `max_step` path cells as a single move; None when blocked."""
    if not path or path[0] != pos:
        return None, []
    if len(path) == 1:
        return PASS, path
    n1 = path[1]
    if blocked(n1):
        return None, path
    if max_step >= 2 and len(path) >= 3:
        n2 = path[2]
        dx, dy = n2[0] - pos[0], n2[1] - pos[1]
        if dx * dx + dy * dy <= 4 and not blocked(n2):
            # straight two-cell hop or a diagonal corner cut
            return {"action": "move", "delta": _delta_m((dx, dy))}, path[2:]
    dx, dy = n1[0] - pos[0], n1[1] - pos[1]
    return {"action": "move", "delta": _delta_m((dx, dy))}, path[1:]


class ExplorerState:
    """Shared frontier-exploration machinery (occupancy + path following).

    Keeps a short-lived set of learned obstacles: when a commanded move
    does not change our position, the swept cells are blacklisted for a
    while. That is what routes us around a peer standing in a spot our
    fov/LOS never showed us.
    """

    TRANSIENT_TTL = 40  # ticks a learned obstacle stays blacklisted
    DETECTOR_CELLS = 6  # ideal-detector reach; sweep must pass this close

    def __init__(self, width: int, height: int, max_step: int = 2):
        self.occ = OccupancyGrid(width, height)
        self.max_step = max_step  # path cells consumed per tick (1 = walk, 2 = stride)
        self.path: list[tuple[int, int]] = []
        self.goal_cell: tuple[int, int] | None = None
        self.stuck_ticks = 0
        self.last_pos: tuple[int, int] | None = None
        self.exhausted = False
        self.transient: dict[tuple[int, int], int] = {}  # cell -> expiry tick
        self._intent: list[tuple[int, int]] = []
        self._tick = 0
        # cells that have been inside detector range with LOS at some tick;
        # mapping alone is not enough to have searched a cell
        self.covered = np.zeros((height, width), dtype=bool)

    def observe(self, obs: dict) -> None:
        self.occ.update_from_observation(obs)
        self._tick = obs["tick"]
        pos = tuple(obs["self"]["position"])
        self._mark_covered(obs, pos)
        if self.last_pos == pos:
            self.stuck_ticks += 1
            if self._intent:
                for cell in self._intent:
                    self.transient[cell] = self._tick + self.TRANSIENT_TTL
                self.path = []
        else:
            self.stuck_ticks = 0
        self.last_pos = pos
        self._intent = []

    def _mark_covered(self, obs: dict, pos: tuple[int, int]) -> None:
        ox, oy = obs["patch_origin"]
        rows = obs["local_patch"]
        r = (len(rows) - 1) // 2
        d = self.DETECTOR_CELLS
        for dy in range(-d, d + 1):
            py = r + dy
            y = oy + py
            if y < 0 or y >= self.occ.height:
                continue
            row = rows[py]
            for dx in range(-d, d + 1):
                if dx * dx + dy * dy > d * d:
                    continue
                if row[r + dx] == "?":
                    continue
                x = ox + r + dx
                if 0 <= x < self.occ.width:
                    self.covered[y, x] = True

    def _agent_cells(self, obs: dict) -> set[tuple[int, int]]:
        return {tuple(a["position"]) for a in obs["visible_agents"]}

    def _blocked_cells(self, obs: dict) -> set[tuple[int, int]]:
        cells = self._agent_cells(obs)
        cells.update(c for c, exp in self.transient.items() if exp > self._tick)
        return cells

    def traversable(self, optimistic: bool) -> np.ndarray:
        if optimistic:
            return self.occ.cells != OCCUPIED
        return self.occ.cells == FREE

    def plan_to(self, obs: dict, goal: tuple[int, int], optimistic: bool) -> bool:
        pos = tuple(obs["self"]["position"])
        grid = self.traversable(optimistic).copy()
        for x, y in self._blocked_cells(obs):
            if (x, y) != goal:
                grid[y, x] = False
        path = plan_path(grid, pos, goal)
        if path is None:
            self.path = []
            self.goal_cell = None
            return False
        self.path = path
        self.goal_cell = goal
        return True

    def follow(self, obs: dict) -> dict | None:
        pos = tuple(obs["self"]["position"])
        hard = self._blocked_cells(obs)

        def blocked(cell):
            x, y = cell
            return self.occ.cells[y, x] == OCCUPIED or cell in hard

        move, rest = _compose_move(self.path, pos, blocked, self.max_step)
        if move is None:
            self.path = []
            return None
        self.path = rest
        if move.get("action") == "move":
            dx = round(move["delta"][0] / 0.25)
            dy = round(move["delta"][1] / 0.25)
            self._intent = [(pos[0] + cx, pos[1] + cy) for cx, cy in ray_cells(dx, dy)]
            self._intent.append((pos[0] + dx, pos[1] + dy))
        return move

    def explore_step(self, obs: dict) -> dict:
        """Frontier-first exploration, then a detector sweep.

        While frontiers exist, head for the path-nearest cluster. Once the
        map is complete the search is not: walk to the nearest known-free
        cell that has never been inside detector range, until every
        reachable cell has been swept; only then rotate in place.
        """
        pos = tuple(obs["self"]["position"])
        if self.path and self.goal_cell is not None:
            gx, gy = self.goal_cell
            cell = self.occ.cells[gy, gx]
            worth_going = (cell == UNKNOWN
                           or (cell == FREE and self._adjacent_unknown(gx, gy))
                           or (cell == FREE and not self.covered[gy, gx]))
            if worth_going:
                move = self.follow(obs)
                if move is not None:
                    return move
        clusters = detect_frontiers(self.occ)
        goal = None
        if clusters:
            dist = distance_map(self.traversable(False), [pos])
            best = None
            for c in clusters:
                x, y = c["representative"]
                d = dist[y, x]
                if d >= 0 and (best is None or d < best[0]):
                    best = (int(d), (x, y))
            if best is not None:
                goal = best[1]
            else:
                # no known-free route yet; try through unknown space
                for c in clusters:
                    if self.plan_to(obs, c["representative"], optimistic=True):
                        move = self.follow(obs)
                        if move is not None:
                            return move
        if goal is None:
            goal = self._nearest_unswept(obs, pos)
        if goal is None:
            self.exhausted = True
            return {"action": "rotate", "dtheta": 45}
        if self.plan_to(obs, goal, optimistic=False) or \
                self.plan_to(obs, goal, optimistic=True):
            move = self.follow(obs)
            if move is not None:
                return move
        # goal unreachable right now (e.g. a peer sitting on it): skip it
        self.covered[goal[1], goal[0]] = True
        return PASS

    def _nearest_unswept(self, obs: dict, pos: tuple[int, int]) -> tuple[int, int] | None:
        free = self.occ.cells == FREE
        pending = free & ~self.covered
        if not pending.any():
            return None
        dist = distance_map(self.traversable(False), [pos])
        masked = np.where(pending & (dist >= 0), dist, np.iinfo(np.int32).max)
        best = int(masked.min())
        if best == np.iinfo(np.int32).max:
            # reachable set fully swept; unreachable leftovers do not count
            return None
        ys, xs = np.nonzero(masked == best)
        return (int(xs[0]), int(ys[0]))

    def _adjacent_unknown(self, x: int, y: int) -> bool:
        h, w = self.occ.cells.shape
        for nx, ny in ((x - 1, y), (x + 1, y), (x, y - 1), (x, y + 1)):
            if 0 <= nx < w and 0 <= ny < h and self.occ.cells[ny, nx] == UNKNOWN:
                return True
        return False


class FrontierPolicy:
    """Explores with the frontier algorithm; reports the target on detection.

    After the (single) target report it holds position: only the target is
    searched, so there is nothing left to do but stay out of the way.
    """

    def __init__(self, width: int, height: int, target_category: str | None):
        self.state = ExplorerState(width, height)
        self.target_category = target_category
        self.reported: set[str] = set()
        self.holding = False

    def on_observation(self, obs: dict) -> list[dict]:
        self.state.observe(obs)
        if self.target_category and not self.holding:
            for det in obs["detections"]:
                if (det["kind"] == "target" and det["category"] == self.target_category
                        and det["object_id"] not in self.reported):
                    self.reported.add(det["object_id"])
                    self.holding = True
                    x, y = det["position"]
                    return [PASS, {
                        "comm": "send_message",
                        "text": f"Found {det['category']} at ({x},{y})",
                        "estimated_position": [x, y],
                    }]
        if self.holding:
            return [PASS]
        return [self.state.explore_step(obs)]


class OraclePolicy:
    """Knows the target's true cell; walks the shortest path, reports once."""

    def __init__(self, scene, task):
        self.walls = scene.walls
        self.target_cell = tuple(task.target["cell"])
        self.target_category = task.goal.target_category
        self.reported = False
        self.path: list[tuple[int, int]] = []
        self.planned = False

    def on_observation(self, obs: dict) -> list[dict]:
        if self.reported:
            return [PASS]
        for det in obs["detections"]:
            if det["kind"] == "target" and det["category"] == self.target_category:
                self.reported = True
                x, y = det["position"]
                return [PASS, {
                    "comm": "send_message",
                    "text": f"Found {det['category']} at ({x},{y})",
                    "estimated_position": [x, y],
                }]
        pos = tuple(obs["self"]["position"])
        if not self.planned or not self.path or self.path[0] != pos:
            path = plan_path(~self.walls, pos, self.target_cell)
            self.path = path or []
            self.planned = True
        agents = {tuple(a["position"]) for a in obs["visible_agents"]}

        def blocked(cell):
            x, y = cell
            return self.walls[y, x] or cell in agents

        move, rest = _compose_move(self.path, pos, blocked)
        if move is None:
            self.path = []  # replan next tick
            return [PASS]
        self.path = rest
        return [move]


class HumanProxyPolicy:
    """Scripted stand-in for a live participant.

    Explores like the frontier agent; answers robot messages after a fixed
    reaction delay (confirm with the configured probability); on confirm
    walks toward the suggested position; picks the target when detected and
    ferries it to the goal receptacle, opening it when needed.
    """

    def __init__(self, width: int, height: int, goal: dict, seed: int,
                 confirm_probability: float = 1.0, reaction_delay_ticks: int = 0,
                 walk_step: int = 1):
        # proxies browse at 1 cell/tick (1 m/s): the capability cap is 2, but a
        # searching human does not sprint everywhere the way an algorithm does
        self.walk_step = walk_step
        self.state = ExplorerState(width, height, max_step=walk_step)
        self.goal = goal or {}
        self.rng = random.Random(seed)
        self.confirm_probability = confirm_probability
        self.reaction_delay_ticks = reaction_delay_ticks
        self.pending: dict | None = None  # {message_id, estimated_position, seen_tick}
        self.guidance: tuple[int, int] | None = None
        self.target_cell: tuple[int, int] | None = None
        self.target_id: str | None = None
        self.target_container: str | None = None
        self.receptacles: dict[str, dict] = {}  # object_id -> last known entry
        self.done = False

    # -- message handling ------------------------------------------------

    def on_message_push(self, payload: dict, tick: int) -> None:
        if payload.get("kind") != "message":
            return
        msg = payload["message"]
        self.pending = {
            "message_id": msg["message_id"],
            "estimated_position": tuple(msg["estimated_position"]),
            "seen_tick": tick,
        }

    def _respond_if_due(self, tick: int) -> dict | None:
        if self.pending is None:
            return None
        if tick - self.pending["seen_tick"] < self.reaction_delay_ticks:
            return None
        confirm = self.rng.random() < self.confirm_probability
        if confirm:
            self.guidance = self.pending["estimated_position"]
        comm = {"comm": "respond", "message_id": self.pending["message_id"],
                "verdict": "confirm" if confirm else "decline"}
        self.pending = None
        return comm

    # -- perception memory -------------------------------------------------

    def _remember(self, obs: dict) -> None:
        target_cat = self.goal.get("target_category")
        for entry in obs["detections"] + obs["visible_objects"]:
            if entry["kind"] == "receptacle":
                self.receptacles[entry["object_id"]] = entry
            elif entry["category"] == target_cat and self.target_cell is None:
                if entry["containment"]["state"] == "held_by":
                    continue
                self.target_cell = tuple(entry["position"])
                self.target_id = entry["object_id"]
                cont = entry["containment"]
                self.target_container = cont.get("receptacle_id")

    def _goal_receptacle(self) -> dict | None:
        want = self.goal.get("receptacle_category")
        for oid in sorted(self.receptacles):
            if self.receptacles[oid]["category"] == want:
                return self.receptacles[oid]
        return None

    # -- movement helpers --------------------------------------------------

    def _goto(self, obs: dict, cell: tuple[int, int], stop_short: bool = True) -> dict:
        pos = tuple(obs["self"]["position"])
        if self.state.goal_cell != cell or not self.state.path:
            if not self.state.plan_to(obs, cell, optimistic=True):
                return self.state.explore_step(obs)
        if stop_short and len(self.state.path) <= 2 and pos != cell:
            return PASS  # close enough; interaction logic takes over
        move = self.state.follow(obs)
        if move is None:
            if not self.state.plan_to(obs, cell, optimistic=True):
                return self.state.explore_step(obs)
            move = self.state.follow(obs)
        return move if move is not None else PASS

    @staticmethod
    def _chebyshev(a, b) -> int:
        return max(abs(a[0] - b[0]), abs(a[1] - b[1]))

    # -- main step ---------------------------------------------------------

    def on_observation(self, obs: dict) -> list[dict]:
        self.state.observe(obs)
        self._remember(obs)
        tick = obs["tick"]
        pos = tuple(obs["self"]["position"])
        held = obs["self"]["held"]
        commands: list[dict] = []
        comm = self._respond_if_due(tick)

        # stride at full speed once there is somewhere concrete to be;
        # amble only while browsing for something not yet seen
        purposeful = (held is not None or self.guidance is not None
                      or self.target_cell is not None)
        self.state.max_step = 2 if purposeful else self.walk_step

        action = self._decide_action(obs, pos, held)
        commands.append(action)
        if comm is not None:
            commands.append(comm)
        return commands

    def _decide_action(self, obs: dict, pos, held) -> dict:
        kind = self.goal.get("task_kind")
        if kind == "navigation":
            if self.guidance is not None:
                if self._chebyshev(pos, self.guidance) <= 2:
                    self.guidance = None
                else:
                    return self._goto(obs, self.guidance, stop_short=False)
            return self.state.explore_step(obs)

        # manipulation
        if held is None and self.target_cell is not None:
            container = self.receptacles.get(self.target_container) if self.target_container else None
            must_open = bool(container and container["openable"] and not container["is_open"])
            if self._chebyshev(pos, self.target_cell) <= INTERACTION_RANGE_CELLS:
                if must_open:
                    rc = tuple(container["position"])
                    if self._chebyshev(pos, rc) <= INTERACTION_RANGE_CELLS - 1:
                        return {"action": "open", "receptacle_id": container["object_id"]}
                    return self._goto(obs, rc)
                return {"action": "pick", "object_id": self.target_id}
            return self._goto(obs, self.target_cell)
        if held is None:
            if self.guidance is not None:
                if self._chebyshev(pos, self.guidance) <= 2:
                    self.guidance = None
                else:
                    return self._goto(obs, self.guidance, stop_short=False)
            return self.state.explore_step(obs)

        # carrying the target: deliver it
        rec = self._goal_receptacle()
        if rec is None:
            return self.state.explore_step(obs)
        rc = tuple(rec["position"])
        if self._chebyshev(pos, rc) <= INTERACTION_RANGE_CELLS - 1:
            if rec["openable"] and not rec["is_open"]:
                return {"action": "open", "receptacle_id": rec["object_id"]}
            return {"action": "place", "receptacle_id": rec["object_id"]}
        return self._goto(obs, rc)


class IdlePolicy:
    """Submits pass every tick; used for the no-op deadline checks."""

    def on_observation(self, obs: dict) -> list[dict]:
        return [PASS]
