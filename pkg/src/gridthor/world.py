"""Authoritative grid-world state machine.

The world is single-writer: all mutation happens through step(), which
resolves an ordered batch of commands, advances the clock and evaluates
the goal. A failing command never mutates state. Given (scene, task,
seed, ordered command log) the serialized state is byte-identical across
runs and platforms: positions are integer cells, no floats enter the
state, and every iteration that reaches the output is ordered.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import errors as E
from .errors import SimError
from .geometry import HEADINGS, in_fov, meters_to_cells, ray_cells, vis_field
from .scene import Rect, SceneSpec
from .util import canonical_dumps, sha256_hex

INTERACTION_RANGE_CELLS = 4  # 1.0 m
DEFAULT_VIEW_RANGE_M = 3.0
DEFAULT_DETECTOR_RANGE_M = 1.5
DEFAULT_FOV_DEG = 90
DEFAULT_TICK_MS = 250
DEFAULT_DEADLINE_TICKS = 360  # 90 s at 250 ms per tick

ROLES = ("human", "robot")
CAPABILITIES = ("navigate", "manipulate", "communicate")

ON_FLOOR = "on_floor"
INSIDE = "inside"
HELD_BY = "held_by"


@dataclass
class GoalSpec:
    task_kind: str  # "navigation" | "manipulation"
    target_category: str
    receptacle_category: str | None = None

    def to_dict(self) -> dict:
        return {
            "task_kind": self.task_kind,
            "target_category": self.target_category,
            "receptacle_category": self.receptacle_category,
        }

    @staticmethod
    def from_dict(d: dict) -> "GoalSpec":
        return GoalSpec(d["task_kind"], d["target_category"], d.get("receptacle_category"))


@dataclass
class ObjectInstance:
    object_id: str
    category: str
    kind: str  # "target" | "receptacle"
    position: tuple[int, int] | None
    containment: tuple  # (ON_FLOOR,) | (INSIDE, receptacle_id) | (HELD_BY, agent_id)
    openable: bool = False
    is_open: bool = False
    region: Rect | None = None  # receptacles only

    def containment_dict(self) -> dict:
        if self.containment[0] == ON_FLOOR:
            return {"state": ON_FLOOR}
        if self.containment[0] == INSIDE:
            return {"state": INSIDE, "receptacle_id": self.containment[1]}
        return {"state": HELD_BY, "agent_id": self.containment[1]}

    def to_dict(self) -> dict:
        return {
            "object_id": self.object_id,
            "category": self.category,
            "kind": self.kind,
            "position": list(self.position) if self.position else None,
            "containment": self.containment_dict(),
            "openable": self.openable,
            "is_open": self.is_open,
            "region": list(self.region) if self.region else None,
        }


@dataclass
class AgentState:
    agent_id: str
    role: str
    position: tuple[int, int] | None = None
    heading: int = 0
    held: str | None = None
    capabilities: tuple[str, ...] = ("navigate",)
    detector_range_m: float = DEFAULT_DETECTOR_RANGE_M
    view_range_m: float = DEFAULT_VIEW_RANGE_M
    fov_deg: int = DEFAULT_FOV_DEG

    @property
    def detector_range_cells(self) -> int:
        return meters_to_cells(self.detector_range_m)

    @property
    def view_range_cells(self) -> int:
        return meters_to_cells(self.view_range_m)

    def to_dict(self) -> dict:
        return {
            "agent_id": self.agent_id,
            "role": self.role,
            "position": list(self.position) if self.position else None,
            "heading": self.heading,
            "held": self.held,
            "capabilities": sorted(self.capabilities),
            "detector_range": self.detector_range_m,
            "view_range": self.view_range_m,
            "fov": self.fov_deg,
        }


@dataclass
class CommMessage:
    message_id: int
    sender: str
    text: str
    snapshot: dict  # sender's observation at send time
    estimated_position: tuple[int, int]
    sent_tick: int
    status: str = "pending"  # pending | confirmed | declined | superseded
    resolved_tick: int | None = None

    def to_dict(self, with_snapshot: bool = True) -> dict:
        d = {
            "message_id": self.message_id,
            "sender": self.sender,
            "text": self.text,
            "estimated_position": list(self.estimated_position),
            "sent_tick": self.sent_tick,
            "status": self.status,
            "resolved_tick": self.resolved_tick,
        }
        if with_snapshot:
            d["snapshot"] = self.snapshot
        return d


def chebyshev(a: tuple[int, int], b: tuple[int, int]) -> int:
    return max(abs(a[0] - b[0]), abs(a[1] - b[1]))


class World:
    """Scene, objects, agents, clock, goal and message board."""

    def __init__(self, scene: SceneSpec, seed: int = 0, tick_duration_ms: int = DEFAULT_TICK_MS,
                 deadline_ticks: int = DEFAULT_DEADLINE_TICKS):
        self.scene = scene
        self.objects: dict[str, ObjectInstance] = {}
        self.agents: dict[str, AgentState] = {}
        self.tick = 0
        self.tick_duration_ms = tick_duration_ms
        self.deadline_ticks = deadline_ticks
        self.goal: GoalSpec | None = None
        self.messages: list[CommMessage] = []
        self.status = "running"  # running | success | timeout
        self.started = False
        self.rng_seed = seed
        self.success_tick: int | None = None
        self.trajectories: dict[str, list[tuple[int, int]]] = {}
        self.task_id: str | None = None
        self.nl_description: str | None = None
        self._next_message_id = 1
        self._instantiate_receptacles()

    # ------------------------------------------------------------------
    # construction

    def _instantiate_receptacles(self):
        counts: dict[str, int] = {}
        for anchor in self.scene.receptacle_anchors:
            counts[anchor.category] = counts.get(anchor.category, 0) + 1
            oid = f"{anchor.category}_{counts[anchor.category]}"
            x0, y0, x1, y1 = anchor.rect
            center = ((x0 + x1) // 2, (y0 + y1) // 2)
            self.objects[oid] = ObjectInstance(
                object_id=oid,
                category=anchor.category,
                kind="receptacle",
                position=center,
                containment=(ON_FLOOR,),
                openable=anchor.openable,
                is_open=False,
                region=anchor.rect,
            )

    @property
    def phase(self) -> str:
        if not self.started:
            return "setup"
        return "running" if self.status == "running" else "done"

    def receptacles_of(self, category: str) -> list[ObjectInstance]:
        return [o for o in self.objects.values() if o.kind == "receptacle" and o.category == category]

    # ------------------------------------------------------------------
    # agents

    def add_agent(self, agent_id: str, role: str, capabilities: tuple[str, ...],
                  spawn: bool = True) -> AgentState:
        if agent_id in self.agents:
            raise SimError(E.E_BAD_ARG, f"agent {agent_id} already exists")
        if role not in ROLES:
            raise SimError(E.E_BAD_ARG, f"unknown role {role!r}")
        if role == "human" and any(a.role == "human" for a in self.agents.values()):
            raise SimError(E.E_BAD_ARG, "world already has a human agent")
        bad = set(capabilities) - set(CAPABILITIES)
        if bad:
            raise SimError(E.E_BAD_ARG, f"unknown capabilities {sorted(bad)}")
        agent = AgentState(agent_id=agent_id, role=role, capabilities=tuple(sorted(capabilities)))
        self.agents[agent_id] = agent
        if spawn:
            self._spawn_agent(agent)
        return agent

    def _spawn_agent(self, agent: AgentState):
        region = self.scene.spawn_regions.get(agent.role)
        if region is None:
            raise SimError(E.E_BAD_SCENE, f"scene has no spawn region for role {agent.role!r}")
        occupied = {a.position for a in self.agents.values() if a.position is not None}
        for cell in self.scene.rect_cells(region):
            if self.scene.is_floor(*cell) and cell not in occupied:
                agent.position = cell
                agent.heading = 0
                self.trajectories[agent.agent_id] = [cell]
                return
        raise SimError(E.E_NO_SPACE, f"spawn region for {agent.role!r} is full")

    def _agent(self, agent_id: str) -> AgentState:
        agent = self.agents.get(agent_id)
        if agent is None:
            raise SimError(E.E_NO_AGENT, f"no agent {agent_id!r}")
        return agent

    def agent_at(self, cell: tuple[int, int], ignore: str | None = None) -> str | None:
        for a in self.agents.values():
            if a.agent_id != ignore and a.position == cell:
                return a.agent_id
        return None

    # ------------------------------------------------------------------
    # task application

    def apply_task(self, task) -> None:
        """Reset to the task's initial arrangement and respawn all agents."""
        if task.scene_id != self.scene.scene_id:
            raise SimError(E.E_BAD_TASK,
                           f"task is for scene {task.scene_id!r}, world has {self.scene.scene_id!r}")
        # drop previously placed items, keep receptacles closed and fresh
        self.objects = {k: v for k, v in self.objects.items() if v.kind == "receptacle"}
        for rec in self.objects.values():
            rec.is_open = False
        for p in task.placements():
            cell = tuple(p["cell"])
            if not self.scene.is_floor(*cell):
                raise SimError(E.E_BAD_TASK, f"placement {p['object_id']} at {cell} is not on floor")
            ref = p.get("reference_id")
            if ref is not None and ref not in self.objects:
                raise SimError(E.E_BAD_TASK, f"placement references unknown receptacle {ref!r}")
            containment = (INSIDE, ref) if p["containment"] == INSIDE else (ON_FLOOR,)
            self.objects[p["object_id"]] = ObjectInstance(
                object_id=p["object_id"],
                category=p["category"],
                kind="target",
                position=cell,
                containment=containment,
            )
        self.goal = GoalSpec.from_dict(task.goal) if isinstance(task.goal, dict) else task.goal
        if self.goal.task_kind == "manipulation":
            if not self.receptacles_of(self.goal.receptacle_category):
                raise SimError(E.E_BAD_TASK,
                               f"goal receptacle {self.goal.receptacle_category!r} absent from scene")
        self.task_id = task.task_id
        self.nl_description = task.nl_description
        self.rng_seed = task.seed
        self.tick = 0
        self.status = "running"
        self.started = False
        self.success_tick = None
        self.messages = []
        self._next_message_id = 1
        self.trajectories = {}
        for agent in self.agents.values():
            agent.position = None
            agent.held = None
        for agent in self.agents.values():
            self._spawn_agent(agent)

    def start_episode(self) -> list[dict]:
        """Begin the scored run; a goal already satisfied counts at tick 0."""
        self.started = True
        events: list[dict] = []
        if self.goal is not None and self.status == "running" and self.check_goal():
            self.status = "success"
            self.success_tick = 0
            events.append({"kind": "goal_reached", "tick": 0})
        return events

    # ------------------------------------------------------------------
    # command resolution

    def step(self, commands: list[tuple[str, dict]]) -> list[dict]:
        """Resolve one tick: ordered commands, clock, goal, deadline.

        Each command is (agent_id, dict); dicts carry either an "action"
        key (movement/manipulation) or a "comm" key (message traffic). A
        failing command yields an action_failed event and no state change.
        """
        events: list[dict] = []
        acted: set[str] = set()
        communicated: set[str] = set()
        for agent_id, cmd in commands:
            try:
                if "action" in cmd:
                    if agent_id in acted:
                        raise SimError(E.E_RATE_LIMIT, "one action per agent per tick")
                    acted.add(agent_id)
                    events.extend(self._resolve_action(agent_id, cmd))
                elif "comm" in cmd:
                    if agent_id in communicated:
                        raise SimError(E.E_RATE_LIMIT, "one message op per agent per tick")
                    communicated.add(agent_id)
                    events.extend(self._resolve_comm(agent_id, cmd))
                else:
                    raise SimError(E.E_BAD_ARG, f"command without action/comm: {cmd}")
            except SimError as err:
                events.append({
                    "kind": "action_failed",
                    "tick": self.tick,
                    "agent_id": agent_id,
                    "code": err.code,
                    "detail": err.message,
                    "command": cmd,
                })
        self.tick += 1
        if self.status == "running" and self.started:
            if self.goal is not None and self.check_goal():
                self.status = "success"
                self.success_tick = self.tick
                events.append({"kind": "goal_reached", "tick": self.tick})
            elif self.tick >= self.deadline_ticks:
                self.status = "timeout"
                events.append({"kind": "timeout", "tick": self.tick})
        return events

    def _resolve_action(self, agent_id: str, cmd: dict) -> list[dict]:
        action = cmd.get("action")
        if action == "pass":
            return []
        if action == "move":
            return self.resolve_move(agent_id, tuple(cmd["delta"]))
        if action == "rotate":
            return self.resolve_rotate(agent_id, cmd["dtheta"])
        if action == "pick":
            return self.resolve_pick(agent_id, cmd["object_id"])
        if action == "place":
            return self.resolve_place(agent_id, cmd["receptacle_id"])
        if action == "open":
            return self.resolve_open(agent_id, cmd["receptacle_id"], True)
        if action == "close":
            return self.resolve_open(agent_id, cmd["receptacle_id"], False)
        if action == "teleport":
            return self.teleport(agent_id, tuple(cmd["position"]), cmd.get("heading", 0),
                                 privileged=bool(cmd.get("privileged", False)))
        raise SimError(E.E_BAD_ARG, f"unknown action {action!r}")

    def _resolve_comm(self, agent_id: str, cmd: dict) -> list[dict]:
        op = cmd.get("comm")
        if op == "send_message":
            _, events = self.send_message(agent_id, cmd["text"], tuple(cmd["estimated_position"]))
            return events
        if op == "respond":
            _, _, events = self.respond_message(agent_id, cmd["message_id"], cmd["verdict"])
            return events
        raise SimError(E.E_BAD_ARG, f"unknown comm op {op!r}")

    def resolve_move(self, agent_id: str, delta_m: tuple[float, float]) -> list[dict]:
        agent = self._agent(agent_id)
        try:
            dx = meters_to_cells(delta_m[0])
            dy = meters_to_cells(delta_m[1])
        except ValueError as err:
            raise SimError(E.E_BAD_ARG, str(err))
        if dx * dx + dy * dy > 4:  # (0.5 m / 0.25 m)^2
            raise SimError(E.E_OUT_OF_RANGE, f"|delta| exceeds 0.5 m: {delta_m}")
        if dx == 0 and dy == 0:
            return [{"kind": "moved", "tick": self.tick, "agent_id": agent_id,
                     "from": list(agent.position), "to": list(agent.position)}]
        x, y = agent.position
        path = ray_cells(dx, dy) + [(dx, dy)]
        for cx, cy in path:
            cell = (x + cx, y + cy)
            if not self.scene.is_floor(*cell):
                raise SimError(E.E_COLLISION, f"wall at {cell}")
            blocker = self.agent_at(cell, ignore=agent_id)
            if blocker is not None:
                raise SimError(E.E_COLLISION, f"agent {blocker} at {cell}")
        old = agent.position
        agent.position = (x + dx, y + dy)
        self.trajectories.setdefault(agent_id, []).append(agent.position)
        return [{"kind": "moved", "tick": self.tick, "agent_id": agent_id,
                 "from": list(old), "to": list(agent.position)}]

    def resolve_rotate(self, agent_id: str, dtheta: int) -> list[dict]:
        agent = self._agent(agent_id)
        if dtheta % 45 != 0:
            raise SimError(E.E_BAD_ARG, f"rotation {dtheta} not a multiple of 45")
        agent.heading = (agent.heading + dtheta) % 360
        return [{"kind": "rotated", "tick": self.tick, "agent_id": agent_id,
                 "heading": agent.heading}]

    def _object(self, object_id: str) -> ObjectInstance:
        obj = self.objects.get(object_id)
        if obj is None:
            raise SimError(E.E_BAD_ARG, f"no object {object_id!r}")
        return obj

    def _receptacle_distance(self, agent: AgentState, rec: ObjectInstance) -> int:
        return min(chebyshev(agent.position, cell) for cell in self.scene.rect_cells(rec.region))

    def resolve_pick(self, agent_id: str, object_id: str) -> list[dict]:
        agent = self._agent(agent_id)
        obj = self._object(object_id)
        if "manipulate" not in agent.capabilities:
            raise SimError(E.E_NO_CAPABILITY, f"{agent_id} cannot manipulate")
        if agent.held is not None:
            raise SimError(E.E_ALREADY_HELD, f"{agent_id} already holds {agent.held}")
        if obj.kind != "target" or obj.containment[0] == HELD_BY:
            raise SimError(E.E_NOT_PICKABLE, f"{object_id} is not pickable")
        if chebyshev(agent.position, obj.position) > INTERACTION_RANGE_CELLS:
            raise SimError(E.E_OUT_OF_RANGE, f"{object_id} is beyond interaction range")
        if obj.containment[0] == INSIDE:
            rec = self.objects[obj.containment[1]]
            if rec.openable and not rec.is_open:
                raise SimError(E.E_CLOSED, f"{rec.object_id} is closed")
        obj.containment = (HELD_BY, agent_id)
        obj.position = None
        agent.held = object_id
        return [{"kind": "picked", "tick": self.tick, "agent_id": agent_id,
                 "object_id": object_id}]

    def resolve_place(self, agent_id: str, receptacle_id: str) -> list[dict]:
        agent = self._agent(agent_id)
        if agent.held is None:
            raise SimError(E.E_NOT_HELD, f"{agent_id} holds nothing")
        rec = self._object(receptacle_id)
        if rec.kind != "receptacle":
            raise SimError(E.E_BAD_ARG, f"{receptacle_id} is not a receptacle")
        if self._receptacle_distance(agent, rec) > INTERACTION_RANGE_CELLS:
            raise SimError(E.E_OUT_OF_RANGE, f"{receptacle_id} is beyond interaction range")
        if rec.openable and not rec.is_open:
            raise SimError(E.E_CLOSED, f"{receptacle_id} is closed")
        obj = self.objects[agent.held]
        # drop on the region cell nearest the agent; ties row-major
        cell = min(self.scene.rect_cells(rec.region),
                   key=lambda c: (chebyshev(agent.position, c), c[1], c[0]))
        obj.containment = (INSIDE, receptacle_id)
        obj.position = cell
        agent.held = None
        return [{"kind": "placed", "tick": self.tick, "agent_id": agent_id,
                 "object_id": obj.object_id, "receptacle_id": receptacle_id}]

    def resolve_open(self, agent_id: str, receptacle_id: str, want_open: bool) -> list[dict]:
        agent = self._agent(agent_id)
        rec = self._object(receptacle_id)
        if rec.kind != "receptacle" or not rec.openable:
            raise SimError(E.E_NOT_OPENABLE, f"{receptacle_id} is not openable")
        if "manipulate" not in agent.capabilities:
            raise SimError(E.E_NO_CAPABILITY, f"{agent_id} cannot manipulate")
        if self._receptacle_distance(agent, rec) > INTERACTION_RANGE_CELLS:
            raise SimError(E.E_OUT_OF_RANGE, f"{receptacle_id} is beyond interaction range")
        rec.is_open = want_open
        return [{"kind": "opened" if want_open else "closed", "tick": self.tick,
                 "agent_id": agent_id, "receptacle_id": receptacle_id}]

    def teleport(self, agent_id: str, position: tuple[int, int], heading: int = 0,
                 privileged: bool = False) -> list[dict]:
        agent = self._agent(agent_id)
        if self.phase == "running" and not privileged:
            raise SimError(E.E_FORBIDDEN, "teleport is disabled during a scored episode")
        if heading % 45 != 0 or heading % 360 not in HEADINGS:
            raise SimError(E.E_BAD_ARG, f"bad heading {heading}")
        if not self.scene.is_floor(*position):
            raise SimError(E.E_COLLISION, f"cell {position} is not floor")
        if self.agent_at(position, ignore=agent_id) is not None:
            raise SimError(E.E_COLLISION, f"cell {position} is occupied")
        agent.position = tuple(position)
        agent.heading = heading % 360
        self.trajectories.setdefault(agent_id, []).append(agent.position)
        return [{"kind": "teleported", "tick": self.tick, "agent_id": agent_id,
                 "to": list(position)}]

    # ------------------------------------------------------------------
    # observation

    def observe(self, agent_id: str) -> dict:
        agent = self._agent(agent_id)
        if agent.position is None:
            raise SimError(E.E_NO_AGENT, f"{agent_id} is not spawned")
        r = agent.view_range_cells
        field = vis_field(r)
        side = field.side
        ax, ay = agent.position
        h, w = self.scene.walls.shape
        blocked = np.ones((side, side), dtype=bool)
        x0, y0 = ax - r, ay - r
        sy0, sy1 = max(0, y0), min(h, ay + r + 1)
        sx0, sx1 = max(0, x0), min(w, ax + r + 1)
        blocked[sy0 - y0:sy1 - y0, sx0 - x0:sx1 - x0] = self.scene.walls[sy0:sy1, sx0:sx1]
        vis = field.visible(blocked)

        patch_rows = []
        for py in range(side):
            row_chars = []
            for px in range(side):
                if not vis[py, px]:
                    row_chars.append("?")
                else:
                    row_chars.append("#" if blocked[py, px] else ".")
            patch_rows.append("".join(row_chars))

        det_r2 = agent.detector_range_cells ** 2
        view_r2 = r * r
        visible_objects = []
        detections = []
        for oid in sorted(self.objects):
            obj = self.objects[oid]
            if obj.position is None:
                continue
            dx, dy = obj.position[0] - ax, obj.position[1] - ay
            if abs(dx) > r or abs(dy) > r:
                continue
            if not vis[dy + r, dx + r]:
                continue
            d2 = dx * dx + dy * dy
            entry = {
                "object_id": obj.object_id,
                "category": obj.category,
                "kind": obj.kind,
                "position": list(obj.position),
                "containment": obj.containment_dict(),
                "openable": obj.openable,
                "is_open": obj.is_open,
            }
            in_closed = (obj.containment[0] == INSIDE
                         and self.objects[obj.containment[1]].openable
                         and not self.objects[obj.containment[1]].is_open)
            if d2 <= view_r2 and in_fov(agent.heading, dx, dy) and not in_closed:
                visible_objects.append(entry)
            if d2 <= det_r2:
                detections.append(entry)

        # peers are sensed omnidirectionally (LOS + range, no fov gate)
        visible_agents = []
        for other_id in sorted(self.agents):
            if other_id == agent_id:
                continue
            other = self.agents[other_id]
            if other.position is None:
                continue
            dx, dy = other.position[0] - ax, other.position[1] - ay
            if abs(dx) > r or abs(dy) > r or dx * dx + dy * dy > view_r2:
                continue
            if vis[dy + r, dx + r]:
                visible_agents.append({"agent_id": other_id, "position": list(other.position),
                                       "heading": other.heading})

        return {
            "tick": self.tick,
            "self": {
                "agent_id": agent_id,
                "position": list(agent.position),
                "heading": agent.heading,
                "held": agent.held,
            },
            "patch_origin": [ax - r, ay - r],
            "local_patch": patch_rows,
            "visible_objects": visible_objects,
            "visible_agents": visible_agents,
            "detections": detections,
        }

    # ------------------------------------------------------------------
    # goal and messages

    def check_goal(self) -> bool:
        if self.goal is None:
            raise SimError(E.E_BAD_ARG, "no goal set")
        if self.goal.task_kind == "manipulation":
            for obj in self.objects.values():
                if obj.kind != "target" or obj.category != self.goal.target_category:
                    continue
                if obj.containment[0] == INSIDE:
                    rec = self.objects[obj.containment[1]]
                    if rec.category == self.goal.receptacle_category:
                        return True
            return False
        # navigation: found means the human's ideal detector sees the target
        human = next((a for a in self.agents.values() if a.role == "human"), None)
        if human is None or human.position is None:
            return False
        obs = self.observe(human.agent_id)
        return any(d["category"] == self.goal.target_category and d["kind"] == "target"
                   for d in obs["detections"])

    def send_message(self, sender_id: str, text: str,
                     estimated_position: tuple[int, int]) -> tuple[int, list[dict]]:
        sender = self._agent(sender_id)
        if sender.role != "robot":
            raise SimError(E.E_FORBIDDEN, "only robots send messages")
        if "communicate" not in sender.capabilities:
            raise SimError(E.E_NO_CAPABILITY, f"{sender_id} cannot communicate")
        ex, ey = estimated_position
        if not (0 <= ex < self.scene.width and 0 <= ey < self.scene.height):
            raise SimError(E.E_BAD_ARG, f"estimated position {estimated_position} outside grid")
        events = []
        for msg in self.messages:
            if msg.sender == sender_id and msg.status == "pending":
                msg.status = "superseded"
                msg.resolved_tick = self.tick
                events.append({"kind": "message_resolved", "tick": self.tick,
                               "message_id": msg.message_id, "status": "superseded"})
        message = CommMessage(
            message_id=self._next_message_id,
            sender=sender_id,
            text=text,
            snapshot=self.observe(sender_id),
            estimated_position=tuple(estimated_position),
            sent_tick=self.tick,
        )
        self._next_message_id += 1
        self.messages.append(message)
        events.append({"kind": "message_sent", "tick": self.tick,
                       "message_id": message.message_id, "sender": sender_id})
        return message.message_id, events

    def get_message(self, message_id: int) -> CommMessage | None:
        for msg in self.messages:
            if msg.message_id == message_id:
                return msg
        return None

    def respond_message(self, responder_id: str, message_id: int,
                        verdict: str) -> tuple[CommMessage, dict | None, list[dict]]:
        responder = self._agent(responder_id)
        if responder.role != "human":
            raise SimError(E.E_FORBIDDEN, "only the human responds to messages")
        if verdict not in ("confirm", "decline"):
            raise SimError(E.E_BAD_ARG, f"bad verdict {verdict!r}")
        msg = self.get_message(message_id)
        if msg is None:
            raise SimError(E.E_NO_PENDING_MESSAGE, f"no message {message_id}")
        if msg.status != "pending":
            raise SimError(E.E_ALREADY_RESOLVED, f"message {message_id} is {msg.status}")
        msg.status = "confirmed" if verdict == "confirm" else "declined"
        msg.resolved_tick = self.tick
        map_payload = None
        if verdict == "confirm":
            sender = self.agents.get(msg.sender)
            map_payload = {
                "message_id": msg.message_id,
                "human_pose": {"position": list(responder.position), "heading": responder.heading},
                "robot_pose": {"position": list(sender.position), "heading": sender.heading}
                if sender and sender.position else None,
                "estimated_position": list(msg.estimated_position),
            }
        events = [{"kind": "message_resolved", "tick": self.tick,
                   "message_id": msg.message_id, "status": msg.status}]
        return msg, map_payload, events

    def query_response(self, sender_id: str, message_id: int) -> str:
        msg = self.get_message(message_id)
        if msg is None:
            raise SimError(E.E_NO_SUCH_MESSAGE, f"no message {message_id}")
        if msg.sender != sender_id:
            raise SimError(E.E_FORBIDDEN, f"message {message_id} belongs to {msg.sender}")
        return msg.status

    # ------------------------------------------------------------------
    # snapshots and serialization

    def monitor_snapshot(self) -> dict:
        """Full top-view state for monitors and replay rendering.

        Message snapshots are elided; the board carries text, positions
        and lifecycle only.
        """
        return {
            "tick": self.tick,
            "status": self.status,
            "phase": self.phase,
            "scene_id": self.scene.scene_id,
            "grid": list(self.scene.rows),
            "cell_size": self.scene.cell_size,
            "goal": self.goal.to_dict() if self.goal else None,
            "task_id": self.task_id,
            "nl_description": self.nl_description,
            "deadline_ticks": self.deadline_ticks,
            "objects": [self.objects[k].to_dict() for k in sorted(self.objects)],
            "agents": [self.agents[k].to_dict() for k in sorted(self.agents)],
            "trajectories": {k: [list(c) for c in v] for k, v in sorted(self.trajectories.items())},
            "messages": [m.to_dict(with_snapshot=False) for m in self.messages],
        }

    def to_dict(self) -> dict:
        return {
            "scene": self.scene.to_dict(),
            "objects": [self.objects[k].to_dict() for k in sorted(self.objects)],
            "agents": [self.agents[k].to_dict() for k in sorted(self.agents)],
            "tick": self.tick,
            "tick_duration_ms": self.tick_duration_ms,
            "deadline_ticks": self.deadline_ticks,
            "goal": self.goal.to_dict() if self.goal else None,
            "task_id": self.task_id,
            "nl_description": self.nl_description,
            "messages": [m.to_dict() for m in self.messages],
            "status": self.status,
            "started": self.started,
            "rng_seed": self.rng_seed,
            "success_tick": self.success_tick,
            "trajectories": {k: [list(c) for c in v] for k, v in sorted(self.trajectories.items())},
            "next_message_id": self._next_message_id,
        }

    def state_hash(self) -> str:
        return sha256_hex(canonical_dumps(self.to_dict()))


def load_scene(spec: SceneSpec, seed: int = 0, **kwargs) -> World:
    """World at tick 0 with receptacles instantiated; no agents or items."""
    return World(spec, seed=seed, **kwargs)
