"""Replay logs: canonical per-tick records that reproduce a run bit-exactly.

A log is JSONL: a header record (scene, task, agents, seed, clock), one
record per tick with the ordered command batch and the events it produced,
and an end record carrying the final state hash.
"""

from __future__ import annotations

import json

from . import errors as E
from .errors import SimError
from .scene import SceneSpec
from .tasks import TaskSpec
from .util import canonical_dumps
from .world import World, load_scene

REPLAY_SCHEMA = 1


class ReplayRecorder:
    """Accumulates records during a live episode and writes them at the end."""

    def __init__(self, world: World, task: TaskSpec | None):
        self.header = {
            "record": "header",
            "schema_version": REPLAY_SCHEMA,
            "scene": world.scene.to_dict(),
            "task": task.to_dict() if task else None,
            "agents": [
                {"agent_id": a.agent_id, "role": a.role, "capabilities": sorted(a.capabilities)}
                for a in world.agents.values()
            ],
            "seed": world.rng_seed,
            "tick_duration_ms": world.tick_duration_ms,
            "deadline_ticks": world.deadline_ticks,
        }
        self.ticks: list[dict] = []
        self.start_events: list[dict] = []

    def record_start(self, events: list[dict]):
        self.start_events = events

    def record_tick(self, tick: int, commands: list[tuple[str, dict]], events: list[dict]):
        self.ticks.append({
            "record": "tick",
            "t": tick,
            "commands": [[aid, cmd] for aid, cmd in commands],
            "events": events,
        })

    def write(self, path, world: World) -> str:
        final_hash = world.state_hash()
        end = {
            "record": "end",
            "final_hash": final_hash,
            "status": world.status,
            "ticks": world.tick,
            "success_tick": world.success_tick,
        }
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(canonical_dumps(self.header) + "\n")
            if self.start_events:
                fh.write(canonical_dumps(
                    {"record": "start", "events": self.start_events}) + "\n")
            for rec in self.ticks:
                fh.write(canonical_dumps(rec) + "\n")
            fh.write(canonical_dumps(end) + "\n")
        return final_hash


def read_replay(path) -> dict:
    """Parse a log into {header, start_events, ticks, end}; E_PARSE on damage."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as err:
        raise SimError(E.E_IO, f"cannot read {path}: {err}")
    if not lines:
        raise SimError(E.E_PARSE, f"{path}: empty replay")
    records = []
    for i, ln in enumerate(lines):
        try:
            records.append(json.loads(ln))
        except json.JSONDecodeError:
            raise SimError(E.E_PARSE, f"{path}: record {i} is not valid JSON")
    if records[0].get("record") != "header":
        raise SimError(E.E_PARSE, f"{path}: record 0 is not a header")
    if records[0].get("schema_version") != REPLAY_SCHEMA:
        raise SimError(E.E_PARSE, f"{path}: unsupported schema_version")
    if records[-1].get("record") != "end":
        raise SimError(E.E_PARSE, f"{path}: truncated log (no end record)")
    header = records[0]
    start_events: list[dict] = []
    ticks = []
    for i, rec in enumerate(records[1:-1], start=1):
        kind = rec.get("record")
        if kind == "start":
            start_events = rec.get("events", [])
        elif kind == "tick":
            ticks.append(rec)
        else:
            raise SimError(E.E_PARSE, f"{path}: record {i} has unknown kind {kind!r}")
    return {"header": header, "start_events": start_events, "ticks": ticks,
            "end": records[-1]}


def rebuild_world(header: dict) -> tuple[World, TaskSpec | None]:
    scene = SceneSpec.from_dict(header["scene"])
    world = load_scene(scene, seed=header["seed"],
                       tick_duration_ms=header["tick_duration_ms"],
                       deadline_ticks=header["deadline_ticks"])
    for agent in header["agents"]:
        world.add_agent(agent["agent_id"], agent["role"], tuple(agent["capabilities"]),
                        spawn=False)
    task = TaskSpec.from_dict(header["task"]) if header.get("task") else None
    if task is not None:
        world.apply_task(task)
    else:
        for a in world.agents.values():
            world._spawn_agent(a)
    return world, task


def replay(path, verify: bool = True, on_tick=None) -> World:
    """Re-execute a log tick by tick; E_HASH_MISMATCH when states diverge."""
    log = read_replay(path)
    world, _ = rebuild_world(log["header"])
    world.start_episode()
    expect = 0
    for rec in log["ticks"]:
        if rec["t"] != expect:
            raise SimError(E.E_PARSE, f"{path}: expected tick {expect}, found {rec['t']}")
        commands = [(aid, cmd) for aid, cmd in rec["commands"]]
        events = world.step(commands)
        if verify and events != rec["events"]:
            raise SimError(E.E_HASH_MISMATCH,
                           f"{path}: events diverged at tick {rec['t']}")
        if on_tick is not None:
            on_tick(world, rec)
        expect += 1
    if verify and world.state_hash() != log["end"]["final_hash"]:
        raise SimError(E.E_HASH_MISMATCH, f"{path}: final state hash mismatch")
    return world


def export_trajectories(path) -> dict:
    """Trajectory overlay: one polyline per agent plus scene geometry."""
    world = replay(path, verify=True)
    return {
        "scene_id": world.scene.scene_id,
        "grid": list(world.scene.rows),
        "status": world.status,
        "ticks": world.tick,
        "trajectories": {aid: [list(c) for c in traj]
                         for aid, traj in sorted(world.trajectories.items())},
    }
