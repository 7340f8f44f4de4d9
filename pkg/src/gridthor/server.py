"""Session server: role handshake, command dispatch and the tick engine.

One asyncio loop owns everything. All world mutation happens inside the
tick engine; sessions only enqueue commands. Two pacing modes:

* ``lockstep`` — the tick resolves as soon as every bound agent has
  submitted its action for the tick. No wall-clock dependence, so headless
  benchmark runs are both fast and bit-reproducible.
* ``realtime`` — a wall-clock timer fires every tick_duration; whatever
  commands arrived by the boundary are applied. Used for live human play.

Message traffic (send_message/respond) rides along with actions and is
resolved at the same boundary; clients that need deterministic ordering
send message frames before their action frame on the same connection.
"""

from __future__ import annotations

import asyncio
import itertools

from . import errors as E
from .errors import SimError
from .protocol import (PARSE_ERROR_ID, ack_frame, decode_frame, encode_frame, error_frame,
                       make_frame)
from .replay import ReplayRecorder
from .tasks import TaskSpec
from .world import CAPABILITIES, World, load_scene

OUTBOUND_QUEUE_FRAMES = 512
DEFAULT_LOCKSTEP_GRACE_S = 30.0


class Session:
    _ids = itertools.count(1)

    def __init__(self, server: "GridServer", writer_fn, close_fn):
        self.session_id = next(Session._ids)
        self.server = server
        self.role: str | None = None
        self.agent_id: str | None = None
        self.capabilities: tuple[str, ...] = ()
        self.connected_tick = 0
        self.alive = True
        self.outq: asyncio.Queue = asyncio.Queue(maxsize=OUTBOUND_QUEUE_FRAMES)
        self._writer_fn = writer_fn
        self._close_fn = close_fn
        self._push_ids = itertools.count(1)

    def send(self, frame: dict) -> None:
        """Queue a frame; a slow consumer overflows and is dropped (E_LAGGED)."""
        if not self.alive:
            return
        try:
            self.outq.put_nowait(frame)
        except asyncio.QueueFull:
            self.alive = False
            self.outq = asyncio.Queue()  # unblock the writer
            self.outq.put_nowait(error_frame(PARSE_ERROR_ID, E.E_LAGGED,
                                             "outbound queue overflow"))
            self.outq.put_nowait(None)

    def push(self, frame_type: str, payload: dict) -> None:
        self.send(make_frame(next(self._push_ids), frame_type, payload))

    async def writer_loop(self):
        while True:
            frame = await self.outq.get()
            if frame is None:
                break
            try:
                await self._writer_fn(encode_frame(frame))
            except (ConnectionError, OSError):
                break
        self.alive = False
        try:
            await self._close_fn()
        except (ConnectionError, OSError):
            pass


class GridServer:
    """Authoritative server for one world; accepts agent and monitor sessions."""

    def __init__(self, scene, *, seed: int = 0, mode: str = "lockstep",
                 tick_duration_ms: int = 250, deadline_ticks: int = 360,
                 time_scale: float = 1.0, lockstep_grace_s: float = DEFAULT_LOCKSTEP_GRACE_S,
                 scene_library: dict | None = None):
        self.world: World = load_scene(scene, seed=seed, tick_duration_ms=tick_duration_ms,
                                       deadline_ticks=deadline_ticks)
        self.scene_library = scene_library or {}
        self.mode = mode
        self.time_scale = time_scale
        self.lockstep_grace_s = lockstep_grace_s
        self.task: TaskSpec | None = None
        self.sessions: dict[int, Session] = {}
        self.agent_sessions: dict[str, Session] = {}  # agent_id -> session
        self._robot_count = 0
        self._pending_acts: dict[str, tuple[Session, dict]] = {}
        self._pending_comms: list[tuple[str, Session, dict]] = []
        self._batch_ready = asyncio.Event()
        self.recorder: ReplayRecorder | None = None
        self.episode_over = asyncio.Event()
        self.episode_result: dict | None = None
        self.trust_future: asyncio.Future | None = None
        self._tick_task: asyncio.Task | None = None
        self._tcp_server = None
        self.broken: str | None = None

    # ------------------------------------------------------------------
    # lifecycle

    async def start_tcp(self, host: str = "127.0.0.1", port: int = 0) -> tuple[str, int]:
        self._tcp_server = await asyncio.start_server(
            self._handle_tcp, host, port, limit=2 << 20)
        sock = self._tcp_server.sockets[0].getsockname()
        return sock[0], sock[1]

    async def close(self):
        if self._tick_task is not None:
            self._tick_task.cancel()
        for session in list(self.sessions.values()):
            session.alive = False
            try:
                session.outq.put_nowait(None)
            except asyncio.QueueFull:
                pass
        if self._tcp_server is not None:
            self._tcp_server.close()
            await self._tcp_server.wait_closed()

    async def _handle_tcp(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter):
        async def write_bytes(data: bytes):
            writer.write(data)
            await writer.drain()

        async def close_conn():
            writer.close()

        session = Session(self, write_bytes, close_conn)
        self.sessions[session.session_id] = session
        writer_task = asyncio.create_task(session.writer_loop())
        try:
            while session.alive:
                try:
                    line = await reader.readline()
                except (ValueError, ConnectionError):  # oversized or reset
                    session.send(error_frame(PARSE_ERROR_ID, E.E_PARSE, "oversized frame"))
                    continue
                if not line:
                    break
                if line.strip() == b"":
                    continue
                self.handle_line(session, line)
        finally:
            self._drop_session(session)
            try:
                session.outq.put_nowait(None)
            except asyncio.QueueFull:
                pass
            await writer_task

    def _drop_session(self, session: Session):
        session.alive = False
        self.sessions.pop(session.session_id, None)
        if session.agent_id and self.agent_sessions.get(session.agent_id) is session:
            del self.agent_sessions[session.agent_id]
            if self.world.phase == "running" and self.mode == "lockstep":
                self._mark_broken(f"agent {session.agent_id} disconnected")
        self._batch_ready.set()

    def _mark_broken(self, reason: str):
        if self.broken is None and not self.episode_over.is_set():
            self.broken = reason

    # ------------------------------------------------------------------
    # frame handling

    def handle_line(self, session: Session, line: bytes) -> None:
        try:
            frame = decode_frame(line)
        except SimError as err:
            session.send(error_frame(PARSE_ERROR_ID, err.code, err.message))
            return
        self.dispatch(session, frame)

    def dispatch(self, session: Session, frame: dict) -> None:
        fid, ftype, payload = frame["id"], frame["type"], frame["payload"]
        try:
            if ftype == "hello":
                session.send(self._do_hello(session, payload, fid))
                return
            if session.role is None:
                raise SimError(E.E_WRONG_ROLE, "hello required first")
            if ftype == "act":
                self._enqueue_act(session, fid, payload)
                return
            if ftype == "send_message":
                self._enqueue_comm(session, fid, {"comm": "send_message", **payload})
                return
            if ftype == "respond":
                self._enqueue_comm(session, fid, {"comm": "respond", **payload})
                return
            if ftype == "observe":
                session.send(self._do_observe(session, fid))
                return
            if ftype == "query_response":
                session.send(self._do_query(session, fid, payload))
                return
            if ftype == "monitor":
                session.send(self._do_monitor(session, fid))
                return
            if ftype == "config":
                session.send(self._do_config(session, fid, payload))
                return
            raise SimError(E.E_BAD_ARG, f"unknown frame type {ftype!r}")
        except SimError as err:
            session.send(error_frame(fid, err.code, err.message))

    def _do_hello(self, session: Session, payload: dict, fid: int) -> dict:
        if session.role is not None:
            raise SimError(E.E_BAD_ARG, "session already bound")
        role = payload.get("role")
        if role not in ("robot", "human", "monitor", "config"):
            raise SimError(E.E_WRONG_ROLE, f"unknown role {role!r}")
        session.role = role
        session.connected_tick = self.world.tick
        if role in ("robot", "human"):
            if self.world.phase == "running":
                raise SimError(E.E_FORBIDDEN, "cannot join a running episode")
            if role == "human":
                if "human" in self.agent_sessions:
                    raise SimError(E.E_HUMAN_TAKEN, "a human session is already bound")
                agent_id = "human"
                caps = ("manipulate", "navigate")
            else:
                caps = tuple(sorted(payload.get("capabilities", ["navigate"])))
                if not set(caps) <= set(CAPABILITIES):
                    raise SimError(E.E_BAD_ARG, f"bad capabilities {list(caps)}")
                self._robot_count += 1
                agent_id = f"robot_{self._robot_count}"
            self.world.add_agent(agent_id, role, caps)
            session.agent_id = agent_id
            session.capabilities = caps
            self.agent_sessions[agent_id] = session
        ack = ack_frame(fid, {
            "session_id": session.session_id,
            "agent_id": session.agent_id,
            "scene": {
                "scene_id": self.world.scene.scene_id,
                "name": self.world.scene.name,
                "width": self.world.scene.width,
                "height": self.world.scene.height,
                "cell_size": self.world.scene.cell_size,
            },
            "tick_duration_ms": self.world.tick_duration_ms,
            "deadline_ticks": self.world.deadline_ticks,
            "task": self._task_summary(),
        })
        if role == "monitor":
            session.push("push_event", {"kind": "snapshot", "snapshot": self.world.monitor_snapshot()})
        return ack

    def _task_summary(self) -> dict | None:
        if self.task is None:
            return None
        return {
            "task_id": self.task.task_id,
            "goal": self.task.goal.to_dict(),
            "nl_description": self.task.nl_description,
        }

    def _require_agent(self, session: Session) -> str:
        if session.role not in ("robot", "human") or session.agent_id is None:
            raise SimError(E.E_WRONG_ROLE, f"{session.role} sessions have no agent")
        return session.agent_id

    def _enqueue_act(self, session: Session, fid: int, payload: dict) -> None:
        agent_id = self._require_agent(session)
        phase = self.world.phase
        if phase == "done":
            raise SimError(E.E_TASK_OVER, "episode is over")
        if phase != "running":
            raise SimError(E.E_FORBIDDEN, "episode has not started")
        if agent_id in self._pending_acts:
            raise SimError(E.E_RATE_LIMIT, "one action per tick")
        self._pending_acts[agent_id] = (session, {"fid": fid, **payload})
        self._batch_ready.set()

    def _enqueue_comm(self, session: Session, fid: int, cmd: dict) -> None:
        agent_id = self._require_agent(session)
        if cmd["comm"] == "send_message" and session.role != "robot":
            raise SimError(E.E_WRONG_ROLE, "only robots send messages")
        if cmd["comm"] == "respond" and session.role != "human":
            raise SimError(E.E_WRONG_ROLE, "only the human responds")
        phase = self.world.phase
        if phase == "done":
            raise SimError(E.E_TASK_OVER, "episode is over")
        if phase != "running":
            raise SimError(E.E_FORBIDDEN, "episode has not started")
        if any(a == agent_id for a, _, _, _ in self._pending_comms):
            raise SimError(E.E_RATE_LIMIT, "one message op per tick")
        self._pending_comms.append((agent_id, session, fid, dict(cmd)))

    def _do_observe(self, session: Session, fid: int) -> dict:
        agent_id = self._require_agent(session)
        return ack_frame(fid, {"observation": self.world.observe(agent_id)})

    def _do_query(self, session: Session, fid: int, payload: dict) -> dict:
        agent_id = self._require_agent(session)
        if session.role != "robot":
            raise SimError(E.E_WRONG_ROLE, "query_response is for robots")
        status = self.world.query_response(agent_id, payload.get("message_id"))
        return ack_frame(fid, {"message_id": payload.get("message_id"), "status": status})

    def _do_monitor(self, session: Session, fid: int) -> dict:
        if session.role not in ("monitor", "config"):
            raise SimError(E.E_WRONG_ROLE, "monitor access requires monitor/config role")
        return ack_frame(fid, {"snapshot": self.world.monitor_snapshot()})

    def _do_config(self, session: Session, fid: int, payload: dict) -> dict:
        op = payload.get("op")
        if session.role == "human" and op == "trust":
            return self._accept_trust(fid, payload)
        if session.role != "config":
            raise SimError(E.E_WRONG_ROLE, "config frames require the config role")
        if op == "select_scene":
            if self.world.phase == "running":
                raise SimError(E.E_FORBIDDEN, "cannot reconfigure a running episode")
            scene = self.scene_library.get(payload.get("scene_id"))
            if scene is None:
                raise SimError(E.E_BAD_ARG, f"unknown scene {payload.get('scene_id')!r}")
            self._swap_scene(scene)
            return ack_frame(fid, {"scene_id": scene.scene_id})
        if op == "apply_task":
            if self.world.phase == "running":
                raise SimError(E.E_FORBIDDEN, "cannot reconfigure a running episode")
            task = TaskSpec.from_dict(payload["task"])
            if task.scene_id != self.world.scene.scene_id:
                scene = self.scene_library.get(task.scene_id)
                if scene is None:
                    raise SimError(E.E_BAD_ARG, f"task needs unknown scene {task.scene_id!r}")
                self._swap_scene(scene)
            self._purge_orphan_agents()
            self.world.apply_task(task)
            self.task = task
            self.broken = None
            for s in self.sessions.values():
                if s.role in ("robot", "human", "monitor"):
                    s.push("push_event", {"kind": "task_applied", "task": self._task_summary()})
            return ack_frame(fid, {"task_id": task.task_id})
        if op == "run":
            if self.world.phase == "running":
                raise SimError(E.E_FORBIDDEN, "episode already running")
            self.episode_over = asyncio.Event()
            self.episode_result = None
            self.trust_future = asyncio.get_event_loop().create_future()
            self._start_episode()
            return ack_frame(fid, {"tick": self.world.tick})
        if op == "teleport":
            events = self.world.teleport(payload["agent_id"], tuple(payload["position"]),
                                         payload.get("heading", 0), privileged=True)
            return ack_frame(fid, {"events": events})
        if op == "trust":
            return self._accept_trust(fid, payload)
        raise SimError(E.E_BAD_ARG, f"unknown config op {op!r}")

    def _accept_trust(self, fid: int, payload: dict) -> dict:
        if self.world.phase != "done":
            raise SimError(E.E_FORBIDDEN, "trust is collected after the episode")
        score = payload.get("score")
        if not isinstance(score, int) or isinstance(score, bool) or not 1 <= score <= 7:
            raise SimError(E.E_BAD_ARG, "trust score must be an integer in 1..7")
        if self.trust_future is not None and not self.trust_future.done():
            self.trust_future.set_result(score)
        return ack_frame(fid, {"score": score})

    def _swap_scene(self, scene):
        """Fresh world for a new scene; connected agents carry over."""
        old = self.world
        self.world = load_scene(scene, seed=old.rng_seed,
                                tick_duration_ms=old.tick_duration_ms,
                                deadline_ticks=old.deadline_ticks)
        self.task = None
        for aid, session in self.agent_sessions.items():
            agent = old.agents.get(aid)
            caps = agent.capabilities if agent else session.capabilities
            self.world.add_agent(aid, session.role, caps, spawn=True)

    def _purge_orphan_agents(self):
        """Drop agents whose session has gone away before the next episode."""
        orphans = [aid for aid in self.world.agents if aid not in self.agent_sessions]
        for aid in orphans:
            del self.world.agents[aid]
            self.world.trajectories.pop(aid, None)

    # ------------------------------------------------------------------
    # tick engine

    def _start_episode(self):
        self.recorder = ReplayRecorder(self.world, self.task)
        start_events = self.world.start_episode()
        self.recorder.record_start(start_events)
        self._pending_acts.clear()
        self._pending_comms.clear()
        self._push_tick_state(start_events)
        if self.world.status != "running":
            self._finish_episode()
            return
        self._tick_task = asyncio.create_task(
            self._lockstep_loop() if self.mode == "lockstep" else self._realtime_loop())

    def roster(self) -> list[str]:
        return [aid for aid in self.world.agents if aid in self.agent_sessions]

    async def _lockstep_loop(self):
        loop = asyncio.get_event_loop()
        while self.world.status == "running" and self.broken is None:
            deadline = loop.time() + self.lockstep_grace_s
            while True:
                roster = self.roster()
                if not roster:
                    self._mark_broken("no agent sessions")
                    break
                if all(aid in self._pending_acts for aid in roster):
                    break
                self._batch_ready.clear()
                remaining = deadline - loop.time()
                if remaining <= 0:
                    self._mark_broken("lockstep grace period expired")
                    break
                try:
                    await asyncio.wait_for(self._batch_ready.wait(), timeout=remaining)
                except asyncio.TimeoutError:
                    self._mark_broken("lockstep grace period expired")
                    break
            if self.broken is not None:
                break
            self._resolve_tick()
        self._finish_episode()

    async def _realtime_loop(self):
        period = (self.world.tick_duration_ms / 1000.0) * self.time_scale
        while self.world.status == "running" and self.broken is None:
            await asyncio.sleep(period)
            self._resolve_tick()
        self._finish_episode()

    def _resolve_tick(self):
        tick = self.world.tick
        # world agent order makes the batch independent of arrival races:
        # message ops first, then actions, each in roster order
        batch: list[tuple[str, Session, int, dict]] = []
        comms = {aid: (session, fid, cmd) for aid, session, fid, cmd in self._pending_comms}
        for aid in self.world.agents:
            if aid in comms:
                session, fid, cmd = comms[aid]
                batch.append((aid, session, fid, cmd))
        for aid in self.world.agents:
            got = self._pending_acts.get(aid)
            if got is not None:
                session, payload = got
                cmd = {k: v for k, v in payload.items() if k != "fid"}
                batch.append((aid, session, payload["fid"], cmd))
        self._pending_acts.clear()
        self._pending_comms.clear()

        commands = [(aid, cmd) for aid, _, _, cmd in batch]
        events = self.world.step(commands)
        if self.recorder is not None:
            self.recorder.record_tick(tick, commands, events)

        # one ack or error per submitted frame; failures are matched by the
        # command object identity step() echoed into the event
        failed = {id(ev["command"]): ev for ev in events if ev["kind"] == "action_failed"}
        for aid, session, fid, cmd in batch:
            ev = failed.get(id(cmd))
            if ev is not None:
                session.send(error_frame(fid, ev["code"], ev["detail"]))
            else:
                session.send(ack_frame(fid, {"tick": tick, "applied": True}))
        self._push_tick_state(events)

    def _push_tick_state(self, events: list[dict]):
        world = self.world
        status_payload = {"tick": world.tick, "status": world.status}
        for aid, session in list(self.agent_sessions.items()):
            session.push("push_tick", status_payload)
            try:
                obs = world.observe(aid)
            except SimError:
                continue
            session.push("push_observation", {"observation": obs})
        human = self.agent_sessions.get("human")
        if human is not None:
            for ev in events:
                if ev["kind"] == "message_sent":
                    msg = world.get_message(ev["message_id"])
                    human.push("push_message", {"kind": "message",
                                                "message": msg.to_dict(with_snapshot=True)})
                elif ev["kind"] == "message_resolved" and ev["status"] == "confirmed":
                    msg = world.get_message(ev["message_id"])
                    sender = world.agents.get(msg.sender)
                    responder = world.agents.get("human")
                    human.push("push_message", {"kind": "map", "map": {
                        "message_id": msg.message_id,
                        "human_pose": {"position": list(responder.position),
                                       "heading": responder.heading},
                        "robot_pose": {"position": list(sender.position),
                                       "heading": sender.heading} if sender.position else None,
                        "estimated_position": list(msg.estimated_position),
                    }})
        if events:
            for session in self.sessions.values():
                if session.role in ("monitor", "config"):
                    session.push("push_event", {"tick": world.tick, "status": world.status,
                                                "events": events})

    def _finish_episode(self):
        if self.episode_over.is_set():
            return
        world = self.world
        confirmed = sum(1 for m in world.messages if m.status == "confirmed")
        self.episode_result = {
            "kind": "episode_end",
            "status": world.status,
            "broken": self.broken,
            "ticks": world.tick,
            "success_tick": world.success_tick,
            "messages_sent": len(world.messages),
            "messages_confirmed": confirmed,
            "final_hash": world.state_hash(),
            "task_id": world.task_id,
        }
        for session in self.sessions.values():
            if session.role is not None:
                session.push("push_event", self.episode_result)
        self.episode_over.set()
