"""Protocol client and the runner that drives a policy over the wire."""

from __future__ import annotations

import asyncio
import itertools

from .errors import SimError
from .protocol import decode_frame, encode_frame, make_frame
from .policies import PASS


class ProtocolError(Exception):
    def __init__(self, code: str, message: str):
        self.code = code
        super().__init__(f"{code}: {message}")


class ProtocolClient:
    """Newline-JSON client: request/ack correlation plus a push queue."""

    def __init__(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter):
        self.reader = reader
        self.writer = writer
        self.pushes: asyncio.Queue = asyncio.Queue()
        self._ids = itertools.count(1)
        self._waiters: dict[int, asyncio.Future] = {}
        self._reader_task = asyncio.create_task(self._read_loop())
        self.closed = asyncio.Event()

    @classmethod
    async def connect(cls, host: str, port: int) -> "ProtocolClient":
        reader, writer = await asyncio.open_connection(host, port, limit=2 << 20)
        return cls(reader, writer)

    async def _read_loop(self):
        try:
            while True:
                line = await self.reader.readline()
                if not line:
                    break
                try:
                    frame = decode_frame(line)
                except SimError:
                    continue
                if frame["type"] in ("ack", "error"):
                    waiter = self._waiters.pop(frame["id"], None)
                    if waiter is not None and not waiter.done():
                        waiter.set_result(frame)
                else:
                    await self.pushes.put(frame)
        except (ConnectionError, asyncio.IncompleteReadError, OSError):
            pass
        finally:
            self.closed.set()
            await self.pushes.put(None)
            for waiter in self._waiters.values():
                if not waiter.done():
                    waiter.set_exception(ConnectionError("connection closed"))
            self._waiters.clear()

    def send_nowait(self, frame_type: str, payload: dict | None = None) -> int:
        fid = next(self._ids)
        self.writer.write(encode_frame(make_frame(fid, frame_type, payload)))
        return fid

    async def request(self, frame_type: str, payload: dict | None = None) -> dict:
        fid = next(self._ids)
        fut = asyncio.get_event_loop().create_future()
        self._waiters[fid] = fut
        self.writer.write(encode_frame(make_frame(fid, frame_type, payload)))
        await self.writer.drain()
        reply = await fut
        if reply["type"] == "error":
            raise ProtocolError(reply["payload"]["code"], reply["payload"].get("message", ""))
        return reply["payload"]

    async def hello(self, role: str, capabilities: list[str] | None = None) -> dict:
        payload: dict = {"role": role}
        if capabilities is not None:
            payload["capabilities"] = capabilities
        return await self.request("hello", payload)

    async def close(self):
        self._reader_task.cancel()
        try:
            self.writer.close()
            await self.writer.wait_closed()
        except (ConnectionError, OSError):
            pass


async def run_policy_client(host: str, port: int, role: str, policy_factory,
                            capabilities: list[str] | None = None,
                            ready: asyncio.Event | None = None,
                            persist: bool = False) -> None:
    """Drive one policy client until the episode ends.

    `policy_factory(hello_ack)` builds the policy once the server has told
    us who we are. Per tick the policy's commands go out message-ops first
    and the action last: the action frame is the lockstep commit. With
    persist=True the runner stays connected across episodes, rebuilding its
    policy whenever the server applies a new task.
    """
    client = await ProtocolClient.connect(host, port)
    try:
        ack = await client.hello(role, capabilities)
        policy = policy_factory(ack)
        if ready is not None:
            ready.set()
        while True:
            frame = await client.pushes.get()
            if frame is None:
                return
            ftype, payload = frame["type"], frame["payload"]
            if ftype == "push_observation":
                obs = payload["observation"]
                commands = policy.on_observation(obs)
                comms = [c for c in commands if "comm" in c]
                acts = [c for c in commands if "action" in c]
                for c in comms:
                    op = c.pop("comm")
                    client.send_nowait(op if op in ("send_message", "respond") else "act", c)
                client.send_nowait("act", acts[0] if acts else dict(PASS))
                await client.writer.drain()
            elif ftype == "push_message" and hasattr(policy, "on_message_push"):
                policy.on_message_push(payload, tick=getattr(policy, "_last_tick", 0))
            elif ftype == "push_tick":
                policy._last_tick = payload["tick"]
            elif ftype == "push_event":
                kind = payload.get("kind")
                if kind == "episode_end" and not persist:
                    return
                if kind == "task_applied" and persist:
                    policy = policy_factory(ack)
    finally:
        await client.close()
