"""Browser transport: static assets over HTTP plus frames over WebSocket.

The UI speaks the exact same frame vocabulary as the TCP listener, one
JSON object per WebSocket text message. The implementation is a minimal
RFC6455 subset (text/close/ping, no extensions, client-masked frames),
which keeps the tick loop free of web-framework machinery.
"""

from __future__ import annotations

import asyncio
import base64
import hashlib
import json
from pathlib import Path

from . import errors as E
from .errors import SimError
from .protocol import PARSE_ERROR_ID, decode_frame, error_frame
from .server import GridServer, Session

WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"

CONTENT_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".map": "application/json",
    ".json": "application/json",
    ".png": "image/png",
    ".svg": "image/svg+xml",
}

FALLBACK_PAGE = b"""<!doctype html>
<html><head><meta charset="utf-8"><title>gridthor</title></head>
<body><h1>gridthor server</h1>
<p>No web client build found. Build the frontend (see frontend/README.md)
and pass --web-root, or connect an agent over the TCP listener.</p>
</body></html>"""


def ws_accept_key(key: str) -> str:
    digest = hashlib.sha1((key + WS_GUID).encode("ascii")).digest()
    return base64.b64encode(digest).decode("ascii")


async def read_ws_message(reader: asyncio.StreamReader) -> str | None:
    """One text message (handles ping/close); None when the peer leaves."""
    while True:
        head = await reader.readexactly(2)
        fin_op, mask_len = head[0], head[1]
        opcode = fin_op & 0x0F
        masked = bool(mask_len & 0x80)
        length = mask_len & 0x7F
        if length == 126:
            length = int.from_bytes(await reader.readexactly(2), "big")
        elif length == 127:
            length = int.from_bytes(await reader.readexactly(8), "big")
        mask = await reader.readexactly(4) if masked else b"\x00" * 4
        payload = bytearray(await reader.readexactly(length))
        if masked:
            for i in range(length):
                payload[i] ^= mask[i % 4]
        if opcode == 0x1:  # text
            return payload.decode("utf-8", errors="replace")
        if opcode == 0x8:  # close
            return None
        if opcode == 0x9:  # ping -> pong handled by caller via exception-free write
            raise _Ping(bytes(payload))
        # ignore continuation/binary/pong


class _Ping(Exception):
    def __init__(self, payload: bytes):
        self.payload = payload


def ws_frame(opcode: int, payload: bytes) -> bytes:
    header = bytearray([0x80 | opcode])
    n = len(payload)
    if n < 126:
        header.append(n)
    elif n < 1 << 16:
        header.append(126)
        header += n.to_bytes(2, "big")
    else:
        header.append(127)
        header += n.to_bytes(8, "big")
    return bytes(header) + payload


class WebTransport:
    """Serves the UI bundle and adapts WebSocket clients into sessions."""

    def __init__(self, grid_server: GridServer, web_root: Path | None = None):
        self.grid = grid_server
        self.web_root = Path(web_root) if web_root else None
        self._server = None

    async def start(self, host: str = "127.0.0.1", port: int = 0) -> tuple[str, int]:
        self._server = await asyncio.start_server(self._handle, host, port, limit=2 << 20)
        sock = self._server.sockets[0].getsockname()
        return sock[0], sock[1]

    async def close(self):
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()

    async def _handle(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter):
        try:
            request = await reader.readuntil(b"\r\n\r\n")
        except (asyncio.IncompleteReadError, asyncio.LimitOverrunError):
            writer.close()
            return
        lines = request.decode("latin-1").split("\r\n")
        try:
            method, target, _ = lines[0].split(" ", 2)
        except ValueError:
            writer.close()
            return
        headers = {}
        for line in lines[1:]:
            if ":" in line:
                k, v = line.split(":", 1)
                headers[k.strip().lower()] = v.strip()

        if method == "GET" and target.split("?")[0] == "/ws" \
                and "websocket" in headers.get("upgrade", "").lower():
            await self._serve_ws(reader, writer, headers)
            return
        if method == "GET":
            await self._serve_static(writer, target.split("?")[0])
            return
        writer.write(b"HTTP/1.1 405 Method Not Allowed\r\nContent-Length: 0\r\n\r\n")
        await writer.drain()
        writer.close()

    async def _serve_static(self, writer, path: str):
        if path in ("/", "/index.html"):
            path = "/index.html"
        body, ctype = None, "text/html; charset=utf-8"
        if self.web_root is not None:
            candidate = (self.web_root / path.lstrip("/")).resolve()
            try:
                candidate.relative_to(self.web_root.resolve())
                if candidate.is_file():
                    body = candidate.read_bytes()
                    ctype = CONTENT_TYPES.get(candidate.suffix, "application/octet-stream")
            except (ValueError, OSError):
                body = None
        if body is None and path == "/index.html":
            body = FALLBACK_PAGE
        if body is None:
            writer.write(b"HTTP/1.1 404 Not Found\r\nContent-Length: 0\r\n\r\n")
        else:
            head = (f"HTTP/1.1 200 OK\r\nContent-Type: {ctype}\r\n"
                    f"Content-Length: {len(body)}\r\nCache-Control: no-store\r\n\r\n")
            writer.write(head.encode("ascii") + body)
        await writer.drain()
        writer.close()

    async def _serve_ws(self, reader, writer, headers):
        key = headers.get("sec-websocket-key", "")
        accept = ws_accept_key(key)
        writer.write((
            "HTTP/1.1 101 Switching Protocols\r\n"
            "Upgrade: websocket\r\nConnection: Upgrade\r\n"
            f"Sec-WebSocket-Accept: {accept}\r\n\r\n").encode("ascii"))
        await writer.drain()

        async def write_frame_bytes(data: bytes):
            # data is one newline-terminated JSON frame; send without newline
            writer.write(ws_frame(0x1, data.rstrip(b"\n")))
            await writer.drain()

        async def close_conn():
            try:
                writer.write(ws_frame(0x8, b""))
                await writer.drain()
            except (ConnectionError, OSError):
                pass
            writer.close()

        session = Session(self.grid, write_frame_bytes, close_conn)
        self.grid.sessions[session.session_id] = session
        writer_task = asyncio.create_task(session.writer_loop())
        try:
            while session.alive:
                try:
                    message = await read_ws_message(reader)
                except _Ping as ping:
                    writer.write(ws_frame(0xA, ping.payload))
                    await writer.drain()
                    continue
                except (asyncio.IncompleteReadError, ConnectionError):
                    break
                if message is None:
                    break
                try:
                    frame = decode_frame(message)
                except SimError as err:
                    session.send(error_frame(PARSE_ERROR_ID, err.code, err.message))
                    continue
                self.grid.dispatch(session, frame)
        finally:
            self.grid._drop_session(session)
            try:
                session.outq.put_nowait(None)
            except asyncio.QueueFull:
                pass
            await writer_task
