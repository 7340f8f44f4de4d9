"""Wire format: newline-delimited UTF-8 JSON frames.

Every frame is one object per line with mandatory fields ``id`` (int) and
``type`` (str) plus a type-specific ``payload`` object. Unknown fields are
ignored on receipt. No frame may exceed 1 MiB.
"""

from __future__ import annotations

import json

from . import errors as E
from .errors import SimError

MAX_FRAME_BYTES = 1 << 20

REQUEST_TYPES = ("hello", "act", "observe", "send_message", "respond",
                 "query_response", "monitor", "config")
REPLY_TYPES = ("ack", "error")
PUSH_TYPES = ("push_tick", "push_observation", "push_message", "push_event")
FRAME_TYPES = REQUEST_TYPES + REPLY_TYPES + PUSH_TYPES

PARSE_ERROR_ID = -1  # unparseable lines cannot echo a correlation id


def make_frame(frame_id: int, frame_type: str, payload: dict | None = None) -> dict:
    return {"id": frame_id, "type": frame_type, "payload": payload or {}}


def encode_frame(frame: dict) -> bytes:
    data = json.dumps(frame, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    out = data.encode("utf-8") + b"\n"
    if len(out) > MAX_FRAME_BYTES:
        raise SimError(E.E_PARSE, f"frame of {len(out)} bytes exceeds 1 MiB")
    return out


def decode_frame(line: bytes | str) -> dict:
    """Parse one line into a frame; SimError(E_PARSE) on any malformation."""
    if isinstance(line, bytes):
        if len(line) > MAX_FRAME_BYTES:
            raise SimError(E.E_PARSE, "frame exceeds 1 MiB")
        try:
            line = line.decode("utf-8")
        except UnicodeDecodeError as err:
            raise SimError(E.E_PARSE, f"bad UTF-8: {err}")
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as err:
        raise SimError(E.E_PARSE, f"bad JSON: {err.msg}")
    if not isinstance(obj, dict):
        raise SimError(E.E_PARSE, "frame is not an object")
    if not isinstance(obj.get("id"), int) or isinstance(obj.get("id"), bool):
        raise SimError(E.E_PARSE, "missing integer 'id'")
    ftype = obj.get("type")
    if not isinstance(ftype, str):
        raise SimError(E.E_PARSE, "missing string 'type'")
    payload = obj.get("payload", {})
    if not isinstance(payload, dict):
        raise SimError(E.E_PARSE, "'payload' is not an object")
    return {"id": obj["id"], "type": ftype, "payload": payload}


def error_frame(frame_id: int, code: str, message: str = "") -> dict:
    return make_frame(frame_id, "error", {"code": code, "message": message or code})


def ack_frame(frame_id: int, payload: dict | None = None) -> dict:
    return make_frame(frame_id, "ack", payload)
