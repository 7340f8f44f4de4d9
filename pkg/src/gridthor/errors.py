"""Error codes shared by the world, protocol and tooling layers."""

from __future__ import annotations

E_BAD_SCENE = "E_BAD_SCENE"
E_BAD_TASK = "E_BAD_TASK"
E_BAD_ARG = "E_BAD_ARG"
E_OUT_OF_RANGE = "E_OUT_OF_RANGE"
E_COLLISION = "E_COLLISION"
E_ALREADY_HELD = "E_ALREADY_HELD"
E_NOT_PICKABLE = "E_NOT_PICKABLE"
E_NOT_HELD = "E_NOT_HELD"
E_CLOSED = "E_CLOSED"
E_NOT_OPENABLE = "E_NOT_OPENABLE"
E_NO_CAPABILITY = "E_NO_CAPABILITY"
E_NO_AGENT = "E_NO_AGENT"
E_FORBIDDEN = "E_FORBIDDEN"
E_RATE_LIMIT = "E_RATE_LIMIT"
E_NO_PENDING_MESSAGE = "E_NO_PENDING_MESSAGE"
E_ALREADY_RESOLVED = "E_ALREADY_RESOLVED"
E_NO_SUCH_MESSAGE = "E_NO_SUCH_MESSAGE"
E_PARSE = "E_PARSE"
E_DUP_TRIPLET = "E_DUP_TRIPLET"
E_UNKNOWN_CATEGORY = "E_UNKNOWN_CATEGORY"
E_NO_SPACE = "E_NO_SPACE"
E_IO = "E_IO"
E_WRONG_ROLE = "E_WRONG_ROLE"
E_HUMAN_TAKEN = "E_HUMAN_TAKEN"
E_TASK_OVER = "E_TASK_OVER"
E_LAGGED = "E_LAGGED"
E_UNREACHABLE = "E_UNREACHABLE"
E_CLIENT_CRASH = "E_CLIENT_CRASH"
E_HASH_MISMATCH = "E_HASH_MISMATCH"


class SimError(Exception):
    """An operation failed with a stable error code.

    Action failures inside a tick are caught by the step loop and turned
    into error events; direct library calls see the exception.
    """

    def __init__(self, code: str, message: str = ""):
        self.code = code
        self.message = message or code
        super().__init__(f"{code}: {self.message}" if message else code)
