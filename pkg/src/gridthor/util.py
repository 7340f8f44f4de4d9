"""Canonical serialization and stable seed derivation."""

from __future__ import annotations

import hashlib
import json


def canonical_dumps(obj) -> str:
    """JSON with stable key order and no whitespace; byte-identical across runs."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def sha256_hex(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def stable_seed(*parts) -> int:
    """Derive a 63-bit seed from arbitrary JSON-serializable parts.

    Unlike hash(), this is stable across processes and platforms.
    """
    digest = hashlib.sha256(canonical_dumps(list(parts)).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") & 0x7FFF_FFFF_FFFF_FFFF
