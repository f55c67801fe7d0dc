"""Versioned binary snapshots.

Layout: ``magic (4) || version (2) || crc32 (4) || zlib(canonical JSON)``.
Bytes values inside the JSON document are hex strings; the encoder sorts
keys so equal states always produce identical blobs.
"""

from __future__ import annotations

import json
import struct
import zlib
from typing import Any

HEADER = struct.Struct(">4sHI")


class SnapshotError(ValueError):
    pass


def dump_blob(magic: bytes, version: int, doc: Any) -> bytes:
    payload = zlib.compress(
        json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8"), 9
    )
    return HEADER.pack(magic, version, zlib.crc32(payload)) + payload


def load_blob(magic: bytes, version: int, data: bytes) -> Any:
    if len(data) < HEADER.size:
        raise SnapshotError("snapshot truncated")
    got_magic, got_version, crc = HEADER.unpack(data[:HEADER.size])
    if got_magic != magic:
        raise SnapshotError(f"not a {magic.decode()} snapshot")
    if got_version != version:
        raise SnapshotError(f"unsupported snapshot version {got_version} (expected {version})")
    payload = data[HEADER.size:]
    if zlib.crc32(payload) != crc:
        raise SnapshotError("snapshot checksum mismatch")
    try:
        return json.loads(zlib.decompress(payload))
    except (zlib.error, ValueError) as exc:
        raise SnapshotError("snapshot payload is corrupt") from exc
