"""Frame layout shared by tags and readers.

Every frame is ``type (1) || body length (2, big-endian) || body``. Bodies
that carry method parameters or results are padded to a fixed capacity so
that honest and decoy frames of one type always have the same length.
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass

from .crypto.group import GroupParams
from .crypto.symmetric import BLOCK, MAC_SIZE, TOKEN_SIZE, auth_ciphertext_len

DOMAIN_ID_SIZE = 16
NONCE_SIZE = 16
SESSION_HALF_SIZE = 16
EPOCH_SIZE = 4
TIME_SIZE = 8
COUNTER_SIZE = 4
MAX_ACCESS_ENTRIES = 8
VOID_RESULT_SIZE = 16
STOP_MARKER = b"STOP"
NO_DOMAIN = bytes(DOMAIN_ID_SIZE)
NO_TOKEN = bytes(TOKEN_SIZE)


class FrameError(ValueError):
    pass


class MsgType(enum.IntEnum):
    HELLO = 0x01
    HELLO_REPLY = 0x02
    AUTH = 0x03
    AUTH_REPLY = 0x04
    CALL_HEADER = 0x05
    CALL_PARAMS = 0x06
    CALL_RESULT = 0x07
    STOP = 0x08


AUTHENTICATED_TYPES = frozenset(
    {MsgType.AUTH, MsgType.CALL_HEADER, MsgType.CALL_PARAMS, MsgType.CALL_RESULT, MsgType.STOP}
)


def frame(kind: MsgType, body: bytes) -> bytes:
    if len(body) > 0xFFFF:
        raise FrameError("frame body too long")
    return struct.pack(">BH", kind, len(body)) + body


def parse_frame(data: bytes) -> tuple[MsgType, bytes]:
    if len(data) < 3:
        raise FrameError("truncated frame header")
    kind, length = struct.unpack(">BH", data[:3])
    if len(data) != 3 + length:
        raise FrameError("frame length mismatch")
    try:
        return MsgType(kind), data[3:]
    except ValueError:
        raise FrameError(f"unknown message type {kind:#x}") from None


def payload_capacity(group: GroupParams) -> int:
    """Fixed size of the parameter/result area of call frames."""
    entry = 2 + DOMAIN_ID_SIZE + 2 + EPOCH_SIZE + 2 + 4 * group.width
    return max(512, 64 + MAX_ACCESS_ENTRIES * entry)


def fit_payload(data: bytes, capacity: int) -> bytes:
    if len(data) > capacity - 2:
        raise FrameError(f"payload of {len(data)} bytes exceeds capacity {capacity - 2}")
    return struct.pack(">H", len(data)) + data + bytes(capacity - 2 - len(data))


def unfit_payload(blob: bytes) -> bytes:
    (n,) = struct.unpack(">H", blob[:2])
    if n > len(blob) - 2:
        raise FrameError("payload length exceeds area")
    return blob[2:2 + n]


def pack_fields(*fields: bytes) -> bytes:
    return b"".join(struct.pack(">H", len(f)) + f for f in fields)


def unpack_fields(data: bytes) -> list[bytes]:
    out, i = [], 0
    while i < len(data):
        if i + 2 > len(data):
            raise FrameError("truncated field length")
        (n,) = struct.unpack(">H", data[i:i + 2])
        if i + 2 + n > len(data):
            raise FrameError("truncated field")
        out.append(data[i + 2:i + 2 + n])
        i += 2 + n
    return out


def u32(n: int) -> bytes:
    return struct.pack(">I", n)


def u64(n: int) -> bytes:
    return struct.pack(">Q", n)


def read_u32(b: bytes) -> int:
    return struct.unpack(">I", b)[0]


def read_u64(b: bytes) -> int:
    return struct.unpack(">Q", b)[0]


# -- per-message plaintext layouts -------------------------------------------

def hello_reply_len(group: GroupParams) -> int:
    return 4 * group.width + EPOCH_SIZE + NONCE_SIZE


def auth_plaintext_len(group: GroupParams) -> int:
    return 4 * group.width + EPOCH_SIZE + NONCE_SIZE + NONCE_SIZE + TIME_SIZE + SESSION_HALF_SIZE


AUTH_REPLY_PLAINTEXT_LEN = NONCE_SIZE + SESSION_HALF_SIZE
AUTH_REPLY_LEN = BLOCK + AUTH_REPLY_PLAINTEXT_LEN
HEADER_PLAINTEXT_LEN = COUNTER_SIZE + 4 + 4 + TIME_SIZE + TOKEN_SIZE


def auth_len(group: GroupParams) -> int:
    return auth_ciphertext_len(auth_plaintext_len(group))


def call_body_len(group: GroupParams) -> int:
    return auth_ciphertext_len(COUNTER_SIZE + payload_capacity(group))


HEADER_LEN = auth_ciphertext_len(HEADER_PLAINTEXT_LEN)
STOP_LEN = auth_ciphertext_len(len(STOP_MARKER))


@dataclass(frozen=True)
class AuthPlaintext:
    encid: bytes
    epoch: int
    r: bytes
    q: bytes
    delta: int
    s: bytes

    def to_bytes(self) -> bytes:
        return self.encid + u32(self.epoch) + self.r + self.q + u64(self.delta) + self.s

    @classmethod
    def from_bytes(cls, group: GroupParams, data: bytes) -> "AuthPlaintext":
        if len(data) != auth_plaintext_len(group):
            raise FrameError("bad authentication plaintext length")
        w4 = 4 * group.width
        i = w4
        epoch = read_u32(data[i:i + 4]); i += 4
        r = data[i:i + 16]; i += 16
        q = data[i:i + 16]; i += 16
        delta = read_u64(data[i:i + 8]); i += 8
        return cls(data[:w4], epoch, r, q, delta, data[i:i + 16])


@dataclass(frozen=True)
class CallHeader:
    counter: int
    class_id: int
    method: int
    expiry: int
    token: bytes

    def to_bytes(self) -> bytes:
        return u32(self.counter) + u32(self.class_id) + u32(self.method) + u64(self.expiry) + self.token

    @classmethod
    def from_bytes(cls, data: bytes) -> "CallHeader":
        if len(data) != HEADER_PLAINTEXT_LEN:
            raise FrameError("bad call header length")
        return cls(read_u32(data[0:4]), read_u32(data[4:8]), read_u32(data[8:12]),
                   read_u64(data[12:20]), data[20:20 + TOKEN_SIZE])


# -- shapes ------------------------------------------------------------------

@dataclass(frozen=True)
class FrameShape:
    kind: int
    length: int
    boundaries: tuple[int, ...]


def frame_shape(data: bytes) -> FrameShape:
    """Type byte, total length and field boundaries (absolute offsets)."""
    kind, body = parse_frame(data)
    n = len(body)
    end = 3 + n
    if kind is MsgType.HELLO:
        bounds = (3, end)
    elif kind is MsgType.HELLO_REPLY:
        w, rem = divmod(n - EPOCH_SIZE - NONCE_SIZE, 4)
        if rem or w <= 0:
            raise FrameError("malformed hello reply")
        bounds = tuple(3 + i * w for i in range(5)) + (3 + 4 * w + EPOCH_SIZE, end)
    elif kind is MsgType.AUTH_REPLY:
        bounds = (3, 3 + BLOCK, end)
    else:
        if n < BLOCK + MAC_SIZE:
            raise FrameError("malformed authenticated frame")
        bounds = (3, 3 + BLOCK, end - MAC_SIZE, end)
    return FrameShape(int(kind), len(data), bounds)


# -- method argument encodings -----------------------------------------------

def encode_record(fields: dict[str, bytes]) -> bytes:
    parts: list[bytes] = []
    for name in sorted(fields):
        parts += [name.encode("utf-8"), fields[name]]
    return pack_fields(*parts)


def decode_record(data: bytes) -> dict[str, bytes]:
    parts = unpack_fields(data)
    if len(parts) % 2:
        raise FrameError("odd number of record fields")
    return {parts[i].decode("utf-8"): parts[i + 1] for i in range(0, len(parts), 2)}


def encode_id_list(entries: list[tuple[bytes, int, bytes]]) -> bytes:
    """``(domain id, epoch, encrypted id bytes)`` triples."""
    parts: list[bytes] = []
    for domain, epoch, encid in entries:
        parts += [domain, u32(epoch), encid]
    return pack_fields(*parts)


def decode_id_list(data: bytes) -> list[tuple[bytes, int, bytes]]:
    parts = unpack_fields(data)
    if len(parts) % 3:
        raise FrameError("id list is not a sequence of triples")
    out = []
    for i in range(0, len(parts), 3):
        domain, epoch, encid = parts[i:i + 3]
        if len(domain) != DOMAIN_ID_SIZE or len(epoch) != EPOCH_SIZE:
            raise FrameError("malformed id list entry")
        out.append((domain, read_u32(epoch), encid))
    return out
