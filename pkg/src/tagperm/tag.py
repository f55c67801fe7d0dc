"""Tag-side state machine.

A :class:`Tag` consumes one frame at a time and answers with at most one
frame. It never reports an error on the wire: whenever a check fails it
drops back to the default session key and keeps answering with frames that
have the honest layout but random content.

Only symmetric primitives are used while authenticating. Decoy group
elements are products of a small pool of elements loaded at manufacture,
so even the decoy path performs no exponentiation.
"""

from __future__ import annotations

import enum
import inspect
import logging
import random
from dataclasses import dataclass, field
from typing import Optional, Union

from . import wire
from .crypto.elgamal import EncryptedTagId
from .crypto.group import GroupParams
from .crypto.symmetric import (
    BLOCK,
    KEY_SIZE,
    NULL_KEY,
    AuthError,
    auth_decrypt,
    auth_encrypt,
    mint_permission_token,
    plain_encrypt,
    xor_bytes,
)
from .methods import (
    DEFAULT_OMEGA_KEY,
    OMEGA,
    VOID_METHODS,
    Method,
    defined_for,
    is_permission_free,
)
from .snapshot import dump_blob, load_blob
from .wire import MsgType

log = logging.getLogger(__name__)

DECOY_POOL_SIZE = 8
SNAPSHOT_MAGIC = b"TAGS"
SNAPSHOT_VERSION = 1


class Marker(enum.Enum):
    PENDING = "pending"
    # an owner locked out by a failed authentication: no key material is
    # kept, but the tag stays owned so it cannot be taken under the null key
    PENDING_OWNER = "pending-owner"


PENDING = Marker.PENDING
PENDING_OWNER = Marker.PENDING_OWNER


class Rejected(Exception):
    """A check inside a method body failed."""


@dataclass
class AccessEntry:
    encid: bytes
    epoch: int
    k_ta: bytes
    owner: bool = False


@dataclass
class StoredObject:
    class_id: int
    class_key: bytes
    payload: dict[str, bytes] = field(default_factory=dict)


@dataclass
class PendingAuth:
    domain: bytes
    r: bytes
    entry: Optional[AccessEntry]


@dataclass
class PendingCall:
    class_id: int
    method: int
    expiry: int
    token_gated: bool


@dataclass
class SessionState:
    key: bytes = NULL_KEY
    counter: int = 0
    domain: Optional[bytes] = None
    auth: Optional[PendingAuth] = None
    call: Optional[PendingCall] = None
    poisoned: bool = False


@dataclass(frozen=True)
class Execution:
    """One method body run by the tag (simulator instrumentation)."""

    class_id: int
    method: int
    caller: Optional[bytes]
    expiry: Optional[int]
    params: bytes


AccessSlot = Union[AccessEntry, Marker]


class Tag:
    def __init__(self, group: GroupParams, rng: random.Random, decoy_pool: list[int]):
        if not decoy_pool:
            raise ValueError("decoy pool must not be empty")
        self.group = group
        self.rng = rng
        self.decoy_pool = list(decoy_pool)
        self.now = 0
        self.epoch_hint = 0
        self.access: dict[bytes, AccessSlot] = {}
        self.objects: dict[int, StoredObject] = {OMEGA: StoredObject(OMEGA, DEFAULT_OMEGA_KEY)}
        self.session = SessionState()
        self.executions: list[Execution] = []
        self.events: list[str] = []

    # -- inspection --------------------------------------------------------

    @property
    def owner(self) -> Optional[bytes]:
        for d, e in self.access.items():
            if e is PENDING_OWNER or (isinstance(e, AccessEntry) and e.owner):
                return d
        return None

    def entry(self, domain: bytes) -> Optional[AccessSlot]:
        return self.access.get(domain)

    def accepts_session_key(self, key: bytes) -> bool:
        return key == self.session.key

    # -- frame dispatch ----------------------------------------------------

    def handle(self, data: bytes) -> Optional[bytes]:
        try:
            kind, body = wire.parse_frame(data)
        except wire.FrameError as exc:
            self._note(f"unparseable frame: {exc}")
            return None
        if kind is MsgType.HELLO:
            return self.on_hello(body)
        if kind is MsgType.AUTH:
            return self.on_auth_request(body)
        if kind is MsgType.CALL_HEADER:
            self.on_method_header(body)
            return None
        if kind is MsgType.CALL_PARAMS:
            return self.on_params(body)
        if kind is MsgType.STOP:
            self.on_stop(body)
            return None
        self._note(f"ignored {kind.name} frame")
        return None

    # -- authentication ----------------------------------------------------

    def on_hello(self, domain: bytes) -> bytes:
        self._reset_session()
        r = self.rng.randbytes(wire.NONCE_SIZE)
        slot = self.access.get(domain) if len(domain) == wire.DOMAIN_ID_SIZE else None
        if isinstance(slot, AccessEntry):
            self.session.auth = PendingAuth(domain, r, slot)
            body = slot.encid + wire.u32(slot.epoch) + r
        else:
            self.session.auth = PendingAuth(domain, r, None)
            self.session.poisoned = True
            self._note("hello from domain without access")
            body = self._decoy_encid() + wire.u32(self.rng.randint(0, self.epoch_hint)) + r
        return wire.frame(MsgType.HELLO_REPLY, body)

    def on_auth_request(self, body: bytes) -> bytes:
        pending, self.session.auth = self.session.auth, None
        if pending is None or pending.entry is None:
            return self._auth_decoy("no authenticated hello precedes this request")
        entry = pending.entry
        self.access[pending.domain] = PENDING_OWNER if entry.owner else PENDING
        try:
            msg = wire.AuthPlaintext.from_bytes(self.group, auth_decrypt(entry.k_ta, body))
        except (AuthError, wire.FrameError) as exc:
            return self._auth_decoy(f"authentication request rejected: {exc}")
        if msg.r != pending.r:
            return self._auth_decoy("nonce mismatch")
        if not self.now < msg.delta:
            return self._auth_decoy("reader time not after tag time")
        self.now = msg.delta
        self.epoch_hint = max(self.epoch_hint, msg.epoch)
        self.access[pending.domain] = AccessEntry(msg.encid, msg.epoch, entry.k_ta, entry.owner)
        s_bar = self.rng.randbytes(wire.SESSION_HALF_SIZE)
        reply = plain_encrypt(entry.k_ta, msg.q + s_bar, self.rng.randbytes(BLOCK))
        self.session = SessionState(key=xor_bytes(msg.s, s_bar), counter=0, domain=pending.domain)
        return wire.frame(MsgType.AUTH_REPLY, reply)

    # -- method calls ------------------------------------------------------

    def on_method_header(self, body: bytes) -> bool:
        s = self.session
        if s.call is not None:
            return self._poison("header while a call is pending")
        try:
            h = wire.CallHeader.from_bytes(auth_decrypt(s.key, body))
        except (AuthError, wire.FrameError) as exc:
            return self._poison(f"header rejected: {exc}")
        if h.counter != s.counter:
            return self._poison(f"header counter {h.counter} != {s.counter}")
        obj = self.objects.get(h.class_id)
        if obj is None or not defined_for(h.class_id, h.method):
            return self._poison(f"no method {h.method:#x} on class {h.class_id}")
        gated = not is_permission_free(h.class_id, h.method)
        if gated:
            if not self.now < h.expiry:
                return self._poison("permission expired")
            if s.domain is None:
                return self._poison("token-gated call outside an authenticated session")
            expected = mint_permission_token(obj.class_key, h.method, s.domain, h.expiry)
            if h.token != expected:
                return self._poison("permission token mismatch")
        s.call = PendingCall(h.class_id, h.method, h.expiry, gated)
        return True

    def on_params(self, body: bytes) -> bytes:
        s = self.session
        call, key = s.call, s.key
        if call is None:
            return self._result_decoy("parameters without an accepted header")
        try:
            plain = auth_decrypt(key, body)
        except AuthError as exc:
            return self._result_decoy(f"parameters rejected: {exc}")
        if len(plain) != wire.COUNTER_SIZE + wire.payload_capacity(self.group):
            return self._result_decoy("parameter area has wrong size")
        n = wire.read_u32(plain[:wire.COUNTER_SIZE])
        if n != s.counter + 1:
            return self._result_decoy(f"parameter counter {n} != {s.counter + 1}")
        caller = s.domain
        try:
            params = wire.unfit_payload(plain[wire.COUNTER_SIZE:])
            result = self._execute(call, caller, params)
        except (Rejected, wire.FrameError, ValueError) as exc:
            return self._result_decoy(f"method {call.method:#x} rejected: {exc}")
        self.executions.append(
            Execution(call.class_id, call.method, caller, call.expiry if call.token_gated else None, params)
        )
        if result is None:
            result = self.rng.randbytes(wire.VOID_RESULT_SIZE)
        reply_counter = s.counter + 2
        blob = wire.u32(reply_counter) + wire.fit_payload(result, wire.payload_capacity(self.group))
        out = auth_encrypt(key, blob, self.rng.randbytes(BLOCK)).to_bytes()
        if self.session is s:
            s.call = None
            s.counter += 3
        return wire.frame(MsgType.CALL_RESULT, out)

    def on_stop(self, body: bytes) -> None:
        try:
            ok = auth_decrypt(self.session.key, body) == wire.STOP_MARKER
        except AuthError:
            ok = False
        if ok:
            self._reset_session()
        else:
            self._note("stop frame ignored")

    # -- method bodies -----------------------------------------------------

    def _execute(self, call: PendingCall, caller: Optional[bytes], params: bytes) -> Optional[bytes]:
        m = Method(call.method)
        fields = wire.unpack_fields(params)
        handler = getattr(self, "_m_" + m.name.lower())
        try:
            inspect.signature(handler).bind(call.class_id, caller, *fields)
        except TypeError:
            raise Rejected(f"wrong number of arguments for {m.name}") from None
        result = handler(call.class_id, caller, *fields)
        if m in VOID_METHODS:
            return None
        return result

    def _require_owner(self, caller: Optional[bytes]) -> None:
        if caller is None or self.owner != caller:
            raise Rejected("caller is not the tag owner")

    def _check_encid(self, encid: bytes) -> bytes:
        if len(encid) != 4 * self.group.width:
            raise Rejected("encrypted id has wrong length")
        return encid

    def _check_key(self, key: bytes) -> bytes:
        if len(key) != KEY_SIZE:
            raise Rejected("key has wrong length")
        return key

    def _check_domain(self, d: bytes) -> bytes:
        if len(d) != wire.DOMAIN_ID_SIZE or d == wire.NO_DOMAIN:
            raise Rejected("bad domain id")
        return d

    def _m_take_tag_ownership(self, _c, caller, domain, encid, epoch, k_ta, delta):
        if self.owner is not None:
            raise Rejected("tag already owned")
        domain = self._check_domain(domain)
        epoch_n = wire.read_u32(epoch)
        self.access[domain] = AccessEntry(self._check_encid(encid), epoch_n, self._check_key(k_ta), True)
        self.epoch_hint = max(self.epoch_hint, epoch_n)
        self.now = max(self.now, wire.read_u64(delta))

    def _m_transfer_tag_ownership(self, _c, caller):
        self._require_owner(caller)
        self.access.clear()

    def _m_relinquish_tag_ownership(self, _c, caller):
        self._require_owner(caller)
        self.access.clear()
        # reply goes out under the old key; the session ends right after
        self.session = SessionState()

    def _m_grant_tag_access(self, _c, caller, domain):
        self._require_owner(caller)
        domain = self._check_domain(domain)
        if domain == caller:
            raise Rejected("owner cannot grant to itself")
        self.access[domain] = PENDING

    def _m_accept_tag_access(self, _c, caller, domain, encid, epoch, k_ta):
        if caller is None:
            raise Rejected("accept requires a handed-over session")
        if self.access.get(domain) is not PENDING:
            raise Rejected("no pending grant for domain")
        epoch_n = wire.read_u32(epoch)
        self.access[domain] = AccessEntry(self._check_encid(encid), epoch_n, self._check_key(k_ta), False)
        self.epoch_hint = max(self.epoch_hint, epoch_n)

    def _m_revoke_tag_access(self, _c, caller, domain):
        self._require_owner(caller)
        if domain == caller:
            raise Rejected("owner cannot revoke itself")
        self.access.pop(domain, None)

    def _m_reencrypt_get_ids(self, _c, caller):
        self._require_owner(caller)
        return wire.encode_id_list(
            [(d, e.epoch, e.encid) for d, e in sorted(self.access.items()) if isinstance(e, AccessEntry)]
        )

    def _m_reencrypt_put_ids(self, _c, caller, id_list):
        self._require_owner(caller)
        applied = 0
        for domain, epoch, encid in wire.decode_id_list(id_list):
            e = self.access.get(domain)
            if not isinstance(e, AccessEntry) or len(encid) != 4 * self.group.width:
                continue
            try:
                EncryptedTagId.from_bytes(self.group, encid).validate(self.group)
            except ValueError:
                self._note("re-encrypted id for a domain is not in the group; skipped")
                continue
            e.encid, e.epoch = encid, epoch
            applied += 1
        return wire.u32(applied)

    def _m_install_object(self, _c, caller, class_id, class_key, payload):
        cid = wire.read_u32(class_id)
        if cid == OMEGA or cid in self.objects:
            raise Rejected(f"object {cid} already exists")
        self.objects[cid] = StoredObject(cid, self._check_key(class_key), wire.decode_record(payload))

    def _m_update_object(self, c, caller, payload):
        self.objects[c].payload = wire.decode_record(payload)

    def _m_update_class_key(self, c, caller, class_key):
        self.objects[c].class_key = self._check_key(class_key)

    def _m_delete_object(self, c, caller):
        self._require_owner(caller)
        if c == OMEGA:
            raise Rejected("the management object cannot be deleted")
        del self.objects[c]

    def _m_read(self, c, caller, name):
        try:
            return self.objects[c].payload[name.decode("utf-8")]
        except KeyError:
            raise Rejected("no such field") from None

    def _m_write(self, c, caller, name, value):
        self.objects[c].payload[name.decode("utf-8")] = value

    # -- failure handling --------------------------------------------------

    def _note(self, reason: str) -> None:
        self.events.append(reason)
        log.debug("tag: %s", reason)

    def _reset_session(self) -> None:
        self.session = SessionState()

    def _poison(self, reason: str) -> bool:
        self._note(reason)
        self.session = SessionState(poisoned=True)
        return False

    def _decoy_element(self) -> int:
        picks = [x for x in self.decoy_pool if self.rng.random() < 0.5] or [self.rng.choice(self.decoy_pool)]
        acc = picks[0]
        for x in picks[1:]:
            acc = self.group.mul(acc, x)
        return acc

    def _decoy_encid(self) -> bytes:
        return b"".join(self.group.encode(self._decoy_element()) for _ in range(4))

    def _auth_decoy(self, reason: str) -> bytes:
        self._poison(reason)
        return wire.frame(MsgType.AUTH_REPLY, self.rng.randbytes(wire.AUTH_REPLY_LEN))

    def _result_decoy(self, reason: str) -> bytes:
        self._poison(reason)
        return wire.frame(MsgType.CALL_RESULT, self.rng.randbytes(wire.call_body_len(self.group)))

    # -- persistence -------------------------------------------------------

    def to_state(self) -> dict:
        access = {}
        for d, e in sorted(self.access.items()):
            access[d.hex()] = (
                e.value if isinstance(e, Marker)
                else {"encid": e.encid.hex(), "epoch": e.epoch, "k_ta": e.k_ta.hex(), "owner": e.owner}
            )
        return {
            "group": self.group.name,
            "now": self.now,
            "epoch_hint": self.epoch_hint,
            "decoy_pool": [hex(x) for x in self.decoy_pool],
            "access": access,
            "objects": {
                str(cid): {
                    "class_key": o.class_key.hex(),
                    "payload": {k: v.hex() for k, v in sorted(o.payload.items())},
                }
                for cid, o in sorted(self.objects.items())
            },
            "session": {
                "key": self.session.key.hex(),
                "counter": self.session.counter,
                "domain": self.session.domain.hex() if self.session.domain else None,
            },
        }

    @classmethod
    def from_state(cls, doc: dict, group: GroupParams, rng: random.Random) -> "Tag":
        if doc["group"] != group.name:
            raise ValueError(f"tag state belongs to group {doc['group']!r}")
        tag = cls(group, rng, [int(x, 16) for x in doc["decoy_pool"]])
        tag.now = doc["now"]
        tag.epoch_hint = doc["epoch_hint"]
        for d, e in doc["access"].items():
            tag.access[bytes.fromhex(d)] = (
                Marker(e) if isinstance(e, str)
                else AccessEntry(bytes.fromhex(e["encid"]), e["epoch"], bytes.fromhex(e["k_ta"]), e["owner"])
            )
        tag.objects = {
            int(cid): StoredObject(
                int(cid), bytes.fromhex(o["class_key"]),
                {k: bytes.fromhex(v) for k, v in o["payload"].items()},
            )
            for cid, o in doc["objects"].items()
        }
        if OMEGA not in tag.objects:
            raise ValueError("tag state lacks the management object")
        sess = doc["session"]
        tag.session = SessionState(
            key=bytes.fromhex(sess["key"]),
            counter=sess["counter"],
            domain=bytes.fromhex(sess["domain"]) if sess["domain"] else None,
        )
        return tag

    def snapshot(self) -> bytes:
        return dump_blob(SNAPSHOT_MAGIC, SNAPSHOT_VERSION, self.to_state())

    @classmethod
    def restore(cls, blob: bytes, group: GroupParams, rng: random.Random) -> "Tag":
        return cls.from_state(load_blob(SNAPSHOT_MAGIC, SNAPSHOT_VERSION, blob), group, rng)


def manufacture_tag(group: GroupParams, rng: random.Random) -> tuple[Tag, int]:
    """Create a blank tag and return it with its identifier.

    The factory, not the tag, does the exponentiations: the identifier is
    ``g**r`` for random ``r`` and the decoy pool is a handful of random
    subgroup elements.
    """
    t = group.random_element(rng)
    pool = [group.random_element(rng) for _ in range(DECOY_POOL_SIZE)]
    tag_rng = random.Random(rng.getrandbits(64))
    return Tag(group, tag_rng, pool), t
