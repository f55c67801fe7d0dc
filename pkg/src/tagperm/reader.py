"""Reader-side protocol driver.

A :class:`Reader` is one device of a domain. It holds the domain's master
access key, the epoch key pairs it has been given, and a view of the
domain's permission tokens. It talks to a tag through any object with a
``send(frame) -> reply | None`` method (see :mod:`tagperm.transport`).
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from typing import Optional, Protocol

from . import wire
from .crypto.elgamal import (
    ElGamalKeyPair,
    EncryptedTagId,
    ForeignCiphertext,
    elgamal_decrypt,
    keyed_reencrypt,
    random_universal_reencrypt,
)
from .crypto.group import GroupError, GroupParams
from .crypto.symmetric import (
    BLOCK,
    AuthError,
    auth_decrypt,
    auth_encrypt,
    diversify_key,
    plain_decrypt,
    xor_bytes,
)
from .methods import OMEGA, Method, is_permission_free
from .wire import MsgType

log = logging.getLogger(__name__)


class Link(Protocol):
    def send(self, frame: bytes) -> Optional[bytes]: ...


class Clock(Protocol):
    def tick(self) -> int: ...

    @property
    def now(self) -> int: ...


class ProtocolFailure(Exception):
    pass


class AuthenticationFailed(ProtocolFailure):
    pass


class CallFailed(ProtocolFailure):
    pass


@dataclass(frozen=True)
class TokenGrant:
    class_id: int
    method: int
    domain: bytes
    expiry: int
    token: bytes


@dataclass
class ReaderSession:
    link: Link
    key: bytes
    tag_id: Optional[int]
    counter: int = 0
    open: bool = True
    calls: list[tuple[int, int, bytes]] = field(default_factory=list)


@dataclass
class Reader:
    reader_id: str
    domain_id: bytes
    group: GroupParams
    master_key: bytes
    epoch_keys: list[ElGamalKeyPair]
    clock: Clock
    rng: random.Random
    tokens: list[TokenGrant] = field(default_factory=list)

    @property
    def epoch(self) -> int:
        return len(self.epoch_keys) - 1

    @property
    def current_key(self) -> ElGamalKeyPair:
        return self.epoch_keys[-1]

    def tag_access_key(self, t: int) -> bytes:
        return diversify_key(self.master_key, self.group.encode(t))

    def fresh_encid(self, t: int) -> EncryptedTagId:
        g = self.group
        # t was checked for membership already; skip the repeat test
        return keyed_reencrypt(g, t, self.current_key.pk, g.random_exponent(self.rng), g.random_exponent(self.rng))

    def token_for(self, class_id: int, method: int) -> Optional[TokenGrant]:
        """Longest-lived token this domain holds for ``(class_id, method)``."""
        match = [
            t for t in self.tokens
            if t.class_id == class_id and t.method == method and t.domain == self.domain_id
        ]
        return max(match, key=lambda t: t.expiry, default=None)

    # -- authentication ----------------------------------------------------

    def authenticate(self, link: Link) -> ReaderSession:
        g = self.group
        reply = link.send(wire.frame(MsgType.HELLO, self.domain_id))
        if reply is None:
            raise AuthenticationFailed("no hello reply")
        try:
            kind, body = wire.parse_frame(reply)
        except wire.FrameError as exc:
            raise AuthenticationFailed(f"malformed hello reply: {exc}") from None
        if kind is not MsgType.HELLO_REPLY or len(body) != wire.hello_reply_len(g):
            raise AuthenticationFailed("unexpected hello reply")
        w4 = 4 * g.width
        encid = EncryptedTagId.from_bytes(g, body[:w4])
        tag_epoch = wire.read_u32(body[w4:w4 + wire.EPOCH_SIZE])
        r = body[w4 + wire.EPOCH_SIZE:]

        failure = None
        t = None
        if tag_epoch > self.epoch:
            failure = "future epoch"
        else:
            try:
                t = elgamal_decrypt(g, encid, self.epoch_keys[tag_epoch].sk)
                g.require_member(t)
            except ForeignCiphertext:
                failure = "foreign ciphertext"
            except GroupError:
                failure = "decrypted identifier is not a group element"

        if failure is not None:
            # keep the expected message flow alive with random content
            link.send(wire.frame(MsgType.AUTH, self.rng.randbytes(wire.auth_len(g))))
            raise AuthenticationFailed(failure)

        k_ta = self.tag_access_key(t)
        new_encid = self.fresh_encid(t)
        s = self.rng.randbytes(wire.SESSION_HALF_SIZE)
        q = self.rng.randbytes(wire.NONCE_SIZE)
        msg = wire.AuthPlaintext(new_encid.to_bytes(g), self.epoch, r, q, self.clock.tick(), s)
        c = auth_encrypt(k_ta, msg.to_bytes(), self.rng.randbytes(BLOCK))
        reply = link.send(wire.frame(MsgType.AUTH, c.to_bytes()))
        if reply is None:
            raise AuthenticationFailed("no authentication reply")
        try:
            kind, body = wire.parse_frame(reply)
            if kind is not MsgType.AUTH_REPLY or len(body) != wire.AUTH_REPLY_LEN:
                raise wire.FrameError("unexpected authentication reply")
            plain = plain_decrypt(k_ta, body)
        except (wire.FrameError, ValueError) as exc:
            raise AuthenticationFailed(str(exc)) from None
        if plain[:wire.NONCE_SIZE] != q:
            raise AuthenticationFailed("nonce echo mismatch")
        s_bar = plain[wire.NONCE_SIZE:]
        return ReaderSession(link=link, key=xor_bytes(s, s_bar), tag_id=t)

    # -- method calls ------------------------------------------------------

    def call_method(
        self,
        session: ReaderSession,
        class_id: int,
        method: int,
        params: bytes = b"",
        grant: Optional[TokenGrant] = None,
    ) -> bytes:
        if not session.open:
            raise CallFailed("session is closed")
        g = self.group
        cap = wire.payload_capacity(g)
        n = session.counter
        header = wire.CallHeader(
            n, class_id, method,
            grant.expiry if grant else 0,
            grant.token if grant else wire.NO_TOKEN,
        )
        link = session.link
        link.send(wire.frame(
            MsgType.CALL_HEADER,
            auth_encrypt(session.key, header.to_bytes(), self.rng.randbytes(BLOCK)).to_bytes(),
        ))
        reply = link.send(wire.frame(
            MsgType.CALL_PARAMS,
            auth_encrypt(session.key, wire.u32(n + 1) + wire.fit_payload(params, cap),
                         self.rng.randbytes(BLOCK)).to_bytes(),
        ))
        session.calls.append((class_id, method, params))
        try:
            if reply is None:
                raise CallFailed("no result")
            kind, body = wire.parse_frame(reply)
            if kind is not MsgType.CALL_RESULT:
                raise CallFailed("unexpected reply type")
            plain = auth_decrypt(session.key, body)
            if len(plain) != wire.COUNTER_SIZE + cap:
                raise CallFailed("result area has wrong size")
            if wire.read_u32(plain[:wire.COUNTER_SIZE]) != n + 2:
                raise CallFailed("result counter mismatch")
            result = wire.unfit_payload(plain[wire.COUNTER_SIZE:])
        except (AuthError, wire.FrameError) as exc:
            session.open = False
            raise CallFailed(str(exc)) from None
        except CallFailed:
            session.open = False
            raise
        session.counter = n + 3
        return result

    def invoke(self, session: ReaderSession, class_id: int, method: int, *args: bytes) -> bytes:
        """Call with positional arguments, attaching a held token when needed."""
        grant = None
        if not is_permission_free(class_id, method):
            grant = self.token_for(class_id, method)
            if grant is None:
                raise CallFailed(f"no permission token for method {method:#x} on class {class_id}")
        return self.call_method(session, class_id, method, wire.pack_fields(*args), grant)

    def close_session(self, session: ReaderSession) -> None:
        if not session.open:
            return
        c = auth_encrypt(session.key, wire.STOP_MARKER, self.rng.randbytes(BLOCK))
        session.link.send(wire.frame(MsgType.STOP, c.to_bytes()))
        session.open = False

    # -- management helpers ------------------------------------------------

    def owner_reencrypt_all(self, session: ReaderSession) -> int:
        """Universally re-encrypt every identifier on the tag; returns entries applied."""
        g = self.group
        entries = wire.decode_id_list(self.invoke(session, OMEGA, Method.REENCRYPT_GET_IDS))
        fresh = [
            (d, e, random_universal_reencrypt(g, EncryptedTagId.from_bytes(g, c), self.rng).to_bytes(g))
            for d, e, c in entries
        ]
        return wire.read_u32(self.invoke(session, OMEGA, Method.REENCRYPT_PUT_IDS, wire.encode_id_list(fresh)))

    def enrollment_args(self, t: int) -> tuple[bytes, bytes, bytes]:
        """``(encid, epoch, k_ta)`` for taking ownership of or accepting access to tag ``t``."""
        return self.fresh_encid(t).to_bytes(self.group), wire.u32(self.epoch), self.tag_access_key(t)
