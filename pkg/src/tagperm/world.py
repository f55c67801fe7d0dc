"""A simulated deployment: back office, readers, tags and the radio links
between them, plus the multi-party flows (ownership hand-over, access
grants) that need the out-of-band channel.
"""

from __future__ import annotations

import contextlib
import random
from dataclasses import dataclass
from typing import Callable, Iterator, Optional

from . import wire
from .backoffice import BackOffice
from .crypto.group import GroupParams, generate_group
from .crypto.symmetric import NULL_KEY
from .methods import OMEGA, Method
from .reader import Reader, ReaderSession
from .snapshot import dump_blob, load_blob
from .tag import Tag, manufacture_tag
from .transport import OOB, Adversary, Channel, Transcript

WORLD_MAGIC = b"TAGW"
WORLD_VERSION = 1


@dataclass
class TagHandle:
    name: str
    tag: Tag
    tag_id: int


class World:
    def __init__(self, group: GroupParams, seed: int = 0,
                 adversary_factory: Optional[Callable[[], Adversary]] = None):
        self.group = group
        self.seed = seed
        self.rng = random.Random(seed)
        self.backoffice = BackOffice(group, random.Random(self.rng.getrandbits(64)))
        self.transcript = Transcript()
        self.tags: dict[str, TagHandle] = {}
        self.adversary_factory = adversary_factory or Adversary

    @classmethod
    def create(cls, profile: str = "toy", seed: int = 0, **kw) -> "World":
        return cls(generate_group(profile), seed, **kw)

    @property
    def clock(self):
        return self.backoffice.clock

    # -- setup ----------------------------------------------------------------

    def add_domains(self, *names: str) -> None:
        for n in names:
            self.backoffice.register_domain(n)
            self.backoffice.add_reader(n)

    def new_tag(self, name: str) -> TagHandle:
        if name in self.tags:
            raise ValueError(f"tag {name!r} exists")
        tag, t = manufacture_tag(self.group, self.rng)
        h = TagHandle(name, tag, t)
        self.tags[name] = h
        return h

    def reader(self, domain: str) -> Reader:
        return self.backoffice.reader(domain)

    def domain_id(self, domain: str) -> bytes:
        return self.backoffice.domain(domain).domain_id

    def link(self, tag: str, adversary: Optional[Adversary] = None) -> Channel:
        return Channel(self.tags[tag].tag, adversary or self.adversary_factory(),
                       self.transcript, self.clock)

    # -- sessions ---------------------------------------------------------------

    @contextlib.contextmanager
    def session(self, domain: str, tag: str, reader: Optional[Reader] = None,
                adversary: Optional[Adversary] = None) -> Iterator[tuple[Reader, ReaderSession]]:
        """Authenticate, yield, and close the session afterwards."""
        reader = reader or self.reader(domain)
        sess = reader.authenticate(self.link(tag, adversary))
        try:
            yield reader, sess
        finally:
            reader.close_session(sess)

    def authenticate(self, domain: str, tag: str, **kw) -> ReaderSession:
        return self.reader(domain).authenticate(self.link(tag, **kw))

    def call(self, domain: str, tag: str, class_id: int, method: int, *args: bytes) -> bytes:
        with self.session(domain, tag) as (reader, sess):
            return reader.invoke(sess, class_id, method, *args)

    def read(self, domain: str, tag: str, class_id: int, field: str) -> bytes:
        return self.call(domain, tag, class_id, Method.READ, field.encode())

    def write(self, domain: str, tag: str, class_id: int, field: str, value: bytes) -> None:
        self.call(domain, tag, class_id, Method.WRITE, field.encode(), value)

    def _handover(self, sender: str, recipient: str, tag: str, sess: ReaderSession) -> None:
        self.backoffice.oob_send(sender, recipient, {
            "tag": tag, "tag_id": sess.tag_id, "key": sess.key, "counter": sess.counter,
        })
        self.transcript.append(sess.link.session, OOB, self.clock.now, b"", f"{sender} -> {recipient}")

    def _resume(self, recipient: str) -> tuple[Reader, ReaderSession]:
        env = self.backoffice.oob_recv(recipient)
        if env is None:
            raise LookupError(f"nothing waiting out of band for {recipient!r}")
        link = self.link(env["tag"])
        return self.reader(recipient), ReaderSession(link, env["key"], env["tag_id"], env["counter"])

    # -- ownership and access flows --------------------------------------------

    def take_ownership(self, domain: str, tag: str) -> None:
        """Take an unowned tag under the default session key.

        The tag identifier is known out of band (here: from the factory).
        """
        reader = self.reader(domain)
        h = self.tags[tag]
        sess = ReaderSession(self.link(tag), NULL_KEY, h.tag_id)
        self._take(reader, sess)

    def _take(self, reader: Reader, sess: ReaderSession) -> None:
        encid, epoch, k_ta = reader.enrollment_args(sess.tag_id)
        reader.invoke(sess, OMEGA, Method.TAKE_TAG_OWNERSHIP,
                      reader.domain_id, encid, epoch, k_ta, wire.u64(self.clock.tick()))
        reader.close_session(sess)

    def transfer_ownership(self, old: str, new: str, tag: str) -> None:
        reader = self.reader(old)
        sess = reader.authenticate(self.link(tag))
        reader.invoke(sess, OMEGA, Method.TRANSFER_TAG_OWNERSHIP)
        # the session is deliberately left open for the new owner
        self._handover(old, new, tag, sess)
        new_reader, new_sess = self._resume(new)
        self._take(new_reader, new_sess)

    def relinquish_ownership(self, owner: str, tag: str) -> None:
        reader = self.reader(owner)
        sess = reader.authenticate(self.link(tag))
        reader.invoke(sess, OMEGA, Method.RELINQUISH_TAG_OWNERSHIP)
        sess.open = False  # the tag already dropped the session key

    def grant_access(self, owner: str, grantee: str, tag: str) -> None:
        reader = self.reader(owner)
        sess = reader.authenticate(self.link(tag))
        reader.invoke(sess, OMEGA, Method.GRANT_TAG_ACCESS, self.domain_id(grantee))
        self._handover(owner, grantee, tag, sess)
        g_reader, g_sess = self._resume(grantee)
        encid, epoch, k_ta = g_reader.enrollment_args(g_sess.tag_id)
        g_reader.invoke(g_sess, OMEGA, Method.ACCEPT_TAG_ACCESS, g_reader.domain_id, encid, epoch, k_ta)
        g_reader.close_session(g_sess)

    def revoke_access(self, owner: str, revoked: str, tag: str) -> None:
        self.call(owner, tag, OMEGA, Method.REVOKE_TAG_ACCESS, self.domain_id(revoked))

    def reencrypt_all(self, owner: str, tag: str) -> int:
        with self.session(owner, tag) as (reader, sess):
            return reader.owner_reencrypt_all(sess)

    def install_object(self, domain: str, tag: str, class_id: int, class_key: bytes,
                       record: Optional[dict[str, bytes]] = None) -> None:
        self.call(domain, tag, OMEGA, Method.INSTALL_OBJECT,
                  wire.u32(class_id), class_key, wire.encode_record(record or {}))

    def update_class_key(self, domain: str, tag: str, class_id: int, new_key: bytes) -> None:
        self.call(domain, tag, class_id, Method.UPDATE_CLASS_KEY, new_key)

    def permit(self, issuer: str, class_id: int, methods, grantee: str, validity: int = 365 * 86400) -> int:
        expiry = self.clock.now + validity
        for m in ([methods] if isinstance(methods, int) else methods):
            self.backoffice.issue_permission(issuer, class_id, m, grantee, expiry)
        return expiry

    # -- persistence ------------------------------------------------------------

    def snapshot(self) -> bytes:
        doc = {
            "group": self.group.name,
            "seed": self.seed,
            "backoffice": self.backoffice.to_state(),
            "tags": {
                name: {"tag_id": hex(h.tag_id), "state": h.tag.to_state()}
                for name, h in sorted(self.tags.items())
            },
        }
        return dump_blob(WORLD_MAGIC, WORLD_VERSION, doc)

    @classmethod
    def restore(cls, blob: bytes) -> "World":
        doc = load_blob(WORLD_MAGIC, WORLD_VERSION, blob)
        try:
            w = cls(generate_group(doc["group"]), doc["seed"])
            w.backoffice = BackOffice.from_state(doc["backoffice"], w.group, random.Random(w.rng.getrandbits(64)))
            for name, t in doc["tags"].items():
                tag = Tag.from_state(t["state"], w.group, random.Random(w.rng.getrandbits(64)))
                w.tags[name] = TagHandle(name, tag, int(t["tag_id"], 16))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"world snapshot is malformed: {exc}") from exc
        return w
