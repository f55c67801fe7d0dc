"""System authority: domains, epochs, class keys, token issuance and the
out-of-band channel used by ownership and access hand-overs."""

from __future__ import annotations

import hashlib
import random
from collections import defaultdict, deque
from dataclasses import dataclass, field
from typing import Any, Optional

from .crypto.elgamal import ElGamalKeyPair
from .crypto.group import GroupParams
from .crypto.symmetric import KEY_SIZE, mint_permission_token
from .methods import DEFAULT_OMEGA_KEY, OMEGA
from .reader import Reader, TokenGrant


class BackOfficeError(Exception):
    pass


class SimClock:
    """Simulated wall clock in whole seconds.

    Every :meth:`tick` returns the current time and advances it by one
    second, so successive authentications always assert strictly later
    times.
    """

    def __init__(self, start: int = 1_000_000):
        self._now = start

    @property
    def now(self) -> int:
        return self._now

    def tick(self) -> int:
        t = self._now
        self._now += 1
        return t

    def advance(self, seconds: int) -> int:
        if seconds < 0:
            raise ValueError("time does not run backwards")
        self._now += seconds
        return self._now


def domain_id_for(name: str) -> bytes:
    return hashlib.sha256(name.encode("utf-8")).digest()[:16]


@dataclass
class DomainRecord:
    name: str
    domain_id: bytes
    master_key: bytes
    epoch_keys: list[ElGamalKeyPair]
    readers: dict[str, Reader] = field(default_factory=dict)
    stolen_readers: dict[str, int] = field(default_factory=dict)
    tokens: list[TokenGrant] = field(default_factory=list)
    class_keys: dict[int, bytes] = field(default_factory=dict)

    @property
    def epoch(self) -> int:
        return len(self.epoch_keys) - 1

    def live_readers(self) -> list[Reader]:
        return [r for rid, r in self.readers.items() if rid not in self.stolen_readers]


@dataclass
class ClassRecord:
    class_id: int
    name: str
    owner: str
    key: bytes


@dataclass
class OobEnvelope:
    sender: str
    recipient: str
    payload: Any


class BackOffice:
    def __init__(self, group: GroupParams, rng: random.Random, clock: Optional[SimClock] = None):
        self.group = group
        self.rng = rng
        self.clock = clock or SimClock()
        self.domains: dict[str, DomainRecord] = {}
        self.classes: dict[int, ClassRecord] = {}
        self.issued: list[tuple[str, TokenGrant]] = []
        self._oob: dict[str, deque[OobEnvelope]] = defaultdict(deque)
        self.oob_log: list[OobEnvelope] = []

    # -- domains and readers ------------------------------------------------

    def domain(self, name: str) -> DomainRecord:
        try:
            return self.domains[name]
        except KeyError:
            raise BackOfficeError(f"unknown domain {name!r}") from None

    def register_domain(self, name: str) -> DomainRecord:
        if name in self.domains:
            raise BackOfficeError(f"domain {name!r} already registered")
        rec = DomainRecord(
            name=name,
            domain_id=domain_id_for(name),
            master_key=self.rng.randbytes(KEY_SIZE),
            epoch_keys=[ElGamalKeyPair.generate(self.group, self.rng)],
            class_keys={OMEGA: DEFAULT_OMEGA_KEY},
        )
        if any(d.domain_id == rec.domain_id for d in self.domains.values()):
            raise BackOfficeError("domain id collision")
        self.domains[name] = rec
        return rec

    def add_reader(self, domain: str, reader_id: Optional[str] = None) -> Reader:
        rec = self.domain(domain)
        reader_id = reader_id or f"{domain}/{len(rec.readers)}"
        if reader_id in rec.readers:
            raise BackOfficeError(f"reader {reader_id!r} already exists")
        reader = Reader(
            reader_id=reader_id,
            domain_id=rec.domain_id,
            group=self.group,
            master_key=rec.master_key,
            epoch_keys=list(rec.epoch_keys),
            clock=self.clock,
            rng=random.Random(self.rng.getrandbits(64)),
            tokens=rec.tokens,
        )
        rec.readers[reader_id] = reader
        return reader

    def reader(self, domain: str, reader_id: Optional[str] = None) -> Reader:
        """A live reader of ``domain``, created on first use."""
        rec = self.domain(domain)
        if reader_id is not None:
            return rec.readers[reader_id]
        live = rec.live_readers()
        return live[0] if live else self.add_reader(domain)

    def report_stolen(self, domain: str, reader_id: str) -> int:
        """Start a new epoch whose key pair is withheld from the stolen reader."""
        rec = self.domain(domain)
        if reader_id not in rec.readers:
            raise BackOfficeError(f"reader {reader_id!r} does not belong to {domain!r}")
        rec.stolen_readers.setdefault(reader_id, rec.epoch)
        used = {kp.sk for kp in rec.epoch_keys}
        if len(used) >= self.group.q - 1:
            raise BackOfficeError("epoch key space exhausted")
        kp = ElGamalKeyPair.generate(self.group, self.rng)
        while kp.sk in used:
            kp = ElGamalKeyPair.generate(self.group, self.rng)
        rec.epoch_keys.append(kp)
        for r in rec.live_readers():
            r.epoch_keys.append(kp)
        return rec.epoch

    # -- classes and permissions ---------------------------------------------

    def register_class(self, owner: str, name: str, class_id: Optional[int] = None) -> ClassRecord:
        rec = self.domain(owner)
        class_id = class_id if class_id is not None else max(self.classes, default=OMEGA) + 1
        if class_id == OMEGA or class_id in self.classes:
            raise BackOfficeError(f"class id {class_id} already in use")
        cls = ClassRecord(class_id, name, owner, self.rng.randbytes(KEY_SIZE))
        self.classes[class_id] = cls
        rec.class_keys[class_id] = cls.key
        return cls

    def new_object_key(self, domain: str, class_id: int) -> bytes:
        """Fresh key with which ``domain`` can take over individual objects of a class."""
        key = self.rng.randbytes(KEY_SIZE)
        self.domain(domain).class_keys[class_id] = key
        return key

    def set_class_key(self, domain: str, class_id: int, key: bytes) -> None:
        self.domain(domain).class_keys[class_id] = key

    def issue_permission(self, issuer: str, class_id: int, method: int, grantee: str, expiry: int) -> TokenGrant:
        key = self.domain(issuer).class_keys.get(class_id)
        if key is None:
            raise BackOfficeError(f"{issuer!r} holds no key for class {class_id}")
        target = self.domain(grantee)
        grant = TokenGrant(
            class_id, int(method), target.domain_id, expiry,
            mint_permission_token(key, int(method), target.domain_id, expiry),
        )
        target.tokens.append(grant)
        self.issued.append((issuer, grant))
        return grant

    # -- out of band ----------------------------------------------------------

    def oob_send(self, sender: str, recipient: str, payload: Any) -> None:
        self.domain(recipient)
        env = OobEnvelope(sender, recipient, payload)
        self._oob[recipient].append(env)
        self.oob_log.append(env)

    def oob_recv(self, recipient: str) -> Optional[Any]:
        q = self._oob.get(recipient)
        return q.popleft().payload if q else None

    # -- persistence ------------------------------------------------------------

    def to_state(self) -> dict:
        def grant_doc(g: TokenGrant) -> dict:
            return {"class_id": g.class_id, "method": g.method, "domain": g.domain.hex(),
                    "expiry": g.expiry, "token": g.token.hex()}

        return {
            "clock": self.clock.now,
            "domains": {
                name: {
                    "master_key": d.master_key.hex(),
                    "epoch_keys": [[hex(k.sk), hex(k.pk)] for k in d.epoch_keys],
                    "readers": {rid: len(r.epoch_keys) for rid, r in sorted(d.readers.items())},
                    "stolen": dict(sorted(d.stolen_readers.items())),
                    "tokens": [grant_doc(g) for g in d.tokens],
                    "class_keys": {str(c): k.hex() for c, k in sorted(d.class_keys.items())},
                }
                for name, d in sorted(self.domains.items())
            },
            "classes": {
                str(c.class_id): {"name": c.name, "owner": c.owner, "key": c.key.hex()}
                for c in sorted(self.classes.values(), key=lambda c: c.class_id)
            },
            "issued": [[issuer, grant_doc(g)] for issuer, g in self.issued],
        }

    @classmethod
    def from_state(cls, doc: dict, group: GroupParams, rng: random.Random) -> "BackOffice":
        def grant(d: dict) -> TokenGrant:
            return TokenGrant(d["class_id"], d["method"], bytes.fromhex(d["domain"]),
                              d["expiry"], bytes.fromhex(d["token"]))

        bo = cls(group, rng, SimClock(doc["clock"]))
        for name, d in doc["domains"].items():
            keys = [ElGamalKeyPair(int(sk, 16), int(pk, 16)) for sk, pk in d["epoch_keys"]]
            rec = DomainRecord(
                name=name,
                domain_id=domain_id_for(name),
                master_key=bytes.fromhex(d["master_key"]),
                epoch_keys=keys,
                stolen_readers=dict(d["stolen"]),
                tokens=[grant(g) for g in d["tokens"]],
                class_keys={int(c): bytes.fromhex(k) for c, k in d["class_keys"].items()},
            )
            bo.domains[name] = rec
            for rid, n_keys in d["readers"].items():
                rec.readers[rid] = Reader(
                    rid, rec.domain_id, group, rec.master_key, keys[:n_keys], bo.clock,
                    random.Random(rng.getrandbits(64)), rec.tokens,
                )
        for cid, c in doc["classes"].items():
            bo.classes[int(cid)] = ClassRecord(int(cid), c["name"], c["owner"], bytes.fromhex(c["key"]))
        bo.issued = [(issuer, grant(g)) for issuer, g in doc["issued"]]
        return bo
