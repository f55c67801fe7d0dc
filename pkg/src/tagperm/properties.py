"""Executable security properties.

Each suite builds its own seeded world, runs many randomized sessions and
returns a :class:`SuiteReport` with one :class:`Check` per property. Runs
that need a pristine tag work on a *fork*: a deep copy with a freshly
seeded random source, so that forks never repeat each other's nonces.
"""

from __future__ import annotations

import copy
import itertools
import math
import random
import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Optional

from . import wire
from .crypto import metrics
from .crypto.elgamal import (
    EncryptedTagId,
    ElGamalKeyPair,
    ForeignCiphertext,
    elgamal_decrypt,
    elgamal_encrypt,
    keyed_reencrypt,
    universal_reencrypt,
)
from .crypto.group import GroupParams, generate_group
from .crypto.symmetric import NULL_KEY, auth_encrypt, mint_permission_token, xor_bytes
from .methods import OMEGA, Method
from .reader import ProtocolFailure, Reader, ReaderSession, TokenGrant
from .tag import AccessEntry, Tag
from .transport import (
    Adversary,
    Channel,
    Fuzzer,
    Inject,
    Tamper,
    Transcript,
)
from .world import World


@dataclass
class Check:
    label: str
    trials: int
    failures: int
    passed: bool
    detail: str = ""
    counterexamples: list[str] = field(default_factory=list)

    def to_doc(self) -> dict:
        return {
            "label": self.label, "trials": self.trials, "failures": self.failures,
            "passed": self.passed, "detail": self.detail, "counterexamples": self.counterexamples,
        }


@dataclass
class SuiteReport:
    name: str
    group: str
    seed: int
    checks: list[Check] = field(default_factory=list)
    elapsed: float = 0.0

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)

    def check(self, label: str, trials: int, failures: int, allowed: int = 0,
              detail: str = "", counterexamples: Optional[list[str]] = None) -> Check:
        c = Check(label, trials, failures, failures <= allowed, detail, (counterexamples or [])[:5])
        self.checks.append(c)
        return c


# -- fixtures ------------------------------------------------------------------

def fork(tag: Tag, rng: random.Random) -> Tag:
    t = copy.deepcopy(tag)
    t.rng = random.Random(rng.getrandbits(64))
    return t


@dataclass
class Fixture:
    world: World
    domain: str
    tag_names: list[str]

    @property
    def reader(self) -> Reader:
        return self.world.reader(self.domain)

    def tag(self, i: int) -> Tag:
        return self.world.tags[self.tag_names[i % len(self.tag_names)]].tag

    def tag_id(self, i: int) -> int:
        return self.world.tags[self.tag_names[i % len(self.tag_names)]].tag_id

    def channel(self, tag: Tag, adversary: Optional[Adversary] = None,
                transcript: Optional[Transcript] = None) -> Channel:
        return Channel(tag, adversary, transcript if transcript is not None else self.world.transcript,
                       self.world.clock)


LOG_CLASS = 7


def fixture(group: GroupParams, seed: int, n_tags: int = 4, extra_domains: tuple[str, ...] = ()) -> Fixture:
    """Domain ``A`` owns ``n_tags`` tags carrying a read/write ``Log`` object."""
    w = World(group, seed)
    w.add_domains("A", *extra_domains)
    cls = w.backoffice.register_class("A", "Log", LOG_CLASS)
    w.permit("A", OMEGA, Method.INSTALL_OBJECT, "A")
    w.permit("A", cls.class_id, [Method.READ, Method.WRITE], "A")
    names = []
    for i in range(n_tags):
        name = f"tag{i}"
        w.new_tag(name)
        w.take_ownership("A", name)
        names.append(name)
    return Fixture(w, "A", names)


def install_log(fx: Fixture) -> None:
    cls = fx.world.backoffice.classes[LOG_CLASS]
    for name in fx.tag_names:
        fx.world.install_object("A", name, LOG_CLASS, cls.key, {"entry": b"0"})


def try_auth(reader: Reader, ch: Channel) -> Optional[ReaderSession]:
    try:
        return reader.authenticate(ch)
    except ProtocolFailure:
        return None


def _timed(fn: Callable[..., SuiteReport]) -> Callable[..., SuiteReport]:
    def run(*args, **kw) -> SuiteReport:
        start = time.perf_counter()
        report = fn(*args, **kw)
        report.elapsed = time.perf_counter() - start
        return report
    run.__name__, run.__doc__ = fn.__name__, fn.__doc__
    return run


# -- crypto oracle -------------------------------------------------------------

@_timed
def crypto_suite(group: GroupParams, seed: int = 0, iterations: int = 2000) -> SuiteReport:
    """ElGamal with universal re-encryption against a plain ``pow`` oracle.

    Tiny groups are covered exhaustively (every element, every exponent);
    larger groups are sampled ``iterations`` times.
    """
    rep = SuiteReport("crypto", group.name, seed)
    rng = random.Random(seed)
    p, q, g = group.p, group.q, group.g
    kp = ElGamalKeyPair.generate(group, rng)
    others = [sk for sk in range(1, q) if sk != kp.sk] if q <= 64 else \
        [s for s in (group.random_exponent(rng) for _ in range(2)) if s != kp.sk]

    if q <= 64:
        elements = group.elements()
        cases = itertools.product(elements, range(q), range(q), range(q))
    else:
        cases = ((group.random_element(rng), rng.randrange(q), rng.randrange(q), rng.randrange(q))
                 for _ in range(iterations))

    trials = 0
    bad = {"oracle": [], "enc": [], "reenc": [], "foreign": []}
    for t, x, a, a2 in cases:
        trials += 1
        # independent oracle straight from the textbook formulas
        expect_uv = (t * pow(kp.pk, x, p) % p, pow(g, x, p))
        if elgamal_encrypt(group, t, kp.pk, x) != expect_uv:
            bad["oracle"].append(f"t={t} x={x}")
        e = keyed_reencrypt(group, t, kp.pk, x, a)
        if elgamal_decrypt(group, e, kp.sk) != t:
            bad["enc"].append(f"t={t} x={x} a={a}")
        u = universal_reencrypt(group, e, a, a2)
        oracle_u = (
            e.u * pow(e.y, a, p) % p, e.v * pow(e.z, a, p) % p, pow(e.y, a2, p), pow(e.z, a2, p),
        )
        if (u.u, u.v, u.y, u.z) != oracle_u or elgamal_decrypt(group, u, kp.sk) != t:
            bad["reenc"].append(f"t={t} x={x} a={a} a'={a2}")
        for c in (e, u):
            if c.z == 1:
                continue  # the (1, 1) factor encrypts 1 under every key
            for s in others:
                try:
                    elgamal_decrypt(group, c, s)
                except ForeignCiphertext:
                    continue
                bad["foreign"].append(f"t={t} x={x} a={a} a'={a2} sk'={s}")

    scope = "exhaustive" if q <= 64 else "sampled"
    rep.check("encryption matches the textbook oracle", trials, len(bad["oracle"]),
              detail=scope, counterexamples=bad["oracle"])
    rep.check("decrypt(encrypt(t)) == t", trials, len(bad["enc"]), detail=scope, counterexamples=bad["enc"])
    rep.check("decrypt(universal_reencrypt(encrypt(t))) == t and matches oracle", trials, len(bad["reenc"]),
              detail=scope, counterexamples=bad["reenc"])
    rep.check("factor check rejects every foreign key", trials, len(bad["foreign"]),
              detail=f"{scope}, {len(others)} foreign keys; zero exponents give the (1,1) factor and are skipped",
              counterexamples=bad["foreign"])
    return rep


# -- session key agreement ---------------------------------------------

def _agree(reader: Reader, sess: ReaderSession, tag: Tag, t: int) -> bool:
    s = tag.session
    return s.key == sess.key and s.domain == reader.domain_id and sess.tag_id == t


def _transcript_candidates(frames: list[bytes]) -> set[bytes]:
    """Every 16-byte value an eavesdropper can read off or combine from the frames."""
    cands = {NULL_KEY}
    blocks = []
    for f in frames:
        for i in range(len(f) - 15):
            cands.add(f[i:i + 16])
        for i in range(3, len(f) - 15, 16):
            blocks.append(f[i:i + 16])
        blocks.extend(f[i:i + 16] for i in range(len(f) - 16, 2, -16))
    for x, y in itertools.combinations(set(blocks), 2):
        cands.add(xor_bytes(x, y))
    return cands


def _call_with_key(tag: Tag, key: bytes, rng: random.Random) -> bool:
    """Does a READ call encrypted under ``key`` get a verifiable answer?"""
    g = tag.group
    victim = fork(tag, rng)
    n = victim.session.counter
    header = wire.CallHeader(n, OMEGA, Method.REENCRYPT_GET_IDS, 0, wire.NO_TOKEN).to_bytes()
    victim.handle(wire.frame(wire.MsgType.CALL_HEADER, auth_encrypt(key, header, rng.randbytes(16)).to_bytes()))
    params = wire.u32(n + 1) + wire.fit_payload(b"", wire.payload_capacity(g))
    victim.handle(wire.frame(wire.MsgType.CALL_PARAMS, auth_encrypt(key, params, rng.randbytes(16)).to_bytes()))
    return len(victim.executions) > len(tag.executions)


@_timed
def lemma1_suite(group: GroupParams, seed: int = 0, iterations: int = 500) -> SuiteReport:
    rep = SuiteReport("lemma1", group.name, seed)
    rng = random.Random(seed)
    fx = fixture(group, seed)
    reader = fx.reader
    history: list[tuple[str, bytes]] = []

    honest_bad, eaves_bad, probes, real_calls = [], [], 0, 0
    for i in range(iterations):
        tag = fork(fx.tag(i), rng)
        tr = Transcript()
        ch = fx.channel(tag, transcript=tr)
        sess = try_auth(reader, ch)
        if sess is None or not _agree(reader, sess, tag, fx.tag_id(i)):
            honest_bad.append(f"run {i}")
            continue
        frames = [r.frame for r in tr.wire()]
        history.extend((r.direction, r.frame) for r in tr.wire())
        cands = _transcript_candidates(frames)
        probes += len(cands)
        hits = [k for k in cands if tag.accepts_session_key(k)]
        # a real call under a sample of the candidates, plus the true key as control
        for k in rng.sample(sorted(cands), min(4, len(cands))) + [NULL_KEY]:
            real_calls += 1
            if _call_with_key(tag, k, rng):
                hits.append(k)
        if not _call_with_key(tag, sess.key, rng):
            honest_bad.append(f"run {i}: control call with the session key failed")
        if hits:
            eaves_bad.append(f"run {i}: {hits[0].hex()}")
        reader.close_session(sess)

    rep.check("honest runs agree on session key, tag and domain", iterations, len(honest_bad),
              counterexamples=honest_bad)
    rep.check("no key derivable from the transcript opens the session", iterations, len(eaves_bad),
              detail=f"{probes} candidate keys checked, {real_calls} method calls attempted",
              counterexamples=eaves_bad)

    mismatched, split_keys, split_bad, accepted_both, kinds = [], 0, [], 0, Counter()
    for i in range(iterations):
        tag = fork(fx.tag(i), rng)
        kind = ("tamper", "replay", "inject")[i % 3]
        kinds[kind] += 1
        if kind == "tamper":
            idx = rng.randrange(4)
            adv: Adversary = Tamper(idx, rng.randrange(24, 8 * 40), seed=rng.getrandbits(32))
        elif kind == "replay":
            adv = Fuzzer(seed=rng.getrandbits(32), duplicate=0.3, replay=0.5, history=history)
        else:
            pool = [f for _, f in history] or [wire.frame(wire.MsgType.HELLO, bytes(16))]
            junk = [rng.choice(pool) for _ in range(rng.randint(1, 3))]
            if rng.random() < 0.5:
                junk = [f[:3] + rng.randbytes(len(f) - 3) for f in junk]
            adv = Inject(junk, at=rng.randrange(4), seed=rng.getrandbits(32))
        sess = try_auth(reader, fx.channel(tag, adv, Transcript()))
        if sess is None or tag.session.domain is None:
            continue
        accepted_both += 1
        if tag.session.domain != reader.domain_id or sess.tag_id != fx.tag_id(i):
            mismatched.append(f"run {i} ({kind})")
        elif tag.session.key != sess.key:
            # the last protocol message carries no MAC; a garbled session
            # half must surface as a failed first call
            split_keys += 1
            if _call_with_key(tag, sess.key, rng):
                split_bad.append(f"run {i} ({kind})")
    rep.check("adversarial runs never end with both sides accepting different (t, D)", iterations,
              len(mismatched), detail=f"{accepted_both} runs accepted by both sides; {dict(kinds)}",
              counterexamples=mismatched)
    rep.check("a garbled session key is caught by the first method call", max(split_keys, 1), len(split_bad),
              detail=f"{split_keys} runs ended with diverging session keys", counterexamples=split_bad)
    return rep


# -- identifier unlinkability -------------------------------------------

def _decrypts_to(group: GroupParams, keys: list[ElGamalKeyPair], entry: AccessEntry, t: int) -> bool:
    enc = EncryptedTagId.from_bytes(group, entry.encid)
    try:
        return elgamal_decrypt(group, enc, keys[entry.epoch].sk) == t
    except (ForeignCiphertext, IndexError):
        return False


@_timed
def lemma2_suite(group: GroupParams, seed: int = 0, iterations: int = 500) -> SuiteReport:
    rep = SuiteReport("lemma2", group.name, seed)
    rng = random.Random(seed)
    fx = fixture(group, seed, extra_domains=("B",))
    w = fx.world
    for name in fx.tag_names:
        w.grant_access("A", "B", name)
    reader, dom = fx.reader, w.domain_id("A")
    keys = {d: w.backoffice.domain(d).epoch_keys for d in ("A", "B")}
    # two distinct group elements collide with probability about 1/q each
    allowed = max(iterations // 500, math.ceil(iterations * 2 / group.q))

    same_auth, wrong_auth = [], []
    for i in range(iterations):
        tag = fork(fx.tag(i), rng)
        before = tag.access[dom].encid
        sess = try_auth(reader, fx.channel(tag, transcript=Transcript()))
        entry = tag.access.get(dom)
        if sess is None or not isinstance(entry, AccessEntry):
            wrong_auth.append(f"run {i}: authentication failed")
            continue
        reader.close_session(sess)
        if entry.encid == before:
            same_auth.append(f"run {i}")
        if not _decrypts_to(group, keys["A"], entry, fx.tag_id(i)):
            wrong_auth.append(f"run {i}")
    rep.check("authentication replaces the stored encrypted id", iterations, len(same_auth), allowed,
              detail=f"at most {allowed} collisions tolerated", counterexamples=same_auth)
    rep.check("the refreshed id still decrypts to the tag id", iterations, len(wrong_auth),
              counterexamples=wrong_auth)

    same_re, wrong_re = [], []
    for i in range(iterations):
        tag = fork(fx.tag(i), rng)
        before = {d: e.encid for d, e in tag.access.items()}
        sess = try_auth(reader, fx.channel(tag, transcript=Transcript()))
        if sess is None:
            wrong_re.append(f"run {i}: authentication failed")
            continue
        # compare against the state right before re-encryption
        before = {d: e.encid for d, e in tag.access.items()}
        try:
            reader.owner_reencrypt_all(sess)
        except ProtocolFailure as exc:
            wrong_re.append(f"run {i}: {exc}")
            continue
        reader.close_session(sess)
        for name in ("A", "B"):
            d = w.domain_id(name)
            entry = tag.access[d]
            if entry.encid == before[d]:
                same_re.append(f"run {i} domain {name}")
            if not _decrypts_to(group, keys[name], entry, fx.tag_id(i)):
                wrong_re.append(f"run {i} domain {name}")
    rep.check("owner re-encryption replaces every stored encrypted id", 2 * iterations, len(same_re),
              2 * allowed, detail=f"at most {2 * allowed} collisions tolerated", counterexamples=same_re)
    rep.check("re-encrypted ids still decrypt to the tag id", 2 * iterations, len(wrong_re),
              counterexamples=wrong_re)
    return rep


# -- stolen readers ------------------------------------------------------

@_timed
def lemma3_suite(group: GroupParams, seed: int = 0, iterations: int = 200) -> SuiteReport:
    """A reader stolen at epoch e meets a tag a live reader refreshed at e+1."""
    rep = SuiteReport("lemma3", group.name, seed)
    rng = random.Random(seed)
    factor_bad, auth_bad, live_bad = [], [], []
    for i in range(iterations):
        w = World(group, rng.getrandbits(32))
        w.add_domains("A")
        bo = w.backoffice
        live = bo.add_reader("A")
        w.new_tag("t")
        w.take_ownership("A", "t")
        tag, t = w.tags["t"].tag, w.tags["t"].tag_id
        for _ in range(i % 3):  # earlier, unrelated thefts push the epoch up
            bo.report_stolen("A", bo.add_reader("A").reader_id)
        stolen = bo.reader("A", "A/0")
        e = stolen.epoch
        bo.report_stolen("A", stolen.reader_id)
        sess = try_auth(live, Channel(tag, None, w.transcript, w.clock))
        if sess is None or tag.access[w.domain_id("A")].epoch != e + 1:
            live_bad.append(f"run {i}: live reader did not refresh the tag")
            continue
        live.close_session(sess)
        encid = EncryptedTagId.from_bytes(group, tag.access[w.domain_id("A")].encid)
        opened = [k.sk for k in stolen.epoch_keys if group.exp(encid.z, k.sk) == encid.y]
        if opened:
            factor_bad.append(f"run {i}: stolen key {opened[0]} passes the factor check")
        # the attempt also locks the domain out of this tag until re-granted
        if try_auth(stolen, Channel(tag, None, w.transcript, w.clock)) is not None:
            auth_bad.append(f"run {i}")
    rep.check("live reader refreshes the tag to the new epoch", iterations, len(live_bad),
              counterexamples=live_bad)
    rep.check("stolen reader's factor check fails with every key it holds", iterations, len(factor_bad),
              counterexamples=factor_bad)
    rep.check("stolen reader cannot authenticate", iterations, len(auth_bad), counterexamples=auth_bad)
    return rep


# -- at-most-once execution and token expiry ------------------------------

def _random_command(rng: random.Random) -> tuple[int, tuple[bytes, ...]]:
    field_name = rng.choice([b"entry", b"note"])
    if rng.random() < 0.5:
        return Method.WRITE, (field_name, rng.randbytes(rng.randint(0, 24)))
    return Method.READ, (b"entry",)


def _ordered_subsequence(done: list[tuple], issued: list[tuple]) -> bool:
    it = iter(issued)
    return all(any(x == y for y in it) for x in done)


@_timed
def lemma4_suite(group: GroupParams, seed: int = 0, iterations: int = 1000) -> SuiteReport:
    rep = SuiteReport("lemma4", group.name, seed)
    rng = random.Random(seed)
    fx = fixture(group, seed)
    install_log(fx)
    reader = fx.reader
    history: list[tuple[str, bytes]] = []

    bad, sessions_with_calls, executed_total, issued_total = [], 0, 0, 0
    for i in range(iterations):
        tag = fork(fx.tag(i), rng)
        base = len(tag.executions)
        tr = Transcript()
        adv = Fuzzer(seed=rng.getrandbits(32), duplicate=0.25, replay=0.25, history=history)
        sess = try_auth(reader, fx.channel(tag, adv, tr))
        confirmed = 0
        if sess is not None:
            for _ in range(rng.randint(1, 4)):
                method, args = _random_command(rng)
                try:
                    reader.invoke(sess, LOG_CLASS, method, *args)
                    confirmed += 1
                except ProtocolFailure:
                    break
            reader.close_session(sess)
        history.extend((r.direction, r.frame) for r in tr.wire())
        issued = [(c, m, p) for c, m, p in (sess.calls if sess else [])]
        done = [(x.class_id, x.method, x.params) for x in tag.executions[base:]]
        sessions_with_calls += bool(issued)
        executed_total += len(done)
        issued_total += len(issued)
        if len(done) != confirmed or not _ordered_subsequence(done, issued):
            bad.append(f"session {i}: executed {len(done)}, confirmed {confirmed}, issued {len(issued)}")
    rep.check("executions equal the honest calls the reader saw completed, each at most once",
              iterations, len(bad),
              detail=f"{sessions_with_calls} sessions reached a call; {executed_total} of {issued_total} issued calls executed",
              counterexamples=bad)

    expired_bad = []
    cls_key = fx.world.backoffice.classes[LOG_CLASS].key
    for i in range(iterations):
        tag = fork(fx.tag(i), rng)
        sess = try_auth(reader, fx.channel(tag, transcript=Transcript()))
        if sess is None:
            expired_bad.append(f"run {i}: authentication failed")
            continue
        expiry = tag.now - rng.randint(0, 1000)  # expiry <= now
        grant = TokenGrant(LOG_CLASS, Method.READ, reader.domain_id, expiry,
                           mint_permission_token(cls_key, Method.READ, reader.domain_id, expiry))
        before = len(tag.executions)
        try:
            reader.call_method(sess, LOG_CLASS, Method.READ, wire.pack_fields(b"entry"), grant)
            expired_bad.append(f"run {i}: expiry {expiry} accepted at now={tag.now}")
        except ProtocolFailure:
            if len(tag.executions) != before:
                expired_bad.append(f"run {i}: executed despite rejection")
    rep.check("expired tokens are always rejected", iterations, len(expired_bad), counterexamples=expired_bad)
    return rep


# -- decoy frame shapes ------------------------------------------------------------

@_timed
def decoy_suite(group: GroupParams, seed: int = 0, iterations: int = 1000) -> SuiteReport:
    """Frames of poisoned sessions look exactly like honest ones on the wire."""
    rep = SuiteReport("decoy", group.name, seed)
    rng = random.Random(seed)
    fx = fixture(group, seed, extra_domains=("Z",))
    install_log(fx)
    w = fx.world
    reader, stranger = fx.reader, w.reader("Z")
    cls_key = w.backoffice.classes[LOG_CLASS].key

    honest: dict[int, set] = {}
    poisoned: dict[int, set] = {}
    poisoned_count = Counter()

    def collect(tr: Transcript, into: dict, counter: Optional[Counter] = None) -> None:
        for r in tr.wire():
            s = wire.frame_shape(r.frame)
            into.setdefault(s.kind, set()).add((s.length, s.boundaries))
            if counter is not None:
                counter[s.kind] += 1

    def honest_session(tag: Tag) -> Transcript:
        tr = Transcript()
        sess = reader.authenticate(fx.channel(tag, transcript=tr))
        reader.invoke(sess, LOG_CLASS, Method.READ, b"entry")
        reader.invoke(sess, LOG_CLASS, Method.WRITE, b"entry", rng.randbytes(8))
        reader.close_session(sess)
        return tr

    def stranger_session(tag: Tag) -> Transcript:
        tr = Transcript()
        try_auth(stranger, fx.channel(tag, transcript=tr))
        return tr

    def tampered_auth(tag: Tag) -> Transcript:
        tr = Transcript()
        try_auth(reader, fx.channel(tag, Tamper(2, rng.randrange(24, 200)), tr))
        return tr

    def tampered_call(tag: Tag) -> Transcript:
        tr = Transcript()
        adv = Tamper(4, rng.randrange(24, 200))
        sess = reader.authenticate(fx.channel(tag, adv, tr))
        try:
            reader.invoke(sess, LOG_CLASS, Method.READ, b"entry")
        except ProtocolFailure:
            pass
        return tr

    def expired_call(tag: Tag) -> Transcript:
        tr = Transcript()
        sess = reader.authenticate(fx.channel(tag, transcript=tr))
        expiry = tag.now
        grant = TokenGrant(LOG_CLASS, Method.READ, reader.domain_id, expiry,
                           mint_permission_token(cls_key, Method.READ, reader.domain_id, expiry))
        try:
            reader.call_method(sess, LOG_CLASS, Method.READ, wire.pack_fields(b"entry"), grant)
        except ProtocolFailure:
            pass
        return tr

    def junk_before_stop(tag: Tag) -> Transcript:
        tr = Transcript()
        sess = reader.authenticate(fx.channel(tag, transcript=tr))
        reader.invoke(sess, LOG_CLASS, Method.READ, b"entry")
        body = rng.randbytes(wire.HEADER_LEN)
        sess.link.send(wire.frame(wire.MsgType.CALL_HEADER, body))
        reader.close_session(sess)
        return tr

    flavours = [stranger_session, tampered_auth, tampered_call, expired_call, junk_before_stop]
    i = 0
    while sum(poisoned_count.values()) < iterations:
        collect(honest_session(fork(fx.tag(i), rng)), honest)
        tag = fork(fx.tag(i), rng)
        tr = flavours[i % len(flavours)](tag)
        if not tag.session.poisoned and tag.session.domain is not None:
            raise AssertionError(f"{flavours[i % len(flavours)].__name__} left a live session")
        collect(tr, poisoned, poisoned_count)
        i += 1

    for kind in wire.MsgType:
        h, p = honest.get(kind, set()), poisoned.get(kind, set())
        n = poisoned_count[kind]
        mismatched = sorted(p ^ h, key=repr)
        rep.check(f"{kind.name} frames of poisoned sessions have the honest shape", n,
                  len(mismatched) + (0 if n and h else 1),
                  detail=f"{n} poisoned frames, {len(h)} honest shape(s)",
                  counterexamples=[repr(s) for s in mismatched])
    total = sum(poisoned_count.values())
    rep.check("enough poisoned frames compared", total, int(total < iterations), detail=f"{total} frames")
    return rep


# -- efficiency --------------------------------------------------------------------

@_timed
def efficiency_suite(group: GroupParams, seed: int = 0, iterations: int = 5,
                     sizes: tuple[int, ...] = (10, 100, 1000)) -> SuiteReport:
    """Count public-key operations per authentication on each side."""
    rep = SuiteReport("efficiency", group.name, seed)
    rng = random.Random(seed)
    reader_counts: dict[int, set[int]] = {}
    tag_counts: dict[int, set[int]] = {}
    decoy_exps = set()
    for n in sizes:
        w = World(group, seed + n)
        w.add_domains("A", "Z")
        reader = w.reader("A")
        names = []
        for i in range(n):
            names.append(f"t{i}")
            w.new_tag(f"t{i}")
            w.take_ownership("A", f"t{i}")
        for _ in range(iterations):
            tag = w.tags[rng.choice(names)].tag
            ch = Channel(tag, None, Transcript(), w.clock)
            with metrics.scope() as ops:
                sess = reader.authenticate(ch)
            reader.close_session(sess)
            reader_counts.setdefault(n, set()).add(metrics.public_key_ops(ops))
            tag_counts.setdefault(n, set()).add(metrics.public_key_ops(ch.tag_ops))
            ch = Channel(tag, None, Transcript(), w.clock)
            try_auth(w.reader("Z"), ch)
            decoy_exps.add(ch.tag_ops[metrics.MODEXP])
    values = set().union(*reader_counts.values())
    rep.check("reader public-key operations per authentication are constant", sum(map(len, reader_counts.values())),
              len(values) - 1, detail=", ".join(f"{n} tags: {sorted(v)}" for n, v in reader_counts.items()))
    tag_values = set().union(*tag_counts.values())
    rep.check("tag performs no public-key operations per authentication", len(sizes) * iterations,
              int(tag_values != {0}), detail=f"observed {sorted(tag_values)}")
    rep.check("tag decoys need no modular exponentiation", len(sizes) * iterations, int(decoy_exps != {0}),
              detail=f"observed {sorted(decoy_exps)}")
    return rep


SUITES: dict[str, Callable[..., SuiteReport]] = {
    "lemma1": lemma1_suite,
    "lemma2": lemma2_suite,
    "lemma3": lemma3_suite,
    "lemma4": lemma4_suite,
    "crypto": crypto_suite,
    "decoy": decoy_suite,
    "efficiency": efficiency_suite,
}

DEFAULT_ITERATIONS = {
    "lemma1": 500, "lemma2": 500, "lemma3": 200, "lemma4": 1000,
    "crypto": 200, "decoy": 1000, "efficiency": 5,
}


def run_suite(name: str, group: str = "toy", seed: int = 0, iterations: Optional[int] = None) -> SuiteReport:
    if name not in SUITES:
        raise ValueError(f"unknown property suite {name!r}")
    n = DEFAULT_ITERATIONS[name] if iterations is None else iterations
    if n < 1:
        raise ValueError("iterations must be positive")
    return SUITES[name](generate_group(group), seed, n)
