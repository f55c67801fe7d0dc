import random

import pytest

from tagperm import wire
from tagperm.crypto import metrics
from tagperm.crypto.symmetric import NULL_KEY, auth_encrypt
from tagperm.methods import DEFAULT_OMEGA_KEY, OMEGA, Method
from tagperm.snapshot import SnapshotError
from tagperm.tag import PENDING, PENDING_OWNER, AccessEntry, Tag, manufacture_tag
from tagperm.wire import MsgType


def fresh(group, seed=0):
    return manufacture_tag(group, random.Random(seed))


def test_factory_state(group):
    tag, t = fresh(group)
    assert group.is_member(t)
    assert tag.owner is None and tag.access == {}
    assert tag.objects[OMEGA].class_key == DEFAULT_OMEGA_KEY
    assert tag.session.key == NULL_KEY and tag.session.domain is None


def test_unknown_domain_gets_a_decoy_of_the_right_shape(group):
    tag, _ = fresh(group)
    reply = tag.handle(wire.frame(MsgType.HELLO, bytes(16)))
    kind, body = wire.parse_frame(reply)
    assert kind is MsgType.HELLO_REPLY and len(body) == wire.hello_reply_len(group)
    assert tag.session.poisoned
    # decoy elements are genuine group elements
    for i in range(4):
        assert group.is_member(group.decode(body[i * group.width:(i + 1) * group.width]))


def test_auth_without_hello_is_answered_with_noise(group):
    tag, _ = fresh(group)
    reply = tag.handle(wire.frame(MsgType.AUTH, bytes(wire.auth_len(group))))
    kind, body = wire.parse_frame(reply)
    assert kind is MsgType.AUTH_REPLY and len(body) == wire.AUTH_REPLY_LEN


def test_garbage_is_ignored(group):
    tag, _ = fresh(group)
    assert tag.handle(b"\x01") is None
    assert tag.handle(wire.frame(MsgType.HELLO_REPLY, b"")) is None


def _call(tag, key, counter, class_id, method, *args, expiry=0, token=wire.NO_TOKEN, rng=None):
    rng = rng or random.Random(0)
    g = tag.group
    h = wire.CallHeader(counter, class_id, method, expiry, token).to_bytes()
    tag.handle(wire.frame(MsgType.CALL_HEADER, auth_encrypt(key, h, rng.randbytes(16)).to_bytes()))
    p = wire.u32(counter + 1) + wire.fit_payload(wire.pack_fields(*args), wire.payload_capacity(g))
    return tag.handle(wire.frame(MsgType.CALL_PARAMS, auth_encrypt(key, p, rng.randbytes(16)).to_bytes()))


def _take_args(group, domain=b"D" * 16):
    enc = group.encode(1) * 4
    return domain, enc, wire.u32(0), b"k" * 16, wire.u64(500)


def test_take_ownership_under_null_key(group):
    tag, _ = fresh(group)
    reply = _call(tag, NULL_KEY, 0, OMEGA, Method.TAKE_TAG_OWNERSHIP, *_take_args(group))
    assert wire.parse_frame(reply)[0] is MsgType.CALL_RESULT
    assert tag.owner == b"D" * 16
    assert tag.now == 500
    assert tag.session.counter == 3
    assert [e.method for e in tag.executions] == [Method.TAKE_TAG_OWNERSHIP]


def test_second_take_rejected(group):
    tag, _ = fresh(group)
    _call(tag, NULL_KEY, 0, OMEGA, Method.TAKE_TAG_OWNERSHIP, *_take_args(group))
    _call(tag, NULL_KEY, 3, OMEGA, Method.TAKE_TAG_OWNERSHIP, *_take_args(group, b"E" * 16))
    assert tag.owner == b"D" * 16
    assert len(tag.executions) == 1
    assert tag.session.poisoned and tag.session.counter == 0


def test_wrong_arity_rejected(group):
    tag, _ = fresh(group)
    _call(tag, NULL_KEY, 0, OMEGA, Method.TAKE_TAG_OWNERSHIP, b"D" * 16)
    assert tag.owner is None and tag.executions == []


def test_token_gated_call_needs_authenticated_session(group):
    tag, _ = fresh(group)
    _call(tag, NULL_KEY, 0, OMEGA, Method.INSTALL_OBJECT, wire.u32(5), b"k" * 16, b"",
          expiry=10**9, token=bytes(32))
    assert 5 not in tag.objects and tag.session.poisoned


def test_replayed_counter_poisons(group):
    tag, _ = fresh(group)
    _call(tag, NULL_KEY, 0, OMEGA, Method.TAKE_TAG_OWNERSHIP, *_take_args(group))
    _call(tag, NULL_KEY, 0, OMEGA, Method.TAKE_TAG_OWNERSHIP, *_take_args(group))
    assert len(tag.executions) == 1


def test_tag_does_no_public_key_work_on_hello_or_call(group):
    tag, _ = fresh(group)
    with metrics.scope() as ops:
        _call(tag, NULL_KEY, 0, OMEGA, Method.TAKE_TAG_OWNERSHIP, *_take_args(group))
        tag.handle(wire.frame(MsgType.HELLO, b"D" * 16))
    assert ops[metrics.MODEXP] == 0 and ops[metrics.MODMUL] == 0
    assert ops[metrics.AES_BLOCK] > 0


def test_failed_owner_auth_keeps_tag_owned(group):
    tag, _ = fresh(group)
    _call(tag, NULL_KEY, 0, OMEGA, Method.TAKE_TAG_OWNERSHIP, *_take_args(group))
    tag.handle(wire.frame(MsgType.HELLO, b"D" * 16))
    tag.handle(wire.frame(MsgType.AUTH, bytes(wire.auth_len(group))))
    assert tag.access[b"D" * 16] is PENDING_OWNER
    assert tag.owner == b"D" * 16
    # a hijack under the null key is still refused
    _call(tag, NULL_KEY, 0, OMEGA, Method.TAKE_TAG_OWNERSHIP, *_take_args(group, b"E" * 16))
    assert tag.owner == b"D" * 16


def test_snapshot_roundtrip(group):
    tag, _ = fresh(group)
    _call(tag, NULL_KEY, 0, OMEGA, Method.TAKE_TAG_OWNERSHIP, *_take_args(group))
    tag.access[b"P" * 16] = PENDING
    blob = tag.snapshot()
    back = Tag.restore(blob, group, random.Random(1))
    assert back.snapshot() == blob
    assert isinstance(back.access[b"D" * 16], AccessEntry)
    assert back.access[b"P" * 16] is PENDING
    with pytest.raises(SnapshotError):
        Tag.restore(blob[:-3] + b"abc", group, random.Random(1))
