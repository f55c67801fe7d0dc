import pytest

from tagperm import wire
from tagperm.crypto import metrics
from tagperm.crypto.elgamal import EncryptedTagId, elgamal_decrypt
from tagperm.methods import OMEGA, Method
from tagperm.reader import AuthenticationFailed, CallFailed
from tagperm.tag import PENDING, AccessEntry
from tagperm.transport import Drop, Replay, Tamper


def test_mutual_authentication_agrees(owned):
    w = owned
    tag = w.tags["t"].tag
    reader = w.reader("A")
    sess = reader.authenticate(w.link("t"))
    assert sess.key == tag.session.key
    assert sess.tag_id == w.tags["t"].tag_id
    assert tag.session.domain == w.domain_id("A")
    reader.close_session(sess)
    assert tag.session.domain is None and tag.session.key == bytes(16)


def test_authentication_refreshes_encid(owned):
    w = owned
    tag = w.tags["t"].tag
    dom = w.domain_id("A")
    before = tag.access[dom].encid
    w.reader("A").close_session(w.authenticate("A", "t"))
    after = tag.access[dom]
    assert after.encid != before
    keys = w.backoffice.domain("A").epoch_keys
    enc = EncryptedTagId.from_bytes(w.group, after.encid)
    assert elgamal_decrypt(w.group, enc, keys[after.epoch].sk) == w.tags["t"].tag_id


def test_unknown_domain_cannot_authenticate(owned):
    with pytest.raises(AuthenticationFailed, match="foreign|future"):
        owned.authenticate("B", "t")


def test_tag_time_must_advance(owned):
    w = owned
    tag = w.tags["t"].tag
    tag.now = w.clock.now + 100
    with pytest.raises(AuthenticationFailed):
        w.authenticate("A", "t")
    # failure leaves the domain locked out, as owner
    assert tag.owner == w.domain_id("A")
    with pytest.raises(AuthenticationFailed):
        w.clock.advance(1000)
        w.authenticate("A", "t")


def test_tampered_auth_locks_domain_out(owned):
    w = owned
    with pytest.raises(AuthenticationFailed):
        w.authenticate("A", "t", adversary=Tamper(2, 100))


def test_dropped_reply(owned):
    with pytest.raises(AuthenticationFailed, match="no hello reply"):
        owned.authenticate("A", "t", adversary=Drop(1))


def test_replayed_auth_from_old_session_fails(owned):
    w = owned
    reader = w.reader("A")
    first = w.link("t")
    reader.close_session(reader.authenticate(first))
    old_auth = [r.frame for r in w.transcript.wire() if r.session == first.session][2]
    ch = w.link("t")
    reply = ch.send(wire.frame(wire.MsgType.HELLO, w.domain_id("A")))
    assert reply is not None
    ch.send(old_auth)
    assert w.tags["t"].tag.session.domain is None


def test_call_roundtrip_and_counters(owned):
    w = owned
    cls = w.backoffice.register_class("A", "Log")
    w.permit("A", OMEGA, Method.INSTALL_OBJECT, "A")
    w.permit("A", cls.class_id, [Method.READ, Method.WRITE], "A")
    w.install_object("A", "t", cls.class_id, cls.key, {"f": b"1"})
    with w.session("A", "t") as (reader, sess):
        assert reader.invoke(sess, cls.class_id, Method.READ, b"f") == b"1"
        assert sess.counter == 3
        reader.invoke(sess, cls.class_id, Method.WRITE, b"f", b"2")
        assert reader.invoke(sess, cls.class_id, Method.READ, b"f") == b"2"
        assert w.tags["t"].tag.session.counter == sess.counter == 9


def test_missing_token_is_refused_locally(owned):
    with pytest.raises(CallFailed, match="no permission token"):
        owned.read("A", "t", 42, "x")


def test_duplicated_params_execute_once(owned):
    w = owned
    cls = w.backoffice.register_class("A", "Log")
    w.permit("A", OMEGA, Method.INSTALL_OBJECT, "A")
    w.permit("A", cls.class_id, Method.WRITE, "A")
    w.install_object("A", "t", cls.class_id, cls.key)
    tag = w.tags["t"].tag
    before = len(tag.executions)
    # indices count both directions: 0-3 handshake, 4 header, 5 params, 6 result
    reader = w.reader("A")
    sess = reader.authenticate(w.link("t", adversary=Replay(source=5, at=5)))
    reader.invoke(sess, cls.class_id, Method.WRITE, b"f", b"v")
    assert len(tag.executions) == before + 1
    assert tag.session.poisoned


def test_reader_public_key_work_is_constant(owned):
    w = owned
    counts = set()
    for _ in range(3):
        with metrics.scope() as ops:
            s = w.authenticate("A", "t")
        w.reader("A").close_session(s)
        counts.add(metrics.public_key_ops(ops))
    assert len(counts) == 1


def test_transfer_and_grant_flows(owned):
    w = owned
    tag = w.tags["t"].tag
    w.transfer_ownership("A", "B", "t")
    assert tag.owner == w.domain_id("B")
    assert list(tag.access) == [w.domain_id("B")]
    with pytest.raises(AuthenticationFailed):
        w.authenticate("A", "t")
    w.grant_access("B", "C", "t")
    entry = tag.access[w.domain_id("C")]
    assert isinstance(entry, AccessEntry) and not entry.owner
    w.reader("C").close_session(w.authenticate("C", "t"))
    w.revoke_access("B", "C", "t")
    assert w.domain_id("C") not in tag.access


def test_only_owner_may_grant(owned):
    w = owned
    w.grant_access("A", "B", "t")
    with pytest.raises(CallFailed):
        w.call("B", "t", OMEGA, Method.GRANT_TAG_ACCESS, w.domain_id("C"))
    assert w.domain_id("C") not in w.tags["t"].tag.access


def test_accept_requires_a_pending_grant(owned):
    w = owned
    with w.session("A", "t") as (reader, sess):
        encid, epoch, k = w.reader("B").enrollment_args(w.tags["t"].tag_id)
        with pytest.raises(CallFailed):
            reader.invoke(sess, OMEGA, Method.ACCEPT_TAG_ACCESS, w.domain_id("B"), encid, epoch, k)
    assert w.domain_id("B") not in w.tags["t"].tag.access


def test_grant_leaves_pending_until_accepted(owned):
    w = owned
    w.call("A", "t", OMEGA, Method.GRANT_TAG_ACCESS, w.domain_id("B"))
    assert w.tags["t"].tag.access[w.domain_id("B")] is PENDING


def test_relinquish(owned):
    w = owned
    w.relinquish_ownership("A", "t")
    tag = w.tags["t"].tag
    assert tag.owner is None and tag.access == {}
    w.take_ownership("B", "t")
    assert tag.owner == w.domain_id("B")


def test_owner_reencryption(owned):
    w = owned
    w.grant_access("A", "B", "t")
    tag = w.tags["t"].tag
    before = {d: e.encid for d, e in tag.access.items()}
    assert w.reencrypt_all("A", "t") == 2
    assert all(tag.access[d].encid != before[d] for d in before)
    w.reader("B").close_session(w.authenticate("B", "t"))


def test_put_ids_skips_non_members(owned):
    w = owned
    g = w.group
    with w.session("A", "t") as (reader, sess):
        entries = wire.decode_id_list(reader.invoke(sess, OMEGA, Method.REENCRYPT_GET_IDS))
        d, e, _ = entries[0]
        bogus = g.encode(0) * 4
        n = reader.invoke(sess, OMEGA, Method.REENCRYPT_PUT_IDS, wire.encode_id_list([(d, e, bogus)]))
    assert wire.read_u32(n) == 0


def test_delete_object(owned):
    w = owned
    cls = w.backoffice.register_class("A", "Tmp")
    w.permit("A", OMEGA, Method.INSTALL_OBJECT, "A")
    w.permit("A", cls.class_id, Method.DELETE_OBJECT, "A")
    w.install_object("A", "t", cls.class_id, cls.key)
    w.call("A", "t", cls.class_id, Method.DELETE_OBJECT)
    assert cls.class_id not in w.tags["t"].tag.objects


def test_omega_cannot_be_deleted(owned):
    w = owned
    w.permit("A", OMEGA, Method.DELETE_OBJECT, "A")
    with pytest.raises(CallFailed):
        w.call("A", "t", OMEGA, Method.DELETE_OBJECT)
    assert OMEGA in w.tags["t"].tag.objects
