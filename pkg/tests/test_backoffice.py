import random

import pytest

from tagperm.backoffice import BackOffice, BackOfficeError, SimClock, domain_id_for
from tagperm.crypto.group import TOY
from tagperm.crypto.symmetric import mint_permission_token
from tagperm.methods import DEFAULT_OMEGA_KEY, OMEGA, Method


@pytest.fixture
def bo():
    b = BackOffice(TOY, random.Random(3))
    b.register_domain("A")
    b.register_domain("B")
    return b


def test_clock():
    c = SimClock(10)
    assert c.tick() == 10 and c.now == 11
    assert c.advance(5) == 16
    with pytest.raises(ValueError):
        c.advance(-1)


def test_domain_registration(bo):
    assert bo.domain("A").domain_id == domain_id_for("A")
    assert bo.domain("A").class_keys[OMEGA] == DEFAULT_OMEGA_KEY
    with pytest.raises(BackOfficeError):
        bo.register_domain("A")
    with pytest.raises(BackOfficeError):
        bo.domain("nope")


def test_readers_share_keys_and_tokens(bo):
    r1 = bo.add_reader("A")
    r2 = bo.add_reader("A")
    assert r1.master_key == r2.master_key
    assert r1.epoch_keys == r2.epoch_keys
    assert r1.tokens is r2.tokens
    assert bo.reader("A") is r1
    with pytest.raises(BackOfficeError):
        bo.add_reader("A", r1.reader_id)


def test_stolen_reader_misses_new_epoch(bo):
    r1, r2 = bo.add_reader("A"), bo.add_reader("A")
    e = bo.report_stolen("A", r1.reader_id)
    assert e == 1 and bo.domain("A").epoch == 1
    assert r2.epoch == 1 and r1.epoch == 0
    assert bo.reader("A") is r2
    assert len({k.sk for k in bo.domain("A").epoch_keys}) == 2
    with pytest.raises(BackOfficeError):
        bo.report_stolen("A", "B/0")


def test_toy_epoch_key_space_is_finite():
    b = BackOffice(TOY, random.Random(0))
    b.register_domain("A")
    r = b.add_reader("A")
    for _ in range(9):
        b.report_stolen("A", r.reader_id)
    with pytest.raises(BackOfficeError):
        b.report_stolen("A", r.reader_id)


def test_issue_permission(bo):
    cls = bo.register_class("A", "Log")
    g = bo.issue_permission("A", cls.class_id, Method.READ, "B", 99)
    assert g.token == mint_permission_token(cls.key, Method.READ, domain_id_for("B"), 99)
    assert g in bo.domain("B").tokens
    with pytest.raises(BackOfficeError):
        bo.issue_permission("B", cls.class_id, Method.READ, "A", 99)
    with pytest.raises(BackOfficeError):
        bo.register_class("A", "Dup", cls.class_id)


def test_object_keys_enable_issuing(bo):
    cls = bo.register_class("A", "Log")
    k = bo.new_object_key("B", cls.class_id)
    g = bo.issue_permission("B", cls.class_id, Method.READ, "A", 5)
    assert g.token == mint_permission_token(k, Method.READ, domain_id_for("A"), 5)


def test_out_of_band_queue(bo):
    assert bo.oob_recv("B") is None
    bo.oob_send("A", "B", {"x": 1})
    bo.oob_send("A", "B", {"x": 2})
    assert bo.oob_recv("B") == {"x": 1}
    assert bo.oob_recv("B") == {"x": 2}
    assert len(bo.oob_log) == 2


def test_state_roundtrip(bo):
    bo.add_reader("A")
    bo.register_class("A", "Log")
    bo.report_stolen("A", "A/0")
    doc = bo.to_state()
    back = BackOffice.from_state(doc, TOY, random.Random(0))
    assert back.to_state() == doc
