import random

from hypothesis import given, settings
from hypothesis import strategies as st

from tagperm import wire
from tagperm.crypto.elgamal import elgamal_decrypt, keyed_reencrypt, universal_reencrypt
from tagperm.crypto.group import TOY
from tagperm.crypto.symmetric import auth_decrypt, auth_encrypt
from tagperm.tag import AccessEntry, manufacture_tag

keys = st.binary(min_size=16, max_size=16)
exps = st.integers(min_value=0, max_value=10)


@given(keys, st.binary(max_size=200), keys)
def test_auth_roundtrip(key, msg, iv):
    assert auth_decrypt(key, auth_encrypt(key, msg, iv).to_bytes()) == msg


@given(st.lists(st.binary(max_size=40), max_size=8))
def test_fields_roundtrip(fields):
    assert wire.unpack_fields(wire.pack_fields(*fields)) == fields


@given(st.dictionaries(st.text(max_size=8), st.binary(max_size=16), max_size=6))
def test_record_roundtrip(rec):
    assert wire.decode_record(wire.encode_record(rec)) == rec


@given(st.sampled_from(list(wire.MsgType)), st.binary(max_size=300))
def test_frame_roundtrip(kind, body):
    assert wire.parse_frame(wire.frame(kind, body)) == (kind, body)


@given(st.sampled_from(TOY.elements()), st.integers(1, 10), exps, exps,
       st.lists(st.tuples(exps, exps), max_size=5))
def test_reencryption_chains(t, sk, x, x2, steps):
    pk = TOY.gexp(sk)
    e = keyed_reencrypt(TOY, t, pk, x, x2)
    for a, a2 in steps:
        e = universal_reencrypt(TOY, e, a, a2)
    assert elgamal_decrypt(TOY, e, sk) == t


@settings(max_examples=200)
@given(st.integers(0, 2**32), st.lists(st.binary(max_size=120), max_size=12))
def test_tag_survives_arbitrary_frames(seed, junk):
    tag, _ = manufacture_tag(TOY, random.Random(seed))
    rng = random.Random(seed)
    for body in junk:
        kind = rng.choice(list(wire.MsgType))
        tag.handle(wire.frame(kind, body))
        tag.handle(body)
        owners = [e for e in tag.access.values() if isinstance(e, AccessEntry) and e.owner]
        assert len(owners) <= 1
    # random bytes never execute anything
    assert tag.executions == []
