import itertools

import pytest

from tagperm.crypto.elgamal import (
    ElGamalKeyPair,
    EncryptedTagId,
    ForeignCiphertext,
    elgamal_decrypt,
    elgamal_encrypt,
    keyed_reencrypt,
    make_reenc_factor,
    random_encid,
    random_universal_reencrypt,
    try_decrypt,
    universal_reencrypt,
)
from tagperm.crypto.group import TOY, GroupError

# hand-computed in Z_23^*, g = 2, sk = 3, pk = 8
SK, PK = 3, 8


def test_frozen_toy_values():
    assert TOY.gexp(SK) == PK
    assert elgamal_encrypt(TOY, 4, PK, 5) == (18, 9)
    assert make_reenc_factor(TOY, PK, 2) == (18, 4)
    assert elgamal_decrypt(TOY, EncryptedTagId(18, 9, 18, 4), SK) == 4


def test_universal_reencryption_frozen():
    e = EncryptedTagId(18, 9, 18, 4)
    # u' = 18 * 18^2, v' = 9 * 4^2, (y', z') = (18^3, 4^3) mod 23
    r = universal_reencrypt(TOY, e, 2, 3)
    assert r == EncryptedTagId(18 * 18**2 % 23, 9 * 16 % 23, 18**3 % 23, 64 % 23)
    assert elgamal_decrypt(TOY, r, SK) == 4


def test_foreign_key_rejected():
    e = keyed_reencrypt(TOY, 4, PK, 5, 2)
    for sk in range(1, 11):
        if sk != SK:
            with pytest.raises(ForeignCiphertext):
                elgamal_decrypt(TOY, e, sk)
            assert try_decrypt(TOY, e, sk) is None


def test_zero_exponent_factor_is_degenerate():
    e = keyed_reencrypt(TOY, 4, PK, 5, 0)
    assert (e.y, e.z) == (1, 1)
    # every key "recognizes" the ciphertext, which is why protocol exponents avoid 0
    assert try_decrypt(TOY, e, 1) is not None


def test_encrypt_requires_group_member():
    with pytest.raises(GroupError):
        elgamal_encrypt(TOY, 5, PK, 1)


def test_serialization_roundtrip(group, rng):
    kp = ElGamalKeyPair.generate(group, rng)
    t = group.random_element(rng)
    e = random_encid(group, t, kp.pk, rng)
    raw = e.to_bytes(group)
    assert len(raw) == 4 * group.width
    assert EncryptedTagId.from_bytes(group, raw) == e
    with pytest.raises(ValueError):
        EncryptedTagId.from_bytes(group, raw[:-1])


def test_validate_rejects_non_members():
    with pytest.raises(GroupError):
        EncryptedTagId(5, 1, 1, 1).validate(TOY)


def test_reencryption_chain_preserves_plaintext(group, rng):
    kp = ElGamalKeyPair.generate(group, rng)
    t = group.random_element(rng)
    e = random_encid(group, t, kp.pk, rng)
    for _ in range(10):
        e2 = random_universal_reencrypt(group, e, rng)
        assert e2 != e or group.q < 100
        e = e2
    assert elgamal_decrypt(group, e, kp.sk) == t


def test_exhaustive_small_roundtrip():
    for t, x, a in itertools.product(TOY.elements(), range(11), range(1, 11)):
        e = keyed_reencrypt(TOY, t, PK, x, a)
        assert elgamal_decrypt(TOY, e, SK) == t
