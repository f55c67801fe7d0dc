"""ElGamal encryption of tag identifiers with universal re-encryption.

An encrypted identifier carries the ciphertext ``(u, v)`` and a
re-encryption factor ``(y, z)``, itself an encryption of 1 under the same
key. The factor lets a party re-randomize the ciphertext without knowing
the public key, and lets the key holder recognize its own ciphertexts
(``y == z**sk``).
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Optional

from .group import GroupParams


class ForeignCiphertext(ValueError):
    """The re-encryption factor does not match the private key."""


@dataclass(frozen=True)
class ElGamalKeyPair:
    sk: int
    pk: int

    @classmethod
    def generate(cls, group: GroupParams, rng: random.Random) -> "ElGamalKeyPair":
        sk = group.random_exponent(rng)
        return cls(sk=sk, pk=group.gexp(sk))


@dataclass(frozen=True)
class EncryptedTagId:
    u: int
    v: int
    y: int
    z: int

    def to_bytes(self, group: GroupParams) -> bytes:
        return b"".join(group.encode(c) for c in (self.u, self.v, self.y, self.z))

    @classmethod
    def from_bytes(cls, group: GroupParams, data: bytes) -> "EncryptedTagId":
        w = group.width
        if len(data) != 4 * w:
            raise ValueError(f"encrypted id must be {4 * w} bytes")
        return cls(*(group.decode(data[i * w:(i + 1) * w]) for i in range(4)))

    def validate(self, group: GroupParams) -> "EncryptedTagId":
        for c in (self.u, self.v, self.y, self.z):
            group.require_member(c)
        return self


def elgamal_encrypt(group: GroupParams, t: int, pk: int, x: int) -> tuple[int, int]:
    group.require_member(t)
    return group.mul(t, group.exp(pk, x)), group.gexp(x)


def make_reenc_factor(group: GroupParams, pk: int, x: int) -> tuple[int, int]:
    return group.exp(pk, x), group.gexp(x)


def keyed_reencrypt(group: GroupParams, t: int, pk: int, a: int, a2: int) -> EncryptedTagId:
    """Fresh encryption of ``t`` under ``pk``, with a fresh factor."""
    u, v = elgamal_encrypt(group, t, pk, a)
    y, z = make_reenc_factor(group, pk, a2)
    return EncryptedTagId(u, v, y, z)


def universal_reencrypt(group: GroupParams, encid: EncryptedTagId, a: int, a2: int) -> EncryptedTagId:
    # No key material here: re-randomization uses only the bundled factor.
    return EncryptedTagId(
        u=group.mul(encid.u, group.exp(encid.y, a)),
        v=group.mul(encid.v, group.exp(encid.z, a)),
        y=group.exp(encid.y, a2),
        z=group.exp(encid.z, a2),
    )


def elgamal_decrypt(group: GroupParams, encid: EncryptedTagId, sk: int) -> int:
    """Recover the tag id, raising :class:`ForeignCiphertext` on a key mismatch."""
    if group.exp(encid.z, sk) != encid.y:
        raise ForeignCiphertext("re-encryption factor does not match key")
    return group.div(encid.u, group.exp(encid.v, sk))


def try_decrypt(group: GroupParams, encid: EncryptedTagId, sk: int) -> Optional[int]:
    try:
        return elgamal_decrypt(group, encid, sk)
    except ForeignCiphertext:
        return None


def random_encid(group: GroupParams, t: int, pk: int, rng: random.Random) -> EncryptedTagId:
    return keyed_reencrypt(group, t, pk, group.random_exponent(rng), group.random_exponent(rng))


def random_universal_reencrypt(group: GroupParams, encid: EncryptedTagId, rng: random.Random) -> EncryptedTagId:
    return universal_reencrypt(group, encid, group.random_exponent(rng), group.random_exponent(rng))
