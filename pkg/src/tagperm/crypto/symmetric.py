"""AES-128 based primitives: CBC, encrypt-then-MAC with CMAC, key
diversification and permission tokens.

All byte layouts here are part of the wire format (see docs/wire-format.md).
"""

from __future__ import annotations

import hmac
import random
import struct
from dataclasses import dataclass

from cryptography.hazmat.primitives import cmac, padding
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

from . import metrics

BLOCK = 16
KEY_SIZE = 16
MAC_SIZE = 16
TOKEN_SIZE = 32

# Between sessions the tag "has no key"; the model represents that with this
# well-known, perfectly usable key.
NULL_KEY = bytes(KEY_SIZE)

_ENC_LABEL = bytes(15) + b"\x01"
_MAC_LABEL = bytes(15) + b"\x02"


class AuthError(ValueError):
    """MAC verification failed; no plaintext is released."""


def _check_key(key: bytes) -> bytes:
    if len(key) != KEY_SIZE:
        raise ValueError(f"AES-128 key must be {KEY_SIZE} bytes, got {len(key)}")
    return key


def aes_encrypt_block(key: bytes, block: bytes) -> bytes:
    if len(block) != BLOCK:
        raise ValueError("block must be 16 bytes")
    metrics.count(metrics.AES_BLOCK)
    enc = Cipher(algorithms.AES(_check_key(key)), modes.ECB()).encryptor()
    return enc.update(block) + enc.finalize()


def _cbc(key: bytes, iv: bytes, data: bytes, decrypt: bool = False) -> bytes:
    if len(data) % BLOCK:
        raise ValueError("CBC input must be block aligned")
    metrics.count(metrics.AES_BLOCK, len(data) // BLOCK)
    c = Cipher(algorithms.AES(_check_key(key)), modes.CBC(iv))
    ctx = c.decryptor() if decrypt else c.encryptor()
    return ctx.update(data) + ctx.finalize()


def pkcs7_pad(data: bytes) -> bytes:
    p = padding.PKCS7(BLOCK * 8).padder()
    return p.update(data) + p.finalize()


def pkcs7_unpad(data: bytes) -> bytes:
    u = padding.PKCS7(BLOCK * 8).unpadder()
    return u.update(data) + u.finalize()


def padded_len(n: int) -> int:
    return (n // BLOCK + 1) * BLOCK


def cmac_tag(key: bytes, data: bytes) -> bytes:
    metrics.count(metrics.AES_BLOCK, max(1, -(-len(data) // BLOCK)))
    c = cmac.CMAC(algorithms.AES(_check_key(key)))
    c.update(data)
    return c.finalize()


def xor_bytes(a: bytes, b: bytes) -> bytes:
    if len(a) != len(b):
        raise ValueError("length mismatch")
    return bytes(x ^ y for x, y in zip(a, b))


def random_bytes(rng: random.Random, n: int) -> bytes:
    return rng.randbytes(n)


# -- plain CBC (no integrity) ------------------------------------------------

def plain_encrypt(key: bytes, m: bytes, iv: bytes) -> bytes:
    """CBC encryption of block-aligned ``m``; returns ``iv || ciphertext``."""
    if len(iv) != BLOCK:
        raise ValueError("iv must be 16 bytes")
    return iv + _cbc(key, iv, m)


def plain_decrypt(key: bytes, c: bytes) -> bytes:
    if len(c) < BLOCK or len(c) % BLOCK:
        raise ValueError("ciphertext length is not block aligned")
    return _cbc(key, c[:BLOCK], c[BLOCK:], decrypt=True)


# -- encrypt-then-MAC --------------------------------------------------------

@dataclass(frozen=True)
class AuthCiphertext:
    iv: bytes
    body: bytes
    tag: bytes

    def to_bytes(self) -> bytes:
        return self.iv + self.body + self.tag

    @classmethod
    def from_bytes(cls, data: bytes) -> "AuthCiphertext":
        if len(data) < 2 * BLOCK + MAC_SIZE or (len(data) - BLOCK - MAC_SIZE) % BLOCK:
            raise AuthError("malformed authenticated ciphertext")
        return cls(data[:BLOCK], data[BLOCK:-MAC_SIZE], data[-MAC_SIZE:])


def _subkeys(key: bytes) -> tuple[bytes, bytes]:
    return aes_encrypt_block(key, _ENC_LABEL), aes_encrypt_block(key, _MAC_LABEL)


def auth_encrypt(key: bytes, m: bytes, iv: bytes) -> AuthCiphertext:
    if len(iv) != BLOCK:
        raise ValueError("iv must be 16 bytes")
    k_enc, k_mac = _subkeys(key)
    body = _cbc(k_enc, iv, pkcs7_pad(m))
    return AuthCiphertext(iv, body, cmac_tag(k_mac, iv + body))


def auth_decrypt(key: bytes, c: AuthCiphertext | bytes) -> bytes:
    if isinstance(c, (bytes, bytearray)):
        c = AuthCiphertext.from_bytes(bytes(c))
    k_enc, k_mac = _subkeys(key)
    if not hmac.compare_digest(cmac_tag(k_mac, c.iv + c.body), c.tag):
        raise AuthError("MAC mismatch")
    try:
        return pkcs7_unpad(_cbc(k_enc, c.iv, c.body, decrypt=True))
    except ValueError as exc:  # cannot happen for MAC-valid output of auth_encrypt
        raise AuthError("bad padding") from exc


def auth_ciphertext_len(plaintext_len: int) -> int:
    return BLOCK + padded_len(plaintext_len) + MAC_SIZE


# -- derived keys and tokens -------------------------------------------------

def cbc_mac(key: bytes, data: bytes) -> bytes:
    if len(data) % BLOCK:
        raise ValueError("CBC-MAC input must be block aligned")
    return _cbc(key, bytes(BLOCK), data)[-BLOCK:]


def diversify_key(master_key: bytes, tag_id_bytes: bytes) -> bytes:
    """Tag access key: CBC-MAC of the left-zero-padded tag id under the master key."""
    width = -(-len(tag_id_bytes) // BLOCK) * BLOCK or BLOCK
    return cbc_mac(master_key, tag_id_bytes.rjust(width, b"\x00"))


def token_plaintext(method: int, domain: bytes, expiry: int) -> bytes:
    if len(domain) != 16:
        raise ValueError("domain id must be 16 bytes")
    return struct.pack(">I", method) + domain + struct.pack(">Q", expiry)


def mint_permission_token(class_key: bytes, method: int, domain: bytes, expiry: int) -> bytes:
    """Deterministic CBC encryption (zero IV) of ``method || domain || expiry``."""
    return _cbc(class_key, bytes(BLOCK), pkcs7_pad(token_plaintext(method, domain, expiry)))
