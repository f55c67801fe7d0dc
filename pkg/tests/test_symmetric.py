import pytest
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

from tagperm.crypto import metrics
from tagperm.crypto.symmetric import (
    NULL_KEY,
    AuthCiphertext,
    AuthError,
    aes_encrypt_block,
    auth_ciphertext_len,
    auth_decrypt,
    auth_encrypt,
    cbc_mac,
    cmac_tag,
    diversify_key,
    mint_permission_token,
    pkcs7_pad,
    pkcs7_unpad,
    plain_decrypt,
    plain_encrypt,
    token_plaintext,
    xor_bytes,
)

KEY = bytes.fromhex("2b7e151628aed2a6abf7158809cf4f3c")
IV = bytes(range(16))


def ecb(key, block):
    enc = Cipher(algorithms.AES(key), modes.ECB()).encryptor()
    return enc.update(block) + enc.finalize()


def cbc_oracle(key, iv, data):
    out, prev = b"", iv
    for i in range(0, len(data), 16):
        prev = ecb(key, bytes(a ^ b for a, b in zip(data[i:i + 16], prev)))
        out += prev
    return out


def test_aes_fips197_vector():
    key = bytes(range(16))
    pt = bytes.fromhex("00112233445566778899aabbccddeeff")
    assert aes_encrypt_block(key, pt).hex() == "69c4e0d86a7b0430d8cdb78070b4c55a"


@pytest.mark.parametrize("msg,mac", [
    ("", "bb1d6929e95937287fa37d129b756746"),
    ("6bc1bee22e409f96e93d7e117393172a", "070a16b46b4d4144f79bdd9dd04a287c"),
    ("6bc1bee22e409f96e93d7e117393172aae2d8a571e03ac9c9eb76fac45af8e5130c81c46a35ce411",
     "dfa66747de9ae63030ca32611497c827"),
])
def test_cmac_rfc4493_vectors(msg, mac):
    assert cmac_tag(KEY, bytes.fromhex(msg)).hex() == mac


def test_pkcs7():
    assert pkcs7_pad(b"") == b"\x10" * 16
    assert pkcs7_pad(b"abc") == b"abc" + b"\x0d" * 13
    assert pkcs7_unpad(pkcs7_pad(b"x" * 16)) == b"x" * 16
    with pytest.raises(ValueError):
        pkcs7_unpad(b"a" * 15 + b"\x00")


def test_auth_roundtrip_and_length():
    for n in (0, 1, 15, 16, 17, 100):
        m = bytes(range(n % 256)) * (n // 256 + 1)
        m = m[:n]
        c = auth_encrypt(KEY, m, IV)
        assert len(c.to_bytes()) == auth_ciphertext_len(n)
        assert auth_decrypt(KEY, c.to_bytes()) == m
        assert auth_decrypt(KEY, c) == m


def test_auth_layout_matches_independent_construction():
    k_enc = ecb(KEY, bytes(15) + b"\x01")
    k_mac = ecb(KEY, bytes(15) + b"\x02")
    m = b"hello, tag"
    c = auth_encrypt(KEY, m, IV)
    body = cbc_oracle(k_enc, IV, m + bytes([6]) * 6)
    assert c.iv == IV and c.body == body
    assert c.tag == cmac_tag(k_mac, IV + body)


def test_every_bit_flip_is_detected():
    raw = auth_encrypt(KEY, b"STOP", IV).to_bytes()
    for bit in range(len(raw) * 8):
        b = bytearray(raw)
        b[bit // 8] ^= 1 << (bit % 8)
        with pytest.raises(AuthError):
            auth_decrypt(KEY, bytes(b))


def test_wrong_key_and_malformed():
    raw = auth_encrypt(KEY, b"data", IV).to_bytes()
    with pytest.raises(AuthError):
        auth_decrypt(NULL_KEY, raw)
    with pytest.raises(AuthError):
        AuthCiphertext.from_bytes(raw[:-1])


def test_plain_cbc():
    m = bytes(32)
    c = plain_encrypt(KEY, m, IV)
    assert c == IV + cbc_oracle(KEY, IV, m)
    assert plain_decrypt(KEY, c) == m
    with pytest.raises(ValueError):
        plain_decrypt(KEY, c[:-1])


def test_diversified_key_is_cbc_mac_of_padded_id():
    tid = b"\x05\x07"
    expected = cbc_oracle(KEY, bytes(16), bytes(14) + tid)[-16:]
    assert diversify_key(KEY, tid) == expected
    assert diversify_key(KEY, tid) != diversify_key(KEY, b"\x05\x08")
    long_id = bytes(range(1, 129))
    assert diversify_key(KEY, long_id) == cbc_mac(KEY, long_id)


def test_permission_token_layout():
    dom = bytes(range(16))
    pt = token_plaintext(0x21, dom, 1_000_000)
    assert pt == b"\x00\x00\x00\x21" + dom + (1_000_000).to_bytes(8, "big")
    tok = mint_permission_token(KEY, 0x21, dom, 1_000_000)
    assert len(tok) == 32
    assert tok == cbc_oracle(KEY, bytes(16), pt + b"\x04" * 4)
    # deterministic, and bound to every field
    assert tok == mint_permission_token(KEY, 0x21, dom, 1_000_000)
    assert tok != mint_permission_token(KEY, 0x20, dom, 1_000_000)
    assert tok != mint_permission_token(KEY, 0x21, dom, 1_000_001)


def test_aes_blocks_counted():
    with metrics.scope() as ops:
        aes_encrypt_block(KEY, bytes(16))
    assert ops[metrics.AES_BLOCK] >= 1
    assert metrics.public_key_ops(ops) == 0


def test_xor_requires_equal_lengths():
    assert xor_bytes(b"\x0f", b"\xf0") == b"\xff"
    with pytest.raises(ValueError):
        xor_bytes(b"a", b"ab")
