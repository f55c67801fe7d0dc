from .elgamal import (
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
from .group import DESK, TOY, GroupError, GroupParams, generate_group
from .symmetric import (
    NULL_KEY,
    AuthCiphertext,
    AuthError,
    auth_decrypt,
    auth_encrypt,
    diversify_key,
    mint_permission_token,
    plain_decrypt,
    plain_encrypt,
)

__all__ = [
    "DESK",
    "NULL_KEY",
    "TOY",
    "AuthCiphertext",
    "AuthError",
    "ElGamalKeyPair",
    "EncryptedTagId",
    "ForeignCiphertext",
    "GroupError",
    "GroupParams",
    "auth_decrypt",
    "auth_encrypt",
    "diversify_key",
    "elgamal_decrypt",
    "elgamal_encrypt",
    "generate_group",
    "keyed_reencrypt",
    "make_reenc_factor",
    "mint_permission_token",
    "plain_decrypt",
    "plain_encrypt",
    "random_encid",
    "random_universal_reencrypt",
    "try_decrypt",
    "universal_reencrypt",
]
