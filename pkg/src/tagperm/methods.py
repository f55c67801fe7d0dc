"""Class and method identifiers understood by tags."""

from __future__ import annotations

import enum

OMEGA = 0  # class id of the tag management object

# Publicly known class key every tag's management object starts with.
DEFAULT_OMEGA_KEY = b"OMEGA-DEFAULTKEY"


class Method(enum.IntEnum):
    TAKE_TAG_OWNERSHIP = 0x01
    TRANSFER_TAG_OWNERSHIP = 0x02
    RELINQUISH_TAG_OWNERSHIP = 0x03
    GRANT_TAG_ACCESS = 0x04
    ACCEPT_TAG_ACCESS = 0x05
    REVOKE_TAG_ACCESS = 0x06
    REENCRYPT_GET_IDS = 0x07
    REENCRYPT_PUT_IDS = 0x08
    INSTALL_OBJECT = 0x09
    UPDATE_OBJECT = 0x10
    UPDATE_CLASS_KEY = 0x11
    DELETE_OBJECT = 0x12
    READ = 0x20
    WRITE = 0x21


# Guarded by ownership or session provenance instead of a token.
PERMISSION_FREE = frozenset(
    {
        Method.TAKE_TAG_OWNERSHIP,
        Method.TRANSFER_TAG_OWNERSHIP,
        Method.RELINQUISH_TAG_OWNERSHIP,
        Method.GRANT_TAG_ACCESS,
        Method.ACCEPT_TAG_ACCESS,
        Method.REVOKE_TAG_ACCESS,
        Method.REENCRYPT_GET_IDS,
        Method.REENCRYPT_PUT_IDS,
    }
)

OMEGA_METHODS = PERMISSION_FREE | {Method.INSTALL_OBJECT, Method.UPDATE_OBJECT, Method.UPDATE_CLASS_KEY}
RECORD_METHODS = frozenset(
    {Method.READ, Method.WRITE, Method.UPDATE_OBJECT, Method.UPDATE_CLASS_KEY, Method.DELETE_OBJECT}
)

# Methods whose honest result is 16 random bytes.
VOID_METHODS = frozenset(
    {
        Method.TAKE_TAG_OWNERSHIP,
        Method.TRANSFER_TAG_OWNERSHIP,
        Method.RELINQUISH_TAG_OWNERSHIP,
        Method.GRANT_TAG_ACCESS,
        Method.ACCEPT_TAG_ACCESS,
        Method.REVOKE_TAG_ACCESS,
        Method.INSTALL_OBJECT,
        Method.UPDATE_OBJECT,
        Method.UPDATE_CLASS_KEY,
        Method.DELETE_OBJECT,
        Method.WRITE,
    }
)


def is_permission_free(class_id: int, method: int) -> bool:
    return class_id == OMEGA and method in PERMISSION_FREE


def defined_for(class_id: int, method: int) -> bool:
    if class_id == OMEGA:
        return method in OMEGA_METHODS
    return method in RECORD_METHODS
