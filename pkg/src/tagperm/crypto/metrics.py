"""Operation counters for efficiency instrumentation.

Crypto primitives call :func:`count` on every modular exponentiation,
group multiplication and AES block invocation. Counting only happens
inside an active :func:`scope`; scopes nest, and the innermost one wins,
so a tag handler invoked from within a reader's call stack is charged to
the tag.
"""

from __future__ import annotations

import contextlib
from collections import Counter
from contextvars import ContextVar
from typing import Iterator, Optional

MODEXP = "modexp"
MODMUL = "modmul"
AES_BLOCK = "aes_block"

PUBLIC_KEY_OPS = (MODEXP, MODMUL)

_active: ContextVar[Optional[Counter]] = ContextVar("tagperm_op_counter", default=None)


def count(kind: str, n: int = 1) -> None:
    counter = _active.get()
    if counter is not None:
        counter[kind] += n


@contextlib.contextmanager
def scope(counter: Optional[Counter] = None) -> Iterator[Counter]:
    """Charge every counted operation in the block to ``counter``."""
    if counter is None:
        counter = Counter()
    token = _active.set(counter)
    try:
        yield counter
    finally:
        _active.reset(token)


def public_key_ops(counter: Counter) -> int:
    return sum(counter[k] for k in PUBLIC_KEY_OPS)
