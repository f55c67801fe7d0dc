"""Prime-order subgroup arithmetic.

Two fixed parameter sets are provided: a toy group (p=23, q=11, g=2) small
enough for exhaustive checks, and a 1024-bit DSA-style group with a 160-bit
subgroup order, embedded as constants.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from . import metrics


class GroupError(ValueError):
    """A value is not an element of the subgroup G."""


@dataclass(frozen=True)
class GroupParams:
    p: int
    q: int
    g: int
    name: str = "custom"

    def __post_init__(self) -> None:
        if (self.p - 1) % self.q:
            raise GroupError("q must divide p - 1")
        if self.g in (0, 1) or pow(self.g, self.q, self.p) != 1:
            raise GroupError("g must generate the order-q subgroup")

    @property
    def width(self) -> int:
        """Byte width of a serialized group element."""
        return (self.p.bit_length() + 7) // 8

    def exp(self, base: int, e: int) -> int:
        metrics.count(metrics.MODEXP)
        return pow(base, e % self.q, self.p)

    def gexp(self, e: int) -> int:
        return self.exp(self.g, e)

    def mul(self, a: int, b: int) -> int:
        metrics.count(metrics.MODMUL)
        return a * b % self.p

    def div(self, a: int, b: int) -> int:
        metrics.count(metrics.MODMUL)
        return a * pow(b, -1, self.p) % self.p

    def is_member(self, x: int) -> bool:
        if not 0 < x < self.p:
            return False
        metrics.count(metrics.MODEXP)
        return pow(x, self.q, self.p) == 1

    def require_member(self, x: int) -> int:
        if not self.is_member(x):
            raise GroupError(f"{x:#x} is not in the order-{self.q} subgroup")
        return x

    def random_exponent(self, rng: random.Random) -> int:
        """Uniform exponent in [1, q-1]; zero is excluded on purpose."""
        return rng.randrange(1, self.q)

    def random_element(self, rng: random.Random) -> int:
        return self.gexp(self.random_exponent(rng))

    def encode(self, x: int) -> bytes:
        return x.to_bytes(self.width, "big")

    def decode(self, data: bytes) -> int:
        if len(data) != self.width:
            raise GroupError(f"expected {self.width} bytes, got {len(data)}")
        return int.from_bytes(data, "big")

    def elements(self) -> list[int]:
        """All elements of G in generator order. Only sensible for tiny groups."""
        if self.q > 1 << 16:
            raise ValueError("group too large to enumerate")
        out, x = [], 1
        for _ in range(self.q):
            out.append(x)
            x = x * self.g % self.p
        return out


TOY = GroupParams(p=23, q=11, g=2, name="toy")

DESK = GroupParams(
    p=int(
        "88539e3ce4dbc892d2d406c2df4e8276f4eae1df53176750e1b22c11eacdda76"
        "451c03cc52ced8dafce0cd67befc3af058e95dc70aacd1e0bee664ab3c67a849"
        "56a7448610bbcadae1c6e31d6c35cd9d836c2150d9e1cff977b08a4a40c6c5e7"
        "63634d65cced8e43f57c5d94c6ec5775b3c8e4da5f6e9359818c4c943d95c449",
        16,
    ),
    q=int("a9f7e03c83c9e5db8f89697fba6dd33e22266a53", 16),
    g=int(
        "3e54ffe082ce066a3370c0ff335e1fd96706cf5c5316d7828c98b06dffbaa9cf"
        "a98caf0f48c54319abef9456b5d2090c4607dccdb828b8514b9031c8e41c89e9"
        "a40281ce78eee616331c1c12f750b333779f782d1561ed8751b65b4ea5d6d6d7"
        "7c2afb044bec39f2c16619dfd62b9b6e0cb9071d6ce5e25c3f65a78ba8364e0c",
        16,
    ),
    name="desk",
)

PROFILES = {"toy": TOY, "desk": DESK}


def generate_group(profile: str) -> GroupParams:
    try:
        return PROFILES[profile]
    except KeyError:
        raise ValueError(f"unknown group profile {profile!r}") from None
