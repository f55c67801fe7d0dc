"""In-memory reader/tag channel with an active adversary and a transcript.

The adversary sits on the wire: it sees every frame, and for each frame in
flight decides which frames the receiver actually gets. It never holds key
material. Frames are delivered synchronously and in order; a dropped frame
simply stalls the exchange (the reader sees no reply).
"""

from __future__ import annotations

import json
import random
from collections import Counter
from dataclasses import dataclass, field
from typing import IO, Iterable, Optional

from .crypto import metrics
from .tag import Tag

R2T = "reader->tag"
T2R = "tag->reader"
OOB = "out-of-band"


@dataclass(frozen=True)
class Record:
    seq: int
    session: int
    direction: str
    time: int
    frame: bytes
    note: str = ""

    def to_json(self) -> str:
        return json.dumps(
            {
                "seq": self.seq,
                "session": self.session,
                "direction": self.direction,
                "time": self.time,
                "frame": self.frame.hex(),
                "note": self.note,
            }
        )


@dataclass
class Transcript:
    """Append-only byte-exact log of everything that crossed a channel."""

    records: list[Record] = field(default_factory=list)
    _sessions: int = 0

    def new_session(self) -> int:
        self._sessions += 1
        return self._sessions

    def append(self, session: int, direction: str, time: int, frame: bytes, note: str = "") -> Record:
        rec = Record(len(self.records), session, direction, time, bytes(frame), note)
        self.records.append(rec)
        return rec

    def wire(self) -> list[Record]:
        """What a network adversary observes: out-of-band traffic is excluded."""
        return [r for r in self.records if r.direction != OOB]

    def frames(self, direction: Optional[str] = None, session: Optional[int] = None) -> list[bytes]:
        return [
            r.frame for r in self.wire()
            if (direction is None or r.direction == direction)
            and (session is None or r.session == session)
        ]

    def dump(self, fp: IO[str]) -> None:
        for r in self.records:
            fp.write(r.to_json() + "\n")


# -- adversaries ---------------------------------------------------------------

class Adversary:
    """Passive eavesdropper; subclasses override :meth:`intercept`."""

    def __init__(self, seed: int = 0):
        self.rng = random.Random(seed)
        self.captured: list[tuple[str, bytes]] = []

    def observe(self, direction: str, frame: bytes) -> None:
        self.captured.append((direction, frame))

    def deliver(self, index: int, direction: str, frame: bytes) -> list[tuple[bytes, str]]:
        self.observe(direction, frame)
        return self.intercept(index, direction, frame)

    def intercept(self, index: int, direction: str, frame: bytes) -> list[tuple[bytes, str]]:
        return [(frame, "")]


Passive = Adversary


class Drop(Adversary):
    def __init__(self, index: int, seed: int = 0):
        super().__init__(seed)
        self.index = index

    def intercept(self, index, direction, frame):
        return [] if index == self.index else [(frame, "")]


def flip_bit(frame: bytes, bit: int) -> bytes:
    b = bytearray(frame)
    b[(bit // 8) % len(b)] ^= 1 << (bit % 8)
    return bytes(b)


class Tamper(Adversary):
    """Flip exactly one bit of the frame with the given message index."""

    def __init__(self, index: int, bit: int, seed: int = 0):
        super().__init__(seed)
        self.index, self.bit = index, bit

    def intercept(self, index, direction, frame):
        if index == self.index:
            return [(flip_bit(frame, self.bit), f"tampered bit {self.bit}")]
        return [(frame, "")]


class Replay(Adversary):
    """At message ``at``, also deliver the captured frame ``source`` verbatim."""

    def __init__(self, source: int, at: Optional[int] = None, seed: int = 0):
        super().__init__(seed)
        self.source = source
        self.at = source if at is None else at

    def intercept(self, index, direction, frame):
        out = [(frame, "")]
        if index == self.at and self.source < len(self.captured):
            out.append((self.captured[self.source][1], f"replay of message {self.source}"))
        return out


class Inject(Adversary):
    """Deliver ``frames`` ahead of message ``at``."""

    def __init__(self, frames: Iterable[bytes], at: int = 0, seed: int = 0):
        super().__init__(seed)
        self.frames = list(frames)
        self.at = at

    def intercept(self, index, direction, frame):
        if index == self.at:
            return [(f, "injected") for f in self.frames] + [(frame, "")]
        return [(frame, "")]


class Fuzzer(Adversary):
    """Randomly duplicates, replays, tampers, injects or drops frames.

    ``history`` seeds the adversary's memory with frames captured in
    earlier sessions so replays can cross session boundaries.
    """

    def __init__(
        self,
        seed: int = 0,
        duplicate: float = 0.0,
        replay: float = 0.0,
        tamper: float = 0.0,
        drop: float = 0.0,
        inject: float = 0.0,
        history: Iterable[tuple[str, bytes]] = (),
    ):
        super().__init__(seed)
        self.p = {"duplicate": duplicate, "replay": replay, "tamper": tamper, "drop": drop, "inject": inject}
        self.captured.extend(history)

    def intercept(self, index, direction, frame):
        rng = self.rng
        if rng.random() < self.p["drop"]:
            return []
        out = [(frame, "")]
        if rng.random() < self.p["tamper"]:
            bit = rng.randrange(len(frame) * 8 - 24) + 24  # keep the frame header parseable
            out = [(flip_bit(frame, bit), f"tampered bit {bit}")]
        if rng.random() < self.p["duplicate"]:
            out.append((frame, "duplicate"))
        if rng.random() < self.p["replay"]:
            same_dir = [f for d, f in self.captured[:-1] if d == direction]
            if same_dir:
                out.append((rng.choice(same_dir), "replay"))
        if rng.random() < self.p["inject"]:
            kind = frame[0]
            out.insert(0, (bytes([kind]) + frame[1:3] + rng.randbytes(len(frame) - 3), "injected"))
        return out


# -- channel -------------------------------------------------------------------

class Channel:
    """One reader-to-tag radio link.

    ``send`` pushes a reader frame through the adversary to the tag and
    returns the first tag reply that makes it back, or ``None``.
    """

    def __init__(
        self,
        tag: Tag,
        adversary: Optional[Adversary] = None,
        transcript: Optional[Transcript] = None,
        clock=None,
    ):
        self.tag = tag
        self.adversary = adversary or Adversary()
        self.transcript = transcript if transcript is not None else Transcript()
        self.clock = clock
        self.session = self.transcript.new_session()
        self.tag_ops: Counter = Counter()
        self.index = 0

    def _time(self) -> int:
        return self.clock.now if self.clock is not None else 0

    def _next_index(self) -> int:
        i = self.index
        self.index += 1
        return i

    def send(self, frame: bytes) -> Optional[bytes]:
        replies = []
        for f, note in self.adversary.deliver(self._next_index(), R2T, frame):
            self.transcript.append(self.session, R2T, self._time(), f, note)
            with metrics.scope(self.tag_ops):
                reply = self.tag.handle(f)
            if reply is not None:
                replies.append(reply)
        out = None
        for reply in replies:
            for f, note in self.adversary.deliver(self._next_index(), T2R, reply):
                self.transcript.append(self.session, T2R, self._time(), f, note)
                if out is None:
                    out = f
        return out
