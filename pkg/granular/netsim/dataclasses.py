from dataclasses import dataclass
from enum import IntEnum
from typing import Any, NamedTuple, Optional
MULTICAST_DST = -1


class PhaseTag(NamedTuple):
    level: int
    step: int
    index: int = 0


@dataclass(frozen=True, slots=True)
class Message:
    src: int
    dst: int
    phase: PhaseTag
    payload: Any
    payload_bytes: int
    header_bytes: int = 0
    @property
    def size_bytes(self) -> int:
        return self.payload_bytes + self.header_bytes
    @property
    def is_multicast(self) -> bool:
        return self.dst == MULTICAST_DST


class EventKind(IntEnum):
    DELIVER = 0
    WAKE = 1
    START = 2


class Event(NamedTuple):
    time: int
    seq: int
    kind: EventKind
    node: int
    message: Optional[Message] = None
