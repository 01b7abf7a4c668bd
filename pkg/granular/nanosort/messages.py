from typing import Any, NamedTuple, Optional, Tuple
from granular.nanosort.dataclasses import Item


class MedianInput(NamedTuple):
    tree: int
    value: Optional[Item]


class Pivot(NamedTuple):
    tree: int
    value: Optional[Item]


class KeyTransfer(NamedTuple):
    items: Tuple[Item, ...]


class KeyAck(NamedTuple):
    pass


class BarrierReport(NamedTuple):
    tree_level: int


class Release(NamedTuple):
    pass


class ValueRequest(NamedTuple):
    key: int


class ValueTransfer(NamedTuple):
    key: int
    value: Any
