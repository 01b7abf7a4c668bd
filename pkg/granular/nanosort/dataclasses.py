import math
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Any, Dict, List, Optional, Tuple
from granular.core.exceptions import ConfigurationError
from granular.netsim.dataclasses import Message, PhaseTag
from granular.nanosort.settings import MEDIAN_PLACEMENTS
RECORD_BYTES = 104
KEY_BYTES = 8
VALUE_BYTES = 96
# (key, origin_node): origin breaks ties so ordering stays total
Item = Tuple[int, int]


class Step(IntEnum):
    SHUFFLE = 0
    CANDIDATES = 1
    MEDIAN = 2
    BROADCAST = 3
    ROUTE = 4
    VALUE_SHUFFLE = 5
    DONE = 6


def phase(level: int, step: Step, median_level: int = 0) -> PhaseTag:
    return PhaseTag(level, int(step), median_level if step == Step.MEDIAN else 0)


def exact_depth(num_nodes: int, num_buckets: int) -> int:
    if num_nodes < 1 or num_buckets < 2:
        raise ConfigurationError(f"Need at least one node and two buckets, got {num_nodes} nodes, {num_buckets} buckets")
    depth = round(math.log(num_nodes, num_buckets))
    if num_buckets ** depth != num_nodes:
        raise ConfigurationError(
            f"num_nodes must equal num_buckets ** r; {num_nodes} is not a power of {num_buckets}"
        )
    return depth


@dataclass(frozen=True)
class SortConfig:
    num_keys: int
    num_buckets: int = 16
    recursion_depth: int = 1
    median_fan_in: int = 16
    multicast: bool = True
    seed: int = 0
    median_placement: str = 'shared'
    with_values: bool = True
    def __post_init__(self):
        if self.num_buckets < 2:
            raise ConfigurationError(f"num_buckets must be at least 2, got {self.num_buckets}")
        if self.recursion_depth < 0:
            raise ConfigurationError(f"recursion_depth must be non-negative, got {self.recursion_depth}")
        if self.median_fan_in < 2:
            raise ConfigurationError(f"median_fan_in must be at least 2, got {self.median_fan_in}")
        if self.median_placement not in MEDIAN_PLACEMENTS:
            raise ConfigurationError(
                f"median_placement must be one of {MEDIAN_PLACEMENTS}, got '{self.median_placement}'"
            )
        if self.num_keys < 0 or self.num_keys % self.num_nodes:
            raise ConfigurationError(
                f"{self.num_keys} keys cannot be split evenly over {self.num_nodes} nodes"
            )
    @classmethod
    def for_nodes(cls, num_nodes: int, keys_per_node: int, num_buckets: int = 16, **kwargs) -> 'SortConfig':
        return cls(
            num_keys=num_nodes * keys_per_node,
            num_buckets=num_buckets,
            recursion_depth=exact_depth(num_nodes, num_buckets),
            **kwargs,
        )
    @property
    def num_nodes(self) -> int:
        return self.num_buckets ** self.recursion_depth
    @property
    def keys_per_node(self) -> int:
        return self.num_keys // self.num_nodes


@dataclass(frozen=True, slots=True)
class SortRecord:
    key: int
    value: Optional[bytes]
    origin_node: int


@dataclass
class NodeState:
    node_id: int
    group_base: int
    group_size: int
    level: int = 0
    step: Step = Step.SHUFFLE
    median_level: int = 0
    keys: List[Item] = field(default_factory=list)
    next_keys: List[Item] = field(default_factory=list)
    reorder: Dict[PhaseTag, List[Message]] = field(default_factory=dict)
    candidates: Tuple[Any, ...] = ()
    medians: Dict[Tuple[int, int], List[Any]] = field(default_factory=dict)
    aggregations: Dict[int, List[int]] = field(default_factory=dict)
    pivots: Dict[int, Any] = field(default_factory=dict)
    pending_acks: int = 0
    barrier: Dict[int, int] = field(default_factory=dict)
    output: List[Optional[SortRecord]] = field(default_factory=list)
    pending_values: int = 0
    @property
    def phase(self) -> PhaseTag:
        return phase(self.level, self.step, self.median_level)
    @property
    def rel(self) -> int:
        return self.node_id - self.group_base
    def buffered(self) -> int:
        return sum(len(messages) for messages in self.reorder.values())
