import math
import random
from dataclasses import dataclass, field
from granular.core.exceptions import ConfigurationError


@dataclass(frozen=True)
class Topology:
    num_hosts: int
    num_leaves: int
    downlinks_per_leaf: int = 64
    num_spines: int = 64
    link_latency: int = 43_000
    switch_latency: int = 263_000
    link_bandwidth: float = 25
    def __post_init__(self):
        if self.num_hosts < 0 or self.num_leaves < 1 or self.downlinks_per_leaf < 1:
            raise ConfigurationError(
                f"Invalid topology: {self.num_hosts} hosts, {self.num_leaves} leaves, "
                f"{self.downlinks_per_leaf} downlinks per leaf"
            )
        if self.num_hosts > self.num_leaves * self.downlinks_per_leaf:
            raise ConfigurationError(
                f"{self.num_hosts} hosts do not fit on {self.num_leaves} leaves "
                f"of {self.downlinks_per_leaf} downlinks"
            )
        if self.link_bandwidth <= 0 or self.num_spines < 1:
            raise ConfigurationError("link_bandwidth and num_spines must be positive")
    def leaf_of(self, host: int) -> int:
        return host // self.downlinks_per_leaf
    def check_host(self, host: int) -> None:
        if not 0 <= host < self.num_hosts:
            raise ConfigurationError(
                f"Unknown host id {host} (topology has {self.num_hosts} hosts)"
            )
    def serialization(self, size_bytes: int) -> int:
        return int(math.ceil(size_bytes * 1000 / self.link_bandwidth))
    @property
    def same_leaf_base(self) -> int:
        return 2 * self.link_latency + self.switch_latency
    @property
    def cross_leaf_base(self) -> int:
        return 4 * self.link_latency + 3 * self.switch_latency
    def base_delay(self, src: int, dst: int, size_bytes: int) -> int:
        self.check_host(src)
        self.check_host(dst)
        if src == dst:
            raise ConfigurationError(f"Host {src} cannot send to itself: no loopback path is modeled")
        if self.leaf_of(src) == self.leaf_of(dst):
            hops = self.same_leaf_base
        else:
            hops = self.cross_leaf_base
        return hops + self.serialization(size_bytes)
    def spine_for(self, src: int, dst: int, seq: int) -> int:
        return hash((src, dst, seq)) % self.num_spines


@dataclass
class LatencyModel:
    tail_fraction: float = 0.01
    tail_extra: int = 0
    rng_seed: int = 0
    _rng: random.Random = field(init=False, repr=False, compare=False)
    def __post_init__(self):
        if not 0 <= self.tail_fraction <= 1:
            raise ConfigurationError(f"tail_fraction must lie in [0, 1], got {self.tail_fraction}")
        if self.tail_extra < 0:
            raise ConfigurationError(f"tail_extra must be non-negative, got {self.tail_extra}")
        self._rng = random.Random(self.rng_seed)
    def draw(self) -> int:
        if self._rng.random() < self.tail_fraction:
            return self.tail_extra
        return 0
    def draw_is_tail(self) -> bool:
        return self._rng.random() < self.tail_fraction


def path_delay(src: int, dst: int, size_bytes: int, topology: Topology, latency: LatencyModel) -> int:
    return topology.base_delay(src, dst, size_bytes) + latency.draw()
