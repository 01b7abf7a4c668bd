from typing import List, Tuple
from granular.core.core_base_settings import BaseSettings
from granular.core.utils.time_utils import ns


class NetsimSettings(BaseSettings):
    SETTINGS_KEY = 'NETSIM_SETTINGS'
    DOWNLINKS_PER_LEAF: int = 64
    NUM_SPINES: int = 64
    LINK_LATENCY_NS: float = 43
    SWITCH_LATENCY_NS: float = 263
    LINK_BANDWIDTH_BYTES_PER_NS: float = 25
    HEADER_BYTES: int = 30
    TAIL_FRACTION: float = 0.01
    TAIL_EXTRA_NS: float = 0
    SEND_PER_MSG_NS: float = 5
    RECV_TABLE_NS: List[Tuple[float, float]] = [(1, 8), (64, 400)]
    RECV_CALIBRATION_BYTES: int = 16
    SORT_TABLE_NS: List[Tuple[float, float]] = [(2, 10), (40, 900), (1024, 30_000)]
    SCAN_TABLE_NS: List[Tuple[float, float]] = [(1, 0.625), (2048, 1_280), (8192, 18_000)]
    CLOCK_GHZ: float = 3.2
    MULTICAST: bool = True
    RECV_BATCHING: bool = False
    MAX_EVENTS: int = 500_000_000
    PROGRESS_EVERY_EVENTS: int = 1_000_000
    def build_topology(self, num_hosts: int) -> 'Topology':
        from granular.netsim.topology import Topology
        num_leaves = max(1, -(-num_hosts // self.DOWNLINKS_PER_LEAF))
        return Topology(
            num_hosts=num_hosts,
            downlinks_per_leaf=self.DOWNLINKS_PER_LEAF,
            num_leaves=num_leaves,
            num_spines=self.NUM_SPINES,
            link_latency=ns(self.LINK_LATENCY_NS),
            switch_latency=ns(self.SWITCH_LATENCY_NS),
            link_bandwidth=self.LINK_BANDWIDTH_BYTES_PER_NS,
        )
    def build_latency_model(self, seed: int) -> 'LatencyModel':
        from granular.netsim.topology import LatencyModel
        return LatencyModel(
            tail_fraction=self.TAIL_FRACTION,
            tail_extra=ns(self.TAIL_EXTRA_NS),
            rng_seed=seed,
        )
    def build_cost_model(self) -> 'CostModel':
        from granular.netsim.costs import CostModel
        return CostModel(
            recv_table=[(int(count), ns(t)) for count, t in self.RECV_TABLE_NS],
            send_per_msg=ns(self.SEND_PER_MSG_NS),
            sort_table=[(int(count), ns(t)) for count, t in self.SORT_TABLE_NS],
            scan_table=[(int(count), ns(t)) for count, t in self.SCAN_TABLE_NS],
            clock_ghz=self.CLOCK_GHZ,
            recv_calibration_bytes=self.RECV_CALIBRATION_BYTES,
        )
