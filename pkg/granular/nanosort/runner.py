import logging
import random
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Type
import numpy as np
from granular.core.exceptions import ConfigurationError
from granular.core.utils.time_utils import to_us
from granular.netsim.context import Trace
from granular.netsim.engine import Simulator
from granular.netsim.settings import NetsimSettings
from granular.nanosort.dataclasses import SortConfig, SortRecord
from granular.nanosort.program import NanoSortProgram, SortRuntime
from granular.nanosort.settings import SortSettings
from granular.nanosort.shuffle import initial_shuffle
logger = logging.getLogger(__name__)
PROGRAM_STREAM = 0x5EED
NETWORK_STREAM = 0x7A11
SHUFFLE_STREAM = 0x5F1E


def derive_seed(seed: int, stream: int) -> int:
    return (seed * 0x9E3779B97F4A7C15 + stream) & 0xFFFFFFFFFFFFFFFF


@dataclass
class NanoSortResult:
    config: SortConfig
    records: List[List[Optional[SortRecord]]]
    trace: Trace
    @property
    def final_keys(self) -> List[List[int]]:
        return [[record.key for record in node if record is not None] for node in self.records]
    @property
    def counts(self) -> List[int]:
        return [len(node) for node in self.records]
    @property
    def completion_time(self) -> int:
        return self.trace.completion_time
    @property
    def total_messages(self) -> int:
        return self.trace.total_messages


def run_nanosort(
    config: SortConfig,
    keys: Sequence[int],
    values: Optional[Sequence[bytes]] = None,
    netsim_settings: Optional[NetsimSettings] = None,
    sort_settings: Optional[SortSettings] = None,
    program_class: Type[NanoSortProgram] = NanoSortProgram,
) -> NanoSortResult:
    base = netsim_settings.to_dict() if netsim_settings is not None else {}
    # both the config and the network settings must allow multicast
    netsim_settings = NetsimSettings({**base, "MULTICAST": config.multicast and base.get("MULTICAST", True)})
    sort_settings = sort_settings or SortSettings()
    num_nodes = config.num_nodes
    if len(keys) != config.num_keys:
        raise ConfigurationError(f"SortConfig expects {config.num_keys} keys, got {len(keys)}")
    placement = initial_shuffle(
        np.arange(len(keys)),
        num_nodes,
        np.random.default_rng(derive_seed(config.seed, SHUFFLE_STREAM)),
    )
    runtime = SortRuntime(config=config, settings=sort_settings)
    program_seed = derive_seed(config.seed, PROGRAM_STREAM)
    programs = []
    for node_id, positions in enumerate(placement):
        node_keys = [(int(keys[i]), node_id) for i in positions]
        node_values: Dict[int, Optional[bytes]] = {}
        if config.with_values:
            node_values = {int(keys[i]): (values[i] if values is not None else None) for i in positions}
        rng = random.Random(derive_seed(program_seed, node_id))
        programs.append(program_class(node_id, runtime, node_keys, node_values, rng))
    sim = Simulator.from_settings(netsim_settings, num_nodes, derive_seed(config.seed, NETWORK_STREAM))
    logger.info(
        f"Sorting {config.num_keys} keys on {num_nodes} nodes "
        f"(b={config.num_buckets}, r={config.recursion_depth}, seed={config.seed})"
    )
    trace = sim.run(programs)
    logger.info(f"Sort finished in {to_us(trace.completion_time):.3f} us with {trace.total_messages} messages")
    return NanoSortResult(
        config=config,
        records=[program.records for program in programs],
        trace=trace,
    )
