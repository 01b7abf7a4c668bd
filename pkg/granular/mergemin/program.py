import csv
import io
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence
import numpy as np
from granular.core.exceptions import ConfigurationError, ContractViolation
from granular.core.utils.time_utils import to_ns
from granular.median_tree.plan import TreePlan, plan
from granular.netsim.context import NodeContext, Trace
from granular.netsim.costs import ComputeKind
from granular.netsim.dataclasses import Message, PhaseTag
from granular.netsim.engine import Simulator
from granular.netsim.programs.base import NodeProgram
from granular.netsim.settings import NetsimSettings
logger = logging.getLogger(__name__)
MIN_BYTES = 8
DEFAULT_INCASTS = (1, 2, 4, 8, 16, 32, 64)


@dataclass(frozen=True)
class MergeConfig:
    num_cores: int
    values_per_core: int = 128
    incast: int = 8
    seed: int = 0
    def __post_init__(self):
        if self.num_cores < 1:
            raise ConfigurationError(f"num_cores must be at least 1, got {self.num_cores}")
        if self.values_per_core < 1:
            raise ConfigurationError(f"values_per_core must be at least 1, got {self.values_per_core}")
        if self.incast < 1:
            raise ConfigurationError(f"incast must be at least 1, got {self.incast}")


@dataclass
class MergeMinResult:
    config: MergeConfig
    minimum: int
    trace: Trace
    @property
    def completion_time(self) -> int:
        return self.trace.completion_time
    @property
    def root_busy(self) -> int:
        return self.trace.nodes[0].total_busy


def local_min(values: Sequence[int]) -> int:
    if len(values) == 0:
        raise ContractViolation("local_min of an empty list is undefined")
    return min(values)


class MergeMinProgram(NodeProgram):
    """One core of the merge tree. incast 1 is a chain: core i+1 feeds core i."""
    def __init__(self, core_id: int, values: Sequence[int], tree: Optional[TreePlan], num_cores: int):
        self.core_id = core_id
        self.values = values
        self.tree = tree
        self.num_cores = num_cores
        self.inputs: Dict[int, List[int]] = {}
        self.result: Optional[int] = None
        self.finished = False
    @property
    def terminal(self) -> bool:
        return self.finished
    def describe(self) -> str:
        waiting = {level: len(values) for level, values in self.inputs.items()}
        return f"core {self.core_id} finished={self.finished} inputs={waiting}"
    def start(self, ctx: NodeContext) -> None:
        ctx.stage = 'scan'
        ctx.compute(ComputeKind.SCAN_MIN, len(self.values))
        value = local_min(self.values)
        ctx.stage = 'merge'
        if self.tree is None:
            if self.core_id == self.num_cores - 1:
                self._chain_forward(ctx, value)
            else:
                self.inputs[1] = [value]
        else:
            self._contribute(ctx, 0, value)
    def on_message(self, ctx: NodeContext, msg: Message) -> None:
        if self.tree is None:
            self.inputs[1].append(msg.payload)
            ctx.compute(ComputeKind.MERGE, 2)
            self._chain_forward(ctx, min(self.inputs[1]))
        else:
            self._input(ctx, msg.phase.index, msg.payload)
    def _chain_forward(self, ctx: NodeContext, value: int) -> None:
        if self.core_id == 0:
            self.result = value
        else:
            ctx.send(self.core_id - 1, PhaseTag(0, 0, 1), value, MIN_BYTES)
        self.finished = True
    def _contribute(self, ctx: NodeContext, level: int, value: int) -> None:
        if level == self.tree.depth:
            self.result = value
            self.finished = True
            return
        parent = self.tree.parent(level, self.core_id)
        if parent == self.core_id:
            self._input(ctx, level + 1, value)
        else:
            ctx.send(parent, PhaseTag(0, 0, level + 1), value, MIN_BYTES)
            self.finished = True
    def _input(self, ctx: NodeContext, level: int, value: int) -> None:
        received = self.inputs.setdefault(level, [])
        received.append(value)
        if len(received) == len(self.tree.inputs(level - 1, self.core_id)):
            ctx.compute(ComputeKind.MERGE, len(received))
            self._contribute(ctx, level, min(received))


def generate_values(config: MergeConfig) -> np.ndarray:
    gen = np.random.default_rng(config.seed)
    return gen.integers(0, 1 << 62, size=(config.num_cores, config.values_per_core), dtype=np.int64)


def run_mergemin(config: MergeConfig, netsim_settings: Optional[NetsimSettings] = None, values: Optional[np.ndarray] = None) -> MergeMinResult:
    netsim_settings = netsim_settings or NetsimSettings()
    if values is None:
        values = generate_values(config)
    tree = plan(config.num_cores, config.incast) if config.incast >= 2 else None
    programs = [
        MergeMinProgram(core_id, values[core_id].tolist(), tree, config.num_cores)
        for core_id in range(config.num_cores)
    ]
    sim = Simulator.from_settings(netsim_settings, config.num_cores, config.seed)
    trace = sim.run(programs)
    logger.info(
        f"MergeMin over {config.num_cores} cores with incast {config.incast} "
        f"finished in {to_ns(trace.completion_time):.1f} ns"
    )
    return MergeMinResult(config=config, minimum=programs[0].result, trace=trace)


def incast_sweep(
    num_cores: int = 64,
    values_per_core: int = 128,
    incasts: Sequence[int] = DEFAULT_INCASTS,
    seed: int = 0,
    netsim_settings: Optional[NetsimSettings] = None,
) -> List[MergeMinResult]:
    return [
        run_mergemin(MergeConfig(num_cores, values_per_core, incast, seed), netsim_settings)
        for incast in incasts
    ]


def sweep_csv(results: Sequence[MergeMinResult]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(['incast', 'completion_ns', 'root_busy_ns'])
    for result in results:
        writer.writerow([
            result.config.incast,
            f"{to_ns(result.completion_time):.3f}",
            f"{to_ns(result.root_busy):.3f}",
        ])
    return buffer.getvalue()
