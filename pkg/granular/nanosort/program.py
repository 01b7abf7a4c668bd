import logging
import math
import random
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence
from granular.core.exceptions import ConfigurationError, ProtocolViolation
from granular.median_tree.plan import TreePlan, median, median_target, plan
from granular.netsim.context import NodeContext
from granular.netsim.costs import ComputeKind
from granular.netsim.dataclasses import Message
from granular.netsim.programs.base import NodeProgram
from granular.nanosort.dataclasses import Item, NodeState, SortConfig, SortRecord, Step, phase
from granular.nanosort.messages import (
    BarrierReport,
    KeyAck,
    KeyTransfer,
    MedianInput,
    Pivot,
    Release,
    ValueRequest,
    ValueTransfer,
)
from granular.nanosort.settings import CANDIDATE_SORTS, SortSettings
from granular.pivot.select import bucket_of, pivot_select_b, sample_size
logger = logging.getLogger(__name__)


@dataclass
class SortRuntime:
    """Read-only run parameters shared by every node program."""
    config: SortConfig
    settings: SortSettings
    def __post_init__(self):
        if self.settings.CANDIDATE_SORT not in CANDIDATE_SORTS:
            raise ConfigurationError(
                f"CANDIDATE_SORT must be one of {CANDIDATE_SORTS}, got '{self.settings.CANDIDATE_SORT}'"
            )
    def tree(self, group_size: int, tree_index: int) -> TreePlan:
        rotation = tree_index if self.config.median_placement == 'spread' else 0
        return plan(group_size, self.config.median_fan_in, rotation)
    def barrier_tree(self, group_size: int) -> TreePlan:
        return plan(group_size, self.config.median_fan_in, 0)
    def pivot_target(self, group_size: int) -> float:
        return median_target(group_size, self.config.median_fan_in)
    @property
    def route_comparisons(self) -> int:
        return max(1, math.ceil(math.log2(self.config.num_buckets)))


class NanoSortProgram(NodeProgram):
    def __init__(
        self,
        node_id: int,
        runtime: SortRuntime,
        keys: List[Item],
        values: Dict[int, Any],
        rng: Optional[random.Random] = None,
    ):
        self.runtime = runtime
        self.rng = rng or random.Random(node_id)
        self.values = values
        self.state = NodeState(
            node_id=node_id,
            group_base=0,
            group_size=runtime.config.num_nodes,
            keys=list(keys),
        )
        self._slots: Dict[Item, int] = {}
    @property
    def terminal(self) -> bool:
        return self.state.step == Step.DONE
    def describe(self) -> str:
        s = self.state
        return (
            f"level {s.level} {s.step.name} median_level={s.median_level} keys={len(s.keys)} "
            f"pivots={len(s.pivots)} pending_acks={s.pending_acks} pending_values={s.pending_values} "
            f"buffered={s.buffered()}"
        )
    @property
    def records(self) -> List[Optional[SortRecord]]:
        return self.state.output
    def start(self, ctx: NodeContext) -> None:
        if self.runtime.config.recursion_depth == 0:
            self._final_sort(ctx)
        else:
            self._begin_level(ctx)
        self._drain(ctx)
    def on_message(self, ctx: NodeContext, msg: Message) -> None:
        self._dispatch(ctx, msg)
        self._drain(ctx)
    def _dispatch(self, ctx: NodeContext, msg: Message) -> None:
        s = self.state
        current = s.phase
        if isinstance(msg.payload, ValueRequest) and msg.phase <= current:
            self._serve_value(ctx, msg)
        elif msg.phase > current:
            s.reorder.setdefault(msg.phase, []).append(msg)
        elif msg.phase < current:
            raise ProtocolViolation(
                f"Node {s.node_id} in phase {tuple(current)} got {type(msg.payload).__name__} "
                f"from node {msg.src} tagged {tuple(msg.phase)}"
            )
        else:
            self._handle(ctx, msg)
    def _drain(self, ctx: NodeContext) -> None:
        s = self.state
        while s.reorder:
            current = s.phase
            due = [tag for tag in s.reorder if tag <= current]
            if not due:
                return
            for msg in s.reorder.pop(min(due)):
                self._dispatch(ctx, msg)
    def _handle(self, ctx: NodeContext, msg: Message) -> None:
        payload = msg.payload
        if isinstance(payload, MedianInput):
            self._median_input(ctx, payload.tree, msg.phase.index, payload.value)
        elif isinstance(payload, Pivot):
            self._pivot(ctx, payload.tree, payload.value)
        elif isinstance(payload, KeyTransfer):
            self.state.next_keys.extend(payload.items)
            ctx.send(msg.src, msg.phase, KeyAck(), self.runtime.settings.CONTROL_BYTES)
        elif isinstance(payload, KeyAck):
            self.state.pending_acks -= 1
            if self.state.pending_acks == 0:
                self._barrier_up(ctx, 0)
        elif isinstance(payload, BarrierReport):
            self._barrier_input(ctx, payload.tree_level)
        elif isinstance(payload, Release):
            self._advance_level(ctx)
        elif isinstance(payload, ValueTransfer):
            self._value_arrived(ctx, (payload.key, msg.src), payload.value)
        else:
            raise ProtocolViolation(f"Node {self.state.node_id} got unknown payload {payload!r}")
    def _group(self) -> range:
        s = self.state
        return range(s.group_base, s.group_base + s.group_size)
    def _begin_level(self, ctx: NodeContext) -> None:
        s = self.state
        b = self.runtime.config.num_buckets
        s.step = Step.CANDIDATES
        ctx.stage = 'candidates'
        if s.keys:
            s.candidates = self._select_candidates(ctx, b)
        else:
            s.candidates = (None,) * (b - 1)
        s.medians.clear()
        s.pivots.clear()
        s.aggregations = {}
        for tree_index in range(b - 1):
            for tree_level in self.runtime.tree(s.group_size, tree_index).aggregator_levels(s.rel):
                s.aggregations.setdefault(tree_level, []).append(tree_index)
        s.step = Step.MEDIAN
        s.median_level = 1
        ctx.stage = 'median'
        for tree_index, value in enumerate(s.candidates):
            self._contribute(ctx, tree_index, 0, value)
        self._advance_median(ctx)
    def _select_candidates(self, ctx: NodeContext, b: int) -> Sequence[Item]:
        s = self.state
        if self.runtime.settings.CANDIDATE_SORT == 'full':
            s.keys.sort()
            ordered = s.keys
        else:
            # the rule only reads a random sample; sort just that
            ordered = sorted(self.rng.sample(s.keys, sample_size(len(s.keys), b)))
        ctx.compute(ComputeKind.SORT, len(ordered))
        target = self.runtime.pivot_target(s.group_size) if b != 16 else 0.5
        return pivot_select_b(ordered, b, self.rng, target).pivots
    def _contribute(self, ctx: NodeContext, tree_index: int, tree_level: int, value: Optional[Item]) -> None:
        s = self.state
        tree = self.runtime.tree(s.group_size, tree_index)
        if tree_level == tree.depth:
            self._publish_pivot(ctx, tree_index, value)
            return
        parent = tree.parent(tree_level, s.rel)
        if parent == s.rel:
            self._median_input(ctx, tree_index, tree_level + 1, value)
        else:
            ctx.send(
                s.group_base + parent,
                phase(s.level, Step.MEDIAN, tree_level + 1),
                MedianInput(tree_index, value),
                self.runtime.settings.CANDIDATE_BYTES,
            )
    def _median_input(self, ctx: NodeContext, tree_index: int, tree_level: int, value: Optional[Item]) -> None:
        s = self.state
        inputs = s.medians.setdefault((tree_level, tree_index), [])
        inputs.append(value)
        tree = self.runtime.tree(s.group_size, tree_index)
        if len(inputs) < len(tree.inputs(tree_level - 1, s.rel)):
            return
        ctx.compute(ComputeKind.SORT, len(inputs))
        present = [v for v in inputs if v is not None]
        self._contribute(ctx, tree_index, tree_level, median(present) if present else None)
        self._advance_median(ctx)
    def _level_complete(self, tree_level: int) -> bool:
        s = self.state
        tree_for = self.runtime.tree
        for tree_index in s.aggregations.get(tree_level, ()):
            needed = len(tree_for(s.group_size, tree_index).inputs(tree_level - 1, s.rel))
            if len(s.medians.get((tree_level, tree_index), ())) < needed:
                return False
        return True
    def _advance_median(self, ctx: NodeContext) -> None:
        s = self.state
        if s.step != Step.MEDIAN:
            return
        top = max(s.aggregations, default=0)
        while s.median_level <= top and self._level_complete(s.median_level):
            s.median_level += 1
        if s.median_level > top:
            s.step = Step.BROADCAST
            s.median_level = 0
            ctx.stage = 'broadcast'
            self._maybe_route(ctx)
    def _publish_pivot(self, ctx: NodeContext, tree_index: int, value: Optional[Item]) -> None:
        s = self.state
        ctx.broadcast(
            self._group(),
            phase(s.level, Step.BROADCAST),
            Pivot(tree_index, value),
            self.runtime.settings.CANDIDATE_BYTES,
        )
        s.pivots[tree_index] = value
    def _pivot(self, ctx: NodeContext, tree_index: int, value: Optional[Item]) -> None:
        self.state.pivots[tree_index] = value
        self._maybe_route(ctx)
    def _maybe_route(self, ctx: NodeContext) -> None:
        s = self.state
        b = self.runtime.config.num_buckets
        if s.step != Step.BROADCAST or len(s.pivots) < b - 1:
            return
        s.step = Step.ROUTE
        ctx.stage = 'route'
        pivots = [s.pivots[j] for j in range(b - 1)]
        ctx.compute(ComputeKind.SCAN_MIN, len(s.keys) * self.runtime.route_comparisons)
        sub_size = s.group_size // b
        if pivots[0] is None and s.keys:
            raise ProtocolViolation(f"Node {s.node_id} holds keys but its group produced no pivots")
        outgoing: Dict[int, List[Item]] = {}
        for item in s.keys:
            dst = s.group_base + bucket_of(item, pivots) * sub_size + self.rng.randrange(sub_size)
            if dst == s.node_id:
                s.next_keys.append(item)
            else:
                outgoing.setdefault(dst, []).append(item)
        tag = phase(s.level, Step.ROUTE)
        key_bytes = self.runtime.settings.KEY_TRANSFER_BYTES
        # one transfer per destination, acknowledged once
        for dst, items in outgoing.items():
            ctx.send(dst, tag, KeyTransfer(tuple(items)), key_bytes * len(items))
            s.pending_acks += 1
        s.keys = []
        if s.pending_acks == 0:
            self._barrier_up(ctx, 0)
    def _barrier_up(self, ctx: NodeContext, tree_level: int) -> None:
        s = self.state
        tree = self.runtime.barrier_tree(s.group_size)
        if tree_level == tree.depth:
            ctx.broadcast(self._group(), phase(s.level, Step.ROUTE), Release(), self.runtime.settings.CONTROL_BYTES)
            self._advance_level(ctx)
            return
        parent = tree.parent(tree_level, s.rel)
        if parent == s.rel:
            self._barrier_input(ctx, tree_level + 1)
        else:
            ctx.send(
                s.group_base + parent,
                phase(s.level, Step.ROUTE),
                BarrierReport(tree_level + 1),
                self.runtime.settings.CONTROL_BYTES,
            )
    def _barrier_input(self, ctx: NodeContext, tree_level: int) -> None:
        s = self.state
        tree = self.runtime.barrier_tree(s.group_size)
        s.barrier[tree_level] = s.barrier.get(tree_level, 0) + 1
        if s.barrier[tree_level] == len(tree.inputs(tree_level - 1, s.rel)):
            self._barrier_up(ctx, tree_level)
    def _advance_level(self, ctx: NodeContext) -> None:
        s = self.state
        b = self.runtime.config.num_buckets
        sub_size = s.group_size // b
        s.group_base += (s.rel // sub_size) * sub_size
        s.group_size = sub_size
        s.level += 1
        # draws at the next level must not depend on arrival order
        s.keys = sorted(s.next_keys)
        s.next_keys = []
        s.barrier.clear()
        s.pending_acks = 0
        s.step = Step.SHUFFLE
        stale = [tag for tag in s.reorder if tag < s.phase]
        if stale:
            raise ProtocolViolation(f"Node {s.node_id} left level {s.level - 1} with unconsumed messages {stale}")
        if s.level == self.runtime.config.recursion_depth:
            self._final_sort(ctx)
        else:
            self._begin_level(ctx)
    def _final_sort(self, ctx: NodeContext) -> None:
        s = self.state
        ctx.stage = 'final_sort'
        s.keys.sort()
        ctx.compute(ComputeKind.SORT, len(s.keys))
        if not self.runtime.config.with_values:
            s.output = [SortRecord(key, None, origin) for key, origin in s.keys]
            self._done(ctx)
            return
        s.step = Step.VALUE_SHUFFLE
        ctx.stage = 'value_shuffle'
        s.output = [None] * len(s.keys)
        tag = phase(s.level, Step.VALUE_SHUFFLE)
        for index, (key, origin) in enumerate(s.keys):
            if origin == s.node_id:
                s.output[index] = SortRecord(key, self.values.get(key), origin)
            else:
                self._slots[(key, origin)] = index
                ctx.send(origin, tag, ValueRequest(key), self.runtime.settings.VALUE_REQUEST_BYTES)
                s.pending_values += 1
        if s.pending_values == 0:
            self._done(ctx)
    def _serve_value(self, ctx: NodeContext, msg: Message) -> None:
        key = msg.payload.key
        ctx.send(
            msg.src,
            msg.phase,
            ValueTransfer(key, self.values.get(key)),
            self.runtime.settings.VALUE_TRANSFER_BYTES,
        )
    def _value_arrived(self, ctx: NodeContext, item: Item, value: Any) -> None:
        s = self.state
        index = self._slots.pop(item)
        s.output[index] = SortRecord(item[0], value, item[1])
        s.pending_values -= 1
        if s.pending_values == 0:
            self._done(ctx)
    def _done(self, ctx: NodeContext) -> None:
        self.state.step = Step.DONE
        ctx.stage = 'done'
