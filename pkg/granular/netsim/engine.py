import heapq
import logging
import math
from typing import Dict, List, Optional, Sequence
from granular.core.exceptions import ConfigurationError, ContractViolation, MulticastDisabled, NonQuiescenceError
from granular.core.utils.time_utils import to_us
from granular.netsim.context import NodeContext, Trace
from granular.netsim.costs import CostModel
from granular.netsim.dataclasses import Event, EventKind, Message
from granular.netsim.programs.base import NodeProgram
from granular.netsim.settings import NetsimSettings
from granular.netsim.topology import LatencyModel, Topology
logger = logging.getLogger(__name__)


class Simulator:
    def __init__(
        self,
        topology: Topology,
        latency: LatencyModel,
        costs: CostModel,
        header_bytes: int = 30,
        multicast: bool = True,
        recv_batching: bool = False,
        max_events: int = 500_000_000,
        progress_every: int = 1_000_000,
    ):
        self.topology = topology
        self.latency = latency
        self.costs = costs
        self.header_bytes = header_bytes
        self.multicast_enabled = multicast
        self.recv_batching = recv_batching
        self.max_events = max_events
        self.progress_every = progress_every
        self._queue: List[Event] = []
        self._seq = 0
        self._contexts: List[NodeContext] = []
        self._started = False
        self._serialization_cache: Dict[int, int] = {}
        self._same_leaf = topology.same_leaf_base
        self._cross_leaf = topology.cross_leaf_base
        self._per_leaf = topology.downlinks_per_leaf
        self.trace = Trace()
    @classmethod
    def from_settings(cls, settings: NetsimSettings, num_hosts: int, seed: int) -> 'Simulator':
        return cls(
            topology=settings.build_topology(num_hosts),
            latency=settings.build_latency_model(seed),
            costs=settings.build_cost_model(),
            header_bytes=settings.HEADER_BYTES,
            multicast=settings.MULTICAST,
            recv_batching=settings.RECV_BATCHING,
            max_events=settings.MAX_EVENTS,
            progress_every=settings.PROGRESS_EVERY_EVENTS,
        )
    def _push(self, time: int, kind: EventKind, node: int, message: Optional[Message] = None) -> None:
        heapq.heappush(self._queue, Event(time, self._seq, kind, node, message))
        self._seq += 1
    def _serialization(self, size_bytes: int) -> int:
        ser = self._serialization_cache.get(size_bytes)
        if ser is None:
            ser = self.topology.serialization(size_bytes)
            self._serialization_cache[size_bytes] = ser
        return ser
    def _transit(self, src: int, dst: int, size_bytes: int) -> int:
        if not 0 <= dst < self.topology.num_hosts:
            raise ConfigurationError(
                f"Unknown destination host {dst} (topology has {self.topology.num_hosts} hosts)"
            )
        if src == dst:
            raise ConfigurationError(f"Host {src} cannot send to itself: no loopback path is modeled")
        if src // self._per_leaf == dst // self._per_leaf:
            delay = self._same_leaf
        else:
            delay = self._cross_leaf
            spine = self.topology.spine_for(src, dst, self._seq)
            usage = self.trace.spine_usage
            usage[spine] = usage.get(spine, 0) + 1
        if self.latency.draw_is_tail():
            delay += self.latency.tail_extra
            self.trace.tail_deliveries += 1
        return delay + self._serialization(size_bytes)
    def send(self, msg: Message, at: int) -> int:
        """Schedule a unicast. Returns the time the sender's core is free again."""
        departs = at + self.costs.send_per_msg
        self._push(departs + self._transit(msg.src, msg.dst, msg.size_bytes), EventKind.DELIVER, msg.dst, msg)
        self.trace.unicast_sends += 1
        if self._contexts:
            self._contexts[msg.src].sent += 1
        return departs
    def multicast(self, msg: Message, group: Sequence[int], at: int) -> int:
        if not self.multicast_enabled:
            raise MulticastDisabled("Multicast is disabled for this run")
        if not group:
            raise ContractViolation("Multicast group must not be empty")
        departs = at + self.costs.send_per_msg
        for member in group:
            self._push(departs + self._transit(msg.src, member, msg.size_bytes), EventKind.DELIVER, member, msg)
        self.trace.multicast_sends += 1
        self.trace.multicast_deliveries += len(group)
        if self._contexts:
            self._contexts[msg.src].sent += 1
        return departs
    def _deliver(self, ctx: NodeContext, time: int, msg: Message) -> None:
        ready = max(time, ctx.link_free + self._serialization(msg.size_bytes))
        ctx.link_free = ready
        ctx.inbox.append((ready, msg))
        self.trace.deliveries += 1
        if not ctx.wake_pending:
            ctx.wake_pending = True
            self._push(max(ready, ctx.free_at), EventKind.WAKE, ctx.id)
    def _wake(self, ctx: NodeContext, program: NodeProgram, now: int) -> None:
        ctx.wake_pending = False
        inbox = ctx.inbox
        batch: List[Message] = []
        while inbox and inbox[0][0] <= now:
            batch.append(inbox.popleft()[1])
            if not self.recv_batching:
                break
        if batch:
            ctx.begin(max(now, ctx.free_at))
            payload = math.ceil(sum(m.payload_bytes for m in batch) / len(batch))
            ctx.charge(self.costs.recv_cost(len(batch), payload))
            ctx.received += len(batch)
            for msg in batch:
                program.on_message(ctx, msg)
            ctx.end()
        if inbox:
            ctx.wake_pending = True
            self._push(max(inbox[0][0], ctx.free_at), EventKind.WAKE, ctx.id)
    def run(self, programs: Sequence[NodeProgram], start_at: Optional[Sequence[int]] = None) -> Trace:
        if len(programs) > self.topology.num_hosts:
            raise ConfigurationError(
                f"{len(programs)} programs do not fit on {self.topology.num_hosts} hosts"
            )
        if self._started:
            raise ContractViolation("Simulator.run was already called; build a new Simulator for each run")
        self._started = True
        self._contexts = [NodeContext(node_id, self) for node_id in range(len(programs))]
        for node_id in range(len(programs)):
            self._push(start_at[node_id] if start_at else 0, EventKind.START, node_id)
        events = 0
        queue = self._queue
        while queue:
            time, _, kind, node, message = heapq.heappop(queue)
            events += 1
            if events > self.max_events:
                self.trace.events = events
                raise NonQuiescenceError(
                    f"Event cap of {self.max_events} exceeded at {to_us(time):.3f} us",
                    self._phase_dump(programs),
                )
            if events % self.progress_every == 0:
                logger.info(f"{events} events processed, simulated time {to_us(time):.3f} us")
            ctx = self._contexts[node]
            if kind == EventKind.DELIVER:
                self._deliver(ctx, time, message)
            elif kind == EventKind.WAKE:
                self._wake(ctx, programs[node], time)
            else:
                ctx.begin(max(time, ctx.free_at))
                programs[node].start(ctx)
                ctx.end()
        self.trace.events = events
        dump = self._phase_dump(programs)
        if dump:
            raise NonQuiescenceError(
                f"Event queue drained with {len(dump)} non-terminal node programs", dump
            )
        self.trace.nodes = [ctx.to_stats() for ctx in self._contexts]
        self.trace.completion_time = max((ctx.completion for ctx in self._contexts), default=0)
        logger.debug(
            f"Run finished: {events} events, {self.trace.total_messages} messages, "
            f"completion {to_us(self.trace.completion_time):.3f} us"
        )
        return self.trace
    def _phase_dump(self, programs: Sequence[NodeProgram]) -> Dict[int, str]:
        return {
            node_id: program.describe()
            for node_id, program in enumerate(programs)
            if not program.terminal
        }
