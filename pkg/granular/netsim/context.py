from collections import deque
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Deque, Dict, Iterable, Tuple, Union
from granular.netsim.costs import ComputeKind
from granular.netsim.dataclasses import Message, PhaseTag
from granular.core.exceptions import MulticastDisabled
if TYPE_CHECKING:
    from granular.netsim.engine import Simulator


class NodeContext:
    """Per-node handle a program acts through: local clock cursor, compute
    charging, sends, and the busy/idle ledger kept per stage label."""
    __slots__ = (
        '_node_id', '_sim', 'now', '_stage', '_mark', 'free_at', 'busy', 'idle',
        'sent', 'received', 'inbox', 'wake_pending', 'link_free', 'completion',
    )
    def __init__(self, node_id: int, sim: 'Simulator', stage: str = 'start'):
        self._node_id = node_id
        self._sim = sim
        self.now = 0
        self._stage = stage
        self._mark = 0
        self.free_at = 0
        self.busy: Dict[str, int] = {}
        self.idle: Dict[str, int] = {}
        self.sent = 0
        self.received = 0
        self.inbox: Deque[Tuple[int, Message]] = deque()
        self.wake_pending = False
        self.link_free = 0
        self.completion = 0
    @property
    def id(self) -> int:
        return self._node_id
    @property
    def stage(self) -> str:
        return self._stage
    @stage.setter
    def stage(self, label: str) -> None:
        if label == self._stage:
            return
        self._flush_busy()
        self._stage = label
    @property
    def multicast_enabled(self) -> bool:
        return self._sim.multicast_enabled
    def _flush_busy(self) -> None:
        spent = self.now - self._mark
        if spent > 0:
            self.busy[self._stage] = self.busy.get(self._stage, 0) + spent
        self._mark = self.now
    def begin(self, at: int) -> None:
        gap = at - self.free_at
        if gap > 0:
            self.idle[self._stage] = self.idle.get(self._stage, 0) + gap
        self.now = at
        self._mark = at
    def end(self) -> None:
        self._flush_busy()
        self.free_at = self.now
        if self.now > self.completion:
            self.completion = self.now
    def charge(self, duration: int) -> None:
        self.now += duration
    def compute(self, kind: Union[ComputeKind, str], n: int) -> int:
        cost = self._sim.costs.compute_cost(kind, n)
        self.now += cost
        return cost
    def send(self, dst: int, phase: PhaseTag, payload: Any, payload_bytes: int) -> None:
        msg = Message(self._node_id, dst, phase, payload, payload_bytes, self._sim.header_bytes)
        self.now = self._sim.send(msg, self.now)
    def broadcast(
        self,
        group: Iterable[int],
        phase: PhaseTag,
        payload: Any,
        payload_bytes: int,
    ) -> int:
        members = [member for member in group if member != self._node_id]
        if not members:
            return 0
        if len(members) == 1:
            self.send(members[0], phase, payload, payload_bytes)
            return 1
        msg = Message(self._node_id, -1, phase, payload, payload_bytes, self._sim.header_bytes)
        try:
            self.now = self._sim.multicast(msg, members, self.now)
            return 1
        except MulticastDisabled:
            for member in members:
                self.send(member, phase, payload, payload_bytes)
            return len(members)
    def to_stats(self) -> 'NodeStats':
        return NodeStats(
            node_id=self._node_id,
            busy=dict(self.busy),
            idle=dict(self.idle),
            sent=self.sent,
            received=self.received,
            completion=self.completion,
        )


@dataclass
class NodeStats:
    node_id: int
    busy: Dict[str, int] = field(default_factory=dict)
    idle: Dict[str, int] = field(default_factory=dict)
    sent: int = 0
    received: int = 0
    completion: int = 0
    @property
    def total_busy(self) -> int:
        return sum(self.busy.values())
    @property
    def total_idle(self) -> int:
        return sum(self.idle.values())
    def stages(self) -> list[str]:
        return sorted(set(self.busy) | set(self.idle))
    def to_dict(self) -> Dict[str, Any]:
        return {
            "node_id": self.node_id,
            "busy": dict(self.busy),
            "idle": dict(self.idle),
            "sent": self.sent,
            "received": self.received,
            "completion": self.completion,
        }


@dataclass
class Trace:
    completion_time: int = 0
    unicast_sends: int = 0
    multicast_sends: int = 0
    deliveries: int = 0
    multicast_deliveries: int = 0
    tail_deliveries: int = 0
    events: int = 0
    nodes: list[NodeStats] = field(default_factory=list)
    spine_usage: Dict[int, int] = field(default_factory=dict)
    @property
    def total_messages(self) -> int:
        return self.unicast_sends + self.multicast_sends
    def stage_names(self) -> list[str]:
        names: set[str] = set()
        for stats in self.nodes:
            names.update(stats.busy)
            names.update(stats.idle)
        return sorted(names)
    def csv_rows(self) -> list[list[Any]]:
        rows: list[list[Any]] = [["node", "stage", "busy_ps", "idle_ps", "sent", "received"]]
        for stats in self.nodes:
            for stage in stats.stages():
                rows.append([
                    stats.node_id,
                    stage,
                    stats.busy.get(stage, 0),
                    stats.idle.get(stage, 0),
                    stats.sent,
                    stats.received,
                ])
        return rows
    def to_csv(self) -> str:
        return "\n".join(",".join(str(cell) for cell in row) for row in self.csv_rows()) + "\n"
    def write_csv(self, path: str) -> None:
        with open(path, 'w', encoding='utf-8', newline='') as f:
            f.write(self.to_csv())
    def to_dict(self) -> Dict[str, Any]:
        return {
            "completion_time": self.completion_time,
            "unicast_sends": self.unicast_sends,
            "multicast_sends": self.multicast_sends,
            "deliveries": self.deliveries,
            "tail_deliveries": self.tail_deliveries,
            "events": self.events,
        }
