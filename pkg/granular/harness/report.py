from dataclasses import dataclass, field
from typing import Any, Dict, List
import numpy as np
from granular.core.utils.time_utils import to_ns, to_us
from granular.netsim.context import Trace
from granular.nanosort.dataclasses import SortConfig
from granular.nanosort.runner import NanoSortResult
from granular.nanosort.verify import VerificationReport, skew
PS_PER_MS = 1_000_000_000


@dataclass
class StageSummary:
    """Busy and idle picoseconds of one stage, min/mean/max across nodes."""
    stage: str
    busy_min: int
    busy_mean: float
    busy_max: int
    idle_min: int
    idle_mean: float
    idle_max: int
    def to_dict(self) -> Dict[str, Any]:
        return {
            "stage": self.stage,
            "busy": [self.busy_min, self.busy_mean, self.busy_max],
            "idle": [self.idle_min, self.idle_mean, self.idle_max],
        }


def summarize_stages(trace: Trace) -> Dict[str, StageSummary]:
    summaries: Dict[str, StageSummary] = {}
    for stage in trace.stage_names():
        busy = np.array([stats.busy.get(stage, 0) for stats in trace.nodes], dtype=np.int64)
        idle = np.array([stats.idle.get(stage, 0) for stats in trace.nodes], dtype=np.int64)
        summaries[stage] = StageSummary(
            stage=stage,
            busy_min=int(busy.min()),
            busy_mean=float(busy.mean()),
            busy_max=int(busy.max()),
            idle_min=int(idle.min()),
            idle_mean=float(idle.mean()),
            idle_max=int(idle.max()),
        )
    return summaries


@dataclass
class RunReport:
    config: SortConfig
    completion_time: int
    unicast_sends: int
    multicast_sends: int
    skew: float
    verification: VerificationReport
    stages: Dict[str, StageSummary]
    idle_share: float
    throughput: float
    tail_hits: int
    trace: Trace = field(repr=False)
    @classmethod
    def from_result(cls, result: NanoSortResult, verification: VerificationReport) -> 'RunReport':
        trace = result.trace
        busy = sum(stats.total_busy for stats in trace.nodes)
        idle = sum(stats.total_idle for stats in trace.nodes)
        completion_ms = trace.completion_time / PS_PER_MS
        throughput = result.config.num_keys / completion_ms / result.config.num_nodes if completion_ms else 0.0
        return cls(
            config=result.config,
            completion_time=trace.completion_time,
            unicast_sends=trace.unicast_sends,
            multicast_sends=trace.multicast_sends,
            skew=skew(result.counts, result.config.num_keys),
            verification=verification,
            stages=summarize_stages(trace),
            idle_share=idle / (busy + idle) if busy + idle else 0.0,
            throughput=throughput,
            tail_hits=trace.tail_deliveries,
            trace=trace,
        )
    @property
    def total_messages(self) -> int:
        return self.unicast_sends + self.multicast_sends
    @property
    def passed(self) -> bool:
        return self.verification.passed
    @property
    def verdict(self) -> str:
        return self.verification.verdict
    def accounting_balanced(self) -> bool:
        return all(
            stats.total_busy + stats.total_idle == stats.completion
            for stats in self.trace.nodes
        )
    def summary_lines(self) -> List[str]:
        config = self.config
        lines = [
            f"nodes={config.num_nodes} buckets={config.num_buckets} r={config.recursion_depth} "
            f"keys={config.num_keys} seed={config.seed} multicast={'on' if config.multicast else 'off'}",
            f"completion={to_us(self.completion_time):.3f} us messages={self.total_messages} "
            f"(unicast {self.unicast_sends}, multicast {self.multicast_sends})",
            f"skew={self.skew:.3f} idle_share={self.idle_share:.3f} "
            f"throughput={self.throughput:.1f} records/ms/core tail_hits={self.tail_hits}",
        ]
        for summary in self.stages.values():
            lines.append(
                f"  {summary.stage}: busy {to_ns(summary.busy_min):.1f}/{to_ns(summary.busy_mean):.1f}/"
                f"{to_ns(summary.busy_max):.1f} ns, idle {to_ns(summary.idle_min):.1f}/"
                f"{to_ns(summary.idle_mean):.1f}/{to_ns(summary.idle_max):.1f} ns"
            )
        lines.append(f"verification={self.verdict}")
        lines.extend(f"  {failure}" for failure in self.verification.failures)
        return lines
    def to_dict(self) -> Dict[str, Any]:
        return {
            "completion_time": self.completion_time,
            "total_messages": self.total_messages,
            "skew": self.skew,
            "idle_share": self.idle_share,
            "throughput": self.throughput,
            "tail_hits": self.tail_hits,
            "stages": {stage: summary.to_dict() for stage, summary in self.stages.items()},
            "verification": self.verdict,
            "failures": list(self.verification.failures),
        }
