import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence
from granular.nanosort.dataclasses import SortRecord
logger = logging.getLogger(__name__)


@dataclass
class VerificationReport:
    failures: List[str] = field(default_factory=list)
    @property
    def passed(self) -> bool:
        return not self.failures
    @property
    def verdict(self) -> str:
        return 'PASS' if self.passed else 'FAIL'


def verify(
    final_records: Sequence[Sequence[Optional[SortRecord]]],
    input_keys: Sequence[int],
    input_values: Optional[Dict[int, bytes]] = None,
) -> VerificationReport:
    report = VerificationReport()
    previous_max = None
    previous_node = None
    for node_id, records in enumerate(final_records):
        keys = [record.key for record in records if record is not None]
        if len(keys) != len(records):
            report.failures.append(f"node {node_id}: {len(records) - len(keys)} records never arrived")
        if any(keys[i] > keys[i + 1] for i in range(len(keys) - 1)):
            report.failures.append(f"node {node_id}: keys are not in ascending order")
        if not keys:
            continue
        if previous_max is not None and min(keys) < previous_max:
            report.failures.append(
                f"node {previous_node} holds key {previous_max} above the minimum {min(keys)} of node {node_id}"
            )
        previous_max = max(keys)
        previous_node = node_id
    output = Counter(record.key for records in final_records for record in records if record is not None)
    if output != Counter(int(key) for key in input_keys):
        report.failures.append(
            f"output holds {sum(output.values())} keys that differ from the {len(input_keys)} input keys"
        )
    if input_values is not None:
        mismatched = sum(
            1
            for records in final_records
            for record in records
            if record is not None and input_values.get(record.key) != record.value
        )
        if mismatched:
            report.failures.append(f"{mismatched} records carry a value that does not belong to their key")
    for failure in report.failures:
        logger.error(f"Verification failure: {failure}")
    return report


def skew(counts: Sequence[int], num_keys: Optional[int] = None) -> float:
    if not counts:
        return 0.0
    total = sum(counts) if num_keys is None else num_keys
    if total == 0:
        return 0.0
    return max(counts) / (total / len(counts))
