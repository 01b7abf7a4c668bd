import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Sequence, Tuple, Union
from granular.core.exceptions import ConfigurationError, ContractViolation
CalibrationTable = List[Tuple[int, int]]


class ComputeKind(str, Enum):
    SORT = 'sort'
    SCAN_MIN = 'scan_min'
    MERGE = 'merge'


def _check_table(name: str, table: Sequence[Tuple[int, int]]) -> None:
    if not table:
        raise ConfigurationError(f"{name} calibration table is empty")
    for (x0, y0), (x1, y1) in zip(table, table[1:]):
        if not (x1 > x0 and y1 > y0):
            raise ConfigurationError(
                f"{name} calibration table must be strictly increasing, "
                f"got ({x0}, {y0}) followed by ({x1}, {y1})"
            )
    if table[0][0] <= 0 or table[0][1] <= 0:
        raise ConfigurationError(f"{name} calibration table must start at positive coordinates")


def interpolate_linear(table: Sequence[Tuple[int, int]], x: float) -> float:
    first_x, first_y = table[0]
    if x <= first_x or len(table) == 1:
        return first_y * x / first_x
    for (x0, y0), (x1, y1) in zip(table, table[1:]):
        if x <= x1:
            return y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    (x0, y0), (x1, y1) = table[-2], table[-1]
    return y1 + (y1 - y0) * (x - x1) / (x1 - x0)


def interpolate_loglog(table: Sequence[Tuple[int, int]], x: float) -> float:
    if x <= 0:
        return 0.0
    first_x, first_y = table[0]
    if x <= first_x or len(table) == 1:
        return first_y * x / first_x
    segment = None
    for (x0, y0), (x1, y1) in zip(table, table[1:]):
        if x <= x1:
            segment = (x0, y0, x1, y1)
            break
    if segment is None:
        (x0, y0), (x1, y1) = table[-2], table[-1]
        segment = (x0, y0, x1, y1)
    x0, y0, x1, y1 = segment
    exponent = math.log(y1 / y0) / math.log(x1 / x0)
    return y0 * (x / x0) ** exponent


@dataclass
class CostModel:
    recv_table: CalibrationTable
    send_per_msg: int
    sort_table: CalibrationTable
    scan_table: CalibrationTable
    clock_ghz: float = 3.2
    recv_calibration_bytes: int = 16
    _cache: Dict[Tuple[Any, ...], int] = field(default_factory=dict, init=False, repr=False, compare=False)
    def __post_init__(self):
        _check_table('recv', self.recv_table)
        _check_table('sort', self.sort_table)
        _check_table('scan', self.scan_table)
        if self.send_per_msg < 0:
            raise ConfigurationError("send_per_msg must be non-negative")
    @property
    def cycle_ps(self) -> float:
        return 1000 / self.clock_ghz
    def recv_cost(self, count: int, size_bytes: int = 16) -> int:
        if count < 1:
            raise ContractViolation(f"recv_cost needs at least one message, got {count}")
        key = ('recv', count, size_bytes)
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        base = interpolate_linear(self.recv_table, count)
        extra_words = max(0, math.ceil((size_bytes - self.recv_calibration_bytes) / 8))
        cost = int(math.ceil(base + count * extra_words * self.cycle_ps))
        self._cache[key] = cost
        return cost
    def compute_cost(self, kind: Union[ComputeKind, str], n: int) -> int:
        if n < 0:
            raise ContractViolation(f"compute_cost needs n >= 0, got {n}")
        try:
            kind = ComputeKind(kind)
        except ValueError:
            raise ConfigurationError(f"Unknown compute kind '{kind}'") from None
        if n == 0:
            return 0
        key = (kind.value, n)
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        table = self.sort_table if kind is ComputeKind.SORT else self.scan_table
        cost = int(round(interpolate_loglog(table, n)))
        self._cache[key] = cost
        return cost
