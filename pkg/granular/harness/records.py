from dataclasses import dataclass
from typing import Dict, List
import numpy as np
from granular.core.exceptions import ContractViolation
from granular.nanosort.dataclasses import VALUE_BYTES, SortRecord
GOLDEN_GAMMA = np.uint64(0x9E3779B97F4A7C15)
MIX_1 = np.uint64(0xBF58476D1CE4E5B9)
MIX_2 = np.uint64(0x94D049BB133111EB)


def splitmix64(x: np.ndarray) -> np.ndarray:
    """Bijective 64-bit mix; distinct inputs give distinct outputs."""
    with np.errstate(over='ignore'):
        z = x.astype(np.uint64) + GOLDEN_GAMMA
        z = (z ^ (z >> np.uint64(30))) * MIX_1
        z = (z ^ (z >> np.uint64(27))) * MIX_2
        return z ^ (z >> np.uint64(31))


@dataclass
class RecordSet:
    keys: List[int]
    values: List[bytes]
    def __len__(self) -> int:
        return len(self.keys)
    def value_map(self) -> Dict[int, bytes]:
        return dict(zip(self.keys, self.values))
    def to_records(self, origin_node: int = 0) -> List[SortRecord]:
        return [SortRecord(key, value, origin_node) for key, value in zip(self.keys, self.values)]


def gen_records(n: int, seed: int) -> RecordSet:
    if n < 1:
        raise ContractViolation(f"gen_records needs n >= 1, got {n}")
    offset = splitmix64(np.array([seed], dtype=np.uint64))[0]
    with np.errstate(over='ignore'):
        counters = np.arange(n, dtype=np.uint64) + offset
    keys = splitmix64(counters)
    blob = np.random.default_rng(seed).bytes(n * VALUE_BYTES)
    values = [blob[i * VALUE_BYTES:(i + 1) * VALUE_BYTES] for i in range(n)]
    return RecordSet(keys=[int(key) for key in keys], values=values)
