import bisect
import logging
import math
import random
from abc import ABC, abstractmethod
from dataclasses import dataclass
from functools import lru_cache
from typing import Any, List, NamedTuple, Sequence, Tuple
from granular.core.exceptions import ContractViolation
logger = logging.getLogger(__name__)
# 1-indexed key positions returned for n = 32
INDEX_SET_LOW = (1, 3, 6, 8, 10, 12, 14, 16, 18, 20, 22, 24, 26, 27, 29)
INDEX_SET_HIGH = (4, 6, 7, 9, 11, 13, 15, 17, 19, 21, 23, 25, 27, 30, 32)


class PivotSet(NamedTuple):
    pivots: Tuple[Any, ...]
    b: int


def _check_sorted(keys: Sequence[Any]) -> None:
    for i in range(len(keys) - 1):
        if keys[i + 1] < keys[i]:
            raise ContractViolation(f"Pivot selection needs ascending keys; position {i + 1} is out of order")


def _subset(keys: Sequence[Any], size: int, rng: random.Random) -> List[Any]:
    return [keys[i] for i in sorted(rng.sample(range(len(keys)), size))]


def _pad_by_duplication(keys: Sequence[Any], target: int, rng: random.Random) -> List[Any]:
    missing = target - len(keys)
    logger.warning(
        f"Pivot selection over {len(keys)} keys duplicates {missing} of them; some buckets will be empty"
    )
    if missing <= len(keys):
        extra = rng.sample(list(keys), missing)
    else:
        extra = [rng.choice(keys) for _ in range(missing)]
    return sorted(list(keys) + extra)


def _exact_rule(keys: Sequence[Any], rng: random.Random) -> List[Any]:
    # len(keys) == b: drop one at random w.p. 1/4, else lowest or highest b-1
    coin = rng.random()
    if coin < 0.25:
        dropped = rng.randrange(len(keys))
        return [key for i, key in enumerate(keys) if i != dropped]
    if coin < 0.625:
        return list(keys[:-1])
    return list(keys[1:])


def pivot_select_16(sorted_keys: Sequence[Any], rng: random.Random) -> PivotSet:
    n = len(sorted_keys)
    if n < 1:
        raise ContractViolation("Pivot selection needs at least one key")
    _check_sorted(sorted_keys)
    if n == 32:
        index_set = INDEX_SET_LOW if rng.random() < 0.5 else INDEX_SET_HIGH
        return PivotSet(tuple(sorted_keys[i - 1] for i in index_set), 16)
    if n > 32:
        return pivot_select_16(_subset(sorted_keys, 32, rng), rng)
    if n < 16:
        keys = _pad_by_duplication(sorted_keys, 16, rng)
    elif n > 16:
        keys = _subset(sorted_keys, 16, rng)
    else:
        keys = list(sorted_keys)
    return PivotSet(tuple(_exact_rule(keys, rng)), 16)


def sample_size(n: int, b: int) -> int:
    """How many of n held keys the selection rule for b buckets looks at."""
    if b == 16:
        return 32 if n >= 32 else min(n, 16)
    return min(n, 2 * b)


def order_statistic_cdf(rank: int, n: int, x: float) -> float:
    """P(rank-th smallest of n uniform keys <= x)."""
    return sum(math.comb(n, j) * x ** j * (1 - x) ** (n - j) for j in range(rank, n + 1))


@lru_cache(maxsize=1024)
def calibrated_ranks(m: int, b: int, target: float = 0.5) -> Tuple[Tuple[int, float], ...]:
    """One (rank, p) per pivot i: the rank-th smallest of m keys with probability p,
    else the next one up, so that P(pivot i <= quantile i/b) = target."""
    ranks = []
    for i in range(1, b):
        x = i / b
        rank = 0
        while rank < m and order_statistic_cdf(rank + 1, m, x) >= target:
            rank += 1
        if rank == 0:
            ranks.append((1, 1.0))
        elif rank == m:
            ranks.append((m, 1.0))
        else:
            upper = order_statistic_cdf(rank, m, x)
            lower = order_statistic_cdf(rank + 1, m, x)
            ranks.append((rank, (target - lower) / (upper - lower)))
    return tuple(ranks)


def pivot_select_b(sorted_keys: Sequence[Any], b: int, rng: random.Random, target: float = 0.5) -> PivotSet:
    """b = 16 runs the fixed rule. Other b mix adjacent ranks of at most 2b keys
    so that each pivot's CDF at i/b equals `target`; median_target gives the
    level that centres a median tree's output on i/b."""
    if b == 16:
        return pivot_select_16(sorted_keys, rng)
    if b < 2:
        raise ContractViolation(f"Pivot selection needs at least two buckets, got {b}")
    n = len(sorted_keys)
    if n < 1:
        raise ContractViolation("Pivot selection needs at least one key")
    _check_sorted(sorted_keys)
    m = sample_size(n, b)
    keys = _subset(sorted_keys, m, rng) if m < n else list(sorted_keys)
    if m < b - 1:
        logger.warning(f"Pivot selection over {m} keys repeats some of them; some of the {b} buckets will be empty")
    # shared coin: chosen ranks rise with i
    coin = rng.random()
    pivots = [keys[rank - 1] if coin < p else keys[rank] for rank, p in calibrated_ranks(m, b, target)]
    return PivotSet(tuple(sorted(pivots)), b)


class Strategy(ABC):
    name: str = ''
    @abstractmethod
    def select(self, sorted_keys: Sequence[Any], b: int, rng: random.Random) -> List[Any]:
        pass
    def min_keys(self, b: int) -> int:
        return b


@dataclass(frozen=True)
class IndexSet16(Strategy):
    name: str = 'index_set16'
    def select(self, sorted_keys, b, rng):
        return list(pivot_select_b(sorted_keys, b, rng).pivots)
    def min_keys(self, b: int) -> int:
        return 1


@dataclass(frozen=True)
class Naive(Strategy):
    name: str = 'naive'
    def select(self, sorted_keys, b, rng):
        return _subset(sorted_keys, b - 1, rng)


@dataclass(frozen=True)
class ShiftHalf(Strategy):
    name: str = 'shift_half'
    def select(self, sorted_keys, b, rng):
        keys = _subset(sorted_keys, b, rng) if len(sorted_keys) > b else list(sorted_keys)
        return keys[:-1] if rng.random() < 0.5 else keys[1:]


@dataclass(frozen=True)
class Mixed(Strategy):
    name: str = 'mixed'
    def select(self, sorted_keys, b, rng):
        if rng.random() < 0.25:
            return Naive().select(sorted_keys, b, rng)
        return ShiftHalf().select(sorted_keys, b, rng)


@dataclass(frozen=True)
class RankMix(Strategy):
    """Single pivot: the r-th smallest key with probability weights[r - 1]."""
    weights: Tuple[float, ...] = (1.0,)
    name: str = 'rank_mix'
    def __post_init__(self):
        if not self.weights or any(w < 0 for w in self.weights) or abs(sum(self.weights) - 1) > 1e-9:
            raise ContractViolation(f"RankMix weights must be a probability vector, got {self.weights}")
    def select(self, sorted_keys, b, rng):
        if b != 2:
            raise ContractViolation(f"RankMix selects a single pivot (b = 2), got b = {b}")
        rank = rng.choices(range(len(self.weights)), weights=self.weights)[0]
        return [sorted_keys[rank]]
    def min_keys(self, b: int) -> int:
        return len(self.weights)


STRATEGIES = {
    'index_set16': IndexSet16,
    'naive': Naive,
    'shift_half': ShiftHalf,
    'mixed': Mixed,
}


def pivot_select(strategy: Strategy, sorted_keys: Sequence[Any], b: int, rng: random.Random) -> PivotSet:
    if len(sorted_keys) < strategy.min_keys(b):
        raise ContractViolation(
            f"Strategy '{strategy.name}' needs at least {strategy.min_keys(b)} keys for {b} buckets, "
            f"got {len(sorted_keys)}"
        )
    _check_sorted(sorted_keys)
    return PivotSet(tuple(strategy.select(sorted_keys, b, rng)), b)


def bucket_of(key: Any, pivots: Sequence[Any]) -> int:
    if isinstance(pivots, PivotSet):
        pivots = pivots.pivots
    return bisect.bisect_right(pivots, key)
