from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Sequence, Tuple, TypeVar
import numpy as np
from granular.core.exceptions import ContractViolation
T = TypeVar('T')


@dataclass(frozen=True, eq=False)
class TreePlan:
    """Median-of-medians aggregation plan over members 0..num_leaves-1.

    levels[0] holds every member; levels[k] holds the aggregators that
    produce the level-k values. Member indices are relative to the group.
    """
    num_leaves: int
    fan_in: int
    rotation: int
    levels: Tuple[Tuple[int, ...], ...]
    parents: Tuple[Tuple[int, ...], ...]
    positions: Tuple[Dict[int, int], ...]
    @property
    def depth(self) -> int:
        return len(self.levels) - 1
    @property
    def root(self) -> int:
        return self.levels[-1][0]
    def parent(self, level: int, member: int) -> int:
        return self.parents[level][self.positions[level][member]]
    def inputs(self, level: int, member: int) -> Tuple[int, ...]:
        """Members of `level` whose values `member` aggregates at level + 1."""
        position = self.positions[level + 1][member]
        start = position * self.fan_in
        return self.levels[level][start:start + self.fan_in]
    def is_aggregator(self, level: int, member: int) -> bool:
        return 0 < level <= self.depth and member in self.positions[level]
    def aggregator_levels(self, member: int) -> List[int]:
        return [level for level in range(1, self.depth + 1) if member in self.positions[level]]


@lru_cache(maxsize=256)
def plan(num_nodes: int, fan_in: int, rotation: int = 0) -> TreePlan:
    if num_nodes < 1:
        raise ContractViolation(f"A median tree needs at least one node, got {num_nodes}")
    if fan_in < 2:
        raise ContractViolation(f"Median tree fan-in must be at least 2, got {fan_in}")
    levels: List[Tuple[int, ...]] = [tuple(range(num_nodes))]
    parents: List[Tuple[int, ...]] = []
    while len(levels[-1]) > 1:
        current = levels[-1]
        aggregators: List[int] = []
        parent_of: List[int] = []
        for start in range(0, len(current), fan_in):
            block = current[start:start + fan_in]
            aggregator = block[rotation % len(block)]
            aggregators.append(aggregator)
            parent_of.extend([aggregator] * len(block))
        parents.append(tuple(parent_of))
        levels.append(tuple(aggregators))
    parents.append((levels[-1][0],))
    positions = tuple({member: position for position, member in enumerate(level)} for level in levels)
    return TreePlan(
        num_leaves=num_nodes,
        fan_in=fan_in,
        rotation=rotation,
        levels=tuple(levels),
        parents=tuple(parents),
        positions=positions,
    )


def median(values: Sequence[T]) -> T:
    if not values:
        raise ContractViolation("median of an empty list is undefined")
    ordered = sorted(values)
    return ordered[(len(ordered) - 1) // 2]


def tree_median(values: Sequence[T], tree: TreePlan) -> T:
    if len(values) != tree.num_leaves:
        raise ContractViolation(
            f"tree_median got {len(values)} values for a plan over {tree.num_leaves} leaves"
        )
    current = list(values)
    for _ in range(tree.depth):
        current = [median(current[start:start + tree.fan_in]) for start in range(0, len(current), tree.fan_in)]
    return current[0]


def _lower_median_last_axis(block: np.ndarray) -> np.ndarray:
    k = (block.shape[-1] - 1) // 2
    return np.partition(block, k, axis=-1)[..., k]


def tree_median_array(values: np.ndarray, tree: TreePlan) -> np.ndarray:
    """Vectorised tree_median along the last axis."""
    values = np.asarray(values)
    if values.shape[-1] != tree.num_leaves:
        raise ContractViolation(
            f"tree_median_array got {values.shape[-1]} values for a plan over {tree.num_leaves} leaves"
        )
    current = values
    c = tree.fan_in
    for _ in range(tree.depth):
        width = current.shape[-1]
        full = (width // c) * c
        parts = []
        if full:
            head = current[..., :full].reshape(current.shape[:-1] + (width // c, c))
            parts.append(_lower_median_last_axis(head))
        if full < width:
            parts.append(_lower_median_last_axis(current[..., full:])[..., np.newaxis])
        current = np.concatenate(parts, axis=-1)
    return current[..., 0]


def _lower_median_cdf(cdfs: Sequence[float]) -> float:
    """P(lower median <= x) for independent inputs with P(input <= x) = cdfs[i]."""
    needed = (len(cdfs) - 1) // 2 + 1
    # at_or_below[j]: probability that exactly j inputs are <= x
    at_or_below = [1.0]
    for p in cdfs:
        shifted = [0.0] * (len(at_or_below) + 1)
        for j, mass in enumerate(at_or_below):
            shifted[j] += mass * (1 - p)
            shifted[j + 1] += mass * p
        at_or_below = shifted
    return sum(at_or_below[needed:])


def root_cdf(tree: TreePlan, u: float) -> float:
    """CDF of tree_median at a point where every leaf value has CDF u."""
    current = [u] * tree.num_leaves
    for _ in range(tree.depth):
        seen: Dict[Tuple[float, ...], float] = {}
        merged = []
        for start in range(0, len(current), tree.fan_in):
            block = tuple(current[start:start + tree.fan_in])
            if block not in seen:
                seen[block] = _lower_median_cdf(block)
            merged.append(seen[block])
        current = merged
    return current[0]


@lru_cache(maxsize=256)
def median_target(num_nodes: int, fan_in: int, tolerance: float = 1e-9) -> float:
    """Leaf CDF level u with root_cdf(plan(num_nodes, fan_in), u) = 1/2.

    If every node's estimate of a quantile q has CDF u at q, the tree median
    has its median at q. Odd single blocks give 1/2; even ones sit below it.
    fan_in 0 stands for one exact median over all nodes.
    """
    tree = plan(num_nodes, fan_in if fan_in >= 2 else max(2, num_nodes))
    lo, hi = 0.0, 1.0
    while hi - lo > tolerance:
        mid = (lo + hi) / 2
        if root_cdf(tree, mid) < 0.5:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2
