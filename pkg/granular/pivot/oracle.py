import csv
import io
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence, Union
import numpy as np
from granular.core.exceptions import ContractViolation
from granular.median_tree.plan import median_target, plan, tree_median_array
from granular.pivot.select import (
    INDEX_SET_HIGH,
    INDEX_SET_LOW,
    IndexSet16,
    Mixed,
    Naive,
    RankMix,
    ShiftHalf,
    Strategy,
    calibrated_ranks,
    order_statistic_cdf,
    sample_size,
)
CSV_HEADER = ['strategy', 'b', 'n', 'N', 'fan_in', 'bucket_index', 'mean_fraction', 'pivot_median_quantile']
CHUNK_ELEMENTS = 1 << 22


@dataclass
class OracleResult:
    strategy: str
    b: int
    keys_per_node: int
    num_nodes: int
    fan_in: int
    trials: int
    mean_fractions: np.ndarray
    pivot_mean: np.ndarray
    pivot_median: np.ndarray
    pivot_std: np.ndarray
    def csv_rows(self) -> List[list]:
        rows = []
        for bucket in range(self.b):
            quantile = f"{self.pivot_median[bucket]:.6f}" if bucket < self.b - 1 else ''
            rows.append([
                self.strategy,
                self.b,
                self.keys_per_node,
                self.num_nodes,
                self.fan_in,
                bucket,
                f"{self.mean_fractions[bucket]:.6f}",
                quantile,
            ])
        return rows


def _subset(keys: np.ndarray, size: int, gen: np.random.Generator) -> np.ndarray:
    chosen = np.argsort(gen.random(keys.shape), axis=-1)[..., :size]
    chosen.sort(axis=-1)
    return np.take_along_axis(keys, chosen, axis=-1)


def _pad(keys: np.ndarray, target: int, gen: np.random.Generator) -> np.ndarray:
    n = keys.shape[-1]
    missing = target - n
    if missing <= n:
        extra = _subset(keys, missing, gen)
    else:
        extra = np.take_along_axis(keys, gen.integers(0, n, keys.shape[:-1] + (missing,)), axis=-1)
    return np.sort(np.concatenate([keys, extra], axis=-1), axis=-1)


def _exact_rule(keys: np.ndarray, gen: np.random.Generator) -> np.ndarray:
    b = keys.shape[-1]
    batch = keys.shape[:-1]
    coin = gen.random(batch)[..., np.newaxis]
    dropped = gen.integers(0, b, batch)[..., np.newaxis]
    positions = np.arange(b - 1)
    without_one = np.take_along_axis(keys, positions + (positions >= dropped), axis=-1)
    shifted = np.where(coin < 0.625, keys[..., :-1], keys[..., 1:])
    return np.where(coin < 0.25, without_one, shifted)


def _shift_half(keys: np.ndarray, b: int, gen: np.random.Generator) -> np.ndarray:
    if keys.shape[-1] > b:
        keys = _subset(keys, b, gen)
    coin = gen.random(keys.shape[:-1])[..., np.newaxis]
    return np.where(coin < 0.5, keys[..., :-1], keys[..., 1:])


def _calibrated(keys: np.ndarray, b: int, gen: np.random.Generator, target: float) -> np.ndarray:
    m = sample_size(keys.shape[-1], b)
    if keys.shape[-1] > m:
        keys = _subset(keys, m, gen)
    ranks = calibrated_ranks(m, b, target)
    lower = [rank - 1 for rank, _ in ranks]
    upper = [min(rank, m - 1) for rank, _ in ranks]
    p = np.array([p for _, p in ranks])
    coin = gen.random(keys.shape[:-1])[..., np.newaxis]
    return np.sort(np.where(coin < p, keys[..., lower], keys[..., upper]), axis=-1)


def _rule_family(keys: np.ndarray, b: int, gen: np.random.Generator, target: float) -> np.ndarray:
    if b != 16:
        return _calibrated(keys, b, gen, target)
    n = keys.shape[-1]
    if n >= 32:
        if n > 32:
            keys = _subset(keys, 32, gen)
        coin = gen.random(keys.shape[:-1])[..., np.newaxis]
        low = keys[..., [i - 1 for i in INDEX_SET_LOW]]
        high = keys[..., [i - 1 for i in INDEX_SET_HIGH]]
        return np.where(coin < 0.5, low, high)
    if n < 16:
        keys = _pad(keys, 16, gen)
    elif n > 16:
        keys = _subset(keys, 16, gen)
    return _exact_rule(keys, gen)


def select_array(strategy: Strategy, keys: np.ndarray, b: int, gen: np.random.Generator, target: float = 0.5) -> np.ndarray:
    """Apply `strategy` to every row of sorted `keys` (last axis), returning b - 1 pivots per row.

    `target` is the CDF level the calibrated rule aims each pivot at (b != 16 only).
    """
    if isinstance(strategy, IndexSet16):
        return _rule_family(keys, b, gen, target)
    if isinstance(strategy, Naive):
        return _subset(keys, b - 1, gen)
    if isinstance(strategy, ShiftHalf):
        return _shift_half(keys, b, gen)
    if isinstance(strategy, Mixed):
        coin = gen.random(keys.shape[:-1])[..., np.newaxis]
        return np.where(coin < 0.25, _subset(keys, b - 1, gen), _shift_half(keys, b, gen))
    if isinstance(strategy, RankMix):
        if b != 2:
            raise ContractViolation(f"RankMix selects a single pivot (b = 2), got b = {b}")
        ranks = gen.choice(len(strategy.weights), p=np.asarray(strategy.weights), size=keys.shape[:-1])
        return np.take_along_axis(keys, ranks[..., np.newaxis], axis=-1)
    raise ContractViolation(f"No vectorised form for strategy {strategy!r}")


def _aggregate(pivots: np.ndarray, fan_in: int) -> np.ndarray:
    # pivots: (trials, nodes, b - 1) -> (trials, b - 1)
    by_node = np.moveaxis(pivots, 1, -1)
    num_nodes = by_node.shape[-1]
    if fan_in > 0:
        return tree_median_array(by_node, plan(num_nodes, fan_in))
    k = (num_nodes - 1) // 2
    return np.partition(by_node, k, axis=-1)[..., k]


def bucket_size_distribution(
    strategy: Strategy,
    b: int,
    keys_per_node: int,
    num_nodes: int,
    tree_fan_in: int,
    trials: int,
    rng: Union[np.random.Generator, int, None] = None,
) -> OracleResult:
    if trials < 1:
        raise ContractViolation(f"Oracle needs at least one trial, got {trials}")
    if keys_per_node < strategy.min_keys(b):
        raise ContractViolation(
            f"Strategy '{strategy.name}' needs at least {strategy.min_keys(b)} keys per node, got {keys_per_node}"
        )
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    target = median_target(num_nodes, tree_fan_in) if isinstance(strategy, IndexSet16) and b != 16 else 0.5
    chunk = max(1, CHUNK_ELEMENTS // (num_nodes * keys_per_node))
    quantiles: List[np.ndarray] = []
    done = 0
    while done < trials:
        size = min(chunk, trials - done)
        keys = np.sort(gen.random((size, num_nodes, keys_per_node)), axis=-1)
        quantiles.append(_aggregate(select_array(strategy, keys, b, gen, target), tree_fan_in))
        done += size
    pivots = np.concatenate(quantiles, axis=0)
    edges = np.concatenate([np.zeros((trials, 1)), pivots, np.ones((trials, 1))], axis=1)
    return OracleResult(
        strategy=strategy.name,
        b=b,
        keys_per_node=keys_per_node,
        num_nodes=num_nodes,
        fan_in=tree_fan_in,
        trials=trials,
        mean_fractions=np.diff(edges, axis=1).mean(axis=0),
        pivot_mean=pivots.mean(axis=0),
        pivot_median=np.median(pivots, axis=0),
        pivot_std=pivots.std(axis=0),
    )


def to_csv(results: Iterable[OracleResult]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(CSV_HEADER)
    for result in results:
        writer.writerows(result.csv_rows())
    return buffer.getvalue()


def write_csv(results: Iterable[OracleResult], path: str) -> None:
    with open(path, 'w', encoding='utf-8', newline='') as f:
        f.write(to_csv(results))


def beta_median(a: int, n: int) -> float:
    """Median quantile of the a-th smallest of n uniform keys (closed form for a = 1)."""
    if a == 1:
        return 1 - 2 ** (-1 / n)
    return rank_mix_median([0.0] * (a - 1) + [1.0], n)


def rank_mix_median(weights: Sequence[float], n: int, tolerance: float = 1e-10) -> float:
    lo, hi = 0.0, 1.0
    while hi - lo > tolerance:
        mid = (lo + hi) / 2
        cdf = sum(w * order_statistic_cdf(r + 1, n, mid) for r, w in enumerate(weights))
        if cdf < 0.5:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def default_results(trials: int, seed: Optional[int] = 0) -> List[OracleResult]:
    gen = np.random.default_rng(seed)
    results = [
        bucket_size_distribution(strategy, 8, 8, 1, 0, trials, gen)
        for strategy in (Naive(), ShiftHalf(), Mixed())
    ]
    results.append(bucket_size_distribution(IndexSet16(), 16, 16, 256, 16, max(1, trials // 100), gen))
    return results
