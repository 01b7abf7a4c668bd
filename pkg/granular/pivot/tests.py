import random
import numpy as np
import pytest
from granular.core.exceptions import ContractViolation
from granular.pivot.oracle import (
    beta_median,
    bucket_size_distribution,
    order_statistic_cdf,
    rank_mix_median,
    select_array,
    to_csv,
)
from granular.pivot.select import (
    INDEX_SET_HIGH,
    INDEX_SET_LOW,
    IndexSet16,
    Mixed,
    Naive,
    RankMix,
    ShiftHalf,
    bucket_of,
    calibrated_ranks,
    pivot_select,
    pivot_select_16,
    pivot_select_b,
    sample_size,
)


class ForcedCoin(random.Random):
    """random() always returns `coin`."""
    def __init__(self, coin: float, seed: int = 0):
        super().__init__(seed)
        self.coin = coin
    def random(self) -> float:
        return self.coin


def test_n32_low_index_set():
    keys = list(range(1, 33))
    pivots = pivot_select_16(keys, ForcedCoin(0.1)).pivots
    assert pivots == (1, 3, 6, 8, 10, 12, 14, 16, 18, 20, 22, 24, 26, 27, 29)


def test_n32_high_index_set():
    keys = list(range(1, 33))
    assert pivot_select_16(keys, ForcedCoin(0.9)).pivots == INDEX_SET_HIGH


def test_n16_lowest_and_highest_branches():
    keys = list(range(1, 17))
    assert pivot_select_16(keys, ForcedCoin(0.4)).pivots == tuple(range(1, 16))
    assert pivot_select_16(keys, ForcedCoin(0.7)).pivots == tuple(range(2, 17))


def test_n16_drop_one_branch():
    keys = list(range(1, 17))
    pivots = pivot_select_16(keys, ForcedCoin(0.1, seed=4)).pivots
    assert len(pivots) == 15
    assert len(set(keys) - set(pivots)) == 1


def test_n16_branch_frequencies():
    rng = random.Random(2)
    keys = list(range(1, 17))
    counts = {'low': 0, 'high': 0, 'drop': 0}
    for _ in range(20_000):
        pivots = pivot_select_16(keys, rng).pivots
        if pivots == tuple(range(1, 16)):
            counts['low'] += 1
        elif pivots == tuple(range(2, 17)):
            counts['high'] += 1
        else:
            counts['drop'] += 1
    # the drop branch sometimes removes the first or last key
    assert abs(counts['low'] / 20_000 - (0.375 + 0.25 / 16)) < 0.02
    assert abs(counts['high'] / 20_000 - (0.375 + 0.25 / 16)) < 0.02
    assert abs(counts['drop'] / 20_000 - 0.25 * 14 / 16) < 0.02


def test_single_key_gives_fifteen_copies():
    assert pivot_select_16([7], random.Random(0)).pivots == (7,) * 15


def test_always_fifteen_sorted_pivots_from_input():
    rng = random.Random(9)
    for n in (1, 3, 8, 15, 16, 17, 24, 31, 32, 33, 100):
        keys = sorted(rng.sample(range(10_000), n))
        pivots = pivot_select_16(keys, rng).pivots
        assert len(pivots) == 15
        assert list(pivots) == sorted(pivots)
        assert set(pivots) <= set(keys)


def test_unsorted_input_is_rejected():
    with pytest.raises(ContractViolation):
        pivot_select_16([3, 1, 2], random.Random(0))
    with pytest.raises(ContractViolation):
        pivot_select_16([], random.Random(0))


def test_small_input_logs_warning(caplog):
    pivot_select_16([1, 2, 3], random.Random(0))
    assert 'duplicates 13' in caplog.text


def test_pivot_select_b_generalises_rule():
    rng = random.Random(5)
    for b in (2, 4, 8):
        for n in (1, b, 3 * b):
            pivots = pivot_select_b(sorted(rng.sample(range(1000), n)), b, rng)
            assert len(pivots.pivots) == b - 1
            assert pivots.b == b
    keys = list(range(1, 9))
    ranks = calibrated_ranks(8, 4)
    assert pivot_select_b(keys, 4, ForcedCoin(0.0)).pivots == tuple(rank for rank, _ in ranks)
    assert pivot_select_b(keys, 4, ForcedCoin(0.999)).pivots == tuple(rank if p > 0.999 else rank + 1 for rank, p in ranks)


def test_calibrated_ranks_hit_the_target_level():
    for m, b, target in ((8, 4, 0.5), (8, 4, 0.47), (16, 8, 0.5), (4, 2, 0.46)):
        for i, (rank, p) in enumerate(calibrated_ranks(m, b, target), start=1):
            x = i / b
            level = p * order_statistic_cdf(rank, m, x) + (1 - p) * order_statistic_cdf(rank + 1, m, x)
            assert level == pytest.approx(target, abs=1e-9)
            assert 0 < p <= 1


def test_sample_size():
    assert sample_size(100, 16) == 32
    assert sample_size(20, 16) == 16
    assert sample_size(5, 16) == 5
    assert sample_size(100, 4) == 8
    assert sample_size(3, 4) == 3


def test_pivot_select_b_delegates_for_sixteen():
    keys = list(range(1, 33))
    assert pivot_select_b(keys, 16, ForcedCoin(0.1)).pivots == INDEX_SET_LOW


def test_shift_half_branches():
    keys = list(range(1, 9))
    assert pivot_select(ShiftHalf(), keys, 8, ForcedCoin(0.2)).pivots == tuple(range(1, 8))
    assert pivot_select(ShiftHalf(), keys, 8, ForcedCoin(0.8)).pivots == tuple(range(2, 9))


def test_mixed_naive_branch_matches_naive():
    keys = list(range(1, 9))
    mixed = pivot_select(Mixed(), keys, 8, ForcedCoin(0.1, seed=3)).pivots
    naive = Naive().select(keys, 8, ForcedCoin(0.1, seed=3))
    assert len(mixed) == 7
    assert set(mixed) <= set(keys)
    assert len(naive) == 7


def test_naive_two_buckets_is_fair():
    rng = random.Random(1)
    picks = [pivot_select(Naive(), [5, 9], 2, rng).pivots[0] for _ in range(10_000)]
    assert set(picks) == {5, 9}
    assert abs(picks.count(5) / 10_000 - 0.5) < 0.03


def test_too_few_keys():
    with pytest.raises(ContractViolation):
        pivot_select(Naive(), [1, 2, 3], 8, random.Random(0))


def test_rank_mix_single_pivot():
    keys = list(range(10, 19))
    assert pivot_select(RankMix((1.0,)), keys, 2, random.Random(0)).pivots == (10,)
    with pytest.raises(ContractViolation):
        RankMix((0.5, 0.6))
    with pytest.raises(ContractViolation):
        pivot_select(RankMix((1.0,)), keys, 4, random.Random(0))


def test_bucket_of_boundaries():
    pivots = (10, 20, 30)
    assert bucket_of(5, pivots) == 0
    assert bucket_of(10, pivots) == 1
    assert bucket_of(25, pivots) == 2
    assert bucket_of(30, pivots) == 3
    assert bucket_of(99, pivots) == 3


def test_bucket_of_is_monotone():
    rng = random.Random(4)
    pivots = sorted(rng.sample(range(1000), 15))
    buckets = [bucket_of(key, pivots) for key in range(1000)]
    assert buckets == sorted(buckets)
    assert set(buckets) <= set(range(16))


def test_vectorised_rule_matches_shapes():
    gen = np.random.default_rng(0)
    keys = np.sort(gen.random((50, 3, 32)), axis=-1)
    pivots = select_array(IndexSet16(), keys, 16, gen)
    assert pivots.shape == (50, 3, 15)
    assert np.all(np.diff(pivots, axis=-1) >= 0)
    small = np.sort(gen.random((50, 3, 5)), axis=-1)
    assert select_array(IndexSet16(), small, 16, gen).shape == (50, 3, 15)


def test_naive_fractions_are_uniform():
    result = bucket_size_distribution(Naive(), 8, 8, 1, 0, 200_000, 1)
    assert np.allclose(result.mean_fractions, 1 / 8, atol=0.003)
    assert np.allclose(result.pivot_mean, np.arange(1, 8) / 8, atol=0.003)


def test_shift_half_fractions_match_closed_form():
    result = bucket_size_distribution(ShiftHalf(), 8, 8, 1, 0, 200_000, 2)
    assert result.mean_fractions[0] == pytest.approx(1.5 / 9, abs=0.003)
    assert result.mean_fractions[7] == pytest.approx(1.5 / 9, abs=0.003)
    assert np.allclose(result.mean_fractions[1:7], 1 / 9, atol=0.003)


def test_smallest_of_nine_median_quantile():
    assert beta_median(1, 9) == pytest.approx(0.0741, abs=1e-4)
    result = bucket_size_distribution(RankMix((1.0,)), 2, 9, 1, 0, 200_000, 3)
    assert result.pivot_median[0] == pytest.approx(1 - 2 ** (-1 / 9), abs=0.005)


def test_rank_mix_median_matches_closed_form():
    weights = (0.8, 0.2)
    expected = rank_mix_median(weights, 9)
    assert 0.085 < expected < 0.095
    result = bucket_size_distribution(RankMix(weights), 2, 9, 1, 0, 200_000, 4)
    assert result.pivot_median[0] == pytest.approx(expected, abs=0.005)


def test_corrected_rank_mix_reaches_ten_percent():
    assert rank_mix_median((0.71, 0.29), 9) == pytest.approx(0.100, abs=0.005)
    assert rank_mix_median((0.8, 0.2), 9) > beta_median(1, 9)


def test_order_statistic_cdf_edges():
    assert order_statistic_cdf(1, 9, 0.0) == 0
    assert order_statistic_cdf(1, 9, 1.0) == pytest.approx(1.0)
    assert beta_median(2, 9) == pytest.approx(rank_mix_median((0.0, 1.0), 9))


def test_median_spread_halves_when_nodes_quadruple():
    small = bucket_size_distribution(Naive(), 2, 2, 64, 0, 4_000, 5)
    large = bucket_size_distribution(Naive(), 2, 2, 256, 0, 4_000, 6)
    ratio = large.pivot_std[0] / small.pivot_std[0]
    assert 0.4 <= ratio <= 0.6


@pytest.mark.slow
def test_tree_median_spread_scaling():
    small = bucket_size_distribution(Naive(), 8, 8, 256, 32, 100_000, 7)
    large = bucket_size_distribution(Naive(), 8, 8, 1024, 32, 100_000, 8)
    ratio = large.pivot_std[3] / small.pivot_std[3]
    assert 0.4 <= ratio <= 0.6


@pytest.mark.slow
def test_order_statistics_at_full_trial_count():
    smallest = bucket_size_distribution(RankMix((1.0,)), 2, 9, 1, 0, 1_000_000, 9)
    assert smallest.pivot_median[0] == pytest.approx(0.0741, abs=0.005)
    naive = bucket_size_distribution(Naive(), 10, 10, 1, 0, 1_000_000, 10)
    assert np.allclose(naive.pivot_mean, np.arange(1, 10) / 10, atol=0.01)


def test_calibrated_pivots_centre_after_even_median_tree():
    result = bucket_size_distribution(IndexSet16(), 4, 32, 16, 16, 10_000, 21)
    assert np.allclose(result.pivot_median, [0.25, 0.5, 0.75], atol=0.01)
    assert np.allclose(result.mean_fractions, 0.25, atol=0.01)


def test_oracle_csv_layout():
    result = bucket_size_distribution(Naive(), 4, 4, 8, 2, 100, 0)
    lines = to_csv([result]).splitlines()
    assert lines[0] == 'strategy,b,n,N,fan_in,bucket_index,mean_fraction,pivot_median_quantile'
    assert len(lines) == 5
    assert lines[1].startswith('naive,4,4,8,2,0,')
    assert lines[-1].endswith(',')


def test_oracle_is_seeded():
    first = bucket_size_distribution(Mixed(), 8, 8, 16, 4, 500, 12)
    second = bucket_size_distribution(Mixed(), 8, 8, 16, 4, 500, 12)
    assert to_csv([first]) == to_csv([second])


def test_oracle_rejects_zero_trials():
    with pytest.raises(ContractViolation):
        bucket_size_distribution(Naive(), 8, 8, 1, 0, 0, 0)
