import numpy as np
import pytest
from granular.core.exceptions import ContractViolation
from granular.median_tree.plan import median, median_target, plan, root_cdf, tree_median, tree_median_array
from granular.pivot.select import order_statistic_cdf


def test_plan_depths():
    assert plan(1000, 10).depth == 3
    assert plan(100, 10).depth == 2
    assert plan(1, 16).depth == 0
    assert plan(65536, 16).depth == 4
    assert plan(17, 16).depth == 2


def test_plan_single_node_is_identity():
    tree = plan(1, 4)
    assert tree.root == 0
    assert tree_median([42], tree) == 42


def test_plan_blocks_are_contiguous_with_lowest_id_aggregator():
    tree = plan(10, 4)
    assert tree.levels[1] == (0, 4, 8)
    assert tree.levels[2] == (0,)
    assert tree.parent(0, 5) == 4
    assert tree.parent(0, 9) == 8
    assert tree.parent(1, 8) == 0
    assert tree.inputs(0, 8) == (8, 9)
    assert tree.inputs(1, 0) == (0, 4, 8)


def test_every_member_has_exactly_one_parent_per_level():
    tree = plan(300, 7)
    for level in range(tree.depth):
        children = [member for aggregator in tree.levels[level + 1] for member in tree.inputs(level, aggregator)]
        assert sorted(children) == sorted(tree.levels[level])
        for member in tree.levels[level]:
            assert member in tree.inputs(level, tree.parent(level, member))
    assert len(tree.levels[-1]) == 1


def test_plan_rotation_moves_aggregators():
    tree = plan(8, 4, rotation=1)
    assert tree.levels[1] == (1, 5)
    assert tree.root == 5
    assert tree.is_aggregator(1, 5)
    assert not tree.is_aggregator(1, 0)
    assert tree.aggregator_levels(5) == [1, 2]


def test_plan_rejects_bad_arguments():
    with pytest.raises(ContractViolation):
        plan(0, 4)
    with pytest.raises(ContractViolation):
        plan(4, 1)


def test_median_lower_convention():
    assert median(list(range(1, 10))) == 5
    assert median(list(range(1, 11))) == 5
    assert median([7]) == 7
    with pytest.raises(ContractViolation):
        median([])


def test_tree_median_wide_fan_in_is_exact_median():
    rng = np.random.default_rng(3)
    for _ in range(50):
        values = rng.permutation(40).tolist()
        assert tree_median(values, plan(40, 64)) == median(values)


def test_tree_median_all_equal():
    assert tree_median([9] * 37, plan(37, 4)) == 9


def test_tree_median_length_mismatch():
    with pytest.raises(ContractViolation):
        tree_median([1, 2, 3], plan(4, 2))


def test_tree_median_returns_an_input():
    rng = np.random.default_rng(8)
    values = rng.random(123).tolist()
    assert tree_median(values, plan(123, 5)) in values


def test_tree_median_array_matches_scalar():
    rng = np.random.default_rng(1)
    tree = plan(37, 4)
    batch = rng.random((20, 37))
    expected = [tree_median(row.tolist(), tree) for row in batch]
    assert tree_median_array(batch, tree).tolist() == expected


def test_tree_median_of_permutations_stays_central():
    rng = np.random.default_rng(11)
    tree = plan(100, 10)
    trials = rng.permuted(np.tile(np.arange(1, 101), (10_000, 1)), axis=1)
    results = tree_median_array(trials, tree)
    assert results.min() >= 25
    assert results.max() <= 75
    assert 35 <= np.median(results) <= 55


def test_tree_median_spread_shrinks_with_n():
    rng = np.random.default_rng(5)
    small = tree_median_array(rng.random((4000, 64)), plan(64, 4))
    large = tree_median_array(rng.random((4000, 1024)), plan(1024, 4))
    assert large.std() < small.std()


def test_root_cdf_of_single_block_is_an_order_statistic():
    for u in (0.1, 0.4, 0.5, 0.8):
        assert root_cdf(plan(16, 16), u) == pytest.approx(order_statistic_cdf(8, 16, u))
        assert root_cdf(plan(9, 16), u) == pytest.approx(order_statistic_cdf(5, 9, u))
    assert root_cdf(plan(1, 16), 0.3) == 0.3


def test_median_target_for_odd_blocks_is_one_half():
    assert median_target(1, 16) == pytest.approx(0.5, abs=1e-8)
    assert median_target(9, 16) == pytest.approx(0.5, abs=1e-8)
    assert median_target(27, 3) == pytest.approx(0.5, abs=1e-8)


def test_median_target_for_even_blocks_sits_below_one_half():
    target = median_target(16, 16)
    assert 0.45 < target < 0.5
    assert order_statistic_cdf(8, 16, target) == pytest.approx(0.5, abs=1e-7)
    assert root_cdf(plan(256, 16), median_target(256, 16)) == pytest.approx(0.5, abs=1e-7)


def test_median_target_centres_the_tree_output():
    gen = np.random.default_rng(11)
    tree = plan(64, 4)
    target = median_target(64, 4)
    # leaves whose CDF at 0 is `target`: shift uniform noise so P(leaf <= 0) = target
    leaves = gen.random((100_000, 64)) - target
    assert np.median(tree_median_array(leaves, tree)) == pytest.approx(0.0, abs=0.01)
