import numpy as np
import pytest
from granular.core.exceptions import ConfigurationError, ContractViolation
from granular.mergemin.program import (
    DEFAULT_INCASTS,
    MergeConfig,
    generate_values,
    incast_sweep,
    local_min,
    run_mergemin,
    sweep_csv,
)
from granular.netsim.costs import ComputeKind
from granular.netsim.settings import NetsimSettings


def test_local_min():
    assert local_min([3, 1, 2]) == 1
    assert local_min([5]) == 5
    with pytest.raises(ContractViolation):
        local_min([])


def test_scanning_8192_values_costs_18us():
    costs = NetsimSettings().build_cost_model()
    assert costs.compute_cost(ComputeKind.SCAN_MIN, 8192) == 18_000_000


def test_config_validation():
    with pytest.raises(ConfigurationError):
        MergeConfig(num_cores=0)
    with pytest.raises(ConfigurationError):
        MergeConfig(num_cores=4, incast=0)


def test_single_core_is_just_a_scan():
    result = run_mergemin(MergeConfig(num_cores=1, values_per_core=128, incast=8))
    costs = NetsimSettings().build_cost_model()
    assert result.completion_time == costs.compute_cost(ComputeKind.SCAN_MIN, 128)
    assert result.trace.total_messages == 0


@pytest.mark.parametrize('incast', [1, 2, 3, 4, 16, 20])
def test_minimum_is_exact(incast):
    for seed in range(3):
        config = MergeConfig(num_cores=20, values_per_core=32, incast=incast, seed=seed)
        result = run_mergemin(config)
        assert result.minimum == int(generate_values(config).min())


def test_chain_sends_one_message_per_core():
    result = run_mergemin(MergeConfig(num_cores=10, values_per_core=4, incast=1))
    assert result.trace.unicast_sends == 9


def test_incast_sweep_has_interior_optimum():
    results = incast_sweep(64, 128, DEFAULT_INCASTS)
    completion = {result.config.incast: result.completion_time for result in results}
    best = min(completion, key=completion.get)
    assert best not in (1, 64)
    assert completion[1] > completion[best]
    assert completion[64] > completion[best]
    assert 525_000 <= completion[best] <= 975_000
    for result in results:
        assert result.minimum == int(generate_values(result.config).min())


def test_full_incast_root_is_receive_bound():
    result = run_mergemin(MergeConfig(num_cores=64, values_per_core=128, incast=64))
    costs = NetsimSettings().build_cost_model()
    assert result.root_busy >= costs.recv_cost(63)


def test_sweep_csv():
    results = incast_sweep(8, 16, (2, 8))
    lines = sweep_csv(results).splitlines()
    assert lines[0] == 'incast,completion_ns,root_busy_ns'
    assert [line.split(',')[0] for line in lines[1:]] == ['2', '8']


def test_supplied_values_are_used():
    values = np.array([[9, 8], [7, 1], [5, 6], [4, 3]])
    result = run_mergemin(MergeConfig(num_cores=4, values_per_core=2, incast=2), values=values)
    assert result.minimum == 1
