import random
import numpy as np
import pytest
from granular.core.exceptions import ConfigurationError, ProtocolViolation
from granular.netsim.dataclasses import Message
from granular.netsim.settings import NetsimSettings
from granular.nanosort.dataclasses import SortConfig, SortRecord, Step, phase
from granular.nanosort.messages import KeyAck, KeyTransfer, MedianInput
from granular.nanosort.program import NanoSortProgram, SortRuntime
from granular.nanosort.runner import run_nanosort
from granular.nanosort.settings import SortSettings
from granular.nanosort.shuffle import initial_shuffle, node_partition
from granular.nanosort.verify import skew, verify


def distinct_keys(count: int, seed: int) -> list[int]:
    return random.Random(seed).sample(range(1 << 40), count)


def sort_keys(config: SortConfig, **netsim_fields):
    keys = distinct_keys(config.num_keys, config.seed)
    return keys, run_nanosort(config, keys, netsim_settings=NetsimSettings(netsim_fields))


class RecordingProgram(NanoSortProgram):
    received: list = []
    consumed: list = []
    def on_message(self, ctx, msg):
        RecordingProgram.received.append((ctx.id, msg))
        super().on_message(ctx, msg)
    def _handle(self, ctx, msg):
        RecordingProgram.consumed.append(msg)
        super()._handle(ctx, msg)
    def _serve_value(self, ctx, msg):
        RecordingProgram.consumed.append(msg)
        super()._serve_value(ctx, msg)


def test_initial_shuffle_splits_evenly():
    parts = initial_shuffle(list(range(64)), 16, 3)
    assert [len(part) for part in parts] == [4] * 16
    assert sorted(key for part in parts for key in part) == list(range(64))


def test_initial_shuffle_single_node():
    parts = initial_shuffle([5, 1, 3], 1, 0)
    assert len(parts) == 1
    assert sorted(parts[0]) == [1, 3, 5]


def test_initial_shuffle_rejects_uneven_split():
    with pytest.raises(ConfigurationError):
        initial_shuffle(list(range(10)), 4, 0)


def test_headline_shuffle_shape():
    parts = initial_shuffle(np.arange(1 << 20), 1 << 16, 0)
    assert len(parts) == 65_536
    assert {len(part) for part in parts} == {16}


def test_node_partition():
    assert node_partition(range(0, 16), 4) == [range(0, 4), range(4, 8), range(8, 12), range(12, 16)]
    assert node_partition(range(0, 4), 4) == [range(i, i + 1) for i in range(4)]
    parts = node_partition(range(4096, 8192), 16)
    assert len(parts) == 16
    assert all(len(part) == 256 for part in parts)
    assert parts[0].start == 4096 and parts[-1].stop == 8192


def test_config_requires_power_of_buckets():
    assert SortConfig.for_nodes(256, 4).recursion_depth == 2
    assert SortConfig.for_nodes(1, 4).recursion_depth == 0
    with pytest.raises(ConfigurationError):
        SortConfig.for_nodes(256, 4, num_buckets=8)
    with pytest.raises(ConfigurationError):
        SortConfig(num_keys=17, num_buckets=4, recursion_depth=2)
    with pytest.raises(ConfigurationError):
        SortConfig(num_keys=16, median_placement='random')


def test_phase_order_is_level_major():
    assert phase(0, Step.DONE) < phase(1, Step.SHUFFLE)
    assert phase(1, Step.MEDIAN, 1) < phase(1, Step.MEDIAN, 2) < phase(1, Step.BROADCAST)
    assert phase(2, Step.ROUTE, 5) == phase(2, Step.ROUTE)


def test_single_node_sorts_locally():
    config = SortConfig(num_keys=16, num_buckets=16, recursion_depth=0)
    keys, result = sort_keys(config)
    assert result.final_keys == [sorted(keys)]
    assert result.total_messages == 0
    assert result.completion_time == NetsimSettings().build_cost_model().compute_cost('sort', 16)


def test_sixteen_nodes_two_levels():
    config = SortConfig.for_nodes(16, 8, num_buckets=4, seed=42)
    keys, result = sort_keys(config)
    assert [key for node in result.final_keys for key in node] == sorted(keys)
    assert verify(result.records, keys).passed


def test_values_follow_their_keys():
    config = SortConfig.for_nodes(16, 8, num_buckets=4, seed=4)
    keys = distinct_keys(config.num_keys, 4)
    values = [key.to_bytes(8, 'little') * 12 for key in keys]
    result = run_nanosort(config, keys, values)
    report = verify(result.records, keys, dict(zip(keys, values)))
    assert report.passed, report.failures
    assert all(len(record.value) == 96 for node in result.records for record in node)


@pytest.mark.parametrize('num_nodes,b', [(1, 4), (4, 4), (16, 4), (64, 4), (16, 16), (256, 16)])
def test_sorted_output_matches_sequential_sort(num_nodes, b):
    for seed in range(3):
        config = SortConfig.for_nodes(num_nodes, 4 + seed * 6, num_buckets=b, seed=seed)
        keys, result = sort_keys(config)
        assert [key for node in result.final_keys for key in node] == sorted(keys)
        assert verify(result.records, keys).passed


def test_multicast_off_sends_more_messages():
    config_on = SortConfig.for_nodes(64, 8, num_buckets=4, seed=1)
    config_off = SortConfig.for_nodes(64, 8, num_buckets=4, seed=1, multicast=False)
    keys, on = sort_keys(config_on)
    _, off = sort_keys(config_off)
    assert off.trace.multicast_sends == 0
    assert on.trace.multicast_sends > 0
    assert off.total_messages > on.total_messages
    assert verify(off.records, keys).passed


def test_spread_median_placement_sorts():
    config = SortConfig.for_nodes(64, 8, num_buckets=4, seed=9, median_fan_in=2, median_placement='spread')
    keys, result = sort_keys(config)
    assert verify(result.records, keys).passed


def test_sparse_keys_leave_empty_nodes():
    config = SortConfig.for_nodes(64, 1, num_buckets=4, seed=2)
    keys, result = sort_keys(config)
    assert verify(result.records, keys).passed
    assert 0 in result.counts


def test_no_keys_at_all():
    config = SortConfig(num_keys=0, num_buckets=4, recursion_depth=2)
    _, result = sort_keys(config)
    assert result.counts == [0] * 16


def test_identical_seeds_are_deterministic():
    config = SortConfig.for_nodes(64, 8, num_buckets=4, seed=5)
    _, first = sort_keys(config, TAIL_FRACTION=0.1, TAIL_EXTRA_NS=500)
    _, second = sort_keys(config, TAIL_FRACTION=0.1, TAIL_EXTRA_NS=500)
    assert first.trace.to_csv() == second.trace.to_csv()
    assert first.records == second.records


def test_monotone_key_transform_changes_nothing_but_keys():
    config = SortConfig.for_nodes(64, 8, num_buckets=4, seed=6)
    keys = distinct_keys(config.num_keys, 6)
    plain = run_nanosort(config, keys)
    scaled = run_nanosort(config, [3 * key + 11 for key in keys])
    assert plain.trace.to_csv() == scaled.trace.to_csv()
    assert plain.total_messages == scaled.total_messages
    origins = [[record.origin_node for record in node] for node in plain.records]
    assert origins == [[record.origin_node for record in node] for node in scaled.records]
    assert plain.final_keys == [[(key - 11) // 3 for key in node] for node in scaled.final_keys]


def test_keys_are_conserved():
    config = SortConfig.for_nodes(256, 4, num_buckets=4, seed=8)
    _, result = sort_keys(config)
    assert sum(result.counts) == config.num_keys


def test_busy_plus_idle_matches_node_completion():
    config = SortConfig.for_nodes(64, 8, num_buckets=4, seed=3)
    _, result = sort_keys(config)
    for stats in result.trace.nodes:
        assert stats.total_busy + stats.total_idle == stats.completion
    assert 'route' in result.trace.stage_names()


def test_no_cross_bucket_traffic_after_routing():
    RecordingProgram.received = []
    config = SortConfig.for_nodes(64, 8, num_buckets=4, seed=10)
    keys = distinct_keys(config.num_keys, 10)
    run_nanosort(config, keys, program_class=RecordingProgram)
    deeper = [(receiver, msg) for receiver, msg in RecordingProgram.received if msg.phase.level > 0]
    assert deeper
    for receiver, msg in deeper:
        if msg.phase.step == Step.VALUE_SHUFFLE:
            continue
        group = 64 // 4 ** msg.phase.level
        assert msg.src // group == receiver // group


def test_each_message_consumed_once():
    RecordingProgram.consumed = []
    config = SortConfig.for_nodes(16, 16, num_buckets=4, seed=12)
    keys = distinct_keys(config.num_keys, 12)
    result = run_nanosort(config, keys, program_class=RecordingProgram)
    assert len(RecordingProgram.consumed) == result.trace.deliveries
    assert len({id(msg) for msg in RecordingProgram.consumed}) == result.trace.unicast_sends + result.trace.multicast_sends


def test_earlier_phase_message_is_a_protocol_violation():
    config = SortConfig.for_nodes(16, 4, num_buckets=4)
    runtime = SortRuntime(config, SortSettings())
    program = NanoSortProgram(3, runtime, [], {})
    program.state.level = 1
    program.state.step = Step.ROUTE
    stale = Message(1, 3, phase(0, Step.MEDIAN, 1), MedianInput(0, None), 16, 30)
    with pytest.raises(ProtocolViolation):
        program.on_message(None, stale)


def test_future_phase_messages_wait_in_reorder_buffer():
    config = SortConfig.for_nodes(16, 4, num_buckets=4)
    runtime = SortRuntime(config, SortSettings())
    program = NanoSortProgram(3, runtime, [], {})
    early = Message(1, 3, phase(0, Step.ROUTE), KeyAck(), 16, 30)
    program.on_message(None, early)
    assert program.state.reorder == {phase(0, Step.ROUTE): [early]}


def test_candidate_sort_must_be_known():
    config = SortConfig.for_nodes(16, 4, num_buckets=4)
    with pytest.raises(ConfigurationError):
        SortRuntime(config, SortSettings({"CANDIDATE_SORT": "partial"}))


def test_full_candidate_sort_also_sorts():
    config = SortConfig.for_nodes(64, 8, num_buckets=4, seed=13)
    keys = distinct_keys(config.num_keys, 13)
    result = run_nanosort(config, keys, sort_settings=SortSettings({"CANDIDATE_SORT": "full"}))
    assert verify(result.records, keys).passed


def test_key_transfers_are_batched_per_destination():
    RecordingProgram.received = []
    config = SortConfig.for_nodes(16, 32, num_buckets=4, seed=14)
    keys = distinct_keys(config.num_keys, 14)
    result = run_nanosort(config, keys, program_class=RecordingProgram)
    transfers = [msg for _, msg in RecordingProgram.received if isinstance(msg.payload, KeyTransfer)]
    routes = [(msg.src, msg.dst, msg.phase) for msg in transfers]
    assert len(routes) == len(set(routes))
    assert len(transfers) < config.num_keys
    assert any(len(msg.payload.items) > 1 for msg in transfers)
    assert all(msg.payload_bytes == 24 * len(msg.payload.items) for msg in transfers)
    assert verify(result.records, keys).passed


def test_keys_only_sort_skips_value_shuffle():
    config = SortConfig.for_nodes(64, 8, num_buckets=4, seed=15, with_values=False)
    keys, result = sort_keys(config)
    assert verify(result.records, keys).passed
    assert all(record.value is None for node in result.records for record in node)
    assert "value_shuffle" not in result.trace.stage_names()
    with_values = run_nanosort(SortConfig.for_nodes(64, 8, num_buckets=4, seed=15), keys)
    assert result.total_messages < with_values.total_messages
    assert result.final_keys == with_values.final_keys


def test_network_tail_does_not_change_where_keys_land():
    config = SortConfig.for_nodes(64, 8, num_buckets=4, seed=1)
    _, fast = sort_keys(config, TAIL_FRACTION=0.3, TAIL_EXTRA_NS=0)
    _, slow = sort_keys(config, TAIL_FRACTION=0.3, TAIL_EXTRA_NS=2000)
    assert slow.completion_time > fast.completion_time
    assert fast.counts == slow.counts
    assert fast.final_keys == slow.final_keys


def test_verify_detects_misplaced_keys():
    records = [
        [SortRecord(1, None, 0), SortRecord(5, None, 0)],
        [SortRecord(3, None, 1), SortRecord(7, None, 1)],
    ]
    report = verify(records, [1, 3, 5, 7])
    assert not report.passed
    assert any('above the minimum' in failure for failure in report.failures)


def test_verify_detects_missing_value():
    records = [[SortRecord(1, b'a', 0), None], [SortRecord(7, b'c', 1)]]
    report = verify(records, [1, 3, 7], {1: b'a', 3: b'b', 7: b'c'})
    assert report.verdict == 'FAIL'
    assert any('never arrived' in failure for failure in report.failures)


def test_verify_detects_wrong_value():
    records = [[SortRecord(1, b'x', 0)]]
    assert not verify(records, [1], {1: b'a'}).passed


def test_verify_detects_lost_key():
    records = [[SortRecord(1, None, 0)]]
    assert not verify(records, [1, 2]).passed


def test_skew():
    assert skew([4, 4, 4, 4]) == 1.0
    assert skew([2, 0]) == 2.0
    assert skew([3, 1], num_keys=4) == 1.5


@pytest.mark.slow
def test_bucket_counts_are_even_on_average():
    b = 4
    totals = np.zeros(b)
    seeds = 300
    for seed in range(seeds):
        config = SortConfig.for_nodes(16, 32, num_buckets=b, seed=seed)
        _, result = sort_keys(config)
        counts = np.array(result.counts).reshape(b, -1).sum(axis=1)
        totals += counts
    mean = totals / seeds
    assert np.all(np.abs(mean - config.num_keys / b) <= 0.05 * config.num_keys / b)


@pytest.mark.slow
def test_random_configurations_sort_correctly():
    rng = random.Random(2024)
    shapes = [(1, 4), (4, 4), (16, 4), (64, 4), (256, 4), (1, 16), (16, 16), (256, 16)]
    for trial in range(200):
        num_nodes, b = rng.choice(shapes)
        config = SortConfig.for_nodes(num_nodes, rng.randint(1, 8), num_buckets=b, seed=trial)
        keys, result = sort_keys(config)
        assert [key for node in result.final_keys for key in node] == sorted(keys), config
        assert verify(result.records, keys).passed, config
