import pytest
from granular.core.exceptions import ConfigurationError, ContractViolation, MulticastDisabled, NonQuiescenceError
from granular.netsim.context import NodeContext
from granular.netsim.costs import ComputeKind, CostModel
from granular.netsim.dataclasses import Message, PhaseTag
from granular.netsim.engine import Simulator
from granular.netsim.programs.base import NodeProgram
from granular.netsim.settings import NetsimSettings
from granular.netsim.topology import LatencyModel, Topology, path_delay
PING = PhaseTag(0, 0)


class ScriptedProgram(NodeProgram):
    def __init__(self, on_start=None, expect: int = 0):
        self.on_start = on_start
        self.expect = expect
        self.inbox: list[Message] = []
    def start(self, ctx: NodeContext) -> None:
        if self.on_start is not None:
            self.on_start(ctx)
    def on_message(self, ctx: NodeContext, msg: Message) -> None:
        self.inbox.append(msg)
    @property
    def terminal(self) -> bool:
        return len(self.inbox) >= self.expect


def make_sim(num_hosts: int, seed: int = 0, **overrides) -> Simulator:
    fields = {"TAIL_FRACTION": 0.0}
    fields.update(overrides)
    return Simulator.from_settings(NetsimSettings(fields), num_hosts, seed)


def gossip_programs(num_nodes: int) -> list[ScriptedProgram]:
    def sender(node_id):
        def on_start(ctx):
            for hop in (1, 3, 65):
                ctx.send((node_id + hop) % num_nodes, PING, node_id, 16)
        return on_start
    return [ScriptedProgram(sender(i), expect=3) for i in range(num_nodes)]


def test_path_delay_same_leaf():
    topology = Topology(num_hosts=128, num_leaves=2)
    latency = LatencyModel(tail_fraction=0.0)
    assert path_delay(0, 5, 16, topology, latency) == 2 * 43_000 + 263_000 + 640


def test_path_delay_cross_leaf():
    topology = Topology(num_hosts=128, num_leaves=2)
    latency = LatencyModel(tail_fraction=0.0)
    assert path_delay(0, 64, 16, topology, latency) == 4 * 43_000 + 3 * 263_000 + 640


def test_path_delay_rejects_unknown_host_and_loopback():
    topology = Topology(num_hosts=4, num_leaves=1)
    latency = LatencyModel()
    with pytest.raises(ConfigurationError):
        path_delay(0, 4, 16, topology, latency)
    with pytest.raises(ConfigurationError):
        path_delay(2, 2, 16, topology, latency)


def test_topology_rejects_overfull_leaves():
    with pytest.raises(ConfigurationError):
        Topology(num_hosts=65, num_leaves=1)


def test_tail_mean_added_latency():
    latency = LatencyModel(tail_fraction=0.01, tail_extra=4_000_000, rng_seed=7)
    draws = [latency.draw() for _ in range(100_000)]
    mean = sum(draws) / len(draws)
    assert 36_000 <= mean <= 44_000


def test_tail_draws_are_seeded():
    first = LatencyModel(tail_fraction=0.3, tail_extra=10, rng_seed=11)
    second = LatencyModel(tail_fraction=0.3, tail_extra=10, rng_seed=11)
    assert [first.draw() for _ in range(500)] == [second.draw() for _ in range(500)]


def test_latency_model_validates_fraction():
    with pytest.raises(ConfigurationError):
        LatencyModel(tail_fraction=1.5)


def test_recv_cost_calibration_points():
    costs = NetsimSettings().build_cost_model()
    assert costs.recv_cost(1, 16) == 8_000
    assert costs.recv_cost(64, 16) == 400_000
    assert 195_000 < costs.recv_cost(32, 16) < 210_000


def test_recv_cost_extrapolates_last_slope():
    costs = NetsimSettings().build_cost_model()
    slope = (400_000 - 8_000) / 63
    assert costs.recv_cost(127, 16) == pytest.approx(400_000 + 63 * slope, abs=1)


def test_recv_cost_payload_surcharge():
    costs = NetsimSettings().build_cost_model()
    assert costs.recv_cost(1, 104) == 8_000 + 3_438
    assert costs.recv_cost(1, 8) == 8_000


def test_cost_cache_keeps_receive_and_compute_apart():
    costs = NetsimSettings().build_cost_model()
    receive = costs.recv_cost(16, 104)
    sort = costs.compute_cost(ComputeKind.SORT, 16)
    assert costs.recv_cost(16, 104) == receive
    assert costs.compute_cost(ComputeKind.SORT, 16) == sort
    assert ('recv', 16, 104) in costs._cache
    assert (ComputeKind.SORT.value, 16) in costs._cache


def test_recv_cost_requires_a_message():
    costs = NetsimSettings().build_cost_model()
    with pytest.raises(ContractViolation):
        costs.recv_cost(0)


def test_empty_table_is_a_configuration_error():
    with pytest.raises(ConfigurationError):
        CostModel(recv_table=[], send_per_msg=5_000, sort_table=[(2, 10)], scan_table=[(1, 1)])


def test_non_increasing_table_is_rejected():
    with pytest.raises(ConfigurationError):
        CostModel(recv_table=[(1, 8), (1, 9)], send_per_msg=5_000, sort_table=[(2, 10)], scan_table=[(1, 1)])


def test_compute_cost_calibration_points():
    costs = NetsimSettings().build_cost_model()
    assert costs.compute_cost(ComputeKind.SORT, 1024) == 30_000_000
    assert costs.compute_cost(ComputeKind.SORT, 0) == 0
    assert costs.compute_cost(ComputeKind.SCAN_MIN, 8192) == 18_000_000
    assert costs.compute_cost('sort', 40) == 900_000
    assert costs.compute_cost(ComputeKind.SORT, 40) < 1_000_000


def test_merge_costs_like_scan_min():
    costs = NetsimSettings().build_cost_model()
    for n in (1, 7, 64, 3000):
        assert costs.compute_cost(ComputeKind.MERGE, n) == costs.compute_cost(ComputeKind.SCAN_MIN, n)


def test_compute_cost_unknown_kind():
    costs = NetsimSettings().build_cost_model()
    with pytest.raises(ConfigurationError):
        costs.compute_cost('bogosort', 3)


def test_cost_tables_are_monotone():
    costs = NetsimSettings().build_cost_model()
    for kind in ComputeKind:
        previous = 0
        for n in range(0, 12_000, 37):
            cost = costs.compute_cost(kind, n)
            assert cost >= previous
            previous = cost
    previous = 0
    for count in range(1, 200):
        cost = costs.recv_cost(count, 16)
        assert cost >= previous
        previous = cost


def test_settings_override_and_unknown_field():
    settings = NetsimSettings({"SWITCH_LATENCY_NS": 100})
    assert settings.build_topology(4).switch_latency == 100_000
    with pytest.raises(ConfigurationError):
        NetsimSettings({"SWITCH_LATENCY": 100})


def test_run_zero_nodes():
    trace = make_sim(0).run([])
    assert trace.completion_time == 0
    assert trace.total_messages == 0


def test_ping_completion():
    sim = make_sim(2)
    programs = [
        ScriptedProgram(lambda ctx: ctx.send(1, PING, 'ping', 16)),
        ScriptedProgram(expect=1),
    ]
    trace = sim.run(programs)
    ser = sim.topology.serialization(16 + 30)
    assert trace.completion_time == 5_000 + 2 * 43_000 + 263_000 + ser + 8_000
    assert trace.unicast_sends == 1
    assert programs[1].inbox[0].payload == 'ping'


def test_second_run_on_one_simulator_is_rejected():
    sim = make_sim(2)
    sim.run([ScriptedProgram(lambda ctx: ctx.send(1, PING, 'ping', 16)), ScriptedProgram(expect=1)])
    with pytest.raises(ContractViolation):
        sim.run([ScriptedProgram(), ScriptedProgram()])
    assert sim.trace.unicast_sends == 1


def test_send_to_self_is_rejected():
    sim = make_sim(2)
    with pytest.raises(ConfigurationError):
        sim.run([ScriptedProgram(lambda ctx: ctx.send(0, PING, None, 16)), ScriptedProgram()])


def test_send_out_of_range_is_rejected():
    sim = make_sim(2)
    with pytest.raises(ConfigurationError):
        sim.run([ScriptedProgram(lambda ctx: ctx.send(9, PING, None, 16)), ScriptedProgram()])


def test_queued_arrivals_are_received_in_batches():
    sim = make_sim(9, RECV_BATCHING=True)
    programs = [ScriptedProgram(expect=8)]
    for node_id in range(1, 9):
        programs.append(ScriptedProgram(lambda ctx: ctx.send(0, PING, ctx.id, 16)))
    trace = sim.run(programs)
    arrival = 5_000 + 349_000 + 1_840
    receiver = trace.nodes[0]
    assert receiver.received == 8
    assert receiver.total_busy == 8_000 + 26_667 + 20_445
    assert receiver.completion == arrival + receiver.total_busy
    assert [msg.payload for msg in programs[0].inbox] == list(range(1, 9))


def test_multicast_counts_sender_once():
    sim = make_sim(64)
    programs = [ScriptedProgram(lambda ctx: ctx.broadcast(range(64), PING, 'pivots', 16))]
    programs += [ScriptedProgram(expect=1) for _ in range(63)]
    trace = sim.run(programs)
    assert trace.multicast_sends == 1
    assert trace.unicast_sends == 0
    assert trace.deliveries == 63
    assert trace.nodes[0].sent == 1


def test_multicast_disabled_falls_back_to_unicast():
    sim = make_sim(64, MULTICAST=False)
    programs = [ScriptedProgram(lambda ctx: ctx.broadcast(range(64), PING, 'pivots', 16))]
    programs += [ScriptedProgram(expect=1) for _ in range(63)]
    trace = sim.run(programs)
    assert trace.multicast_sends == 0
    assert trace.unicast_sends == 63
    assert trace.nodes[0].sent == 63


def test_multicast_refused_when_disabled():
    sim = make_sim(4, MULTICAST=False)
    msg = Message(0, -1, PING, None, 16, 30)
    with pytest.raises(MulticastDisabled):
        sim.multicast(msg, [1, 2], 0)


def test_single_member_broadcast_is_unicast():
    sim = make_sim(2)
    programs = [ScriptedProgram(lambda ctx: ctx.broadcast([0, 1], PING, None, 16)), ScriptedProgram(expect=1)]
    trace = sim.run(programs)
    assert trace.unicast_sends == 1
    assert trace.multicast_sends == 0


def test_identical_seeds_give_identical_traces():
    first = make_sim(128, seed=3, TAIL_FRACTION=0.5, TAIL_EXTRA_NS=700).run(gossip_programs(128))
    second = make_sim(128, seed=3, TAIL_FRACTION=0.5, TAIL_EXTRA_NS=700).run(gossip_programs(128))
    assert first.to_csv() == second.to_csv()
    assert first.to_dict() == second.to_dict()


def test_conservation_of_messages():
    sim = make_sim(128)
    programs = gossip_programs(128)
    programs[0].on_start = lambda ctx: ctx.broadcast(range(128), PING, None, 16)
    for program in programs:
        program.expect = 0
    trace = sim.run(programs)
    assert trace.deliveries == trace.unicast_sends + trace.multicast_deliveries
    assert sum(stats.received for stats in trace.nodes) == trace.deliveries


def test_busy_plus_idle_equals_node_completion():
    trace = make_sim(128, TAIL_FRACTION=0.2, TAIL_EXTRA_NS=1000).run(gossip_programs(128))
    for stats in trace.nodes:
        assert stats.total_busy + stats.total_idle == stats.completion


def test_delivery_delay_lower_bound():
    sim = make_sim(2)
    programs = [ScriptedProgram(lambda ctx: ctx.send(1, PING, None, 0)), ScriptedProgram(expect=1)]
    trace = sim.run(programs)
    assert trace.nodes[1].total_idle >= 5_000 + 2 * 43_000 + 263_000


def test_tail_fraction_statistics():
    trace = make_sim(128, seed=5, TAIL_FRACTION=0.1, TAIL_EXTRA_NS=100).run(gossip_programs(128))
    expected = 0.1 * trace.deliveries
    sigma = (trace.deliveries * 0.1 * 0.9) ** 0.5
    assert abs(trace.tail_deliveries - expected) <= 3 * sigma


def test_non_terminal_programs_raise_with_phase_dump():
    sim = make_sim(2)
    with pytest.raises(NonQuiescenceError) as excinfo:
        sim.run([ScriptedProgram(), ScriptedProgram(expect=1)])
    assert excinfo.value.phase_dump == {1: 'running'}


def test_event_cap_raises():
    sim = make_sim(128, MAX_EVENTS=10)
    with pytest.raises(NonQuiescenceError):
        sim.run(gossip_programs(128))


def test_stage_labels_split_busy_time():
    def on_start(ctx):
        ctx.stage = 'sort'
        ctx.compute(ComputeKind.SORT, 40)
        ctx.stage = 'scan'
        ctx.compute(ComputeKind.SCAN_MIN, 1)
    trace = make_sim(1).run([ScriptedProgram(on_start)])
    assert trace.nodes[0].busy == {'sort': 900_000, 'scan': 625}
    assert trace.completion_time == 900_625


def test_trace_csv_header_and_rows():
    trace = make_sim(128).run(gossip_programs(128))
    lines = trace.to_csv().splitlines()
    assert lines[0] == 'node,stage,busy_ps,idle_ps,sent,received'
    assert lines[1].startswith('0,start,')


def test_queued_arrivals_are_received_one_at_a_time():
    sim = make_sim(9)
    programs = [ScriptedProgram(expect=8)]
    for node_id in range(1, 9):
        programs.append(ScriptedProgram(lambda ctx: ctx.send(0, PING, ctx.id, 16)))
    trace = sim.run(programs)
    arrival = 5_000 + 349_000 + 1_840
    receiver = trace.nodes[0]
    assert receiver.total_busy == 8 * 8_000
    assert receiver.completion == arrival + 8 * 8_000
    assert receiver.total_busy >= sim.costs.recv_cost(8)
