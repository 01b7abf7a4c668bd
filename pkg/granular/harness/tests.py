import json
import pytest
from granular.core.exceptions import ConfigurationError, ContractViolation, VerificationFailed
from granular.harness import cli, experiments
from granular.harness.experiments import CSV_HEADER, ExperimentSpec, preset, run_graysort, sweep
from granular.harness.records import gen_records
from granular.mergemin.program import MergeConfig
from granular.netsim.settings import NetsimSettings
from granular.nanosort.dataclasses import VALUE_BYTES, SortConfig
from granular.nanosort.settings import SortSettings
from granular.nanosort.verify import VerificationReport, verify


def test_gen_records_are_distinct_and_deterministic():
    records = gen_records(4096, seed=7)
    assert len(records) == 4096
    assert len(set(records.keys)) == 4096
    assert all(len(value) == VALUE_BYTES for value in records.values)
    again = gen_records(4096, seed=7)
    assert again.keys == records.keys
    assert again.values == records.values
    assert gen_records(4096, seed=8).keys != records.keys


def test_gen_records_small_and_invalid():
    records = gen_records(2, seed=0)
    assert len(set(records.keys)) == 2
    assert all(0 <= key < 1 << 64 for key in records.keys)
    with pytest.raises(ContractViolation):
        gen_records(0, seed=0)


def test_run_graysort_passes_and_balances():
    report = run_graysort(SortConfig.for_nodes(16, 64, 4, seed=3))
    assert report.passed
    assert report.verdict == 'PASS'
    assert report.config.recursion_depth == 2
    assert report.completion_time > 0
    assert report.total_messages > 0
    assert report.skew >= 1.0
    assert report.throughput > 0
    assert 0 < report.idle_share < 1
    assert report.accounting_balanced()
    assert report.stages
    for summary in report.stages.values():
        assert summary.busy_min <= summary.busy_mean <= summary.busy_max


def test_run_graysort_single_node_sorts_locally():
    report = run_graysort(SortConfig(num_keys=64, num_buckets=16, recursion_depth=0))
    assert report.passed
    assert report.total_messages == 0


def test_run_graysort_raises_on_failed_verification(monkeypatch):
    monkeypatch.setattr(experiments, 'verify', lambda *args: VerificationReport(["forced failure"]))
    with pytest.raises(VerificationFailed) as excinfo:
        run_graysort(SortConfig.for_nodes(4, 8, 4))
    assert excinfo.value.report.verdict == 'FAIL'
    assert "forced failure" in str(excinfo.value)


def test_experiment_spec_validation():
    base = SortConfig.for_nodes(16, 8, 4)
    with pytest.raises(ConfigurationError):
        ExperimentSpec(name='bad', base=base, param='incast', values=(2,))
    with pytest.raises(ConfigurationError):
        ExperimentSpec(name='bad', base=MergeConfig(8), param='buckets', values=(4,))
    with pytest.raises(ConfigurationError):
        ExperimentSpec(name='bad', base=base, reps=0)
    spec = ExperimentSpec(name='ok', base=base, param='multicast', values=(False, True), reps=3, base_seed=10)
    assert spec.seed(2) == 12
    assert spec.runs()[:4] == [(False, 0), (False, 1), (False, 2), (True, 0)]


def test_sweep_rows_follow_spec_order():
    spec = ExperimentSpec(
        name='tiny',
        base=SortConfig.for_nodes(16, 8, 4),
        param='multicast',
        values=(False, True),
        reps=2,
        base_seed=5,
    )
    result = sweep(spec)
    assert result.passed
    assert [(row.value, row.rep, row.seed) for row in result.rows] == [
        (False, 0, 5), (False, 1, 6), (True, 0, 5), (True, 1, 6),
    ]
    lines = result.to_csv().splitlines()
    assert lines[0] == ','.join(CSV_HEADER)
    assert lines[1].startswith('tiny,multicast,off,0,5,16,4,128,')
    assert lines[1].endswith(',PASS')
    assert sweep(spec).to_csv() == result.to_csv()


def test_sweep_keeps_failed_rows(monkeypatch):
    monkeypatch.setattr(experiments, 'verify', lambda *args: VerificationReport(["forced failure"]))
    spec = ExperimentSpec(name='failing', base=SortConfig.for_nodes(4, 8, 4), reps=2)
    result = sweep(spec)
    assert not result.passed
    assert len(result.rows) == 2
    assert all(row.verdict == 'FAIL' and row.completion_time is not None for row in result.rows)


def test_sweep_tail_delay_slows_the_sort():
    spec = ExperimentSpec(
        name='tail',
        base=SortConfig.for_nodes(16, 16, 4),
        param='tail_extra_ns',
        values=(0, 2000),
    )
    result = sweep(spec, NetsimSettings({'TAIL_FRACTION': 1.0}))
    completion = result.mean_completion()
    assert completion[2000] > completion[0]
    assert result.passed


def test_sweep_buckets_and_keys_rebuild_config():
    spec = ExperimentSpec(name='buckets', base=SortConfig.for_nodes(16, 8, 4), param='buckets', values=(2, 4, 16))
    result = sweep(spec)
    assert [row.buckets for row in result.rows] == [2, 4, 16]
    assert all(row.nodes == 16 and row.keys == 128 for row in result.rows)
    spec = ExperimentSpec(name='keys', base=SortConfig.for_nodes(16, 8, 4), param='keys_per_node', values=(4, 32))
    assert [row.keys for row in sweep(spec).rows] == [64, 512]


def test_sweep_mergemin_rows():
    spec = ExperimentSpec(name='mergemin', base=MergeConfig(8, 16), param='incast', values=(2, 8))
    result = sweep(spec)
    assert result.passed
    cells = [row.cells() for row in result.rows]
    assert [cell[2] for cell in cells] == ['2', '8']
    assert all(cell[6] == '' and cell[10] == '' for cell in cells)


def test_sweep_process_pool_matches_sequential():
    spec = ExperimentSpec(name='pool', base=SortConfig.for_nodes(16, 8, 4), reps=3)
    assert sweep(spec, workers=2).to_csv() == sweep(spec).to_csv()


def test_presets():
    tail = preset('tail')
    assert tail.base.num_nodes == 256
    assert tail.base.num_buckets == 4
    assert tail.base.num_keys == 131_072
    assert not tail.base.with_values
    assert tail.values == (0, 1000, 2000, 3000, 4000)
    assert tail.reps == 3
    assert preset('graysort').reps == 3
    assert preset('graysort', reps=1).reps == 1
    assert preset('buckets').values == (4, 8, 16)
    assert preset('switch-latency').base.num_buckets == 4
    assert preset('mergemin').base.num_cores == 64
    with pytest.raises(ConfigurationError):
        preset('nonexistent')


def test_presets_follow_resolved_settings():
    spec = preset(
        'tail',
        sort_settings=SortSettings({'MEDIAN_FAN_IN': 4, 'MEDIAN_PLACEMENT': 'spread'}),
        netsim_settings=NetsimSettings({'MULTICAST': False}),
    )
    assert spec.base.median_fan_in == 4
    assert spec.base.median_placement == 'spread'
    assert spec.base.multicast is False
    assert preset('graysort').base.multicast is True


def test_netsim_multicast_off_wins_over_config():
    spec = ExperimentSpec(name='unicast', base=SortConfig.for_nodes(16, 8, 4))
    on = sweep(spec, keep_reports=True).rows[0]
    off = sweep(spec, NetsimSettings({'MULTICAST': False}), keep_reports=True).rows[0]
    assert on.report.trace.multicast_sends > 0
    assert off.report.trace.multicast_sends == 0
    assert off.messages > on.messages


def test_records_convert_to_sort_records():
    records = gen_records(8, seed=2)
    converted = records.to_records(origin_node=3)
    assert [record.key for record in converted] == records.keys
    assert [record.value for record in converted] == records.values
    assert {record.origin_node for record in converted} == {3}
    ordered = sorted(converted, key=lambda record: record.key)
    assert verify([ordered], records.keys, records.value_map()).passed


def test_run_graysort_keys_only():
    report = run_graysort(SortConfig.for_nodes(16, 16, 4, seed=2, with_values=False))
    assert report.passed
    assert 'value_shuffle' not in report.stages


def test_cli_flags_override_config_file(tmp_path):
    config_path = tmp_path / 'config.json'
    config_path.write_text(json.dumps({
        'NETSIM_SETTINGS': {'SWITCH_LATENCY_NS': 500, 'TAIL_FRACTION': 0.5},
        'HARNESS_SETTINGS': {'REPS': 4},
    }))
    args = cli.build_parser().parse_args(['--config', str(config_path), '--switch-latency-ns', '100', '--multicast', 'off'])
    netsim, sort, harness = cli.resolve_settings(args)
    assert netsim.SWITCH_LATENCY_NS == 100
    assert netsim.TAIL_FRACTION == 0.5
    assert netsim.MULTICAST is False
    assert harness.REPS == 4
    assert sort.NUM_BUCKETS == 16


def test_cli_unknown_config_field_is_rejected(tmp_path):
    config_path = tmp_path / 'config.json'
    config_path.write_text(json.dumps({'NETSIM_SETTINGS': {'SWICH_LATENCY_NS': 500}}))
    assert cli.main(['--config', str(config_path), '--verbosity', '0']) == 2


def test_cli_single_run_writes_csv_and_trace(tmp_path):
    out = tmp_path / 'runs.csv'
    trace = tmp_path / 'trace.csv'
    status = cli.main([
        '--nodes', '16', '--buckets', '4', '--keys-per-node', '8', '--reps', '2',
        '--out', str(out), '--trace-out', str(trace), '--verbosity', '0',
    ])
    assert status == 0
    lines = out.read_text().splitlines()
    assert lines[0] == ','.join(CSV_HEADER)
    assert len(lines) == 3
    assert trace.read_text().splitlines()[0] == 'node,stage,busy_ps,idle_ps,sent,received'


def test_cli_preset_uses_flags_and_config_reps(tmp_path, monkeypatch):
    config_path = tmp_path / 'config.json'
    config_path.write_text(json.dumps({'HARNESS_SETTINGS': {'REPS': 2}}))
    captured = {}
    def fake_sweep(spec, netsim, sort, workers=1, keep_reports=False):
        captured['spec'] = spec
        return experiments.SweepResult(spec=spec, rows=[])
    monkeypatch.setattr(cli, 'sweep', fake_sweep)
    status = cli.main([
        '--config', str(config_path), '--preset', 'tail', '--median-fan-in', '4', '--multicast', 'off',
        '--out', str(tmp_path / 'tail.csv'), '--verbosity', '0',
    ])
    assert status == 0
    spec = captured['spec']
    assert spec.reps == 2
    assert spec.base.median_fan_in == 4
    assert spec.base.multicast is False
    assert cli.main(['--preset', 'tail', '--out', str(tmp_path / 'default.csv'), '--verbosity', '0']) == 0
    assert captured['spec'].reps == 3


def test_cli_rejects_uneven_keys(capsys):
    assert cli.main(['--nodes', '16', '--buckets', '4', '--keys', '100', '--verbosity', '0']) == 2
    assert capsys.readouterr().out == ''


def test_cli_exit_status_reflects_verification(monkeypatch, tmp_path):
    monkeypatch.setattr(experiments, 'verify', lambda *args: VerificationReport(["forced failure"]))
    out = tmp_path / 'runs.csv'
    assert cli.main(['--nodes', '4', '--buckets', '4', '--out', str(out), '--verbosity', '0']) == 1
    assert out.read_text().splitlines()[1].endswith(',FAIL')


@pytest.mark.slow
def test_headline_graysort():
    result = sweep(preset('graysort'))
    assert result.passed
    mean = sum(result.mean_completion().values())
    assert 34_000_000 <= mean <= 136_000_000


@pytest.mark.slow
def test_tail_sensitivity():
    completion = sweep(preset('tail')).mean_completion()
    means = [completion[extra] for extra in (0, 1000, 2000, 3000, 4000)]
    assert means == sorted(means)
    assert 1.5 <= completion[4000] / completion[0] <= 2.5


@pytest.mark.slow
def test_multicast_reduces_messages_and_time():
    result = sweep(preset('multicast'))
    rows = {row.value: row for row in result.rows}
    reduction = 1 - rows[True].messages / rows[False].messages
    assert 0.10 <= reduction <= 0.25
    assert rows[False].completion_time >= 1.5 * rows[True].completion_time


@pytest.mark.slow
def test_bucket_count_insensitivity():
    completion = sweep(preset('buckets')).mean_completion()
    assert max(completion.values()) / min(completion.values()) <= 1.3


@pytest.mark.slow
def test_skew_falls_with_keys_per_node():
    skews = sweep(preset('keys', reps=20)).mean_skew()
    assert skews[4] > skews[16] > skews[64]
