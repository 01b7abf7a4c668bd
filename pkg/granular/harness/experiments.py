import csv
import dataclasses
import io
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple, Union
from granular.core.exceptions import (
    ConfigurationError,
    NonQuiescenceError,
    ProtocolViolation,
    VerificationFailed,
)
from granular.core.utils.time_utils import to_ns, to_us
from granular.harness.records import gen_records
from granular.harness.report import RunReport
from granular.mergemin.program import DEFAULT_INCASTS, MergeConfig, generate_values, run_mergemin
from granular.netsim.settings import NetsimSettings
from granular.nanosort.dataclasses import SortConfig
from granular.nanosort.runner import run_nanosort
from granular.nanosort.settings import SortSettings
from granular.nanosort.verify import verify
logger = logging.getLogger(__name__)
CSV_HEADER = [
    'experiment', 'param', 'value', 'rep', 'seed', 'nodes', 'buckets', 'keys',
    'completion_ns', 'messages', 'skew', 'verify',
]
NETSIM_PARAMS = {
    'tail_extra_ns': 'TAIL_EXTRA_NS',
    'tail_fraction': 'TAIL_FRACTION',
    'switch_latency_ns': 'SWITCH_LATENCY_NS',
    'link_latency_ns': 'LINK_LATENCY_NS',
}
SORT_PARAMS = ('multicast', 'buckets', 'keys_per_node', 'median_fan_in')
MERGE_PARAMS = ('incast',)
PRESET_NAMES = ('graysort', 'tail', 'multicast', 'buckets', 'keys', 'switch-latency', 'mergemin', 'pivots')
BaseConfig = Union[SortConfig, MergeConfig]


@dataclass(frozen=True)
class ExperimentSpec:
    """A base configuration swept over one parameter.

    Repetition k of every value runs with seed base_seed + k.
    """
    name: str
    base: BaseConfig
    param: Optional[str] = None
    values: Tuple[Any, ...] = (None,)
    reps: int = 1
    base_seed: int = 0
    output: Optional[str] = None
    def __post_init__(self):
        if self.reps < 1:
            raise ConfigurationError(f"reps must be at least 1, got {self.reps}")
        if not self.values:
            raise ConfigurationError(f"Experiment '{self.name}' sweeps an empty value list")
        if isinstance(self.base, MergeConfig):
            allowed = MERGE_PARAMS
        else:
            allowed = SORT_PARAMS + tuple(NETSIM_PARAMS)
        if self.param is not None and self.param not in allowed:
            raise ConfigurationError(
                f"Experiment '{self.name}' cannot sweep '{self.param}'; expected one of {list(allowed)}"
            )
    def seed(self, rep: int) -> int:
        return self.base_seed + rep
    def runs(self) -> List[Tuple[Any, int]]:
        return [(value, rep) for value in self.values for rep in range(self.reps)]


@dataclass
class SweepRow:
    experiment: str
    param: str
    value: Any
    rep: int
    seed: int
    nodes: int
    buckets: Optional[int]
    keys: int
    completion_time: Optional[int]
    messages: Optional[int]
    skew: Optional[float]
    verdict: str
    error: str = ''
    report: Optional[RunReport] = field(default=None, repr=False)
    @property
    def passed(self) -> bool:
        return self.verdict == 'PASS'
    def cells(self) -> List[str]:
        return [
            self.experiment,
            self.param,
            format_value(self.value),
            str(self.rep),
            str(self.seed),
            str(self.nodes),
            '' if self.buckets is None else str(self.buckets),
            str(self.keys),
            '' if self.completion_time is None else f"{to_ns(self.completion_time):.3f}",
            '' if self.messages is None else str(self.messages),
            '' if self.skew is None else f"{self.skew:.4f}",
            self.verdict,
        ]


@dataclass
class SweepResult:
    spec: ExperimentSpec
    rows: List[SweepRow]
    @property
    def passed(self) -> bool:
        return all(row.passed for row in self.rows)
    def mean_completion(self) -> Dict[Any, float]:
        grouped: Dict[Any, List[int]] = {}
        for row in self.rows:
            if row.completion_time is not None:
                grouped.setdefault(row.value, []).append(row.completion_time)
        return {value: sum(times) / len(times) for value, times in grouped.items()}
    def mean_skew(self) -> Dict[Any, float]:
        grouped: Dict[Any, List[float]] = {}
        for row in self.rows:
            if row.skew is not None:
                grouped.setdefault(row.value, []).append(row.skew)
        return {value: sum(skews) / len(skews) for value, skews in grouped.items()}
    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator='\n')
        writer.writerow(CSV_HEADER)
        for row in self.rows:
            writer.writerow(row.cells())
        return buffer.getvalue()
    def write_csv(self, path: str) -> None:
        with open(path, 'w', encoding='utf-8', newline='') as f:
            f.write(self.to_csv())


def format_value(value: Any) -> str:
    if value is None:
        return ''
    if isinstance(value, bool):
        return 'on' if value else 'off'
    return str(value)


def run_graysort(
    config: SortConfig,
    netsim_settings: Optional[NetsimSettings] = None,
    sort_settings: Optional[SortSettings] = None,
) -> RunReport:
    records = gen_records(config.num_keys, config.seed) if config.num_keys else None
    keys = records.keys if records is not None else []
    with_values = records is not None and config.with_values
    values = records.values if with_values else None
    result = run_nanosort(config, keys, values, netsim_settings, sort_settings)
    verification = verify(result.records, keys, records.value_map() if with_values else None)
    report = RunReport.from_result(result, verification)
    logger.info(
        f"GraySort of {config.num_keys} records on {config.num_nodes} nodes: "
        f"{to_us(report.completion_time):.3f} us, {report.total_messages} messages, "
        f"skew {report.skew:.3f}, {report.verdict}"
    )
    if not report.passed:
        raise VerificationFailed(report)
    return report


def configure_sort(base: SortConfig, param: Optional[str], value: Any, seed: int) -> SortConfig:
    if param == 'multicast':
        return dataclasses.replace(base, multicast=bool(value), seed=seed)
    if param == 'median_fan_in':
        return dataclasses.replace(base, median_fan_in=int(value), seed=seed)
    if param in ('buckets', 'keys_per_node'):
        return SortConfig.for_nodes(
            base.num_nodes,
            int(value) if param == 'keys_per_node' else base.keys_per_node,
            int(value) if param == 'buckets' else base.num_buckets,
            median_fan_in=base.median_fan_in,
            multicast=base.multicast,
            seed=seed,
            median_placement=base.median_placement,
            with_values=base.with_values,
        )
    return dataclasses.replace(base, seed=seed)


def configure_netsim(base: Mapping[str, Any], param: Optional[str], value: Any) -> NetsimSettings:
    overrides = dict(base)
    if param in NETSIM_PARAMS:
        overrides[NETSIM_PARAMS[param]] = value
    return NetsimSettings(overrides)


def _sort_row(spec: ExperimentSpec, value: Any, rep: int, netsim: Mapping[str, Any], sort: Mapping[str, Any], keep_report: bool) -> SweepRow:
    seed = spec.seed(rep)
    config = configure_sort(spec.base, spec.param, value, seed)
    row = SweepRow(
        experiment=spec.name,
        param=spec.param or '',
        value=value,
        rep=rep,
        seed=seed,
        nodes=config.num_nodes,
        buckets=config.num_buckets,
        keys=config.num_keys,
        completion_time=None,
        messages=None,
        skew=None,
        verdict='FAIL',
    )
    try:
        report = run_graysort(config, configure_netsim(netsim, spec.param, value), SortSettings(dict(sort)))
    except VerificationFailed as e:
        report = e.report
        row.error = str(e)
    except (ProtocolViolation, NonQuiescenceError) as e:
        logger.error(f"{spec.name} {row.param}={format_value(value)} rep {rep} did not finish: {e}")
        row.error = str(e)
        return row
    row.completion_time = report.completion_time
    row.messages = report.total_messages
    row.skew = report.skew
    row.verdict = report.verdict
    if keep_report:
        row.report = report
    return row


def _merge_row(spec: ExperimentSpec, value: Any, rep: int, netsim: Mapping[str, Any]) -> SweepRow:
    seed = spec.seed(rep)
    config = spec.base
    if spec.param == 'incast':
        config = dataclasses.replace(config, incast=int(value))
    config = dataclasses.replace(config, seed=seed)
    result = run_mergemin(config, NetsimSettings(dict(netsim)))
    expected = int(generate_values(config).min())
    if result.minimum != expected:
        logger.error(f"MergeMin incast {config.incast} returned {result.minimum}, expected {expected}")
    return SweepRow(
        experiment=spec.name,
        param=spec.param or '',
        value=value,
        rep=rep,
        seed=seed,
        nodes=config.num_cores,
        buckets=None,
        keys=config.num_cores * config.values_per_core,
        completion_time=result.completion_time,
        messages=result.trace.total_messages,
        skew=None,
        verdict='PASS' if result.minimum == expected else 'FAIL',
    )


def _run_row(task: Tuple[ExperimentSpec, Any, int, Dict[str, Any], Dict[str, Any], bool]) -> SweepRow:
    spec, value, rep, netsim, sort, keep_report = task
    if isinstance(spec.base, MergeConfig):
        return _merge_row(spec, value, rep, netsim)
    return _sort_row(spec, value, rep, netsim, sort, keep_report)


def sweep(
    spec: ExperimentSpec,
    netsim_settings: Optional[NetsimSettings] = None,
    sort_settings: Optional[SortSettings] = None,
    workers: int = 1,
    keep_reports: bool = False,
) -> SweepResult:
    netsim = (netsim_settings or NetsimSettings()).to_dict()
    sort = (sort_settings or SortSettings()).to_dict()
    tasks = [(spec, value, rep, netsim, sort, keep_reports) for value, rep in spec.runs()]
    logger.info(
        f"Experiment '{spec.name}': {len(tasks)} runs over {spec.param or 'no parameter'} "
        f"{[format_value(value) for value in spec.values]}"
    )
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            rows = list(executor.map(_run_row, tasks))
    else:
        rows = [_run_row(task) for task in tasks]
    for row in rows:
        idle = f" idle_share={row.report.idle_share:.3f}" if row.report is not None else ''
        logger.info(
            f"{spec.name} {row.param}={format_value(row.value)} rep={row.rep}: "
            f"{'-' if row.completion_time is None else f'{to_us(row.completion_time):.3f} us'} "
            f"{row.verdict}{idle}"
        )
    return SweepResult(spec=spec, rows=rows)


def preset(
    name: str,
    reps: Optional[int] = None,
    base_seed: int = 0,
    output: Optional[str] = None,
    sort_settings: Optional[SortSettings] = None,
    netsim_settings: Optional[NetsimSettings] = None,
) -> ExperimentSpec:
    """Predefined sweep. Median tree and multicast choices come from the settings."""
    sort = sort_settings or SortSettings()
    netsim = netsim_settings or NetsimSettings()
    common = dict(
        median_fan_in=sort.MEDIAN_FAN_IN,
        median_placement=sort.MEDIAN_PLACEMENT,
        multicast=netsim.MULTICAST,
    )
    def make(base: BaseConfig, param: Optional[str], values: Sequence[Any], default_reps: int = 1) -> ExperimentSpec:
        return ExperimentSpec(
            name=name,
            base=base,
            param=param,
            values=tuple(values),
            reps=reps or default_reps,
            base_seed=base_seed,
            output=output,
        )
    if name == 'graysort':
        return make(SortConfig.for_nodes(65_536, 16, 16, **common), None, (None,), default_reps=3)
    if name == 'tail':
        # keys only, 4 ** 4 nodes
        base = SortConfig.for_nodes(256, 512, 4, with_values=False, **common)
        return make(base, 'tail_extra_ns', (0, 1000, 2000, 3000, 4000), default_reps=3)
    if name == 'multicast':
        return make(SortConfig.for_nodes(4096, 16, 16, **common), 'multicast', (False, True))
    if name == 'buckets':
        return make(SortConfig.for_nodes(4096, 32, 16, **common), 'buckets', (4, 8, 16))
    if name == 'keys':
        return make(SortConfig.for_nodes(4096, 16, 16, **common), 'keys_per_node', (4, 16, 64))
    if name == 'switch-latency':
        return make(SortConfig.for_nodes(64, 16, 4, **common), 'switch_latency_ns', (100, 263, 500, 1000))
    if name == 'mergemin':
        return make(MergeConfig(num_cores=64, values_per_core=128), 'incast', DEFAULT_INCASTS)
    raise ConfigurationError(f"Unknown preset '{name}'; expected one of {list(PRESET_NAMES)}")
