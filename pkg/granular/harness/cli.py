import argparse
import logging
import sys
from typing import Optional, Sequence, TextIO
from granular.core.exceptions import ConfigurationError
from granular.core.utils.env_config import load_config_file
from granular.harness.experiments import PRESET_NAMES, ExperimentSpec, SweepResult, preset, sweep
from granular.harness.settings import HarnessSettings
from granular.netsim.settings import NetsimSettings
from granular.nanosort.dataclasses import SortConfig
from granular.nanosort.settings import SortSettings
from granular.pivot.oracle import default_results, to_csv
logger = logging.getLogger(__name__)
VERBOSITY_LEVELS = {0: logging.WARNING, 1: logging.INFO, 2: logging.DEBUG}
# flag dest -> (settings section, field)
FLAG_FIELDS = {
    'switch_latency_ns': ('NETSIM_SETTINGS', 'SWITCH_LATENCY_NS'),
    'link_latency_ns': ('NETSIM_SETTINGS', 'LINK_LATENCY_NS'),
    'tail_extra_ns': ('NETSIM_SETTINGS', 'TAIL_EXTRA_NS'),
    'tail_fraction': ('NETSIM_SETTINGS', 'TAIL_FRACTION'),
    'multicast': ('NETSIM_SETTINGS', 'MULTICAST'),
    'buckets': ('SORT_SETTINGS', 'NUM_BUCKETS'),
    'median_fan_in': ('SORT_SETTINGS', 'MEDIAN_FAN_IN'),
    'seed': ('HARNESS_SETTINGS', 'BASE_SEED'),
    'reps': ('HARNESS_SETTINGS', 'REPS'),
    'workers': ('HARNESS_SETTINGS', 'WORKERS'),
    'out': ('HARNESS_SETTINGS', 'OUTPUT'),
}
PIVOT_TRIALS = 100_000


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='granular',
        description="Simulate NanoSort and MergeMin on a leaf-spine cluster and write CSV results.",
    )
    parser.add_argument('--nodes', type=int, default=16, help="number of nodes (a power of --buckets)")
    parser.add_argument('--buckets', type=int, help="buckets per recursion level")
    parser.add_argument('--keys', type=int, help="total number of keys")
    parser.add_argument('--keys-per-node', type=int, help="keys per node (ignored when --keys is given)")
    parser.add_argument('--median-fan-in', type=int, help="fan-in of the median trees")
    parser.add_argument('--multicast', choices=['on', 'off'], help="use switch multicast for pivot broadcasts")
    parser.add_argument('--switch-latency-ns', type=float)
    parser.add_argument('--link-latency-ns', type=float)
    parser.add_argument('--tail-extra-ns', type=float, help="extra delay added to tail messages")
    parser.add_argument('--tail-fraction', type=float, help="fraction of messages that take the tail delay")
    parser.add_argument('--seed', type=int, help="seed of the first repetition")
    parser.add_argument('--reps', type=int, help="repetitions per value, seeds seed..seed+reps-1")
    parser.add_argument('--preset', choices=PRESET_NAMES, help="run a predefined experiment")
    parser.add_argument('--out', help="CSV output path, '-' for standard output")
    parser.add_argument('--config', help="JSON config file (defaults to $GRANULAR_CONFIG)")
    parser.add_argument('--trace-out', help="write the per-node stage trace CSV of the first run")
    parser.add_argument('--workers', type=int, help="run repetitions in this many processes")
    parser.add_argument('--verbosity', type=int, choices=sorted(VERBOSITY_LEVELS), default=1)
    return parser


def configure_logging(verbosity: int) -> None:
    logging.basicConfig(
        stream=sys.stderr,
        level=VERBOSITY_LEVELS[verbosity],
        format='%(asctime)s %(levelname)s %(name)s: %(message)s',
        force=True,
    )


def resolve_settings(args: argparse.Namespace):
    sections = {key: dict(value) for key, value in load_config_file(args.config).items()}
    for dest, (section, name) in FLAG_FIELDS.items():
        value = getattr(args, dest)
        if value is None:
            continue
        if dest == 'multicast':
            value = value == 'on'
        sections.setdefault(section, {})[name] = value
    return (
        NetsimSettings(sections.get('NETSIM_SETTINGS')),
        SortSettings(sections.get('SORT_SETTINGS')),
        HarnessSettings(sections.get('HARNESS_SETTINGS')),
    )


def single_run_spec(args: argparse.Namespace, netsim: NetsimSettings, sort: SortSettings, harness: HarnessSettings) -> ExperimentSpec:
    if args.keys is not None:
        if args.keys % args.nodes:
            raise ConfigurationError(f"--keys {args.keys} is not a multiple of --nodes {args.nodes}")
        keys_per_node = args.keys // args.nodes
    else:
        keys_per_node = args.keys_per_node if args.keys_per_node is not None else 16
    config = SortConfig.for_nodes(
        args.nodes,
        keys_per_node,
        sort.NUM_BUCKETS,
        median_fan_in=sort.MEDIAN_FAN_IN,
        multicast=netsim.MULTICAST,
        seed=harness.BASE_SEED,
        median_placement=sort.MEDIAN_PLACEMENT,
    )
    return ExperimentSpec(name='run', base=config, reps=harness.REPS or 1, base_seed=harness.BASE_SEED)


def write_output(text: str, output: str, stdout: TextIO) -> None:
    if output == '-':
        stdout.write(text)
    else:
        with open(output, 'w', encoding='utf-8', newline='') as f:
            f.write(text)
        logger.info(f"Wrote {output}")


def main(argv: Optional[Sequence[str]] = None, stdout: Optional[TextIO] = None) -> int:
    args = build_parser().parse_args(argv)
    stdout = stdout or sys.stdout
    configure_logging(args.verbosity)
    try:
        netsim, sort, harness = resolve_settings(args)
        if args.preset == 'pivots':
            write_output(to_csv(default_results(PIVOT_TRIALS, harness.BASE_SEED)), harness.OUTPUT, stdout)
            return 0
        if args.preset:
            spec = preset(
                args.preset,
                reps=harness.REPS,
                base_seed=harness.BASE_SEED,
                output=harness.OUTPUT,
                sort_settings=sort,
                netsim_settings=netsim,
            )
        else:
            spec = single_run_spec(args, netsim, sort, harness)
        result: SweepResult = sweep(spec, netsim, sort, workers=harness.WORKERS, keep_reports=bool(args.trace_out) or not args.preset)
    except ConfigurationError as e:
        logger.error(str(e))
        return 2
    write_output(result.to_csv(), harness.OUTPUT, stdout)
    if args.trace_out:
        reports = [row.report for row in result.rows if row.report is not None]
        if reports:
            reports[0].trace.write_csv(args.trace_out)
        else:
            logger.warning(f"No completed run to write a trace for; {args.trace_out} not written")
    if not args.preset:
        for row in result.rows:
            if row.report is not None:
                for line in row.report.summary_lines():
                    logger.info(line)
    failed = [row for row in result.rows if not row.passed]
    if failed:
        logger.error(f"{len(failed)} of {len(result.rows)} runs failed verification")
        return 1
    return 0
