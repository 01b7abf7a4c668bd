from granular.harness.experiments import (
    ExperimentSpec,
    SweepResult,
    SweepRow,
    preset,
    run_graysort,
    sweep,
)
from granular.harness.records import RecordSet, gen_records
from granular.harness.report import RunReport
from granular.harness.settings import HarnessSettings
__all__ = [
    'ExperimentSpec',
    'HarnessSettings',
    'RecordSet',
    'RunReport',
    'SweepResult',
    'SweepRow',
    'gen_records',
    'preset',
    'run_graysort',
    'sweep',
]
