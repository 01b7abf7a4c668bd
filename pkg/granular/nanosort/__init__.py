from granular.nanosort.dataclasses import NodeState, SortConfig, SortRecord, Step
from granular.nanosort.program import NanoSortProgram
from granular.nanosort.runner import NanoSortResult, run_nanosort
from granular.nanosort.settings import SortSettings
from granular.nanosort.shuffle import initial_shuffle, node_partition
from granular.nanosort.verify import VerificationReport, skew, verify
__all__ = [
    'NanoSortProgram',
    'NanoSortResult',
    'NodeState',
    'SortConfig',
    'SortRecord',
    'SortSettings',
    'Step',
    'VerificationReport',
    'initial_shuffle',
    'node_partition',
    'run_nanosort',
    'skew',
    'verify',
]
