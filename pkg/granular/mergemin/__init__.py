from granular.mergemin.program import (
    MergeConfig,
    MergeMinProgram,
    MergeMinResult,
    incast_sweep,
    local_min,
    run_mergemin,
    sweep_csv,
)
__all__ = [
    'MergeConfig',
    'MergeMinProgram',
    'MergeMinResult',
    'incast_sweep',
    'local_min',
    'run_mergemin',
    'sweep_csv',
]
