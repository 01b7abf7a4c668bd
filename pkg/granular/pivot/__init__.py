from granular.pivot.oracle import OracleResult, beta_median, bucket_size_distribution, rank_mix_median
from granular.pivot.select import (
    IndexSet16,
    Mixed,
    Naive,
    PivotSet,
    RankMix,
    ShiftHalf,
    Strategy,
    bucket_of,
    calibrated_ranks,
    pivot_select,
    pivot_select_16,
    pivot_select_b,
)
__all__ = [
    'IndexSet16',
    'Mixed',
    'Naive',
    'OracleResult',
    'PivotSet',
    'RankMix',
    'ShiftHalf',
    'Strategy',
    'beta_median',
    'bucket_of',
    'bucket_size_distribution',
    'calibrated_ranks',
    'pivot_select',
    'pivot_select_16',
    'pivot_select_b',
    'rank_mix_median',
]
