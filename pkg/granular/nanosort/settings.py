from granular.core.core_base_settings import BaseSettings
MEDIAN_PLACEMENTS = ('shared', 'spread')
CANDIDATE_SORTS = ('sample', 'full')


class SortSettings(BaseSettings):
    SETTINGS_KEY = 'SORT_SETTINGS'
    NUM_BUCKETS: int = 16
    MEDIAN_FAN_IN: int = 16
    MEDIAN_PLACEMENT: str = 'shared'
    CANDIDATE_SORT: str = 'sample'
    CANDIDATE_BYTES: int = 16
    KEY_TRANSFER_BYTES: int = 24
    CONTROL_BYTES: int = 16
    VALUE_REQUEST_BYTES: int = 16
    VALUE_TRANSFER_BYTES: int = 104
