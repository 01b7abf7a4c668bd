from typing import List, Optional, Tuple, TypedDict
from typing_extensions import NotRequired
CalibrationTableType = List[Tuple[float, float]]


class NetsimSettingsTypedDict(TypedDict):
    DOWNLINKS_PER_LEAF: NotRequired[int]
    NUM_SPINES: NotRequired[int]
    LINK_LATENCY_NS: NotRequired[float]
    SWITCH_LATENCY_NS: NotRequired[float]
    LINK_BANDWIDTH_BYTES_PER_NS: NotRequired[float]
    HEADER_BYTES: NotRequired[int]
    TAIL_FRACTION: NotRequired[float]
    TAIL_EXTRA_NS: NotRequired[float]
    SEND_PER_MSG_NS: NotRequired[float]
    RECV_TABLE_NS: NotRequired[CalibrationTableType]
    RECV_CALIBRATION_BYTES: NotRequired[int]
    SORT_TABLE_NS: NotRequired[CalibrationTableType]
    SCAN_TABLE_NS: NotRequired[CalibrationTableType]
    CLOCK_GHZ: NotRequired[float]
    MULTICAST: NotRequired[bool]
    RECV_BATCHING: NotRequired[bool]
    MAX_EVENTS: NotRequired[int]
    PROGRESS_EVERY_EVENTS: NotRequired[int]


class SortSettingsTypedDict(TypedDict):
    NUM_BUCKETS: NotRequired[int]
    MEDIAN_FAN_IN: NotRequired[int]
    MEDIAN_PLACEMENT: NotRequired[str]
    CANDIDATE_SORT: NotRequired[str]
    CANDIDATE_BYTES: NotRequired[int]
    KEY_TRANSFER_BYTES: NotRequired[int]
    CONTROL_BYTES: NotRequired[int]
    VALUE_REQUEST_BYTES: NotRequired[int]
    VALUE_TRANSFER_BYTES: NotRequired[int]


class HarnessSettingsTypedDict(TypedDict):
    BASE_SEED: NotRequired[int]
    REPS: NotRequired[Optional[int]]
    WORKERS: NotRequired[int]
    OUTPUT: NotRequired[str]


class ConfigFileTypedDict(TypedDict):
    NETSIM_SETTINGS: NotRequired[NetsimSettingsTypedDict]
    SORT_SETTINGS: NotRequired[SortSettingsTypedDict]
    HARNESS_SETTINGS: NotRequired[HarnessSettingsTypedDict]
