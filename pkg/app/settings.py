from granular.core.types import (
    HarnessSettingsTypedDict,
    NetsimSettingsTypedDict,
    SortSettingsTypedDict,
)


# Project-wide overrides of the package defaults. A JSON file passed with
# --config (or named by $GRANULAR_CONFIG) and CLI flags are applied on top.
NETSIM_SETTINGS: NetsimSettingsTypedDict = {}

SORT_SETTINGS: SortSettingsTypedDict = {}

HARNESS_SETTINGS: HarnessSettingsTypedDict = {}
