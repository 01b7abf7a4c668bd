import os
import json
import logging
from pathlib import Path
from typing import Optional
from granular.core.exceptions import ConfigurationError
from granular.core.types import ConfigFileTypedDict
logger = logging.getLogger(__name__)
CONFIG_ENV_VAR = 'GRANULAR_CONFIG'
SECTION_KEYS = ('NETSIM_SETTINGS', 'SORT_SETTINGS', 'HARNESS_SETTINGS')


def get_config_path(explicit: Optional[str] = None) -> Optional[Path]:
    if explicit:
        return Path(explicit)
    from_env = os.getenv(CONFIG_ENV_VAR, '')
    return Path(from_env) if from_env else None


def load_config_file(explicit: Optional[str] = None) -> ConfigFileTypedDict:
    config_path = get_config_path(explicit)
    if config_path is None:
        return {}
    if not config_path.exists():
        raise ConfigurationError(f"Config file {config_path} does not exist")
    try:
        with open(config_path, encoding='utf-8') as f:
            parsed = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"Config file {config_path} is not valid JSON: {e}") from e
    if not isinstance(parsed, dict):
        raise ConfigurationError(f"Config file {config_path} must hold a JSON object")
    unknown = [key for key in parsed if key not in SECTION_KEYS]
    if unknown:
        raise ConfigurationError(
            f"Unknown config sections {unknown}; expected any of {list(SECTION_KEYS)}"
        )
    logger.debug(f"Loaded config sections {sorted(parsed)} from {config_path}")
    return parsed
