import copy
from typing import Any, Mapping, Optional
from granular.core.exceptions import ConfigurationError


def _project_settings():
    try:
        from app import settings
    except ImportError:
        return None
    return settings


class BaseSettings:
    SETTINGS_KEY: str = ''
    def __init__(self, overrides: Optional[Mapping[str, Any]] = None):
        super().__init__()
        if self.SETTINGS_KEY:
            settings_key = self.SETTINGS_KEY
        else:
            raise ValueError("SETTINGS_KEY must be defined in subclasses.")
        for key in self.field_names():
            setattr(self, key, copy.deepcopy(getattr(type(self), key)))
        settings = _project_settings()
        if settings is not None and hasattr(settings, settings_key):
            self.apply(getattr(settings, settings_key, {}) or {})
        if overrides:
            self.apply(overrides)
    @classmethod
    def field_names(cls) -> list[str]:
        return [
            name for name in dir(cls)
            if name.isupper() and name != 'SETTINGS_KEY'
        ]
    def apply(self, overrides: Mapping[str, Any]) -> None:
        for key, value in overrides.items():
            if key not in self.field_names():
                raise ConfigurationError(
                    f"Unknown {self.SETTINGS_KEY} field '{key}'"
                )
            if value is not None:
                setattr(self, key, value)
    def to_dict(self) -> dict[str, Any]:
        return {key: getattr(self, key) for key in self.field_names()}
