from typing import Optional
from granular.core.core_base_settings import BaseSettings


class HarnessSettings(BaseSettings):
    SETTINGS_KEY = 'HARNESS_SETTINGS'
    BASE_SEED: int = 0
    # None: one run, or the preset's own repetition count
    REPS: Optional[int] = None
    WORKERS: int = 1
    # '-' writes the CSV to standard output
    OUTPUT: str = '-'
