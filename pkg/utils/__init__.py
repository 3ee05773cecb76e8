"""TriMorph v2026 - Utilities Module"""

from .config import (
    GlobalConfig,
    config,
    get_config,
    init_config,
    is_debug,
    get_version,
)
