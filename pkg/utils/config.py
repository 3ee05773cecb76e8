"""
TriMorph v2026 - Global Configuration
Centralized desk-scale defaults shared by every pipeline stage.
"""

from dataclasses import dataclass
from typing import Any

@dataclass
class GlobalConfig:
    """Global configuration for TriMorph."""

    # Application info
    APP_NAME: str = "TriMorph"
    VERSION: str = "2026.1.0"
    DEBUG: bool = False

    # Execution
    THREADS: int = 1
    RENDER_CHUNK_RAYS: int = 256  # fixed work unit, independent of THREADS

    # Network dimensions
    LATENT_DIM: int = 64
    STYLE_DIM: int = 64
    EMBED_DIM: int = 32
    CONDITION_DIM: int = 64
    PLANE_RESOLUTION: int = 32
    PLANE_CHANNELS: int = 8
    FEATURE_CHANNELS: int = 3
    DECODER_HIDDEN: int = 32
    ALIGN_WIDTH: int = 64
    ALIGN_BLOCKS: int = 2

    # Rendering
    IMAGE_RESOLUTION: int = 32
    SAMPLES_PER_RAY: int = 24
    BACKGROUND_SENTINEL: float = -1.0e4
    DEPTH_EPSILON: float = 1.0e-10
    SCENE_HALF_EXTENT: float = 1.0
    NEUTRAL_CAMERA_DISTANCE: float = 2.7
    T_NEAR: float = 1.2
    T_FAR: float = 4.2

    # Regularization
    PROBE_SIGMA: float = 0.1
    PROBE_COUNT: int = 1
    LAMBDA_JAC: float = 0.01
    LAMBDA_NORM: float = 10.0
    EDIT_ETA: float = 10.0
    ALPHA_DROPOUT: float = 0.5

    # Training
    LEARNING_RATE: float = 0.001
    R1_WEIGHT: float = 1.0

    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_FORMAT: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

    def get(self, key: str, default: Any = None) -> Any:
        """Get configuration value by key."""
        return getattr(self, key, default)

    def set(self, key: str, value: Any):
        """Set configuration value."""
        if hasattr(self, key):
            setattr(self, key, value)


# Global instance
config = GlobalConfig()

def get_config() -> GlobalConfig:
    """Get the global configuration instance."""
    return config

def init_config(**kwargs) -> GlobalConfig:
    """Initialize configuration with custom values."""
    global config
    config = GlobalConfig(**kwargs)
    return config

def is_debug() -> bool:
    """Check if debug mode is enabled."""
    return config.DEBUG

def get_version() -> str:
    """Get application version."""
    return config.VERSION
