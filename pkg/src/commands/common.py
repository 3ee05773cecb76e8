"""
TriMorph v2026 - Command Helpers
Job loading, generator resolution and output directories shared by the subcommands.
"""

import logging
import math
from pathlib import Path
from typing import Any, Optional, TypeVar, Union

import numpy as np

from ..assets.rng import RngStream
from ..train.bundles import GeneratorBundle
from ..train.config import ModelConfig, StrictModel
from ..train.loop import load_bundles

logger = logging.getLogger(__name__)

JobT = TypeVar("JobT", bound=StrictModel)


def load_job(model_cls: type[JobT], path: Optional[Union[str, Path]]) -> JobT:
    """Parse a job file strictly; no file means every default."""
    if path is None:
        return model_cls()
    job = model_cls.from_json_file(path)
    logger.debug(f"Loaded {model_cls.__name__} from {path}")
    return job


def load_generator(checkpoint: Optional[str], model: ModelConfig, seed: int) -> GeneratorBundle:
    """Generator from a checkpoint directory, or a freshly initialized one for `seed`."""
    if checkpoint is not None:
        if not Path(checkpoint).exists():
            raise FileNotFoundError(f"Checkpoint not found: {checkpoint}")
        g, _, manifest = load_bundles(checkpoint)
        logger.info(f"Generator loaded from {checkpoint} (step {manifest.get('step', 0)})")
        return g
    return GeneratorBundle.create(model, RngStream(seed).derive("init").derive("generator"))


def output_dir(path: Union[str, Path]) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def written_files(out: Path, pattern: str = "*") -> list[str]:
    return sorted(p.name for p in out.glob(pattern) if p.is_file())


def json_ready(value: Any) -> Any:
    """Non-finite floats become strings ("inf", "nan") so reports stay strict JSON."""
    if isinstance(value, dict):
        return {str(k): json_ready(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_ready(v) for v in value]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    return value
