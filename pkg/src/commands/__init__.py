"""TriMorph v2026 - Command Module"""

from .models import (
    SUBCOMMANDS,
    CameraConfig,
    QuadratureConfig,
    RenderJob,
    InvertJob,
    CanonizeJob,
    EditJob,
    CliConfig,
)

from .common import load_job, load_generator, json_ready

from .render import run_render, run_deform

from .estimate import run_estimate_jnorm

from .canonical import run_invert, run_canonize, run_embed_analyze

from .training import run_train, run_collapse_demo, run_edit
