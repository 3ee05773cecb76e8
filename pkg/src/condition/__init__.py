"""TriMorph v2026 - Conditioning Module"""

from .vectors import LatentVector, StyleVector, Embedding, as_array

from .alignment import AlignmentNet, AlignmentCache, zero_init

from .conditioning import (
    ProjectionPair,
    map_latent,
    align_style,
    align_styles,
    edit_style,
    discriminate,
    discriminate_batch,
    alpha_sweep,
)
