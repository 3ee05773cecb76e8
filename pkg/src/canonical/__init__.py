"""TriMorph v2026 - Canonicalization Module"""

from .inversion import (
    InversionConfig,
    InversionResult,
    PixelGradientDistance,
    invert,
)

from .embedding import (
    EmbeddingCache,
    EmbeddingProvider,
    block_downsample,
    embed,
    inject_noise,
    load_embedding_cache,
    save_embedding_cache,
)

from .canonicalize import (
    CanonicalizedSample,
    NeutralFrame,
    canonical_render,
    canonicalize_dataset,
    canonicalize_sample,
)

from .analysis import ImageSimilarity, NoiseReport, noise_analysis
