"""TriMorph v2026 - Regularization Module"""

from .jacobian import (
    ProbeSpec,
    FrobeniusBound,
    exact_frob_sq,
    hutchinson_samples,
    hutchinson_frob_sq,
    fd_samples,
    fd_frob_sq,
    spectral_norm,
    check_frobenius_bound,
)

from .penalties import (
    RegWeights,
    r_jac,
    r_norm,
    cosine_similarity,
    edit_loss,
)
