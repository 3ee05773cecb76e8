"""
TriMorph v2026 - Conditioning Penalties
Embedding-sensitivity penalty on the alignment network, style-norm penalty,
and the editing objective.
"""

from typing import Callable

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from utils.config import get_config

from ..errors import DegenerateInputError, InvalidInputError
from .jacobian import ProbeSpec, fd_frob_sq

_defaults = get_config()


class RegWeights(BaseModel):
    """Scalar knobs of the conditioning regularizers."""

    model_config = ConfigDict(extra="forbid")

    alpha: float = Field(1.0, ge=0.0, le=1.0, description="Alignment strength")
    lambda_jac: float = Field(_defaults.LAMBDA_JAC, ge=0.0, description="Weight of the embedding-sensitivity penalty")
    lambda_norm: float = Field(_defaults.LAMBDA_NORM, ge=0.0, description="Weight of the style-norm penalty")
    eta: float = Field(_defaults.EDIT_ETA, ge=0.0, description="Norm weight of the editing loss")
    alpha_dropout: float = Field(_defaults.ALPHA_DROPOUT, ge=0.0, le=1.0, description="Probability of forcing alpha to 0")
    probe_sigma: float = Field(_defaults.PROBE_SIGMA, gt=0.0)
    n_probes: int = Field(_defaults.PROBE_COUNT, ge=1)


def r_jac(alignment_fn: Callable[[np.ndarray], np.ndarray], r, probes: ProbeSpec) -> float:
    """Finite-difference estimate of ||d w_r / d r||_F^2."""
    return fd_frob_sq(alignment_fn, r, probes)


def r_norm(w_r, w) -> float:
    """(||w_r|| - ||w||)^2"""
    w_r = np.asarray(w_r, dtype=np.float64).reshape(-1)
    w = np.asarray(w, dtype=np.float64).reshape(-1)
    if w_r.size != w.size:
        raise InvalidInputError(f"Style dims differ: {w_r.size} vs {w.size}")
    return float((np.linalg.norm(w_r) - np.linalg.norm(w)) ** 2)


def cosine_similarity(a, b) -> float:
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if a.size != b.size:
        raise InvalidInputError(f"Vector dims differ: {a.size} vs {b.size}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise DegenerateInputError("Cosine similarity of a zero-norm vector")
    return float(np.clip(a @ b / (na * nb), -1.0, 1.0))


def edit_loss(delta_x, delta_t, w_t, w, eta: float = 10.0) -> float:
    """1 - cos(delta_x, delta_t) + eta * r_norm(w_t, w)"""
    return 1.0 - cosine_similarity(delta_x, delta_t) + eta * r_norm(w_t, w)
