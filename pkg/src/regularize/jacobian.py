"""
TriMorph v2026 - Jacobian Norm Estimators
Exact Frobenius oracle, probe-based estimators (exact J v and finite
differences), power-iteration spectral norm and the product bound check.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..assets.rng import RngStream
from ..errors import InvalidInputError

logger = logging.getLogger(__name__)

MIN_POWER_ITERS = 50


@dataclass(frozen=True)
class ProbeSpec:
    sigma: float = 0.1
    n_probes: int = 1
    rng: RngStream = field(default_factory=lambda: RngStream(0))

    def __post_init__(self):
        if self.sigma <= 0:
            raise InvalidInputError("Probe sigma must be positive")
        if self.n_probes < 1:
            raise InvalidInputError("Need at least one probe")

    def directions(self, dim: int) -> np.ndarray:
        """(n_probes, dim) standard normals from the probe stream."""
        values, _ = self.rng.normal((self.n_probes, dim))
        return values


def exact_frob_sq(J) -> float:
    J = np.asarray(J, dtype=np.float64)
    return float(np.sum(J * J))


def hutchinson_samples(
    jvp_fn: Callable[[np.ndarray], np.ndarray],
    in_dim: int,
    probes: ProbeSpec,
    batched: bool = False,
) -> np.ndarray:
    """Per-probe ||J v||^2 with v ~ N(0, I); jvp_fn must be exact."""
    v = probes.directions(in_dim)
    if batched:
        jv = np.asarray(jvp_fn(v), dtype=np.float64).reshape(len(v), -1)
    else:
        jv = np.stack([np.asarray(jvp_fn(row), dtype=np.float64).reshape(-1) for row in v])
    return np.sum(jv * jv, axis=1)


def hutchinson_frob_sq(jvp_fn, in_dim: int, probes: ProbeSpec, batched: bool = False) -> float:
    return float(np.mean(hutchinson_samples(jvp_fn, in_dim, probes, batched)))


def fd_samples(
    f: Callable[[np.ndarray], np.ndarray],
    x,
    probes: ProbeSpec,
    batched: bool = False,
) -> np.ndarray:
    """Per-probe ||f(x + eps) - f(x)||^2 / sigma^2 with eps ~ N(0, sigma^2 I)."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    eps = probes.sigma * probes.directions(x.size)
    base = np.asarray(f(x), dtype=np.float64).reshape(-1)
    if batched:
        moved = np.asarray(f(x[None, :] + eps), dtype=np.float64).reshape(len(eps), -1)
    else:
        moved = np.stack([np.asarray(f(x + e), dtype=np.float64).reshape(-1) for e in eps])
    diff = moved - base[None, :]
    return np.sum(diff * diff, axis=1) / probes.sigma**2


def fd_frob_sq(f, x, probes: ProbeSpec, batched: bool = False) -> float:
    return float(np.mean(fd_samples(f, x, probes, batched)))


def spectral_norm(J, iters: int = 100, rng: RngStream = RngStream(0)) -> float:
    """Largest singular value by power iteration on J^T J."""
    if iters < MIN_POWER_ITERS:
        raise InvalidInputError(f"Power iteration needs at least {MIN_POWER_ITERS} iterations")
    J = np.asarray(J, dtype=np.float64)
    if J.ndim != 2:
        raise InvalidInputError("spectral_norm expects a matrix")
    gram = J.T @ J
    v, _ = rng.derive("power-iteration").gaussian(J.shape[1])
    for _ in range(iters):
        nxt = gram @ v
        norm = np.linalg.norm(nxt)
        if norm == 0.0:
            return 0.0
        v = nxt / norm
    return float(np.sqrt(max(v @ gram @ v, 0.0)))


@dataclass(frozen=True)
class FrobeniusBound:
    lhs: float
    rhs: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs


def check_frobenius_bound(A, B, iters: int = 500) -> FrobeniusBound:
    """||A B||_F against ||A||_2 ||B||_F."""
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.shape[1] != B.shape[0]:
        raise InvalidInputError(f"Cannot multiply {A.shape} by {B.shape}")
    lhs = float(np.sqrt(exact_frob_sq(A @ B)))
    rhs = spectral_norm(A, iters) * float(np.sqrt(exact_frob_sq(B)))
    return FrobeniusBound(lhs, rhs)
