"""
TriMorph v2026 - Tri-Plane Feature Field
Three axis-aligned R x R x C grids (XY, XZ, YZ). A point is projected onto
each plane, sampled bilinearly, and the three samples are summed.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInputError

PLANE_AXES = ((0, 1), (0, 2), (1, 2))
PLANE_NAMES = ("xy", "xz", "yz")


@dataclass(frozen=True, eq=False)
class TriPlaneField:
    """planes: (3, R, R, C); bounds: (2, 3) rows are box min and box max."""
    planes: np.ndarray
    bounds: np.ndarray

    def __post_init__(self):
        planes = np.asarray(self.planes, dtype=np.float64)
        bounds = np.asarray(self.bounds, dtype=np.float64)
        if planes.ndim != 4 or planes.shape[0] != 3 or planes.shape[1] != planes.shape[2]:
            raise InvalidInputError(f"Planes must be (3, R, R, C), got {planes.shape}")
        if planes.shape[1] < 2 or planes.shape[3] < 1:
            raise InvalidInputError("Plane resolution must be >= 2 with at least one channel")
        if bounds.shape != (2, 3) or np.any(bounds[1] <= bounds[0]):
            raise InvalidInputError(f"Bounds need positive extent on every axis, got {bounds.tolist()}")
        object.__setattr__(self, "planes", planes)
        object.__setattr__(self, "bounds", bounds)

    @classmethod
    def zeros(cls, resolution: int, channels: int, half_extent: float = 1.0) -> "TriPlaneField":
        return cls(
            np.zeros((3, resolution, resolution, channels)),
            np.array([[-half_extent] * 3, [half_extent] * 3]),
        )

    @classmethod
    def from_flat(cls, flat: np.ndarray, resolution: int, channels: int, bounds) -> "TriPlaneField":
        flat = np.asarray(flat, dtype=np.float64)
        expected = 3 * resolution * resolution * channels
        if flat.size != expected:
            raise InvalidInputError(f"Flat plane vector has {flat.size} entries, expected {expected}")
        return cls(flat.reshape(3, resolution, resolution, channels), bounds)

    @property
    def resolution(self) -> int:
        return self.planes.shape[1]

    @property
    def channels(self) -> int:
        return self.planes.shape[3]

    def grid_point(self, i: int, j: int, k: int) -> np.ndarray:
        """World position of grid node (i, j, k); axis order x, y, z."""
        lo, hi = self.bounds
        return lo + np.array([i, j, k], dtype=np.float64) / (self.resolution - 1) * (hi - lo)

    def to_tensors(self, prefix: str) -> tuple[dict[str, np.ndarray], dict]:
        tensors = {f"{prefix}.{name}": self.planes[p] for p, name in enumerate(PLANE_NAMES)}
        meta = {"resolution": self.resolution, "channels": self.channels, "bounds": self.bounds.tolist()}
        return tensors, meta

    @classmethod
    def from_tensors(cls, prefix: str, tensors: dict[str, np.ndarray], meta: dict) -> "TriPlaneField":
        planes = np.stack([tensors[f"{prefix}.{name}"] for name in PLANE_NAMES]).astype(np.float64)
        return cls(planes, np.asarray(meta["bounds"], dtype=np.float64))


def _bilinear_taps(tp: TriPlaneField, points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Flat texel indices (3, N, 4) into planes.reshape(3*R*R, C) and their weights."""
    res = tp.resolution
    lo, hi = tp.bounds
    inside = np.all((points >= lo) & (points <= hi), axis=1)
    grid = (points - lo) / (hi - lo) * (res - 1)
    grid = np.where(inside[:, None], grid, 0.0)
    base = np.clip(np.floor(grid), 0, res - 2).astype(np.int64)
    frac = grid - base

    indices = np.empty((3, len(points), 4), dtype=np.int64)
    weights = np.empty((3, len(points), 4), dtype=np.float64)
    for p, (a, b) in enumerate(PLANE_AXES):
        ia, ib = base[:, a], base[:, b]
        ta, tb = frac[:, a], frac[:, b]
        offset = p * res * res
        indices[p, :, 0] = offset + ia * res + ib
        indices[p, :, 1] = offset + (ia + 1) * res + ib
        indices[p, :, 2] = offset + ia * res + ib + 1
        indices[p, :, 3] = offset + (ia + 1) * res + ib + 1
        weights[p, :, 0] = (1 - ta) * (1 - tb)
        weights[p, :, 1] = ta * (1 - tb)
        weights[p, :, 2] = (1 - ta) * tb
        weights[p, :, 3] = ta * tb
    weights *= inside[None, :, None]
    return indices, weights


def sample_triplane(tp: TriPlaneField, x) -> np.ndarray:
    """Summed bilinear samples for (..., 3) points; zero outside bounds."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != 3:
        raise InvalidInputError(f"Points must have 3 coordinates, got {x.shape}")
    points = x.reshape(-1, 3)
    indices, weights = _bilinear_taps(tp, points)
    texels = tp.planes.reshape(-1, tp.channels)
    features = np.zeros((len(points), tp.channels))
    for p in range(3):
        for k in range(4):
            features += weights[p, :, k, None] * texels[indices[p, :, k]]
    return features.reshape(x.shape[:-1] + (tp.channels,))


def sample_triplane_backward(tp: TriPlaneField, x, grad) -> np.ndarray:
    """Adjoint of sample_triplane w.r.t. the plane texels, shaped like tp.planes."""
    points = np.asarray(x, dtype=np.float64).reshape(-1, 3)
    grad = np.asarray(grad, dtype=np.float64).reshape(-1, tp.channels)
    if len(grad) != len(points):
        raise InvalidInputError("Feature adjoint count does not match point count")
    indices, weights = _bilinear_taps(tp, points)
    flat_index = indices.transpose(0, 2, 1).reshape(-1)
    flat_weight = weights.transpose(0, 2, 1).reshape(-1)
    grad_tiled = np.tile(grad, (12, 1))
    total = 3 * tp.resolution * tp.resolution
    out = np.empty((total, tp.channels))
    for c in range(tp.channels):
        out[:, c] = np.bincount(flat_index, weights=flat_weight * grad_tiled[:, c], minlength=total)
    return out.reshape(tp.planes.shape)
