"""
TriMorph v2026 - Closest Point on Triangle
Vectorized region test (vertex / edge / face) returning clamped barycentrics.
"""

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInputError
from .mesh import TriMesh


@dataclass(frozen=True)
class BarycentricHit:
    """Nearest triangle of a query point."""
    triangle_index: int
    uvw: np.ndarray
    offset: float


@dataclass(frozen=True)
class ClosestHits:
    """Batched nearest-triangle results, one row per query point."""
    triangle_index: np.ndarray
    uvw: np.ndarray
    offset: np.ndarray
    projection: np.ndarray
    distance_sq: np.ndarray

    def __len__(self) -> int:
        return len(self.triangle_index)

    def hit(self, i: int) -> BarycentricHit:
        return BarycentricHit(int(self.triangle_index[i]), self.uvw[i].copy(), float(self.offset[i]))


def _dot(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    # explicit sum keeps per-element results independent of batch layout
    return x[..., 0] * y[..., 0] + x[..., 1] * y[..., 1] + x[..., 2] * y[..., 2]


def closest_points_on_triangles(p, a, b, c) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Closest point of p on triangle (a, b, c), row-wise.

    Returns (projection, uvw, squared distance); uvw are clamped to the closed
    triangle so that projection = u*a + v*b + w*c.
    """
    p, a, b, c = (np.asarray(x, dtype=np.float64) for x in (p, a, b, c))
    p, a, b, c = np.broadcast_arrays(p, a, b, c)
    ab, ac = b - a, c - a
    ap, bp, cp = p - a, p - b, p - c
    d1, d2 = _dot(ab, ap), _dot(ac, ap)
    d3, d4 = _dot(ab, bp), _dot(ac, bp)
    d5, d6 = _dot(ab, cp), _dot(ac, cp)
    va = d3 * d6 - d5 * d4
    vb = d5 * d2 - d1 * d6
    vc = d1 * d4 - d3 * d2

    n = p.shape[0]
    u = np.empty(n)
    v = np.empty(n)
    w = np.empty(n)
    done = np.zeros(n, dtype=bool)

    def assign(mask, uu, vv, ww):
        sel = mask & ~done
        u[sel], v[sel], w[sel] = uu[sel], vv[sel], ww[sel]
        done[sel] = True

    zeros, ones = np.zeros(n), np.ones(n)
    with np.errstate(divide="ignore", invalid="ignore"):
        assign((d1 <= 0) & (d2 <= 0), ones, zeros, zeros)
        assign((d3 >= 0) & (d4 <= d3), zeros, ones, zeros)
        t_ab = d1 / (d1 - d3)
        assign((vc <= 0) & (d1 >= 0) & (d3 <= 0), 1.0 - t_ab, t_ab, zeros)
        assign((d6 >= 0) & (d5 <= d6), zeros, zeros, ones)
        t_ac = d2 / (d2 - d6)
        assign((vb <= 0) & (d2 >= 0) & (d6 <= 0), 1.0 - t_ac, zeros, t_ac)
        t_bc = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        assign((va <= 0) & ((d4 - d3) >= 0) & ((d5 - d6) >= 0), zeros, 1.0 - t_bc, t_bc)
        inv = 1.0 / (va + vb + vc)
        assign(np.ones(n, dtype=bool), va * inv, vb * inv, vc * inv)

    uvw = np.clip(np.stack([u, v, w], axis=1), 0.0, 1.0)
    projection = uvw[:, 0:1] * a + uvw[:, 1:2] * b + uvw[:, 2:3] * c
    diff = p - projection
    return projection, uvw, _dot(diff, diff)


def _pack(mesh: TriMesh, points: np.ndarray, tri: np.ndarray) -> ClosestHits:
    a, b, c = (mesh.vertices[mesh.triangles[tri, k]] for k in range(3))
    projection, uvw, d2 = closest_points_on_triangles(points, a, b, c)
    offset = _dot(points - projection, mesh.face_normals[tri])
    return ClosestHits(tri.astype(np.int64), uvw, offset, projection, d2)


def closest_triangles_bruteforce(mesh: TriMesh, points) -> ClosestHits:
    """Exhaustive all-triangle scan; lowest index wins ties."""
    points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if mesh.triangle_count == 0:
        raise InvalidInputError("Closest-triangle query on an empty mesh")
    a, b, c = mesh.corners()
    best = np.empty(len(points), dtype=np.int64)
    for i, x in enumerate(points):
        _, _, d2 = closest_points_on_triangles(x[None, :], a, b, c)
        best[i] = int(np.argmin(d2))
    return _pack(mesh, points, best)


def hits_for(mesh: TriMesh, points: np.ndarray, triangle_index: np.ndarray) -> ClosestHits:
    return _pack(mesh, np.asarray(points, dtype=np.float64).reshape(-1, 3), triangle_index)
