"""
TriMorph v2026 - Bounding Volume Hierarchy
Axis-aligned boxes, median split on the longest centroid axis, leaf size 4.
Queries return exactly what the exhaustive scan returns.

Small meshes are queried with a screened scan: an exact nearest-vertex
upper bound, a dense bounding-sphere test against every leaf, then a
per-triangle disc bound, so only a handful of triangles per point reach
the exact region test. Large meshes use a level-synchronous traversal.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from ..errors import InvalidInputError
from .closest import BarycentricHit, ClosestHits, closest_points_on_triangles, hits_for
from .mesh import TriMesh

logger = logging.getLogger(__name__)

LEAF_SIZE = 4
SCREEN_TRIANGLE_LIMIT = 4096
SCREEN_BLOCK = 4096
_PRUNE_RELATIVE = 1e-9
_PRUNE_ABSOLUTE = 1e-24
# slack on screened lower bounds; excluded triangles are farther than the bound by at least this
_SCREEN_SLACK = 1e-9
_CANCELLATION = 1e-12


def _prune_bound(best_d2: np.ndarray) -> np.ndarray:
    return best_d2 * (1.0 + _PRUNE_RELATIVE) + _PRUNE_ABSOLUTE


def _segment_argmin(point: np.ndarray, tri: np.ndarray, d2: np.ndarray, n: int) -> np.ndarray:
    """Per point, the lowest triangle index among the minimal distances; -1 where no pair."""
    best = np.full(n, -1, dtype=np.int64)
    if point.size == 0:
        return best
    ordering = np.lexsort((tri, d2, point))
    point, tri = point[ordering], tri[ordering]
    first = np.ones(len(point), dtype=bool)
    first[1:] = point[1:] != point[:-1]
    best[point[first]] = tri[first]
    return best


@dataclass(frozen=True)
class BVH:
    """Flattened hierarchy over the triangles of one mesh."""
    mesh: TriMesh
    box_min: np.ndarray
    box_max: np.ndarray
    left: np.ndarray
    right: np.ndarray
    start: np.ndarray
    count: np.ndarray
    order: np.ndarray
    vertex_tree: cKDTree
    leaf_triangles: np.ndarray
    leaf_center: np.ndarray
    leaf_radius: np.ndarray
    tri_radius: np.ndarray

    @classmethod
    def build(cls, mesh: TriMesh, leaf_size: int = LEAF_SIZE) -> "BVH":
        if mesh.triangle_count == 0:
            raise InvalidInputError("Cannot index an empty mesh")
        tri_verts = mesh.vertices[mesh.triangles]
        tri_min, tri_max = tri_verts.min(axis=1), tri_verts.max(axis=1)
        centroids = mesh.centroids

        box_min, box_max, left, right, start, count = [], [], [], [], [], []
        order = np.arange(mesh.triangle_count)

        def new_node(lo: int, hi: int) -> int:
            idx = order[lo:hi]
            box_min.append(tri_min[idx].min(axis=0))
            box_max.append(tri_max[idx].max(axis=0))
            left.append(-1)
            right.append(-1)
            start.append(lo)
            count.append(hi - lo)
            return len(box_min) - 1

        root = new_node(0, len(order))
        stack = [(root, 0, len(order))]
        while stack:
            node, lo, hi = stack.pop()
            if hi - lo <= leaf_size:
                continue
            idx = order[lo:hi]
            extent = centroids[idx].max(axis=0) - centroids[idx].min(axis=0)
            axis = int(np.argmax(extent))
            order[lo:hi] = idx[np.argsort(centroids[idx, axis], kind="stable")]
            mid = lo + (hi - lo) // 2
            left[node] = new_node(lo, mid)
            right[node] = new_node(mid, hi)
            count[node] = 0
            stack.append((right[node], mid, hi))
            stack.append((left[node], lo, mid))

        left_arr = np.array(left, dtype=np.int64)
        start_arr = np.array(start, dtype=np.int64)
        count_arr = np.array(count, dtype=np.int64)
        leaves = np.nonzero(left_arr < 0)[0]
        width = int(count_arr[leaves].max())
        leaf_triangles = np.full((len(leaves), width), -1, dtype=np.int64)
        leaf_center = np.empty((len(leaves), 3))
        leaf_radius = np.empty(len(leaves))
        for row, node in enumerate(leaves):
            members = order[start_arr[node]:start_arr[node] + count_arr[node]]
            leaf_triangles[row, : len(members)] = members
            corners = tri_verts[members].reshape(-1, 3)
            leaf_center[row] = 0.5 * (box_min[node] + box_max[node])
            leaf_radius[row] = np.sqrt(np.max(np.sum((corners - leaf_center[row]) ** 2, axis=1)))
        tri_radius = np.sqrt(np.max(np.sum((tri_verts - centroids[:, None, :]) ** 2, axis=2), axis=1))

        used = np.unique(mesh.triangles)
        logger.debug(
            f"BVH built: {len(box_min)} nodes, {len(leaves)} leaves over {mesh.triangle_count} triangles"
        )
        return cls(
            mesh=mesh,
            box_min=np.array(box_min),
            box_max=np.array(box_max),
            left=left_arr,
            right=np.array(right, dtype=np.int64),
            start=start_arr,
            count=count_arr,
            order=order.astype(np.int64),
            vertex_tree=cKDTree(mesh.vertices[used]),
            leaf_triangles=leaf_triangles,
            leaf_center=leaf_center,
            leaf_radius=leaf_radius,
            tri_radius=tri_radius,
        )

    @property
    def node_count(self) -> int:
        return len(self.box_min)

    def _box_distance_sq(self, points: np.ndarray, nodes: np.ndarray) -> np.ndarray:
        clamped = np.minimum(np.maximum(points, self.box_min[nodes]), self.box_max[nodes])
        d = points - clamped
        return d[:, 0] * d[:, 0] + d[:, 1] * d[:, 1] + d[:, 2] * d[:, 2]

    def query(self, points) -> ClosestHits:
        """Nearest triangle for every point."""
        points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        if self.mesh.triangle_count > SCREEN_TRIANGLE_LIMIT:
            return hits_for(self.mesh, points, self.traverse(points))
        best = np.empty(len(points), dtype=np.int64)
        for lo in range(0, len(points), SCREEN_BLOCK):
            best[lo:lo + SCREEN_BLOCK] = self.screen(points[lo:lo + SCREEN_BLOCK])
        return hits_for(self.mesh, points, best)

    def screen(self, points: np.ndarray) -> np.ndarray:
        """Nearest triangle indices by bound screening; exact, including the tie rule."""
        n = len(points)
        if n == 0:
            return np.empty(0, dtype=np.int64)
        # any referenced vertex lies on the surface, so its distance bounds the answer
        vertex_dist, _ = self.vertex_tree.query(points)
        upper = np.asarray(vertex_dist, dtype=np.float64) * (1.0 + _SCREEN_SLACK) + _SCREEN_SLACK

        # leaf spheres: |p - c| - r never exceeds the distance to any member triangle
        pp = np.sum(points * points, axis=1)
        cc = np.sum(self.leaf_center * self.leaf_center, axis=1)
        d2 = pp[:, None] + cc[None, :] - 2.0 * (points @ self.leaf_center.T)
        guard = _CANCELLATION * (pp.max() + cc.max() + 1.0)
        lower = np.sqrt(np.maximum(d2 - guard, 0.0)) - self.leaf_radius[None, :]
        point_idx, leaf_idx = np.nonzero(lower <= upper[:, None])

        width = self.leaf_triangles.shape[1]
        tri = self.leaf_triangles[leaf_idx].reshape(-1)
        point_idx = np.repeat(point_idx, width)
        valid = tri >= 0
        tri, point_idx = tri[valid], point_idx[valid]

        # disc bound: each triangle lies in the disc of radius r around its centroid in its plane
        p = points[point_idx]
        q = p - self.mesh.centroids[tri]
        normal = self.mesh.face_normals[tri]
        q2 = q[:, 0] * q[:, 0] + q[:, 1] * q[:, 1] + q[:, 2] * q[:, 2]
        h = np.abs(q[:, 0] * normal[:, 0] + q[:, 1] * normal[:, 1] + q[:, 2] * normal[:, 2])
        slack = _CANCELLATION * (q2 + 1.0)
        radial = np.sqrt(np.maximum(q2 - h * h - slack, 0.0))
        height = np.maximum(h - np.sqrt(slack), 0.0)
        beyond = np.maximum(radial - self.tri_radius[tri], 0.0)
        keep = height * height + beyond * beyond <= upper[point_idx] ** 2
        tri, point_idx, p = tri[keep], point_idx[keep], p[keep]

        a, b, c = (self.mesh.vertices[self.mesh.triangles[tri, k]] for k in range(3))
        _, _, dist_sq = closest_points_on_triangles(p, a, b, c)
        best = _segment_argmin(point_idx, tri, dist_sq, n)

        missing = np.nonzero(best < 0)[0]
        if missing.size:
            logger.debug(f"Screen left {missing.size} points without candidates; traversing")
            best[missing] = self.traverse(points[missing])
        return best

    def traverse(self, points: np.ndarray) -> np.ndarray:
        """Nearest triangle indices by level-synchronous traversal."""
        points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        n = len(points)
        vertex_dist, _ = self.vertex_tree.query(points)
        best_d2 = np.asarray(vertex_dist, dtype=np.float64) ** 2
        best_idx = np.full(n, -1, dtype=np.int64)

        pair_point = np.arange(n, dtype=np.int64)
        pair_node = np.zeros(n, dtype=np.int64)
        a_all, b_all, c_all = self.mesh.corners()

        while pair_point.size:
            lower = self._box_distance_sq(points[pair_point], pair_node)
            keep = lower <= _prune_bound(best_d2[pair_point])
            pair_point, pair_node = pair_point[keep], pair_node[keep]

            is_leaf = self.left[pair_node] < 0
            leaf_point, leaf_node = pair_point[is_leaf], pair_node[is_leaf]
            if leaf_point.size:
                counts = self.count[leaf_node]
                cand_point = np.repeat(leaf_point, counts)
                offsets = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
                cand_tri = self.order[np.repeat(self.start[leaf_node], counts) + offsets]
                _, _, d2 = closest_points_on_triangles(
                    points[cand_point], a_all[cand_tri], b_all[cand_tri], c_all[cand_tri]
                )
                # per-point lexicographic minimum of (d2, triangle index)
                ordering = np.lexsort((cand_tri, d2, cand_point))
                cand_point, cand_tri, d2 = cand_point[ordering], cand_tri[ordering], d2[ordering]
                first = np.ones(len(cand_point), dtype=bool)
                first[1:] = cand_point[1:] != cand_point[:-1]
                cp, ct, cd = cand_point[first], cand_tri[first], d2[first]
                better = (
                    (best_idx[cp] < 0)
                    | (cd < best_d2[cp])
                    | ((cd == best_d2[cp]) & (ct < best_idx[cp]))
                )
                best_d2[cp[better]] = cd[better]
                best_idx[cp[better]] = ct[better]

            inner_point, inner_node = pair_point[~is_leaf], pair_node[~is_leaf]
            pair_point = np.concatenate([inner_point, inner_point])
            pair_node = np.concatenate([self.left[inner_node], self.right[inner_node]])

        return best_idx


_INDEX_ATTR = "_bvh_index"


def bvh_for(mesh: TriMesh) -> BVH:
    """Build once per mesh object; the index is memoized on the mesh."""
    index = mesh.__dict__.get(_INDEX_ATTR)
    if index is None:
        index = BVH.build(mesh)
        mesh.__dict__[_INDEX_ATTR] = index
    return index


def closest_triangle(mesh: TriMesh, point) -> BarycentricHit:
    """Nearest triangle, clamped barycentrics and signed normal offset of one point."""
    if mesh.triangle_count == 0:
        raise InvalidInputError("Closest-triangle query on an empty mesh")
    return bvh_for(mesh).query(np.asarray(point, dtype=np.float64).reshape(1, 3)).hit(0)


def closest_triangles(mesh: TriMesh, points) -> ClosestHits:
    if mesh.triangle_count == 0:
        raise InvalidInputError("Closest-triangle query on an empty mesh")
    return bvh_for(mesh).query(points)
