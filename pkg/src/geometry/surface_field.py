"""
TriMorph v2026 - Surface-Field Deformation
Maps points near the observation mesh to the corresponding points near the
canonical mesh: barycentric transfer on the nearest triangle plus the signed
normal offset carried along the canonical face normal.
"""

from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidInputError
from .bvh import BVH, bvh_for
from .closest import ClosestHits
from .mesh import TriMesh


@dataclass(frozen=True, eq=False)
class SurfaceField:
    """Observation/canonical mesh pair sharing one topology."""
    observation: TriMesh
    canonical: TriMesh
    index: BVH = field(init=False, repr=False)

    def __post_init__(self):
        if self.observation.triangle_count == 0:
            raise InvalidInputError("Surface field needs a non-empty observation mesh")
        if not self.observation.same_topology(self.canonical):
            raise InvalidInputError(
                "Observation and canonical meshes must share triangle count and indices"
            )
        object.__setattr__(self, "index", bvh_for(self.observation))

    @classmethod
    def identity(cls, mesh: TriMesh) -> "SurfaceField":
        return cls(mesh, mesh)

    @property
    def is_identity(self) -> bool:
        return self.observation is self.canonical or bool(
            np.array_equal(self.observation.vertices, self.canonical.vertices)
        )

    def hits(self, points: np.ndarray) -> ClosestHits:
        return self.index.query(points)

    def deform_points(self, points) -> np.ndarray:
        """Batched deformation of an (..., 3) array."""
        points = np.asarray(points, dtype=np.float64)
        if self.is_identity:
            return points.copy()
        flat = points.reshape(-1, 3)
        hits = self.index.query(flat)
        tri = self.canonical.triangles[hits.triangle_index]
        canon = self.canonical.vertices
        uvw = hits.uvw
        anchor = (
            uvw[:, 0:1] * canon[tri[:, 0]]
            + uvw[:, 1:2] * canon[tri[:, 1]]
            + uvw[:, 2:3] * canon[tri[:, 2]]
        )
        moved = anchor + hits.offset[:, None] * self.canonical.face_normals[hits.triangle_index]
        return moved.reshape(points.shape)


def deform(sf: SurfaceField, x) -> np.ndarray:
    """Deform a single 3-vector."""
    return sf.deform_points(np.asarray(x, dtype=np.float64).reshape(1, 3))[0]
