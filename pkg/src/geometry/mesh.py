"""
TriMorph v2026 - Triangle Meshes
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from ..errors import InvalidInputError

MIN_TRIANGLE_AREA = 1e-12


@dataclass(frozen=True, eq=False)
class TriMesh:
    """Immutable triangle mesh; face normals follow the right-hand rule."""
    vertices: np.ndarray
    triangles: np.ndarray
    face_normals: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        vertices = np.array(self.vertices, dtype=np.float64).reshape(-1, 3)
        triangles = np.array(self.triangles, dtype=np.int64).reshape(-1, 3)
        if triangles.size and (triangles.min() < 0 or triangles.max() >= len(vertices)):
            raise InvalidInputError(
                f"Triangle index out of range for {len(vertices)} vertices"
            )
        vertices.setflags(write=False)
        triangles.setflags(write=False)
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "triangles", triangles)

        cross = self._cross()
        doubled_area = np.linalg.norm(cross, axis=1)
        degenerate = np.nonzero(0.5 * doubled_area <= MIN_TRIANGLE_AREA)[0]
        if degenerate.size:
            raise InvalidInputError(f"Degenerate triangles: {degenerate[:10].tolist()}")
        normals = cross / doubled_area[:, None] if len(triangles) else cross
        normals.setflags(write=False)
        object.__setattr__(self, "face_normals", normals)

    def _cross(self) -> np.ndarray:
        a, b, c = self.corners()
        return np.cross(b - a, c - a)

    @property
    def vertex_count(self) -> int:
        return len(self.vertices)

    @property
    def triangle_count(self) -> int:
        return len(self.triangles)

    def corners(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        tri = self.vertices[self.triangles]
        return tri[:, 0], tri[:, 1], tri[:, 2]

    @cached_property
    def centroids(self) -> np.ndarray:
        return self.vertices[self.triangles].mean(axis=1)

    @cached_property
    def areas(self) -> np.ndarray:
        return 0.5 * np.linalg.norm(self._cross(), axis=1)

    def max_edge_length(self) -> float:
        a, b, c = self.corners()
        edges = np.concatenate([b - a, c - b, a - c])
        return float(np.linalg.norm(edges, axis=1).max()) if len(edges) else 0.0

    def with_vertices(self, vertices: np.ndarray) -> "TriMesh":
        return TriMesh(vertices, self.triangles)

    def translated(self, t) -> "TriMesh":
        return self.with_vertices(self.vertices + np.asarray(t, dtype=np.float64))

    def transformed(self, rotation, translation) -> "TriMesh":
        """Rigid transform x -> R x + t applied to every vertex."""
        rotation = np.asarray(rotation, dtype=np.float64)
        return self.with_vertices(self.vertices @ rotation.T + np.asarray(translation, dtype=np.float64))

    def mirrored_x(self) -> "TriMesh":
        """Reflection across x = 0 with winding reversed so normals stay outward."""
        return TriMesh(self.vertices * np.array([-1.0, 1.0, 1.0]), self.triangles[:, [0, 2, 1]])

    def same_topology(self, other: "TriMesh") -> bool:
        return self.triangles.shape == other.triangles.shape and bool(
            np.array_equal(self.triangles, other.triangles)
        )


def icosphere(subdivisions: int = 2, radius: float = 1.0) -> TriMesh:
    """Loop-subdivided icosahedron; 20 * 4**subdivisions outward-facing triangles."""
    phi = (1.0 + 5.0 ** 0.5) / 2.0
    verts = [
        (-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
        (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
        (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1),
    ]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    vertices = [np.array(v, dtype=np.float64) / np.linalg.norm(v) for v in verts]

    for _ in range(subdivisions):
        midpoint_cache: dict[tuple[int, int], int] = {}

        def midpoint(i: int, j: int) -> int:
            key = (min(i, j), max(i, j))
            if key not in midpoint_cache:
                m = vertices[i] + vertices[j]
                vertices.append(m / np.linalg.norm(m))
                midpoint_cache[key] = len(vertices) - 1
            return midpoint_cache[key]

        refined = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            refined.extend([(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)])
        faces = refined

    return TriMesh(np.array(vertices) * radius, np.array(faces, dtype=np.int64))
