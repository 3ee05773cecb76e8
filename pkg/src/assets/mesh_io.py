"""
TriMorph v2026 - OBJ Subset
Only `v` and triangular `f` records carry geometry; normals, texture
coordinates, groups and comments are skipped.
"""

import logging
from pathlib import Path
from typing import Union

import numpy as np

from ..errors import InvalidInputError, UnsupportedGeometryError
from ..geometry.mesh import TriMesh

logger = logging.getLogger(__name__)

IGNORED_RECORDS = {"vn", "vt", "o", "g", "s", "usemtl", "mtllib"}


def _face_index(token: str, vertex_count: int, lineno: int) -> int:
    head = token.split("/")[0]
    try:
        index = int(head)
    except ValueError as e:
        raise InvalidInputError(f"line {lineno}: bad face index {token!r}") from e
    if index < 1 or index > vertex_count:
        raise InvalidInputError(
            f"line {lineno}: face index {index} outside 1..{vertex_count}"
        )
    return index - 1


def _coordinate(token: str, lineno: int) -> float:
    try:
        return float(token)
    except ValueError as e:
        raise InvalidInputError(f"line {lineno}: bad vertex coordinate {token!r}") from e


def read_obj(path: Union[str, Path]) -> TriMesh:
    """Vertices and triangles in declaration order."""
    vertices: list[tuple[float, float, float]] = []
    faces: list[tuple[int, int, int]] = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            record = parts[0]
            if record == "v":
                if len(parts) < 4:
                    raise InvalidInputError(f"line {lineno}: vertex needs three coordinates")
                x, y, z = (_coordinate(tok, lineno) for tok in parts[1:4])
                vertices.append((x, y, z))
            elif record == "f":
                if len(parts) != 4:
                    raise UnsupportedGeometryError(
                        f"line {lineno}: only triangular faces are supported ({len(parts) - 1} corners)"
                    )
                faces.append(tuple(_face_index(tok, len(vertices), lineno) for tok in parts[1:]))
            elif record in IGNORED_RECORDS:
                continue
            else:
                raise UnsupportedGeometryError(f"line {lineno}: unsupported record {record!r}")

    logger.debug(f"Read {len(vertices)} vertices, {len(faces)} faces from {path}")
    return TriMesh(
        np.array(vertices, dtype=np.float64).reshape(-1, 3),
        np.array(faces, dtype=np.int64).reshape(-1, 3),
    )


def write_obj(path: Union[str, Path], mesh: TriMesh):
    lines = [f"v {x!r} {y!r} {z!r}" for x, y, z in mesh.vertices.tolist()]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.triangles.tolist()]
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
