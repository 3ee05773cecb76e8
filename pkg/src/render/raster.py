"""
TriMorph v2026 - Mesh Coordinate Rasterizer
Z-buffered rasterization of a mesh textured with its world-space vertex
coordinates. Background pixels hold a fixed sentinel.
"""

import numpy as np

from utils.config import get_config

from ..assets.image import ImageBuffer
from ..geometry.mesh import TriMesh
from .camera import Camera

NEAR_EPSILON = 1e-6


def _owns_edge(dx: float, dy: float) -> bool:
    # top-left rule: a shared edge runs in opposite directions in its two triangles
    return dy > 0 or (dy == 0 and dx < 0)


def render_mesh_coords(mesh: TriMesh, cam: Camera) -> ImageBuffer:
    """(H, W, 3) perspective-correct world coordinates of the nearest surface."""
    sentinel = get_config().BACKGROUND_SENTINEL
    image = np.full((cam.height, cam.width, 3), sentinel, dtype=np.float64)
    zbuf = np.full((cam.height, cam.width), np.inf)

    local = cam.world_to_camera(mesh.vertices)
    z = local[:, 2]
    safe_z = np.where(z > NEAR_EPSILON, z, 1.0)
    screen = np.stack(
        [cam.focal * local[:, 0] / safe_z + cam.cx, cam.focal * local[:, 1] / safe_z + cam.cy], axis=1
    )

    for tri in mesh.triangles:
        # triangles crossing the eye plane are dropped rather than clipped
        if np.any(z[tri] <= NEAR_EPSILON):
            continue
        a, b, c = (int(i) for i in tri)
        area = (screen[b, 0] - screen[a, 0]) * (screen[c, 1] - screen[a, 1]) - (
            screen[b, 1] - screen[a, 1]
        ) * (screen[c, 0] - screen[a, 0])
        if area == 0:
            continue
        if area < 0:
            b, c = c, b
            area = -area
        corners = (a, b, c)
        lo = screen[list(corners)].min(axis=0)
        hi = screen[list(corners)].max(axis=0)
        j0, j1 = max(int(np.ceil(lo[0] - 0.5)), 0), min(int(np.floor(hi[0] - 0.5)), cam.width - 1)
        i0, i1 = max(int(np.ceil(lo[1] - 0.5)), 0), min(int(np.floor(hi[1] - 0.5)), cam.height - 1)
        if j0 > j1 or i0 > i1:
            continue

        rows, cols = np.meshgrid(np.arange(i0, i1 + 1), np.arange(j0, j1 + 1), indexing="ij")
        px, py = cols + 0.5, rows + 0.5
        bary = []
        inside = np.ones(px.shape, dtype=bool)
        # edge opposite each corner: (b, c) for a, (c, a) for b, (a, b) for c
        for start, stop in ((corners[1], corners[2]), (corners[2], corners[0]), (corners[0], corners[1])):
            dx = screen[stop, 0] - screen[start, 0]
            dy = screen[stop, 1] - screen[start, 1]
            edge = dx * (py - screen[start, 1]) - dy * (px - screen[start, 0])
            inside &= (edge > 0) | ((edge == 0) & _owns_edge(dx, dy))
            bary.append(edge / area)
        if not inside.any():
            continue

        inv_z = sum(bary[k] / z[corners[k]] for k in range(3))
        depth = 1.0 / inv_z
        rr, cc = rows[inside], cols[inside]
        closer = depth[inside] < zbuf[rr, cc]
        if not closer.any():
            continue
        rr, cc = rr[closer], cc[closer]
        weights = [(bary[k] / z[corners[k]])[inside][closer] for k in range(3)]
        norm = weights[0] + weights[1] + weights[2]
        world = sum(weights[k][:, None] * mesh.vertices[corners[k]] for k in range(3)) / norm[:, None]
        zbuf[rr, cc] = depth[inside][closer]
        image[rr, cc] = world
    return ImageBuffer(image)


def mirror_mesh_coords(rdr: ImageBuffer) -> ImageBuffer:
    """Coordinate image of the x-mirrored scene seen by the mirrored camera."""
    pixels = rdr.pixels[:, ::-1, :].astype(np.float64)
    covered = pixels[:, :, 0] != np.float32(get_config().BACKGROUND_SENTINEL)
    pixels[:, :, 0] = np.where(covered, -pixels[:, :, 0], pixels[:, :, 0])
    return ImageBuffer(pixels)
