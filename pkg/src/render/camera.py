"""
TriMorph v2026 - Pinhole Cameras and Rays
Camera frame: +x right, +y down (image rows), +z along the optical axis.
`rotation` maps camera-frame directions to world space; `translation` is the eye.
"""

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from scipy.spatial.transform import Rotation

from ..errors import InvalidInputError

WORLD_UP = np.array([0.0, 1.0, 0.0])
MIRROR_X = np.diag([-1.0, 1.0, 1.0])


@dataclass(frozen=True, eq=False)
class Camera:
    focal: float
    cx: float
    cy: float
    width: int
    height: int
    rotation: np.ndarray
    translation: np.ndarray
    t_near: float
    t_far: float

    def __post_init__(self):
        rotation = np.asarray(self.rotation, dtype=np.float64)
        translation = np.asarray(self.translation, dtype=np.float64).reshape(-1)
        if rotation.shape != (3, 3) or translation.size != 3:
            raise InvalidInputError("Camera pose needs a 3x3 rotation and a 3-vector translation")
        if not np.allclose(rotation.T @ rotation, np.eye(3), atol=1e-6) or np.linalg.det(rotation) < 0:
            raise InvalidInputError("Camera rotation must be orthonormal with det +1")
        if not 0.0 < self.t_near < self.t_far:
            raise InvalidInputError(f"Need 0 < t_near < t_far, got {self.t_near}, {self.t_far}")
        if self.width < 1 or self.height < 1 or self.focal <= 0:
            raise InvalidInputError("Camera needs positive resolution and focal length")
        object.__setattr__(self, "rotation", rotation)
        object.__setattr__(self, "translation", translation)

    @property
    def pixel_count(self) -> int:
        return self.width * self.height

    @property
    def optical_axis(self) -> np.ndarray:
        return self.rotation[:, 2]

    @classmethod
    def look_at(
        cls,
        eye,
        target,
        width: int,
        height: int,
        focal: Optional[float] = None,
        t_near: float = 1.2,
        t_far: float = 4.2,
    ) -> "Camera":
        """Camera at `eye` whose optical axis passes through `target`; world +y is up."""
        eye = np.asarray(eye, dtype=np.float64)
        forward = np.asarray(target, dtype=np.float64) - eye
        norm = np.linalg.norm(forward)
        if norm == 0:
            raise InvalidInputError("Eye and target coincide")
        forward = forward / norm
        right = np.cross(-WORLD_UP, forward)
        if np.linalg.norm(right) < 1e-9:
            raise InvalidInputError("Viewing direction is parallel to the up axis")
        right /= np.linalg.norm(right)
        down = np.cross(forward, right)
        return cls(
            focal=float(width if focal is None else focal),
            cx=width / 2.0,
            cy=height / 2.0,
            width=width,
            height=height,
            rotation=np.stack([right, down, forward], axis=1),
            translation=eye,
            t_near=t_near,
            t_far=t_far,
        )

    @classmethod
    def from_axis_angle(
        cls,
        axis_angle,
        translation,
        width: int,
        height: int,
        focal: float,
        t_near: float,
        t_far: float,
    ) -> "Camera":
        rotation = Rotation.from_rotvec(np.asarray(axis_angle, dtype=np.float64)).as_matrix()
        return cls(focal, width / 2.0, height / 2.0, width, height, rotation, translation, t_near, t_far)

    def mirrored(self) -> "Camera":
        """Mirror across the x = 0 plane; pixel column j maps to column W - 1 - j."""
        if self.cx != self.width / 2.0:
            raise InvalidInputError("Mirroring needs a horizontally centered principal point")
        return replace(
            self,
            rotation=MIRROR_X @ self.rotation @ MIRROR_X,
            translation=MIRROR_X @ self.translation,
        )

    def with_resolution(self, width: int, height: int) -> "Camera":
        scale = width / self.width
        return replace(
            self,
            width=width,
            height=height,
            focal=self.focal * scale,
            cx=self.cx * scale,
            cy=self.cy * height / self.height,
        )

    def world_to_camera(self, points: np.ndarray) -> np.ndarray:
        return (np.asarray(points, dtype=np.float64) - self.translation) @ self.rotation


def orbit_camera(
    azimuth: float,
    elevation: float,
    distance: float,
    width: int,
    height: int,
    focal: Optional[float] = None,
    t_near: float = 1.2,
    t_far: float = 4.2,
) -> Camera:
    """Camera on a sphere around the origin; azimuth 0, elevation 0 sits on the -z axis."""
    eye = distance * np.array(
        [
            np.sin(azimuth) * np.cos(elevation),
            np.sin(elevation),
            -np.cos(azimuth) * np.cos(elevation),
        ]
    )
    return Camera.look_at(eye, np.zeros(3), width, height, focal, t_near, t_far)


def neutral_camera(resolution: int, distance: float = 2.7, t_near: float = 1.2, t_far: float = 4.2) -> Camera:
    """Frontal camera used for canonical renders; focal equals the image width."""
    return orbit_camera(0.0, 0.0, distance, resolution, resolution, None, t_near, t_far)


def camera_vector(cam: Camera) -> np.ndarray:
    """12-d extrinsic condition: flattened rotation then eye position."""
    return np.concatenate([cam.rotation.reshape(-1), cam.translation])


@dataclass(frozen=True)
class RayBatch:
    origins: np.ndarray
    directions: np.ndarray
    pixels: np.ndarray

    def __post_init__(self):
        norms = np.linalg.norm(self.directions, axis=1)
        if not np.allclose(norms, 1.0, atol=1e-6):
            raise InvalidInputError("Ray directions must be unit length")

    def __len__(self) -> int:
        return len(self.origins)

    def slice(self, start: int, stop: int) -> "RayBatch":
        return RayBatch(self.origins[start:stop], self.directions[start:stop], self.pixels[start:stop])


def make_rays(cam: Camera) -> RayBatch:
    """One ray per pixel center, row-major; pixels holds (row, column)."""
    rows, cols = np.meshgrid(np.arange(cam.height), np.arange(cam.width), indexing="ij")
    rows, cols = rows.reshape(-1), cols.reshape(-1)
    local = np.stack(
        [
            (cols + 0.5 - cam.cx) / cam.focal,
            (rows + 0.5 - cam.cy) / cam.focal,
            np.ones(rows.size),
        ],
        axis=1,
    )
    directions = local @ cam.rotation.T
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    origins = np.broadcast_to(cam.translation, directions.shape).copy()
    return RayBatch(origins, directions, np.stack([rows, cols], axis=1))
