"""
TriMorph v2026 - Linear Toy Morphable Model
Stands in for a parametric head model: vertices are the template plus linear
shape, expression and pose displacements. No skinning.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from ..assets.rng import RngStream
from ..assets.tensor_io import read_tensor_dir, write_tensor_dir
from ..errors import InvalidInputError
from .mesh import TriMesh, icosphere
from .surface_field import SurfaceField

logger = logging.getLogger(__name__)

DEFAULT_SHAPE_DIM = 100
DEFAULT_POSE_DIM = 6
DEFAULT_EXPR_DIM = 50


@dataclass(frozen=True)
class MorphParams:
    """Shape (beta), pose (theta) and expression (psi) coefficients."""
    beta: np.ndarray
    theta: np.ndarray
    psi: np.ndarray

    def __post_init__(self):
        for name in ("beta", "theta", "psi"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.float64).reshape(-1))

    @classmethod
    def zeros(cls, shape_dim: int, pose_dim: int, expr_dim: int) -> "MorphParams":
        return cls(np.zeros(shape_dim), np.zeros(pose_dim), np.zeros(expr_dim))

    def to_dict(self) -> dict:
        return {"beta": self.beta.tolist(), "theta": self.theta.tolist(), "psi": self.psi.tolist()}


@dataclass(frozen=True, eq=False)
class ToyMorphModel:
    """Template mesh plus flattened (3m x dim) displacement bases."""
    template: TriMesh
    shape_basis: np.ndarray
    expr_basis: np.ndarray
    pose_basis: np.ndarray
    jaw_open: np.ndarray

    def __post_init__(self):
        rows = 3 * self.template.vertex_count
        for name in ("shape_basis", "expr_basis", "pose_basis"):
            basis = np.asarray(getattr(self, name), dtype=np.float64)
            if basis.ndim != 2 or basis.shape[0] != rows:
                raise InvalidInputError(f"{name} must have {rows} rows, got {basis.shape}")
            object.__setattr__(self, name, basis)
        jaw = np.asarray(self.jaw_open, dtype=np.float64).reshape(-1)
        if jaw.size != rows:
            raise InvalidInputError(f"jaw_open must have {rows} entries, got {jaw.size}")
        object.__setattr__(self, "jaw_open", jaw)

    @property
    def shape_dim(self) -> int:
        return self.shape_basis.shape[1]

    @property
    def pose_dim(self) -> int:
        return self.pose_basis.shape[1]

    @property
    def expr_dim(self) -> int:
        return self.expr_basis.shape[1]

    def zero_params(self) -> MorphParams:
        return MorphParams.zeros(self.shape_dim, self.pose_dim, self.expr_dim)

    def check(self, params: MorphParams):
        expected = (self.shape_dim, self.pose_dim, self.expr_dim)
        got = (params.beta.size, params.theta.size, params.psi.size)
        if expected != got:
            raise InvalidInputError(f"Morph params (beta, theta, psi) dims {got} != model {expected}")


def morph(model: ToyMorphModel, params: MorphParams) -> TriMesh:
    """template + S beta + E psi + P theta, topology copied, normals recomputed."""
    model.check(params)
    flat = (
        model.template.vertices.reshape(-1)
        + model.shape_basis @ params.beta
        + model.expr_basis @ params.psi
        + model.pose_basis @ params.theta
    )
    return model.template.with_vertices(flat.reshape(-1, 3))


def canonical_params(model: ToyMorphModel) -> MorphParams:
    """All coefficients zero."""
    return model.zero_params()


def canonical_mesh(model: ToyMorphModel) -> TriMesh:
    """Template with the jaw left open."""
    return model.template.with_vertices(
        (model.template.vertices.reshape(-1) + model.jaw_open).reshape(-1, 3)
    )


def _polynomial_features(v: np.ndarray) -> np.ndarray:
    x, y, z = v[:, 0], v[:, 1], v[:, 2]
    return np.stack([np.ones_like(x), x, y, z, x * x, y * y, z * z, x * y, x * z, y * z], axis=1)


def build_toy_morph_model(
    seed: int = 0,
    subdivisions: int = 2,
    radii: tuple[float, float, float] = (0.55, 0.7, 0.6),
    shape_dim: int = DEFAULT_SHAPE_DIM,
    pose_dim: int = DEFAULT_POSE_DIM,
    expr_dim: int = DEFAULT_EXPR_DIM,
    shape_scale: float = 0.01,
    expr_scale: float = 0.01,
    jaw_scale: float = 0.08,
) -> ToyMorphModel:
    """Ellipsoidal head with smooth random bases; deterministic per seed."""
    sphere = icosphere(subdivisions)
    unit = sphere.vertices
    template = sphere.with_vertices(unit * np.asarray(radii))
    features = _polynomial_features(unit)
    rng = RngStream(seed).derive("toy-morph-model")

    def normal_field_basis(dim: int, scale: float, label: str) -> np.ndarray:
        coeffs, _ = rng.derive(label).normal((features.shape[1], dim))
        coeffs /= np.sqrt(features.shape[1])
        amplitude = features @ coeffs  # (m, dim)
        return (unit[:, :, None] * amplitude[:, None, :]).reshape(-1, dim) * scale

    shape_basis = normal_field_basis(shape_dim, shape_scale, "shape")
    expr_basis = normal_field_basis(expr_dim, expr_scale, "expression")

    # pose: linearized global rotation (omega x v) then lower-face articulation
    pose = np.zeros((template.vertex_count, 3, pose_dim))
    verts = template.vertices
    lower = np.clip((-unit[:, 1] - 0.1) / 0.5, 0.0, 1.0)
    for k in range(pose_dim):
        if k < 3:
            axis = np.zeros(3)
            axis[k] = 0.1
            pose[:, :, k] = np.cross(axis, verts)
        else:
            direction = np.zeros(3)
            direction[(k - 3) % 3] = 0.05
            pose[:, :, k] = lower[:, None] * direction
    pose_basis = pose.reshape(-1, pose_dim)

    jaw = (lower[:, None] * np.array([0.0, -1.0, 0.4]) * jaw_scale).reshape(-1)
    logger.debug(f"Toy morph model: {template.vertex_count} vertices, seed {seed}")
    return ToyMorphModel(template, shape_basis, expr_basis, pose_basis, jaw)


def save_morph_model(directory: Union[str, Path], model: ToyMorphModel):
    tensors = {
        "template_vertices": model.template.vertices,
        "template_triangles": model.template.triangles.astype(np.float32),
        "shape_basis": model.shape_basis,
        "expr_basis": model.expr_basis,
        "pose_basis": model.pose_basis,
        "jaw_open": model.jaw_open,
    }
    manifest = {
        "kind": "toy_morph_model",
        "dims": {"beta": model.shape_dim, "theta": model.pose_dim, "psi": model.expr_dim},
    }
    write_tensor_dir(directory, tensors, manifest)


def load_morph_model(directory: Union[str, Path]) -> ToyMorphModel:
    tensors, manifest = read_tensor_dir(directory)
    if manifest.get("kind") != "toy_morph_model":
        raise InvalidInputError(f"{directory} is not a morph model directory")
    template = TriMesh(
        tensors["template_vertices"].astype(np.float64),
        np.rint(tensors["template_triangles"]).astype(np.int64),
    )
    return ToyMorphModel(
        template,
        tensors["shape_basis"].astype(np.float64),
        tensors["expr_basis"].astype(np.float64),
        tensors["pose_basis"].astype(np.float64),
        tensors["jaw_open"].astype(np.float64),
    )


def surface_field_for(model: ToyMorphModel, params: MorphParams) -> SurfaceField:
    """Deformation from the morphed observation mesh to the canonical mesh."""
    return SurfaceField(morph(model, params), canonical_mesh(model))
