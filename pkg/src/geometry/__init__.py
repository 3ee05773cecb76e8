"""TriMorph v2026 - Geometry Module"""

from .mesh import TriMesh, icosphere

from .closest import (
    BarycentricHit,
    ClosestHits,
    closest_points_on_triangles,
    closest_triangles_bruteforce,
)

from .bvh import BVH, bvh_for, closest_triangle, closest_triangles

from .surface_field import SurfaceField, deform

from .morph import (
    MorphParams,
    ToyMorphModel,
    morph,
    canonical_params,
    canonical_mesh,
    build_toy_morph_model,
    save_morph_model,
    load_morph_model,
    surface_field_for,
)
