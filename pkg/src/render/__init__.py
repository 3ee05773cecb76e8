"""TriMorph v2026 - Rendering Module"""

from .camera import (
    Camera,
    RayBatch,
    make_rays,
    orbit_camera,
    neutral_camera,
    camera_vector,
)

from .volume import (
    QuadratureSpec,
    MarchResult,
    MarchCache,
    NeuralVolume,
    RenderOutput,
    sample_depths,
    composite,
    march,
    march_backward,
    render_rays,
    render_rays_backward,
    render_ray,
    render_image,
)

from .raster import render_mesh_coords, mirror_mesh_coords
