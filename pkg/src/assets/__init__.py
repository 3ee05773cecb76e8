"""TriMorph v2026 - Assets Module"""

from .rng import RngStream, gaussian

from .tensor_io import (
    TensorBlob,
    write_tensor,
    read_tensor,
    save_array,
    load_array,
    write_tensor_dir,
    read_tensor_dir,
)

from .image import (
    ImageBuffer,
    write_ppm,
    tile_images,
    psnr,
)

from .mesh_io import read_obj, write_obj
