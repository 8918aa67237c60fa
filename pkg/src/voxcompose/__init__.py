"""voxcompose: compositional 3D modeling via sparse latent voxel volumes.

Paint keep/drop masks on meshes, place segments with affine transforms,
union their latent voxel encodings on a fixed-resolution grid, and decode a
single watertight surface. Includes the transform-sweep fidelity benchmark
and an HTTP compose service.
"""

from .geometry import (
    AABB,
    EmptySelectionError,
    GeometryError,
    MeshParseError,
    Transform3,
    TriMesh,
    apply_transform,
    extract_submesh,
    is_watertight,
    load_mesh,
    merge_meshes,
    normalize_unit_bbox,
    sample_surface,
    save_mesh,
)
from .segmentation import BrushStroke, apply_stroke, mask_stats, set_all
from .shapes import SHAPE_KINDS, gen_shape

__version__ = "0.1.0"
