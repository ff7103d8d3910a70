"""CPU data-parallel volume raycaster for CT-style voxel datasets."""

from .volume import (
    InterpolationMode,
    PhantomKind,
    Volume,
    lerp,
    load_raw_slices,
    make_phantom,
    sample,
    save_raw_slices,
)
from .gradients import (
    EPS_GRADIENT,
    OperatorKind,
    central_difference,
    gradient,
    normalize_gradient,
    sobel3d,
    zucker_hummel,
)
from .image_io import png_bytes, read_ppm, write_png, write_ppm
from .octree import Octree, OctreeNode, adaptive_step, build_octree, skip_empty
from .raycast import (
    Camera,
    ClipBox,
    FrameBuffer,
    Hit,
    Light,
    Ray,
    RenderMode,
    RenderSettings,
    Scene,
    ThresholdWindow,
    TransferFunction,
    composite_step,
    default_scene,
    generate_ray,
    hounsfield,
    intersect_clipbox,
    march_surface,
    refine_hitpoint,
    render_frame,
    shade,
    transfer,
)

__version__ = "0.1.0"

__all__ = [
    "Camera",
    "ClipBox",
    "EPS_GRADIENT",
    "FrameBuffer",
    "Hit",
    "InterpolationMode",
    "Light",
    "Octree",
    "OctreeNode",
    "OperatorKind",
    "PhantomKind",
    "Ray",
    "RenderMode",
    "RenderSettings",
    "Scene",
    "ThresholdWindow",
    "TransferFunction",
    "Volume",
    "adaptive_step",
    "build_octree",
    "central_difference",
    "composite_step",
    "default_scene",
    "generate_ray",
    "gradient",
    "hounsfield",
    "intersect_clipbox",
    "lerp",
    "load_raw_slices",
    "make_phantom",
    "march_surface",
    "normalize_gradient",
    "png_bytes",
    "read_ppm",
    "refine_hitpoint",
    "render_frame",
    "sample",
    "save_raw_slices",
    "shade",
    "skip_empty",
    "sobel3d",
    "transfer",
    "write_png",
    "write_ppm",
    "zucker_hummel",
    "__version__",
]
