from .types import (
    BinaryMask,
    CameraModel,
    Contour,
    DepthMap,
    ImageGray,
    ImageRGB,
    ParseError,
    StructuringElement,
    TriangleMesh,
)
from .camera import (
    backproject_pixels,
    pixel_ray_grid,
    pixel_to_ray,
    project,
    project_points,
)
from .io import (
    load_cameras_json,
    load_depth_pfm,
    load_image_png,
    load_mask_png,
    load_mesh_ply,
    save_cameras_json,
    save_depth_pfm,
    save_image_png,
    save_mask_png,
    save_mesh_ply,
)

__all__ = [
    "BinaryMask",
    "CameraModel",
    "Contour",
    "DepthMap",
    "ImageGray",
    "ImageRGB",
    "ParseError",
    "StructuringElement",
    "TriangleMesh",
    "backproject_pixels",
    "pixel_ray_grid",
    "pixel_to_ray",
    "project",
    "project_points",
    "load_cameras_json",
    "load_depth_pfm",
    "load_image_png",
    "load_mask_png",
    "load_mesh_ply",
    "save_cameras_json",
    "save_depth_pfm",
    "save_image_png",
    "save_mask_png",
    "save_mesh_ply",
]
