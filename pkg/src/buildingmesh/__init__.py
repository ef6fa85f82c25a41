"""Building-mesh extraction toolkit: mask refinement, masked depth smoothing,
TSDF fusion with marching cubes, mesh cleanup, quality metrics, and analytic
test scenes, plus the `gbm` command line."""

from .core import (
    BinaryMask,
    CameraModel,
    Contour,
    DepthMap,
    ImageGray,
    ImageRGB,
    ParseError,
    StructuringElement,
    TriangleMesh,
    backproject_pixels,
    load_cameras_json,
    load_depth_pfm,
    load_image_png,
    load_mask_png,
    load_mesh_ply,
    pixel_to_ray,
    project_points,
    save_cameras_json,
    save_depth_pfm,
    save_image_png,
    save_mask_png,
    save_mesh_ply,
)
from .depthops import SmoothParams, clamp_range, smooth_depth
from .fusion import (
    FusionParams,
    TsdfVolume,
    derive_bounds,
    integrate,
    integrate_sequence,
    marching_cubes,
)
from .maskops import (
    EmptyMaskError,
    RefineParams,
    dilate,
    erode,
    extract_contours,
    fill_contour,
    rdp_simplify,
    refine_mask,
)
from .meshops import (
    MeshClusterReport,
    clean_mesh,
    cluster_connected_triangles,
    decimate_vertex_clustering,
    keep_largest_cluster,
    remove_degenerate_triangles,
    remove_unreferenced_vertices,
)
from .metrics import (
    SsimParams,
    UnsupportedMetricError,
    VideoScore,
    lpips,
    luminance,
    psnr,
    ssim,
    video_ssim,
)
from .synth import (
    Box,
    HorizontalPlane,
    OrbitSpec,
    PrimitiveScene,
    Sphere,
    box_scene,
    corrupt_mask,
    default_orbit,
    make_scene_dir,
    orbit_cameras,
    render,
    render_mesh_silhouette,
    sphere_scene,
)

__version__ = "0.1.0"

__all__ = [
    "BinaryMask",
    "Box",
    "CameraModel",
    "Contour",
    "DepthMap",
    "EmptyMaskError",
    "FusionParams",
    "HorizontalPlane",
    "ImageGray",
    "ImageRGB",
    "MeshClusterReport",
    "OrbitSpec",
    "ParseError",
    "PrimitiveScene",
    "RefineParams",
    "SmoothParams",
    "Sphere",
    "SsimParams",
    "StructuringElement",
    "TriangleMesh",
    "TsdfVolume",
    "UnsupportedMetricError",
    "VideoScore",
    "backproject_pixels",
    "box_scene",
    "clamp_range",
    "clean_mesh",
    "cluster_connected_triangles",
    "corrupt_mask",
    "decimate_vertex_clustering",
    "default_orbit",
    "derive_bounds",
    "dilate",
    "erode",
    "extract_contours",
    "fill_contour",
    "integrate",
    "integrate_sequence",
    "keep_largest_cluster",
    "load_cameras_json",
    "load_depth_pfm",
    "load_image_png",
    "load_mask_png",
    "load_mesh_ply",
    "lpips",
    "luminance",
    "make_scene_dir",
    "marching_cubes",
    "orbit_cameras",
    "pixel_to_ray",
    "project_points",
    "psnr",
    "rdp_simplify",
    "refine_mask",
    "remove_degenerate_triangles",
    "remove_unreferenced_vertices",
    "render",
    "render_mesh_silhouette",
    "save_cameras_json",
    "save_depth_pfm",
    "save_image_png",
    "save_mask_png",
    "save_mesh_ply",
    "smooth_depth",
    "sphere_scene",
    "ssim",
    "video_ssim",
]
