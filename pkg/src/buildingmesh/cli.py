"""`gbm` command line: per-stage tools plus the one-shot `run` pipeline.

Exit codes: 0 success, 2 input error, 3 stage failure, 4 empty mask after
morphology.  `run` reads a JSON config; explicit flags win over the file.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .core.io import (
    load_cameras_json,
    load_depth_pfm,
    load_image_png,
    load_mask_png,
    load_mesh_ply,
    save_depth_pfm,
    save_mask_png,
    save_mesh_ply,
)
from .core.types import BinaryMask, ImageGray, ParseError
from .depthops import SmoothParams, clamp_range, smooth_depth
from .fusion import FusionParams, integrate_sequence, marching_cubes, point_bounds
from .maskops import EmptyMaskError, RefineParams, refine_mask
from .meshops import clean_mesh, decimate_vertex_clustering
from .metrics import SsimParams, psnr, ssim, video_ssim
from .synth import (
    box_scene,
    default_orbit,
    make_scene_dir,
    render_mesh_silhouette,
    sphere_scene,
)


class StageError(RuntimeError):
    def __init__(self, stage: str, message: str, frame: "int | None" = None):
        where = stage if frame is None else f"{stage}, frame {frame:03d}"
        super().__init__(f"stage {where}: {message}")
        self.stage = stage
        self.frame = frame


@dataclass
class SceneFrame:
    frame_id: int
    cam: object
    depth: object
    color: object = None
    mask: object = None


def load_scene_dir(scene_dir, *, need_masks: bool = False) -> list[SceneFrame]:
    root = Path(scene_dir)
    cam_file = root / "cameras.json"
    if not cam_file.exists():
        raise FileNotFoundError(f"missing {cam_file}")
    frames = []
    for fid, cam in load_cameras_json(cam_file):
        name = f"{fid:03d}"
        depth = load_depth_pfm(root / "depth" / f"{name}.pfm")
        color_path = root / "frames" / f"{name}.png"
        color = load_image_png(color_path) if color_path.exists() else None
        mask_path = root / "masks" / f"{name}.png"
        mask = load_mask_png(mask_path) if mask_path.exists() else None
        if need_masks and mask is None:
            raise FileNotFoundError(f"missing {mask_path}")
        frames.append(SceneFrame(fid, cam, depth, color, mask))
    if not frames:
        raise ParseError(f"{cam_file} lists no frames")
    return frames


@dataclass
class PipelineConfig:
    scene_dir: str = ""
    out_mesh: str = "mesh.ply"
    gt_masks: "str | None" = None
    metrics_json: "str | None" = None
    report: "str | None" = None
    threads: int = 1
    refine: RefineParams = field(default_factory=RefineParams)
    smooth: SmoothParams = field(default_factory=SmoothParams)
    # voxel_size None -> derived so the longest bounds edge gets 256 voxels
    voxel_size: "float | None" = None
    truncation: "float | None" = None
    max_depth: float = math.inf
    use_mask: bool = True


_REFINE_KEYS = ("erode_iterations", "dilate_iterations", "rdp_ratio", "keep_largest_only")
_SMOOTH_KEYS = ("sigma", "kernel_radius", "max_depth")


def _config_from_json(path) -> PipelineConfig:
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ParseError(f"{path}: config must be a JSON object")
    cfg = PipelineConfig()
    for key in ("scene_dir", "out_mesh", "gt_masks", "metrics_json", "report"):
        if data.get(key) is not None:
            setattr(cfg, key, str(data[key]))
    if data.get("threads") is not None:
        cfg.threads = int(data["threads"])
    refine = {k: data["refine"][k] for k in _REFINE_KEYS if k in data.get("refine", {})}
    if refine:
        cfg.refine = replace(cfg.refine, **refine)
    smooth = {k: data["smooth"][k] for k in _SMOOTH_KEYS if k in data.get("smooth", {})}
    if smooth.get("max_depth") is None:
        smooth.pop("max_depth", None)
    if smooth:
        cfg.smooth = replace(cfg.smooth, **smooth)
    fusion = data.get("fusion", {})
    if fusion.get("voxel_size") is not None:
        cfg.voxel_size = float(fusion["voxel_size"])
    if fusion.get("truncation") is not None:
        cfg.truncation = float(fusion["truncation"])
    if fusion.get("max_depth") is not None:
        cfg.max_depth = float(fusion["max_depth"])
    if fusion.get("use_mask") is not None:
        cfg.use_mask = bool(fusion["use_mask"])
    return cfg


def _apply_overrides(cfg: PipelineConfig, args) -> PipelineConfig:
    if args.scene is not None:
        cfg.scene_dir = args.scene
    if args.out is not None:
        cfg.out_mesh = args.out
    if args.gt_masks is not None:
        cfg.gt_masks = args.gt_masks
    if args.metrics_json is not None:
        cfg.metrics_json = args.metrics_json
    if args.report is not None:
        cfg.report = args.report
    if args.threads is not None:
        cfg.threads = args.threads
    refine = {}
    if args.erode is not None:
        refine["erode_iterations"] = args.erode
    if args.dilate is not None:
        refine["dilate_iterations"] = args.dilate
    if args.rdp_ratio is not None:
        refine["rdp_ratio"] = args.rdp_ratio
    if args.keep_largest:
        refine["keep_largest_only"] = True
    if refine:
        cfg.refine = replace(cfg.refine, **refine)
    if args.sigma is not None:
        cfg.smooth = replace(cfg.smooth, sigma=args.sigma)
    if args.voxel_size is not None:
        cfg.voxel_size = args.voxel_size
    if args.truncation is not None:
        cfg.truncation = args.truncation
    if args.max_depth is not None:
        cfg.max_depth = args.max_depth
        cfg.smooth = replace(cfg.smooth, max_depth=args.max_depth)
    if args.no_mask:
        cfg.use_mask = False
    return cfg


def _params_echo(cfg: PipelineConfig, fusion: FusionParams) -> dict:
    return {
        "refine": {
            "erode_iterations": cfg.refine.erode_iterations,
            "dilate_iterations": cfg.refine.dilate_iterations,
            "element_offsets": cfg.refine.element.offsets.tolist(),
            "rdp_ratio": cfg.refine.rdp_ratio,
            "keep_largest_only": cfg.refine.keep_largest_only,
        },
        "smooth": {
            "sigma": cfg.smooth.sigma,
            "kernel_radius": cfg.smooth.radius,
            "max_depth": _json_num(cfg.smooth.max_depth),
        },
        "fusion": {
            "voxel_size": fusion.voxel_size,
            "truncation": fusion.truncation,
            "max_depth": _json_num(fusion.max_depth),
            "use_mask": fusion.use_mask,
        },
    }


def _json_num(x: float):
    return None if math.isinf(x) else x


def run_pipeline(cfg: PipelineConfig) -> dict:
    """Refine masks, smooth depth, fuse, clean, write PLY; return the report."""
    if not cfg.scene_dir:
        raise FileNotFoundError("no scene directory configured")
    report: dict = {
        "scene_dir": str(cfg.scene_dir),
        "threads": cfg.threads,
        "stages": [],
    }
    stages = report["stages"]

    t0 = time.perf_counter()
    frames = load_scene_dir(cfg.scene_dir, need_masks=True)
    stages.append({"name": "load", "seconds": time.perf_counter() - t0,
                   "frames": len(frames)})

    out_mesh = Path(cfg.out_mesh)
    out_mesh.parent.mkdir(parents=True, exist_ok=True)
    masks_dir = out_mesh.parent / "refined_masks"
    masks_dir.mkdir(exist_ok=True)

    t0 = time.perf_counter()
    refined = []
    for f in frames:
        try:
            r = refine_mask(f.mask, cfg.refine)
        except EmptyMaskError as e:
            raise EmptyMaskError(f"frame {f.frame_id:03d}: {e}") from e
        except Exception as e:
            raise StageError("refine", str(e), f.frame_id) from e
        save_mask_png(r, masks_dir / f"{f.frame_id:03d}.png")
        refined.append(r)
    stages.append({"name": "refine", "seconds": time.perf_counter() - t0,
                   "masks_dir": str(masks_dir)})

    t0 = time.perf_counter()
    smoothed = []
    for f, r in zip(frames, refined):
        try:
            d = smooth_depth(f.depth, r, cfg.smooth)
            if math.isfinite(cfg.smooth.max_depth):
                d = clamp_range(d, cfg.smooth.max_depth)
        except Exception as e:
            raise StageError("smooth", str(e), f.frame_id) from e
        smoothed.append(d)
    stages.append({"name": "smooth", "seconds": time.perf_counter() - t0})

    t0 = time.perf_counter()
    fuse_frames = [
        (d, f.color, r, f.cam) for f, r, d in zip(frames, refined, smoothed)
    ]
    try:
        voxel = cfg.voxel_size
        if voxel is None:
            lo, hi = point_bounds(
                fuse_frames, use_mask=cfg.use_mask, max_depth=cfg.max_depth
            )
            voxel = float(max(hi - lo)) / 256.0
            if not voxel > 0:
                raise ValueError("degenerate bounds; give --voxel-size")
        fusion = FusionParams(
            voxel_size=voxel,
            truncation=cfg.truncation,
            max_depth=cfg.max_depth,
            use_mask=cfg.use_mask,
        )
        volume = integrate_sequence(fuse_frames, fusion)
        raw = marching_cubes(volume)
    except Exception as e:
        raise StageError("fuse", str(e)) from e
    stages.append({"name": "fuse", "seconds": time.perf_counter() - t0,
                   "grid": list(volume.dims),
                   "raw_triangles": int(len(raw.triangles))})

    t0 = time.perf_counter()
    try:
        mesh = clean_mesh(raw)
    except Exception as e:
        raise StageError("clean", str(e)) from e
    save_mesh_ply(mesh, out_mesh)
    stages.append({"name": "clean", "seconds": time.perf_counter() - t0,
                   "vertices": int(len(mesh.vertices)),
                   "triangles": int(len(mesh.triangles))})

    score = None
    if cfg.gt_masks:
        t0 = time.perf_counter()
        try:
            score = _silhouette_score(mesh, frames, cfg.gt_masks)
        except Exception as e:
            raise StageError("metrics", str(e)) from e
        metrics_json = cfg.metrics_json or str(out_mesh) + ".metrics.json"
        with open(metrics_json, "w", encoding="utf-8") as fh:
            json.dump(
                {"per_frame": score.per_frame, "mean": score.mean,
                 "min": score.min},
                fh, indent=2,
            )
        stages.append({"name": "metrics", "seconds": time.perf_counter() - t0,
                       "metrics_json": metrics_json})

    report["params"] = _params_echo(cfg, fusion)
    report["outputs"] = {
        "mesh": str(out_mesh),
        "refined_masks": str(masks_dir),
        "metrics_json": (cfg.metrics_json or str(out_mesh) + ".metrics.json")
        if cfg.gt_masks else None,
    }
    if score is not None:
        report["video_ssim"] = {"mean": score.mean, "min": score.min}
    if cfg.report:
        with open(cfg.report, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2)
    return report


def _mask_plane(mask: BinaryMask) -> ImageGray:
    return ImageGray(np.where(mask.bits, 255, 0).astype(np.uint8))


def _silhouette_score(mesh, frames, gt_dir):
    gt_root = Path(gt_dir)
    rendered, truth = [], []
    for f in frames:
        gt_path = gt_root / f"{f.frame_id:03d}.png"
        if not gt_path.exists():
            raise FileNotFoundError(f"missing {gt_path}")
        truth.append(_mask_plane(load_mask_png(gt_path)))
        rendered.append(_mask_plane(render_mesh_silhouette(mesh, f.cam)))
    return video_ssim(rendered, truth)


# ---------------------------------------------------------------- commands


def _cmd_synth(args) -> int:
    kind = args.scene
    scene = sphere_scene() if kind == "sphere" else box_scene()
    overrides = {}
    if args.frames is not None:
        overrides["frames"] = args.frames
    if args.tilt is not None:
        overrides["tilt_deg"] = args.tilt
    if args.radius is not None:
        overrides["radius"] = args.radius
    if args.altitude is not None:
        overrides["altitude"] = args.altitude
    spec = default_orbit(kind, **overrides)
    seed = args.seed if kind == "noisy-mask" else None
    out = make_scene_dir(scene, spec, args.out, corrupt_seed=seed)
    print(f"wrote {spec.frames}-frame {kind} scene to {out}")
    return 0


def _refine_params(args) -> RefineParams:
    kw = {}
    if args.erode is not None:
        kw["erode_iterations"] = args.erode
    if args.dilate is not None:
        kw["dilate_iterations"] = args.dilate
    if args.rdp_ratio is not None:
        kw["rdp_ratio"] = args.rdp_ratio
    if args.keep_largest:
        kw["keep_largest_only"] = True
    return RefineParams(**kw)


def _cmd_refine_mask(args) -> int:
    params = _refine_params(args)
    src, dst = Path(args.in_path), Path(args.out)
    if src.is_dir():
        dst.mkdir(parents=True, exist_ok=True)
        names = sorted(p.name for p in src.glob("*.png"))
        if not names:
            raise FileNotFoundError(f"no PNG masks in {src}")
        for name in names:
            try:
                refined = refine_mask(load_mask_png(src / name), params)
            except EmptyMaskError as e:
                raise EmptyMaskError(f"{name}: {e}") from e
            save_mask_png(refined, dst / name)
        print(f"refined {len(names)} masks into {dst}")
    else:
        save_mask_png(refine_mask(load_mask_png(src), params), dst)
        print(f"refined {src} -> {dst}")
    return 0


def _cmd_smooth_depth(args) -> int:
    depth = load_depth_pfm(args.depth)
    mask = load_mask_png(args.mask)
    params = SmoothParams(
        sigma=args.sigma if args.sigma is not None else 2.0,
        kernel_radius=args.kernel_radius,
    )
    out = smooth_depth(depth, mask, params)
    if args.max_depth is not None:
        out = clamp_range(out, args.max_depth)
    save_depth_pfm(out, args.out)
    print(f"smoothed {args.depth} -> {args.out}")
    return 0


def _cmd_fuse(args) -> int:
    frames = load_scene_dir(args.scene)
    tuples = [(f.depth, f.color, f.mask, f.cam) for f in frames]
    use_mask = not args.no_mask
    max_depth = args.max_depth if args.max_depth is not None else math.inf
    voxel = args.voxel_size
    if voxel is None:
        lo, hi = point_bounds(tuples, use_mask=use_mask, max_depth=max_depth)
        voxel = float(max(hi - lo)) / 256.0
        if not voxel > 0:
            raise ValueError("degenerate bounds; give --voxel-size")
    params = FusionParams(
        voxel_size=voxel,
        truncation=args.truncation,
        max_depth=max_depth,
        use_mask=use_mask,
    )
    try:
        volume = integrate_sequence(tuples, params)
        mesh = marching_cubes(volume)
    except (FileNotFoundError, ParseError):
        raise
    except Exception as e:
        raise StageError("fuse", str(e)) from e
    save_mesh_ply(mesh, args.out)
    print(
        f"fused {len(frames)} frames at voxel {params.voxel_size:.4g} -> "
        f"{args.out} ({len(mesh.triangles)} triangles)"
    )
    return 0


def _cmd_clean_mesh(args) -> int:
    mesh = load_mesh_ply(args.in_path)
    try:
        mesh = clean_mesh(mesh)
        if args.decimate_voxels is not None:
            mesh = decimate_vertex_clustering(
                mesh, args.decimate_voxels * args.voxel_size
            )
    except Exception as e:
        raise StageError("clean", str(e)) from e
    save_mesh_ply(mesh, args.out)
    print(
        f"cleaned {args.in_path} -> {args.out} "
        f"({len(mesh.vertices)} vertices, {len(mesh.triangles)} triangles)"
    )
    return 0


def _load_pair_dirs(ref, test):
    ref_dir, test_dir = Path(ref), Path(test)
    names = sorted(p.name for p in ref_dir.glob("*.png"))
    if not names:
        raise FileNotFoundError(f"no PNG frames in {ref_dir}")
    missing = [n for n in names if not (test_dir / n).exists()]
    if missing:
        raise FileNotFoundError(f"missing {test_dir / missing[0]}")
    ref_frames = [load_image_png(ref_dir / n) for n in names]
    test_frames = [load_image_png(test_dir / n) for n in names]
    return ref_frames, test_frames


def _cmd_metrics(args) -> int:
    if args.mode == "video-ssim":
        ref_frames, test_frames = _load_pair_dirs(args.ref, args.test)
        score = video_ssim(ref_frames, test_frames, SsimParams())
        payload = {
            "per_frame": score.per_frame,
            "mean": score.mean,
            "min": score.min,
        }
        print(f"video-ssim mean={score.mean:.6f} min={score.min:.6f}")
    else:
        a = load_image_png(args.ref)
        b = load_image_png(args.test)
        if args.mode == "psnr":
            value = psnr(a, b)
            print(f"psnr {'inf' if math.isinf(value) else f'{value:.4f}'} dB")
        else:
            value = ssim(a, b, SsimParams())
            print(f"ssim {value:.6f}")
        payload = {"value": _json_num(value)}
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
    return 0


def _cmd_run(args) -> int:
    cfg = _config_from_json(args.config) if args.config else PipelineConfig()
    cfg = _apply_overrides(cfg, args)
    report = run_pipeline(cfg)
    for stage in report["stages"]:
        extras = {
            k: v for k, v in stage.items() if k not in ("name", "seconds")
        }
        line = f"{stage['name']:8s} {stage['seconds']:8.3f}s"
        if extras:
            line += "  " + " ".join(f"{k}={v}" for k, v in extras.items())
        print(line)
    if "video_ssim" in report:
        vs = report["video_ssim"]
        print(f"video-ssim mean={vs['mean']:.6f} min={vs['min']:.6f}")
    print(f"mesh: {report['outputs']['mesh']}")
    return 0


def _add_run_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON config; flags override its values")
    p.add_argument("--scene", help="scene directory")
    p.add_argument("--out", help="output mesh path")
    p.add_argument("--gt-masks", help="ground-truth mask dir for video-SSIM")
    p.add_argument("--metrics-json", help="metrics output path")
    p.add_argument("--report", help="write the run report JSON here")
    p.add_argument("--threads", type=int, help="worker count (stages are "
                   "vectorized; results do not depend on this)")
    p.add_argument("--erode", type=int, help="mask erosion iterations")
    p.add_argument("--dilate", type=int, help="mask dilation iterations")
    p.add_argument("--rdp-ratio", type=float, help="contour epsilon/perimeter")
    p.add_argument("--keep-largest", action="store_true",
                   help="keep only the largest mask contour")
    p.add_argument("--sigma", type=float, help="depth smoothing sigma, px")
    p.add_argument("--voxel-size", type=float, help="fusion voxel size, m")
    p.add_argument("--truncation", type=float, help="TSDF truncation, m")
    p.add_argument("--max-depth", type=float, help="depth cutoff, m")
    p.add_argument("--no-mask", action="store_true",
                   help="fuse all pixels, not just masked ones")


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="gbm", description="building-mesh pipeline tools"
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write an analytic test scene")
    p.add_argument("--scene", required=True,
                   choices=("sphere", "box", "noisy-mask"))
    p.add_argument("--out", required=True)
    p.add_argument("--frames", type=int)
    p.add_argument("--tilt", type=float)
    p.add_argument("--radius", type=float)
    p.add_argument("--altitude", type=float)
    p.add_argument("--seed", type=int, default=7,
                   help="mask corruption seed (noisy-mask only)")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("refine-mask", help="morphology + contour simplify + fill")
    p.add_argument("--in", dest="in_path", required=True,
                   help="mask PNG or directory of masks")
    p.add_argument("--out", required=True)
    p.add_argument("--erode", type=int)
    p.add_argument("--dilate", type=int)
    p.add_argument("--rdp-ratio", type=float)
    p.add_argument("--keep-largest", action="store_true")
    p.set_defaults(func=_cmd_refine_mask)

    p = sub.add_parser("smooth-depth", help="masked normalized-convolution blur")
    p.add_argument("--depth", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--sigma", type=float)
    p.add_argument("--kernel-radius", type=int)
    p.add_argument("--max-depth", type=float)
    p.set_defaults(func=_cmd_smooth_depth)

    p = sub.add_parser("fuse", help="TSDF-fuse a scene directory to a mesh")
    p.add_argument("--scene", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--voxel-size", type=float)
    p.add_argument("--truncation", type=float)
    p.add_argument("--max-depth", type=float)
    p.add_argument("--no-mask", action="store_true")
    p.set_defaults(func=_cmd_fuse)

    p = sub.add_parser("clean-mesh", help="drop junk and keep the main component")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--decimate-voxels", type=float,
                   help="optional vertex clustering, in voxel units")
    p.add_argument("--voxel-size", type=float, default=1.0,
                   help="meters per voxel unit for --decimate-voxels")
    p.set_defaults(func=_cmd_clean_mesh)

    p = sub.add_parser("metrics", help="full-reference image quality")
    p.add_argument("mode", choices=("psnr", "ssim", "video-ssim"))
    p.add_argument("--ref", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--json", help="also write the result as JSON")
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("run", help="refine + smooth + fuse + clean in one go")
    _add_run_flags(p)
    p.set_defaults(func=_cmd_run)
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return args.func(args)
    except EmptyMaskError as e:
        print(f"error: empty mask: {e}", file=sys.stderr)
        return 4
    except StageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    except (ParseError, OSError, json.JSONDecodeError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
