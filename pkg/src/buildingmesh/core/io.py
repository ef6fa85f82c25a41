"""File formats used at stage boundaries.

- masks: 8-bit grayscale PNG, value > 127 means foreground
- color frames: 8-bit RGB PNG
- depth: PFM, grayscale "Pf" variant, 32-bit floats, bottom-up scanlines,
  negative scale field = little-endian
- cameras: JSON array of {frame, fx, fy, cx, cy, width, height,
  world_from_camera} with the matrix flattened row-major (16 numbers)
- meshes: binary little-endian PLY, float32 xyz + uchar rgb vertices,
  uchar-counted int32 triangle faces

PFM and PLY are parsed by hand so malformed input fails with a ParseError
naming the byte offset instead of whatever a third-party reader would do.
"""

from __future__ import annotations

import json
import os
import re
import struct

import numpy as np
from PIL import Image

from .types import BinaryMask, CameraModel, DepthMap, ImageRGB, ParseError, TriangleMesh


# ---------------------------------------------------------------------------
# PNG

def save_mask_png(mask: BinaryMask, path: str | os.PathLike) -> None:
    img = Image.fromarray(np.where(mask.bits, 255, 0).astype(np.uint8), mode="L")
    img.save(path, format="PNG")


def load_mask_png(path: str | os.PathLike) -> BinaryMask:
    with Image.open(path) as img:
        gray = np.asarray(img.convert("L"))
    return BinaryMask(gray > 127)


def save_image_png(image: ImageRGB, path: str | os.PathLike) -> None:
    Image.fromarray(image.data, mode="RGB").save(path, format="PNG")


def load_image_png(path: str | os.PathLike) -> ImageRGB:
    with Image.open(path) as img:
        data = np.asarray(img.convert("RGB"))
    return ImageRGB(data)


# ---------------------------------------------------------------------------
# PFM

def save_depth_pfm(depth: DepthMap, path: str | os.PathLike) -> None:
    """Write grayscale PFM: header, then rows bottom-to-top, little-endian."""
    header = f"Pf\n{depth.width} {depth.height}\n-1.0\n".encode("ascii")
    payload = np.flipud(depth.depth).astype("<f4").tobytes()
    with open(path, "wb") as f:
        f.write(header)
        f.write(payload)


def _pfm_token(buf: bytes, pos: int) -> tuple[bytes, int]:
    while pos < len(buf) and buf[pos : pos + 1].isspace():
        pos += 1
    start = pos
    while pos < len(buf) and not buf[pos : pos + 1].isspace():
        pos += 1
    if start == pos:
        raise ParseError("unexpected end of PFM header", offset=start)
    return buf[start:pos], pos


def load_depth_pfm(path: str | os.PathLike) -> DepthMap:
    with open(path, "rb") as f:
        buf = f.read()
    magic, pos = _pfm_token(buf, 0)
    if magic != b"Pf":
        raise ParseError(f"not a grayscale PFM (magic {magic!r})", offset=0)
    fields = []
    for _ in range(3):
        tok, pos = _pfm_token(buf, pos)
        fields.append(tok)
    try:
        width, height = int(fields[0]), int(fields[1])
        scale = float(fields[2])
    except ValueError as exc:
        raise ParseError(f"bad PFM header field: {exc}", offset=pos) from None
    if width < 1 or height < 1:
        raise ParseError(f"bad PFM dimensions {width}x{height}", offset=pos)
    if scale == 0:
        raise ParseError("PFM scale must be non-zero", offset=pos)
    pos += 1  # single whitespace byte terminates the header
    need = width * height * 4
    if len(buf) - pos < need:
        raise ParseError(
            f"truncated PFM payload: expected {need} bytes, have {len(buf) - pos}",
            offset=len(buf),
        )
    endian = "<" if scale < 0 else ">"
    data = np.frombuffer(buf, dtype=endian + "f4", count=width * height, offset=pos)
    data = data.reshape(height, width)
    data = np.flipud(data)  # stored bottom-up
    if abs(scale) != 1.0:
        data = data * np.float32(abs(scale))
    return DepthMap(data)


# ---------------------------------------------------------------------------
# cameras JSON

def save_cameras_json(
    cameras: list[CameraModel],
    path: str | os.PathLike,
    frames: list[int] | None = None,
) -> None:
    if frames is None:
        frames = list(range(len(cameras)))
    if len(frames) != len(cameras):
        raise ValueError("frames and cameras must have equal length")
    entries = []
    for frame, cam in zip(frames, cameras):
        entries.append(
            {
                "frame": int(frame),
                "fx": cam.fx,
                "fy": cam.fy,
                "cx": cam.cx,
                "cy": cam.cy,
                "width": cam.width,
                "height": cam.height,
                "world_from_camera": [float(x) for x in cam.world_from_camera.ravel()],
            }
        )
    with open(path, "w", encoding="ascii") as f:
        json.dump(entries, f, indent=1)


def load_cameras_json(path: str | os.PathLike) -> list[tuple[int, CameraModel]]:
    """Returns (frame, camera) pairs sorted by frame index."""
    with open(path, "r", encoding="ascii") as f:
        entries = json.load(f)
    if not isinstance(entries, list):
        raise ParseError("cameras JSON must be an array")
    out = []
    for i, e in enumerate(entries):
        try:
            matrix = np.asarray(e["world_from_camera"], dtype=np.float64)
            if matrix.shape != (16,):
                raise ParseError(
                    f"entry {i}: world_from_camera must hold 16 numbers, got {matrix.shape}"
                )
            cam = CameraModel(
                fx=float(e["fx"]),
                fy=float(e["fy"]),
                cx=float(e["cx"]),
                cy=float(e["cy"]),
                width=int(e["width"]),
                height=int(e["height"]),
                world_from_camera=matrix.reshape(4, 4),
            )
            out.append((int(e["frame"]), cam))
        except KeyError as exc:
            raise ParseError(f"cameras entry {i} missing key {exc}") from None
    out.sort(key=lambda pair: pair[0])
    return out


# ---------------------------------------------------------------------------
# PLY

_PLY_VERTEX_PROPS = ["x", "y", "z", "red", "green", "blue"]


def save_mesh_ply(mesh: TriangleMesh, path: str | os.PathLike) -> None:
    """Binary little-endian PLY. Uncolored meshes are written white."""
    n_v = len(mesh.vertices)
    n_f = len(mesh.triangles)
    header = (
        "ply\n"
        "format binary_little_endian 1.0\n"
        f"element vertex {n_v}\n"
        "property float x\n"
        "property float y\n"
        "property float z\n"
        "property uchar red\n"
        "property uchar green\n"
        "property uchar blue\n"
        f"element face {n_f}\n"
        "property list uchar int vertex_indices\n"
        "end_header\n"
    ).encode("ascii")
    vert = np.empty(
        n_v,
        dtype=[("x", "<f4"), ("y", "<f4"), ("z", "<f4"),
               ("red", "u1"), ("green", "u1"), ("blue", "u1")],
    )
    vert["x"] = mesh.vertices[:, 0].astype("<f4")
    vert["y"] = mesh.vertices[:, 1].astype("<f4")
    vert["z"] = mesh.vertices[:, 2].astype("<f4")
    if mesh.has_colors:
        rgb = np.rint(mesh.colors * 255.0).astype(np.uint8)
    else:
        rgb = np.full((n_v, 3), 255, dtype=np.uint8)
    vert["red"] = rgb[:, 0] if n_v else []
    vert["green"] = rgb[:, 1] if n_v else []
    vert["blue"] = rgb[:, 2] if n_v else []
    face = np.empty(n_f, dtype=[("n", "u1"), ("idx", "<i4", (3,))])
    face["n"] = 3
    face["idx"] = mesh.triangles.astype("<i4")
    with open(path, "wb") as f:
        f.write(header)
        f.write(vert.tobytes())
        f.write(face.tobytes())


def load_mesh_ply(path: str | os.PathLike) -> TriangleMesh:
    with open(path, "rb") as f:
        buf = f.read()
    end = buf.find(b"end_header\n")
    if not buf.startswith(b"ply\n") or end < 0:
        raise ParseError("not a PLY file or header not terminated", offset=0)
    body = end + len(b"end_header\n")
    lines = buf[:end].decode("ascii", errors="replace").split("\n")
    n_v = n_f = None
    props: list[str] = []
    face_decl = False
    current = None
    for line in lines[1:]:
        line = line.strip()
        if line.startswith("comment") or not line:
            continue
        if line == "format binary_little_endian 1.0":
            continue
        if line.startswith("format"):
            raise ParseError(f"unsupported PLY format: {line!r}", offset=4)
        m = re.match(r"element (\w+) (\d+)$", line)
        if m:
            current = m.group(1)
            if current == "vertex":
                n_v = int(m.group(2))
            elif current == "face":
                n_f = int(m.group(2))
            else:
                raise ParseError(f"unsupported PLY element {current!r}")
            continue
        if line.startswith("property"):
            if current == "vertex":
                parts = line.split()
                props.append(parts[-1])
                kind = parts[1]
                want = "float" if len(props) <= 3 else "uchar"
                if kind not in (want, "float32" if want == "float" else "uint8"):
                    raise ParseError(f"unsupported vertex property: {line!r}")
            elif current == "face":
                if not re.match(
                    r"property list uchar (int|int32) vertex_ind(ex|ices)$", line
                ):
                    raise ParseError(f"unsupported face property: {line!r}")
                face_decl = True
            continue
        raise ParseError(f"unrecognized PLY header line: {line!r}")
    if n_v is None or n_f is None or not (n_f == 0 or face_decl):
        raise ParseError("PLY header missing vertex or face declaration")
    if props not in (_PLY_VERTEX_PROPS, _PLY_VERTEX_PROPS[:3]):
        raise ParseError(f"unsupported vertex layout {props}")
    has_rgb = len(props) == 6
    v_stride = 15 if has_rgb else 12
    v_bytes = n_v * v_stride
    f_bytes = n_f * 13
    if len(buf) - body < v_bytes + f_bytes:
        raise ParseError(
            f"truncated PLY payload: expected {v_bytes + f_bytes} bytes, "
            f"have {len(buf) - body}",
            offset=len(buf),
        )
    if has_rgb:
        vdt = np.dtype([("x", "<f4"), ("y", "<f4"), ("z", "<f4"),
                        ("red", "u1"), ("green", "u1"), ("blue", "u1")])
    else:
        vdt = np.dtype([("x", "<f4"), ("y", "<f4"), ("z", "<f4")])
    vert = np.frombuffer(buf, dtype=vdt, count=n_v, offset=body)
    fdt = np.dtype([("n", "u1"), ("idx", "<i4", (3,))])
    face = np.frombuffer(buf, dtype=fdt, count=n_f, offset=body + v_bytes)
    bad = np.nonzero(face["n"] != 3)[0]
    if bad.size:
        raise ParseError(
            f"face {bad[0]} has {face['n'][bad[0]]} vertices, only triangles supported",
            offset=body + v_bytes + int(bad[0]) * 13,
        )
    vertices = np.stack(
        [vert["x"].astype(np.float64), vert["y"].astype(np.float64),
         vert["z"].astype(np.float64)], axis=1,
    ) if n_v else np.zeros((0, 3))
    if has_rgb and n_v:
        colors = np.stack([vert["red"], vert["green"], vert["blue"]], axis=1) / 255.0
    else:
        colors = np.zeros((0, 3))
    triangles = face["idx"].astype(np.int32).reshape(-1, 3) if n_f else np.zeros((0, 3), np.int32)
    return TriangleMesh(vertices=vertices, triangles=triangles, colors=colors)
