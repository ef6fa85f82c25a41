"""Independent reference implementations the tests compare the library
against.

Everything here is deliberately naive — per-pixel loops, exact rational
arithmetic, breadth-first search — so that a bug in the library's vectorized
code paths is unlikely to be mirrored by the oracle.
"""

from __future__ import annotations

from collections import Counter, deque
from fractions import Fraction

import numpy as np


# ---------------------------------------------------------------------------
# morphology


def brute_dilate(bits: np.ndarray, offsets) -> np.ndarray:
    """Union of shifted copies; content pushed off the canvas is lost."""
    h, w = bits.shape
    out = np.zeros_like(bits)
    for y in range(h):
        for x in range(w):
            if bits[y, x]:
                for dx, dy in offsets:
                    yy, xx = y + int(dy), x + int(dx)
                    if 0 <= yy < h and 0 <= xx < w:
                        out[yy, xx] = True
    return out


def brute_erode(bits: np.ndarray, offsets) -> np.ndarray:
    """Pixel survives iff every offset lands in-bounds on foreground."""
    h, w = bits.shape
    out = np.zeros_like(bits)
    for y in range(h):
        for x in range(w):
            ok = True
            for dx, dy in offsets:
                yy, xx = y + int(dy), x + int(dx)
                if not (0 <= yy < h and 0 <= xx < w) or not bits[yy, xx]:
                    ok = False
                    break
            out[y, x] = ok
    return out


def mask_iou(a: np.ndarray, b: np.ndarray) -> float:
    union = np.logical_or(a, b).sum()
    if union == 0:
        return 1.0
    return float(np.logical_and(a, b).sum() / union)


# ---------------------------------------------------------------------------
# polylines


def segment_distance(p, a, b) -> float:
    p = np.asarray(p, dtype=np.float64)
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    ab = b - a
    len2 = float(ab @ ab)
    if len2 == 0.0:
        return float(np.linalg.norm(p - a))
    t = min(1.0, max(0.0, float((p - a) @ ab) / len2))
    return float(np.linalg.norm(p - (a + t * ab)))


def chain_distance(p, pts: np.ndarray, closed: bool = False) -> float:
    """Distance from p to the nearest segment of the polyline `pts`."""
    n = len(pts)
    best = np.inf
    last = n if closed else n - 1
    for i in range(last):
        best = min(best, segment_distance(p, pts[i], pts[(i + 1) % n]))
    return best


# ---------------------------------------------------------------------------
# polygon fill (exact rational even-odd rule)


def point_in_polygon(x, y, pts) -> bool:
    """Even-odd containment of (x, y), counting boundary points as inside.

    All comparisons run on Fractions, so integer and half-integer fixtures
    are decided exactly.
    """
    fx, fy = Fraction(x), Fraction(y)
    n = len(pts)
    inside = False
    for i in range(n):
        x1, y1 = Fraction(float(pts[i][0])), Fraction(float(pts[i][1]))
        x2, y2 = (
            Fraction(float(pts[(i + 1) % n][0])),
            Fraction(float(pts[(i + 1) % n][1])),
        )
        # exact on-segment test
        cross = (x2 - x1) * (fy - y1) - (y2 - y1) * (fx - x1)
        dot = (x2 - x1) * (fx - x1) + (y2 - y1) * (fy - y1)
        len2 = (x2 - x1) ** 2 + (y2 - y1) ** 2
        if cross == 0 and 0 <= dot <= len2:
            return True
        if (y1 > fy) != (y2 > fy):
            x_at = x1 + (fy - y1) * (x2 - x1) / (y2 - y1)
            if x_at > fx:
                inside = not inside
    return inside


def brute_fill(pts, width: int, height: int) -> np.ndarray:
    out = np.zeros((height, width), dtype=bool)
    for y in range(height):
        for x in range(width):
            out[y, x] = point_in_polygon(x, y, pts)
    return out


# ---------------------------------------------------------------------------
# depth smoothing


def brute_smooth(depth: np.ndarray, mask: np.ndarray, sigma: float, radius: int) -> np.ndarray:
    """Per-pixel normalized convolution over valid in-mask neighbors."""
    h, w = depth.shape
    valid = np.isfinite(depth) & (depth > 0) & mask
    out = np.zeros((h, w), dtype=np.float64)
    for y in range(h):
        for x in range(w):
            if not mask[y, x]:
                continue
            num = 0.0
            den = 0.0
            for dy in range(-radius, radius + 1):
                for dx in range(-radius, radius + 1):
                    yy, xx = y + dy, x + dx
                    if 0 <= yy < h and 0 <= xx < w and valid[yy, xx]:
                        wgt = np.exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma))
                        num += wgt * float(depth[yy, xx])
                        den += wgt
            if den > 0.0:
                out[y, x] = num / den
    return out


# ---------------------------------------------------------------------------
# meshes


def undirected_edge_counts(triangles) -> Counter:
    counts: Counter = Counter()
    for a, b, c in np.asarray(triangles):
        for u, v in ((a, b), (b, c), (c, a)):
            key = (int(u), int(v)) if u < v else (int(v), int(u))
            counts[key] += 1
    return counts


def euler_characteristic(mesh) -> int:
    v = len(mesh.vertices)
    f = len(mesh.triangles)
    e = len(undirected_edge_counts(mesh.triangles))
    return v - e + f


def each_directed_edge_once(triangles) -> bool:
    seen: Counter = Counter()
    for a, b, c in np.asarray(triangles):
        for u, v in ((a, b), (b, c), (c, a)):
            seen[(int(u), int(v))] += 1
    return bool(seen) and all(n == 1 for n in seen.values())


def signed_volume(mesh) -> float:
    """Divergence-theorem volume; positive for outward-oriented surfaces."""
    a = mesh.vertices[mesh.triangles[:, 0]]
    b = mesh.vertices[mesh.triangles[:, 1]]
    c = mesh.vertices[mesh.triangles[:, 2]]
    return float(np.einsum("ij,ij->i", a, np.cross(b, c)).sum() / 6.0)


def bfs_triangle_clusters(triangles) -> list[frozenset[int]]:
    """Components of the share-a-vertex graph, as sets of triangle indices."""
    tris = np.asarray(triangles)
    by_vertex: dict[int, list[int]] = {}
    for t, tri in enumerate(tris):
        for v in tri:
            by_vertex.setdefault(int(v), []).append(t)
    seen: set[int] = set()
    clusters = []
    for t0 in range(len(tris)):
        if t0 in seen:
            continue
        comp = set()
        queue = deque([t0])
        seen.add(t0)
        while queue:
            t = queue.popleft()
            comp.add(t)
            for v in tris[t]:
                for t2 in by_vertex[int(v)]:
                    if t2 not in seen:
                        seen.add(t2)
                        queue.append(t2)
        clusters.append(frozenset(comp))
    return clusters


# ---------------------------------------------------------------------------
# image quality


def gaussian_window(size: int, sigma: float) -> np.ndarray:
    x = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-(x * x) / (2.0 * sigma * sigma))
    g /= g.sum()
    return np.outer(g, g)


def brute_ssim(a: np.ndarray, b: np.ndarray, size=11, sigma=1.5, k1=0.01, k2=0.03, dynamic_range=255.0) -> float:
    """Direct per-window SSIM, valid windows only."""
    a = a.astype(np.float64)
    b = b.astype(np.float64)
    win = gaussian_window(size, sigma)
    c1 = (k1 * dynamic_range) ** 2
    c2 = (k2 * dynamic_range) ** 2
    h, w = a.shape
    vals = []
    for y in range(h - size + 1):
        for x in range(w - size + 1):
            pa = a[y : y + size, x : x + size]
            pb = b[y : y + size, x : x + size]
            mu_a = (win * pa).sum()
            mu_b = (win * pb).sum()
            var_a = (win * pa * pa).sum() - mu_a * mu_a
            var_b = (win * pb * pb).sum() - mu_b * mu_b
            cov = (win * pa * pb).sum() - mu_a * mu_b
            num = (2 * mu_a * mu_b + c1) * (2 * cov + c2)
            den = (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
            vals.append(num / den)
    return float(np.mean(vals))
