"""Binary mask refinement.

A segmentation mask is cleaned by erosion (kills speckle), dilation (slightly
extends the silhouette so reconstruction does not starve at the boundary),
outer-contour extraction (interior holes vanish because only outer boundaries
are traced), polygon simplification, and polygon refill.

Dilation is the union of element-shifted copies of the mask; erosion is its
adjoint with out-of-bounds pixels treated as background.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import BinaryMask, Contour, StructuringElement


class EmptyMaskError(ValueError):
    """Mask has no usable foreground, e.g. empty-after-morphology."""


DEFAULT_RDP_RATIO = 1.0 / 500.0


@dataclass(frozen=True)
class RefineParams:
    erode_iterations: int = 1
    dilate_iterations: int = 2
    element: StructuringElement = field(default_factory=StructuringElement.square)
    rdp_ratio: float = DEFAULT_RDP_RATIO
    keep_largest_only: bool = False

    def __post_init__(self):
        if self.erode_iterations < 0 or self.dilate_iterations < 0:
            raise ValueError("iteration counts must be >= 0")
        if not self.rdp_ratio > 0:
            raise ValueError("rdp_ratio must be > 0")


def _shifted(bits: np.ndarray, dx: int, dy: int) -> np.ndarray:
    """Copy of `bits` translated by (dx, dy); pixels shifted in from outside
    the canvas are False."""
    h, w = bits.shape
    out = np.zeros_like(bits)
    ys_dst = slice(max(dy, 0), h + min(dy, 0))
    xs_dst = slice(max(dx, 0), w + min(dx, 0))
    ys_src = slice(max(-dy, 0), h + min(-dy, 0))
    xs_src = slice(max(-dx, 0), w + min(-dx, 0))
    out[ys_dst, xs_dst] = bits[ys_src, xs_src]
    return out


def dilate(mask: BinaryMask, element: StructuringElement, iterations: int = 1) -> BinaryMask:
    """Union of element-shifted copies, applied `iterations` times."""
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    bits = mask.bits
    for _ in range(iterations):
        acc = np.zeros_like(bits)
        for dx, dy in element.offsets:
            acc |= _shifted(bits, int(dx), int(dy))
        bits = acc
    return BinaryMask(bits)


def erode(mask: BinaryMask, element: StructuringElement, iterations: int = 1) -> BinaryMask:
    """Pixel survives iff every element neighbor is foreground; neighbors
    beyond the canvas count as background."""
    if iterations < 0:
        raise ValueError("iterations must be >= 0")
    bits = mask.bits
    for _ in range(iterations):
        acc = np.ones_like(bits)
        for dx, dy in element.offsets:
            acc &= _shifted(bits, -int(dx), -int(dy))
        bits = acc
    return BinaryMask(bits)


# ---------------------------------------------------------------------------
# contour tracing

# Moore neighborhood enumerated clockwise in image coordinates (y grows down),
# starting west. Consecutive ring cells are 8-adjacent, which the backtrack
# bookkeeping below relies on.
_RING = [(-1, 0), (-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1)]
_RING_INDEX = {d: i for i, d in enumerate(_RING)}


def _label_components(bits: np.ndarray) -> tuple[np.ndarray, int]:
    """8-connected labeling; labels assigned in row-major discovery order."""
    h, w = bits.shape
    labels = np.full((h, w), -1, dtype=np.int32)
    count = 0
    for sy in range(h):
        for sx in range(w):
            if not bits[sy, sx] or labels[sy, sx] >= 0:
                continue
            stack = [(sx, sy)]
            labels[sy, sx] = count
            while stack:
                x, y = stack.pop()
                for dx, dy in _RING:
                    nx, ny = x + dx, y + dy
                    if 0 <= nx < w and 0 <= ny < h and bits[ny, nx] and labels[ny, nx] < 0:
                        labels[ny, nx] = count
                        stack.append((nx, ny))
            count += 1
    return labels, count


def _trace_boundary(bits: np.ndarray, start: tuple[int, int]) -> list[tuple[int, int]]:
    """Moore-neighbor boundary walk from the component's topmost-leftmost
    pixel. Stops when the walk re-enters the start state (same pixel, same
    backtrack direction), so thin protrusions are walked on both sides."""
    h, w = bits.shape
    sx, sy = start
    walk = [(sx, sy)]
    cx, cy = sx, sy
    back = 0  # direction index of the backtrack cell; west of the start is background
    first_state = None
    limit = 8 * bits.sum() + 8
    for _ in range(int(limit)):
        found = None
        for k in range(1, 9):
            d = (back + k) % 8
            dx, dy = _RING[d]
            nx, ny = cx + dx, cy + dy
            if 0 <= nx < w and 0 <= ny < h and bits[ny, nx]:
                found = (nx, ny, d, (back + k - 1) % 8)
                break
        if found is None:
            return walk  # isolated pixel
        nx, ny, d, prev_d = found
        # backtrack cell seen from the new pixel
        px, py = cx + _RING[prev_d][0], cy + _RING[prev_d][1]
        back = _RING_INDEX[(px - nx, py - ny)]
        state = (nx, ny, back)
        if first_state is None:
            first_state = state
        elif state == first_state:
            break
        cx, cy = nx, ny
        walk.append((cx, cy))
    # the final move re-entered the start; drop the duplicate start pixel
    if len(walk) > 1 and walk[-1] == walk[0]:
        walk.pop()
    return walk


def extract_contours(mask: BinaryMask) -> list[Contour]:
    """One closed outer contour per 8-connected component, ordered by the
    component's first pixel in row-major order. Points are pixel coordinates
    (x, y) with positive shoelace area (counter-clockwise). Components whose
    boundary has fewer than 3 pixels produce no contour; hole boundaries are
    never traced."""
    bits = mask.bits
    labels, count = _label_components(bits)
    contours = []
    for comp in range(count):
        ys, xs = np.nonzero(labels == comp)
        order = np.lexsort((xs, ys))
        start = (int(xs[order[0]]), int(ys[order[0]]))
        comp_bits = labels == comp
        walk = _trace_boundary(comp_bits, start)
        if len(set(walk)) < 3:
            continue
        pts = walk
        if len(pts) >= 2 and pts[-1] == pts[0]:
            pts = pts[:-1]
        c = Contour(np.asarray(pts, dtype=np.float64), closed=True)
        if c.signed_area() < 0:
            rev = np.concatenate([c.points[:1], c.points[1:][::-1]], axis=0)
            c = Contour(rev, closed=True)
        contours.append(c)
    return contours


# ---------------------------------------------------------------------------
# polygon simplification

def perpendicular_distance(point, start, end) -> float:
    """Distance from `point` to the segment start-end.

    Where the projection of the point falls inside the segment this equals
    the perpendicular line distance

        d = |(x_n - x_1)(y_1 - y_i) - (x_1 - x_i)(y_n - y_1)|
            / sqrt((x_n - x_1)^2 + (y_n - y_1)^2)

    but it clamps to the nearer endpoint otherwise, so the simplification
    tolerance below is honest for polylines that double back past a span
    endpoint. Degenerates to point-to-point distance when start == end.
    """
    x1, y1 = float(start[0]), float(start[1])
    xn, yn = float(end[0]), float(end[1])
    xi, yi = float(point[0]), float(point[1])
    dx, dy = xn - x1, yn - y1
    d2 = dx * dx + dy * dy
    if d2 == 0.0:
        return float(np.hypot(xi - x1, yi - y1))
    t = ((xi - x1) * dx + (yi - y1) * dy) / d2
    t = min(1.0, max(0.0, t))
    return float(np.hypot(xi - (x1 + t * dx), yi - (y1 + t * dy)))


def _rdp_open(points: np.ndarray, epsilon: float) -> np.ndarray:
    """Iterative Ramer-Douglas-Peucker on an open polyline; endpoints are
    always kept. Ties in the max distance go to the lowest index."""
    n = len(points)
    keep = np.zeros(n, dtype=bool)
    keep[0] = keep[-1] = True
    stack = [(0, n - 1)]
    while stack:
        a, b = stack.pop()
        if b - a < 2:
            continue
        seg = points[a + 1 : b]
        x1, y1 = points[a]
        xn, yn = points[b]
        dx, dy = xn - x1, yn - y1
        d2 = dx * dx + dy * dy
        if d2 == 0.0:
            d = np.hypot(seg[:, 0] - x1, seg[:, 1] - y1)
        else:
            t = ((seg[:, 0] - x1) * dx + (seg[:, 1] - y1) * dy) / d2
            np.clip(t, 0.0, 1.0, out=t)
            d = np.hypot(seg[:, 0] - (x1 + t * dx), seg[:, 1] - (y1 + t * dy))
        i_rel = int(np.argmax(d))  # argmax returns the lowest index on ties
        if d[i_rel] > epsilon:
            m = a + 1 + i_rel
            keep[m] = True
            stack.append((a, m))
            stack.append((m, b))
    return keep


def _farthest_pair(points: np.ndarray) -> tuple[int, int]:
    """Indices (i, j), i < j, of two mutually farthest points; ties resolve
    to the lexicographically smallest pair."""
    n = len(points)
    best = (-1.0, 0, 1)
    for i in range(n - 1):
        diff = points[i + 1 :] - points[i]
        d2 = diff[:, 0] ** 2 + diff[:, 1] ** 2
        j_rel = int(np.argmax(d2))
        if d2[j_rel] > best[0]:
            best = (float(d2[j_rel]), i, i + 1 + j_rel)
    return best[1], best[2]


def rdp_simplify(contour: Contour, epsilon: float) -> Contour:
    """Simplify a contour, keeping a subsequence of its points.

    Open polylines keep their endpoints. Closed contours are split at their
    two mutually farthest points, each half is simplified as an open
    polyline, and the halves are rejoined (the result starts at the first
    split point). Every dropped point lies within epsilon of the kept line.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be > 0")
    pts = contour.points
    if np.all(pts == pts[0]):
        raise ValueError("degenerate contour: all points identical")
    if not contour.closed:
        keep = _rdp_open(pts, epsilon)
        return Contour(pts[keep], closed=False)
    i, j = _farthest_pair(pts)
    half_a = pts[i : j + 1]
    half_b = np.concatenate([pts[j:], pts[: i + 1]], axis=0)
    keep_a = _rdp_open(half_a, epsilon)
    keep_b = _rdp_open(half_b, epsilon)
    merged = np.concatenate([half_a[keep_a], half_b[keep_b][1:-1]], axis=0)
    return Contour(merged, closed=True)


# ---------------------------------------------------------------------------
# polygon fill

def fill_contour(contour: Contour, width: int, height: int) -> BinaryMask:
    """Rasterize a closed polygon: pixel centers strictly inside under the
    even-odd rule, plus pixels whose center lies on the outline. Zero-area
    polygons yield an empty mask."""
    if not contour.closed:
        raise ValueError("fill_contour requires a closed contour")
    if width < 1 or height < 1:
        raise ValueError("target raster must be at least 1x1")
    bits = np.zeros((height, width), dtype=bool)
    if contour.signed_area() == 0.0:
        return BinaryMask(bits)
    px, py = np.meshgrid(
        np.arange(width, dtype=np.float64), np.arange(height, dtype=np.float64)
    )
    pts = contour.points
    edges = zip(pts, np.roll(pts, -1, axis=0))
    inside = np.zeros((height, width), dtype=bool)
    boundary = np.zeros((height, width), dtype=bool)
    for (x1, y1), (x2, y2) in edges:
        if y1 != y2:
            # half-open crossing rule handles vertices hit exactly once
            crosses = (y1 > py) != (y2 > py)
            with np.errstate(invalid="ignore"):
                x_at = x1 + (py - y1) * (x2 - x1) / (y2 - y1)
            inside ^= crosses & (px < x_at)
        ex, ey = x2 - x1, y2 - y1
        len2 = ex * ex + ey * ey
        cross = ex * (py - y1) - ey * (px - x1)
        dot = ex * (px - x1) + ey * (py - y1)
        on_seg = (np.abs(cross) <= 1e-9 * max(1.0, np.sqrt(len2))) & (dot >= 0) & (dot <= len2)
        boundary |= on_seg
    bits = inside | boundary
    return BinaryMask(bits)


# ---------------------------------------------------------------------------
# full refinement

def refine_mask(mask: BinaryMask, params: RefineParams | None = None) -> BinaryMask:
    """Erode, dilate, trace outer contours, simplify, and refill.

    Raises EmptyMaskError when nothing fillable survives morphology.
    """
    if params is None:
        params = RefineParams()
    m = erode(mask, params.element, params.erode_iterations)
    m = dilate(m, params.element, params.dilate_iterations)
    if not m.bits.any():
        raise EmptyMaskError("empty-after-morphology")
    contours = extract_contours(m)
    if not contours:
        raise EmptyMaskError("empty-after-morphology: no traceable contour")
    if params.keep_largest_only:
        areas = [abs(c.signed_area()) for c in contours]
        contours = [contours[int(np.argmax(areas))]]
    out = np.zeros((mask.height, mask.width), dtype=bool)
    for c in contours:
        eps = c.perimeter() * params.rdp_ratio
        try:
            simplified = rdp_simplify(c, eps) if eps > 0 else c
        except ValueError:
            continue  # outline collapsed below a polygon: it encloses nothing
        out |= fill_contour(simplified, mask.width, mask.height).bits
    if not out.any():
        raise EmptyMaskError("empty-after-refinement: contours enclose no pixels")
    return BinaryMask(out)
