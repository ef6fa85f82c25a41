"""Mesh cleanup: degenerate/orphan removal and largest-cluster retention."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core.types import TriangleMesh

_AREA_EPS = 1e-12  # m^2; numerical degeneracy guard


@dataclass(frozen=True)
class MeshClusterReport:
    """Connected-component labels over triangles sharing >= 1 vertex.

    ``cluster_ids`` are contiguous from 0 in order of first appearance.
    """

    cluster_ids: np.ndarray  # (n_tris,) int32
    sizes: np.ndarray        # (n_clusters,) triangle counts
    areas: np.ndarray        # (n_clusters,) summed triangle areas, m^2

    @property
    def n_clusters(self) -> int:
        return len(self.sizes)


def _rebuild(mesh: TriangleMesh, verts, tris, colors) -> TriangleMesh:
    if not mesh.has_colors:
        return TriangleMesh(verts, tris)
    return TriangleMesh(verts, tris, colors)


def remove_degenerate_triangles(mesh: TriangleMesh) -> TriangleMesh:
    """Drop triangles with a repeated vertex index or area < 1e-12 m^2."""
    t = mesh.triangles
    if len(t) == 0:
        return mesh
    repeated = (t[:, 0] == t[:, 1]) | (t[:, 1] == t[:, 2]) | (t[:, 0] == t[:, 2])
    tiny = mesh.triangle_areas() < _AREA_EPS
    keep = ~(repeated | tiny)
    if np.all(keep):
        return mesh
    return _rebuild(mesh, mesh.vertices, t[keep], mesh.colors)


def remove_unreferenced_vertices(mesh: TriangleMesh) -> TriangleMesh:
    t = mesh.triangles
    used = np.unique(t)  # ascending -> vertex order preserved by the remap
    if len(used) == len(mesh.vertices):
        return mesh
    remap = np.full(len(mesh.vertices), -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    colors = mesh.colors[used] if mesh.has_colors else None
    return _rebuild(mesh, mesh.vertices[used], remap[t].astype(np.int32), colors)


class _DisjointSet:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, a: int) -> int:
        p = self.parent
        while p[a] != a:
            p[a] = p[p[a]]  # path halving
            a = p[a]
        return a

    def union(self, a: int, b: int):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def cluster_connected_triangles(mesh: TriangleMesh) -> MeshClusterReport:
    t = mesh.triangles
    n_tris = len(t)
    if n_tris == 0:
        return MeshClusterReport(
            np.zeros(0, dtype=np.int32),
            np.zeros(0, dtype=np.int64),
            np.zeros(0, dtype=np.float64),
        )
    dsu = _DisjointSet(len(mesh.vertices))
    for a, b, c in t.tolist():
        dsu.union(a, b)
        dsu.union(a, c)
    roots = np.fromiter(
        (dsu.find(int(v)) for v in t[:, 0]), count=n_tris, dtype=np.int64
    )
    ids = np.empty(n_tris, dtype=np.int32)
    label_of: dict[int, int] = {}
    for i, r in enumerate(roots.tolist()):
        if r not in label_of:
            label_of[r] = len(label_of)
        ids[i] = label_of[r]
    n_clusters = len(label_of)
    sizes = np.bincount(ids, minlength=n_clusters).astype(np.int64)
    areas = np.bincount(ids, weights=mesh.triangle_areas(), minlength=n_clusters)
    return MeshClusterReport(ids, sizes, areas)


def keep_largest_cluster(mesh: TriangleMesh) -> TriangleMesh:
    """Retain the cluster with the most triangles (ties: area, then lowest id)."""
    if len(mesh.triangles) == 0:
        raise ValueError("mesh has no triangles to cluster")
    report = cluster_connected_triangles(mesh)
    best = max(
        range(report.n_clusters),
        key=lambda i: (report.sizes[i], report.areas[i], -i),
    )
    if report.n_clusters == 1:
        return remove_unreferenced_vertices(mesh)
    keep = report.cluster_ids == best
    trimmed = _rebuild(mesh, mesh.vertices, mesh.triangles[keep], mesh.colors)
    return remove_unreferenced_vertices(trimmed)


def clean_mesh(mesh: TriangleMesh) -> TriangleMesh:
    """Degenerate removal, orphan removal, largest-cluster retention, in order."""
    mesh = remove_degenerate_triangles(mesh)
    mesh = remove_unreferenced_vertices(mesh)
    return keep_largest_cluster(mesh)


def decimate_vertex_clustering(mesh: TriangleMesh, cell_size: float) -> TriangleMesh:
    """Merge vertices falling in the same axis-aligned grid cell.

    Representative = mean of merged vertices (colors likewise); triangles
    collapsing to fewer than three distinct cells are dropped. Off by default
    in the pipeline; meant for coarse previews.
    """
    if not cell_size > 0:
        raise ValueError("cell_size must be > 0")
    v = mesh.vertices
    if len(v) == 0 or len(mesh.triangles) == 0:
        return mesh
    cells = np.floor(v / cell_size).astype(np.int64)
    _, first, inverse = np.unique(
        cells, axis=0, return_index=True, return_inverse=True
    )
    inverse = inverse.reshape(-1)  # numpy 2.0 briefly changed this shape
    n_cells = len(first)
    counts = np.bincount(inverse, minlength=n_cells).astype(np.float64)
    new_verts = np.zeros((n_cells, 3))
    for ax in range(3):
        new_verts[:, ax] = np.bincount(inverse, weights=v[:, ax]) / counts
    colors = None
    if mesh.has_colors:
        colors = np.zeros((n_cells, 3))
        for ch in range(3):
            colors[:, ch] = (
                np.bincount(inverse, weights=mesh.colors[:, ch]) / counts
            )
        colors = np.clip(colors, 0.0, 1.0)
    tris = inverse[mesh.triangles].astype(np.int32)
    collapsed = (
        (tris[:, 0] == tris[:, 1])
        | (tris[:, 1] == tris[:, 2])
        | (tris[:, 0] == tris[:, 2])
    )
    out = _rebuild(mesh, new_verts, tris[~collapsed], colors)
    return remove_unreferenced_vertices(out)
