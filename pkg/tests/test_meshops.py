import numpy as np
import pytest

from buildingmesh import (
    TriangleMesh,
    clean_mesh,
    cluster_connected_triangles,
    decimate_vertex_clustering,
    keep_largest_cluster,
    remove_degenerate_triangles,
    remove_unreferenced_vertices,
)

from helpers import bfs_triangle_clusters


def tetra(offset=(0.0, 0.0, 0.0), scale=1.0):
    """Vertices and faces of a closed tetrahedron."""
    v = np.array(
        [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=float
    ) * scale + np.asarray(offset, dtype=float)
    t = np.array([[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]], dtype=np.int32)
    return v, t


def merge(parts):
    verts, tris = [], []
    base = 0
    for v, t in parts:
        verts.append(v)
        tris.append(t + base)
        base += len(v)
    return TriangleMesh(np.vstack(verts), np.vstack(tris).astype(np.int32))


# ---------------------------------------------------------------------------
# degenerate / unreferenced removal


def test_degenerate_triangles_are_dropped():
    verts = np.array(
        [[0, 0, 0], [1, 0, 0], [0, 1, 0], [2, 0, 0], [0.5, 1e-13, 0]], dtype=float
    )
    tris = np.array(
        [
            [0, 1, 2],  # honest
            [1, 1, 2],  # repeated index
            [0, 1, 3],  # exactly collinear
            [0, 1, 4],  # area ~5e-14, below the 1e-12 floor
        ],
        dtype=np.int32,
    )
    colors = np.linspace(0, 1, 15).reshape(5, 3)
    out = remove_degenerate_triangles(TriangleMesh(verts, tris, colors))
    assert np.array_equal(out.triangles, [[0, 1, 2]])
    # vertices and colors untouched at this stage
    assert np.array_equal(out.vertices, verts)
    assert np.array_equal(out.colors, colors)


def test_degenerate_removal_is_identity_on_clean_input():
    v, t = tetra()
    mesh = TriangleMesh(v, t)
    assert remove_degenerate_triangles(mesh) is mesh


def test_unreferenced_vertices_are_dropped_and_indices_remapped():
    verts = np.array([[9, 9, 9], [0, 0, 0], [1, 0, 0], [0, 1, 0]], dtype=float)
    colors = np.array([[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 0]], dtype=float)
    mesh = TriangleMesh(verts, np.array([[3, 1, 2]], dtype=np.int32), colors)
    out = remove_unreferenced_vertices(mesh)
    assert np.array_equal(out.vertices, verts[1:])
    assert np.array_equal(out.colors, colors[1:])
    assert np.array_equal(out.triangles, [[2, 0, 1]])
    # triangle geometry is unchanged by the remap
    assert np.array_equal(out.vertices[out.triangles], mesh.vertices[mesh.triangles])


def test_unreferenced_removal_is_identity_when_all_used():
    v, t = tetra()
    mesh = TriangleMesh(v, t)
    assert remove_unreferenced_vertices(mesh) is mesh


# ---------------------------------------------------------------------------
# clustering


def test_two_tetrahedra_form_two_clusters():
    mesh = merge([tetra(), tetra(offset=(5, 0, 0))])
    report = cluster_connected_triangles(mesh)
    assert report.n_clusters == 2
    assert list(report.sizes) == [4, 4]
    assert np.array_equal(report.cluster_ids, [0, 0, 0, 0, 1, 1, 1, 1])


def test_isolated_triangle_is_its_own_cluster():
    lone = (
        np.array([[0, 0, 9], [1, 0, 9], [0, 1, 9]], dtype=float),
        np.array([[0, 1, 2]], dtype=np.int32),
    )
    mesh = merge([tetra(), tetra(offset=(5, 0, 0)), lone])
    report = cluster_connected_triangles(mesh)
    assert report.n_clusters == 3
    assert report.cluster_ids[0] == 0  # labels in order of first appearance
    assert list(report.sizes) == [4, 4, 1]
    assert report.areas[2] == pytest.approx(0.5)


def test_sharing_one_vertex_connects_triangles():
    # two triangles touching only at vertex 0
    verts = np.array(
        [[0, 0, 0], [1, 0, 0], [0, 1, 0], [-1, 0, 0], [0, -1, 0]], dtype=float
    )
    tris = np.array([[0, 1, 2], [0, 3, 4]], dtype=np.int32)
    report = cluster_connected_triangles(TriangleMesh(verts, tris))
    assert report.n_clusters == 1


def test_empty_mesh_reports_zero_clusters():
    mesh = TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int32))
    report = cluster_connected_triangles(mesh)
    assert report.n_clusters == 0
    assert len(report.cluster_ids) == 0


def test_clustering_matches_bfs_oracle():
    rng = np.random.default_rng(20)
    for _ in range(20):
        nv = int(rng.integers(4, 14))
        nt = int(rng.integers(1, 24))
        verts = rng.normal(size=(nv, 3))
        tris = rng.integers(0, nv, size=(nt, 3)).astype(np.int32)
        mesh = TriangleMesh(verts, tris)
        report = cluster_connected_triangles(mesh)
        got = {
            frozenset(np.flatnonzero(report.cluster_ids == c).tolist())
            for c in range(report.n_clusters)
        }
        assert got == set(bfs_triangle_clusters(tris))


# ---------------------------------------------------------------------------
# largest-cluster retention


def test_keep_largest_prefers_triangle_count_over_area():
    many_small = tetra(scale=0.1)
    few_big = (
        np.array([[10, 0, 0], [20, 0, 0], [10, 10, 0]], dtype=float),
        np.array([[0, 1, 2]], dtype=np.int32),
    )
    out = keep_largest_cluster(merge([few_big, many_small]))
    assert len(out.triangles) == 4
    assert len(out.vertices) == 4  # orphaned big-triangle vertices dropped


def test_keep_largest_breaks_count_ties_by_area():
    small = (
        np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]], dtype=float),
        np.array([[0, 1, 2]], dtype=np.int32),
    )
    big = (
        np.array([[5, 0, 0], [9, 0, 0], [5, 4, 0]], dtype=float),
        np.array([[0, 1, 2]], dtype=np.int32),
    )
    out = keep_largest_cluster(merge([small, big]))
    assert len(out.triangles) == 1
    assert out.vertices[:, 0].min() >= 5.0


def test_keep_largest_breaks_full_ties_by_first_appearance():
    a = (
        np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]], dtype=float),
        np.array([[0, 1, 2]], dtype=np.int32),
    )
    b = (
        np.array([[5, 0, 0], [6, 0, 0], [5, 1, 0]], dtype=float),
        np.array([[0, 1, 2]], dtype=np.int32),
    )
    out = keep_largest_cluster(merge([a, b]))
    assert out.vertices[:, 0].max() <= 1.0


def test_keep_largest_rejects_empty_mesh():
    mesh = TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int32))
    with pytest.raises(ValueError, match="no triangles"):
        keep_largest_cluster(mesh)


def test_keep_largest_single_cluster_still_drops_orphans():
    v, t = tetra()
    verts = np.vstack([v, [[99, 99, 99]]])
    out = keep_largest_cluster(TriangleMesh(verts, t))
    assert len(out.vertices) == 4
    assert len(out.triangles) == 4


# ---------------------------------------------------------------------------
# clean_mesh


def test_clean_mesh_composes_all_three_stages():
    v, t = tetra()
    verts = np.vstack([v, [[5, 5, 5]], [[6, 5, 5]], [[7, 5, 5]]])  # collinear trio
    tris = np.vstack([t, [[4, 5, 6]], [[0, 0, 1]]]).astype(np.int32)
    out = clean_mesh(TriangleMesh(verts, tris))
    assert len(out.triangles) == 4
    assert len(out.vertices) == 4


def test_clean_mesh_is_idempotent(sphere_recon):
    for mesh in [clean_mesh(merge([tetra(), tetra(offset=(3, 3, 3))])), sphere_recon.mesh]:
        again = clean_mesh(mesh)
        assert np.array_equal(again.vertices, mesh.vertices)
        assert np.array_equal(again.triangles, mesh.triangles)
        if mesh.has_colors:
            assert np.array_equal(again.colors, mesh.colors)


# ---------------------------------------------------------------------------
# vertex-clustering decimation


def test_decimation_merges_cells_and_averages():
    verts = np.array(
        [[0.2, 0.2, 0.0], [0.8, 0.6, 0.0], [1.5, 0.2, 0.0], [0.3, 1.7, 0.0]],
        dtype=float,
    )
    colors = np.array(
        [[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.2, 0.2, 0.2], [0.4, 0.4, 0.4]],
        dtype=float,
    )
    tris = np.array([[0, 2, 3], [1, 2, 3]], dtype=np.int32)
    out = decimate_vertex_clustering(TriangleMesh(verts, tris, colors), 1.0)
    # cells (0,0,0)<-{v0,v1}, (0,1,0)<-{v3}, (1,0,0)<-{v2}, in unique's order
    assert np.allclose(out.vertices, [[0.5, 0.4, 0.0], [0.3, 1.7, 0.0], [1.5, 0.2, 0.0]])
    assert np.allclose(out.colors[0], [0.5, 0.0, 0.5])
    assert np.array_equal(out.triangles, [[0, 2, 1], [0, 2, 1]])


def test_decimation_drops_collapsed_triangles():
    verts = np.array([[0.1, 0.1, 0], [0.4, 0.2, 0], [3.0, 0.0, 0]], dtype=float)
    tris = np.array([[0, 1, 2]], dtype=np.int32)
    out = decimate_vertex_clustering(TriangleMesh(verts, tris), 1.0)
    assert len(out.triangles) == 0
    assert len(out.vertices) == 0  # survivors were all orphaned and removed


def test_decimation_with_giant_cell_empties_the_mesh():
    v, t = tetra()
    out = decimate_vertex_clustering(TriangleMesh(v, t), 1000.0)
    assert len(out.triangles) == 0


def test_decimation_preserves_fine_meshes():
    v, t = tetra()
    out = decimate_vertex_clustering(TriangleMesh(v, t), 1e-3)
    assert len(out.vertices) == 4
    assert len(out.triangles) == 4
    # representatives of singleton cells are the vertices themselves
    assert np.allclose(np.sort(out.vertices, axis=0), np.sort(v, axis=0))


def test_decimation_validates_cell_size():
    v, t = tetra()
    with pytest.raises(ValueError, match="cell_size"):
        decimate_vertex_clustering(TriangleMesh(v, t), 0.0)


def test_decimation_reduces_sphere_mesh(sphere_recon):
    mesh = sphere_recon.mesh
    out = decimate_vertex_clustering(mesh, 0.5)
    assert 0 < len(out.vertices) < len(mesh.vertices) / 4
    assert out.has_colors
    r = np.linalg.norm(out.vertices, axis=1)
    assert np.abs(r - sphere_recon.radius).mean() < 0.3
