"""Structured-mesh construction: counts, orientation, connectivity, exactness."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ifem.mesh import build_structured_mesh, mesh_quality_report


@pytest.mark.parametrize("N", [1, 2, 3, 4, 10, 17])
def test_entity_counts(N):
    mesh = build_structured_mesh(N)
    assert mesh.n_vertices == (N + 1) ** 2
    assert mesh.n_triangles == 2 * N**2
    assert mesh.n_edges == 3 * N**2 + 2 * N


def test_rejects_degenerate_subdivision():
    with pytest.raises(ValueError):
        build_structured_mesh(0)
    with pytest.raises(ValueError):
        build_structured_mesh(-3)


def test_vertex_coordinates_exact():
    # Lattice coordinates must come out as -1 + 2i/N with no accumulated
    # rounding, so that points like (0.5, 0) at N = 4 land on the axis
    # bit-exactly.
    mesh = build_structured_mesh(4)
    xs = np.unique(mesh.vertices[:, 0])
    assert np.array_equal(xs, np.array([-1.0, -0.5, 0.0, 0.5, 1.0]))
    assert mesh.h == 0.5
    assert mesh.hmax == pytest.approx(np.sqrt(2) * 0.5)


@pytest.mark.parametrize("N", [1, 3, 8])
def test_triangles_counterclockwise_equal_area(N):
    mesh = build_structured_mesh(N)
    areas = mesh.signed_areas()
    assert np.all(areas > 0)
    np.testing.assert_allclose(areas, 0.5 * (2.0 / N) ** 2, rtol=1e-14)
    assert areas.sum() == pytest.approx(4.0, rel=1e-13)


@pytest.mark.parametrize("N", [2, 5])
def test_edge_orientation_and_adjacency(N):
    mesh = build_structured_mesh(N)
    assert np.all(mesh.edges[:, 0] < mesh.edges[:, 1])
    # Every edge of every triangle points back at that triangle.
    for t, eids in enumerate(mesh.tri_edges):
        for e in eids:
            assert t in mesh.edge_tris[e]
            assert set(mesh.edges[e]) <= set(mesh.triangles[t])
    # Interior edges have two distinct owners, boundary edges one.
    owners = mesh.edge_tris
    n_boundary = int(np.sum(owners[:, 1] == -1))
    assert n_boundary == 4 * N
    interior = owners[owners[:, 1] != -1]
    assert np.all(interior[:, 0] != interior[:, 1])


def test_boundary_flags(N=6):
    mesh = build_structured_mesh(N)
    on_b = np.max(np.abs(mesh.vertices), axis=1) >= 1.0 - 1e-14
    assert np.array_equal(mesh.on_boundary, on_b)
    assert int(mesh.on_boundary.sum()) == 4 * N
    b_edges = mesh.boundary_edges
    assert len(b_edges) == 4 * N
    assert np.all(mesh.on_boundary[mesh.edges[b_edges]])


@settings(max_examples=20, deadline=None)
@given(N=st.integers(min_value=1, max_value=24))
def test_triangles_partition_square(N):
    mesh = build_structured_mesh(N)
    assert float(mesh.signed_areas().sum()) == pytest.approx(4.0, rel=1e-12)
    # Interior edge count + boundary edge count matches Euler's formula.
    assert mesh.n_vertices - mesh.n_edges + mesh.n_triangles == 1


def test_quality_report_uniform():
    mesh = build_structured_mesh(8)
    q = mesh_quality_report(mesh)
    # Uniform right isoceles triangles: inradius = h (2 - sqrt(2)) / 2.
    expected = 0.125 * (2.0 - np.sqrt(2.0))
    assert q.min_inradius == pytest.approx(expected, rel=1e-12)
