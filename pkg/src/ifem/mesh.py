"""Structured conforming triangulations of the square (-1, 1)^2.

The mesh is the uniform N x N grid of squares, each split by its
lower-left -> upper-right diagonal into two triangles, giving (N+1)^2
vertices and 2 N^2 triangles.  All connectivity (edge table, edge-triangle
adjacency) is built once and the mesh is immutable afterwards.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Mesh",
    "QualityReport",
    "build_structured_mesh",
    "cross2",
    "mesh_quality_report",
    "write_mesh_dump",
]


def cross2(u, v):
    """z component of the cross product of 2-d vectors (broadcasting)."""
    u = np.asarray(u)
    v = np.asarray(v)
    return u[..., 0] * v[..., 1] - u[..., 1] * v[..., 0]


@dataclass(frozen=True)
class Mesh:
    """Uniform triangulation of (-1, 1)^2.

    Attributes
    ----------
    N : int
        Number of subdivisions per side.
    vertices : (V, 2) float array
        Vertex coordinates, V = (N+1)^2.  Coordinates are computed as
        -1 + 2i/N so boundary detection by exact comparison is safe.
    on_boundary : (V,) bool array
        True iff max(|x|, |y|) == 1.
    triangles : (T, 3) int array
        Vertex ids in counterclockwise order, T = 2 N^2.
    edges : (E, 2) int array
        Vertex pairs with v0 < v1, ids in deterministic scan order.
    edge_tris : (E, 2) int array
        Adjacent triangle ids; column 1 is -1 for boundary edges.
    tri_edges : (T, 3) int array
        Edge id of side k, where side k connects local vertices k and k+1.
    h : float
        Grid spacing 2/N.
    hmax : float
        Longest edge length, 2*sqrt(2)/N.
    """

    N: int
    vertices: np.ndarray
    on_boundary: np.ndarray
    triangles: np.ndarray
    edges: np.ndarray
    edge_tris: np.ndarray
    tri_edges: np.ndarray
    h: float
    hmax: float

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def boundary_edges(self) -> np.ndarray:
        """Ids of edges with a single adjacent triangle."""
        return np.flatnonzero(self.edge_tris[:, 1] < 0)

    def triangle_points(self, tri_id: int) -> np.ndarray:
        """Corner coordinates of one triangle, shape (3, 2)."""
        return self.vertices[self.triangles[tri_id]]

    def signed_areas(self) -> np.ndarray:
        """Signed area of every triangle (positive = counterclockwise)."""
        p = self.vertices[self.triangles]
        return 0.5 * cross2(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])

    def rotation_map(self) -> np.ndarray:
        """Vertex permutation induced by 180-degree rotation about 0.

        The lower-left -> upper-right diagonal split makes the mesh
        invariant under this rotation, so the map is a bijection of the
        vertex set onto itself.
        """
        n = self.N
        i, j = np.meshgrid(np.arange(n + 1), np.arange(n + 1), indexing="xy")
        ids = (j * (n + 1) + i).ravel()
        rot = ((n - j) * (n + 1) + (n - i)).ravel()
        out = np.empty(self.n_vertices, dtype=np.int64)
        out[ids] = rot
        return out


@dataclass(frozen=True)
class QualityReport:
    """Diagnostic mesh-quality figures; informational, never fails a run."""

    min_inradius: float
    h_over_rho: float
    min_cut_fraction: float | None
    min_cut_edge_ratio: float | None
    n_elements: int
    n_subtriangles: int


def build_structured_mesh(N: int) -> Mesh:
    """Build the uniform triangulation with 2 N^2 triangles.

    Raises
    ------
    ValueError
        If N < 1.
    """
    if N < 1:
        raise ValueError(f"subdivision count N must be >= 1, got {N}")

    n1 = N + 1
    i = np.arange(n1)
    x = -1.0 + 2.0 * i / N
    X, Y = np.meshgrid(x, x, indexing="xy")
    vertices = np.column_stack([X.ravel(), Y.ravel()])
    on_boundary = (np.abs(vertices[:, 0]) == 1.0) | (np.abs(vertices[:, 1]) == 1.0)

    tris = []
    for j in range(N):
        for ii in range(N):
            a = j * n1 + ii
            b = j * n1 + ii + 1
            c = (j + 1) * n1 + ii + 1
            d = (j + 1) * n1 + ii
            tris.append((a, b, c))
            tris.append((a, c, d))
    triangles = np.asarray(tris, dtype=np.int64)

    edge_index: dict[tuple[int, int], int] = {}
    edges = []
    edge_tris = []
    tri_edges = np.empty((len(triangles), 3), dtype=np.int64)
    for t, (v0, v1, v2) in enumerate(triangles):
        for k, (a, b) in enumerate(((v0, v1), (v1, v2), (v2, v0))):
            key = (a, b) if a < b else (b, a)
            e = edge_index.get(key)
            if e is None:
                e = len(edges)
                edge_index[key] = e
                edges.append(key)
                edge_tris.append([t, -1])
            else:
                edge_tris[e][1] = t
            tri_edges[t, k] = e

    return Mesh(
        N=N,
        vertices=vertices,
        on_boundary=on_boundary,
        triangles=triangles,
        edges=np.asarray(edges, dtype=np.int64),
        edge_tris=np.asarray(edge_tris, dtype=np.int64),
        tri_edges=tri_edges,
        h=2.0 / N,
        hmax=2.0 * np.sqrt(2.0) / N,
    )


def _inradius(points: np.ndarray) -> float:
    """Inradius of a triangle given its (3, 2) corner array."""
    a = np.linalg.norm(points[1] - points[0])
    b = np.linalg.norm(points[2] - points[1])
    c = np.linalg.norm(points[0] - points[2])
    area = 0.5 * abs(cross2(points[1] - points[0], points[2] - points[0]))
    return 2.0 * area / (a + b + c)


def mesh_quality_report(mesh) -> QualityReport:
    """Quality figures for a Mesh or a FittedMesh.

    For a fitted mesh the minimum inradius runs over subtriangles as well,
    and the cut-related fields report the worst intersection-distance
    fraction along a cut edge and the shortest cut edge relative to h.
    """
    is_fitted = hasattr(mesh, "base")
    base = mesh.base if is_fitted else mesh

    rho = float("inf")
    n_sub = 0
    n_elems = base.n_triangles
    for t in range(base.n_triangles):
        subs = mesh.subtriangles.get(t) if is_fitted else None
        if subs:
            for s in subs:
                rho = min(rho, _inradius(s.points))
                n_sub += 1
            n_elems += len(subs) - 1
        else:
            rho = min(rho, _inradius(base.triangle_points(t)))

    min_frac = None
    min_edge_ratio = None
    if is_fitted and mesh.cuts:
        min_frac = min(min(c.t, 1.0 - c.t) for c in mesh.cuts.values())
        lengths = [
            np.linalg.norm(np.diff(base.vertices[base.edges[e]], axis=0))
            for e in mesh.cuts
        ]
        min_edge_ratio = float(min(lengths) / base.h)

    return QualityReport(
        min_inradius=float(rho),
        h_over_rho=float(base.h / rho),
        min_cut_fraction=min_frac,
        min_cut_edge_ratio=min_edge_ratio,
        n_elements=n_elems,
        n_subtriangles=n_sub,
    )


def write_mesh_dump(mesh: Mesh, path) -> None:
    """Plain-text mesh dump used by the CLI mesh-info command."""
    with open(path, "w") as fh:
        fh.write(f"vertices {mesh.n_vertices} triangles {mesh.n_triangles}\n")
        for i, (x, y) in enumerate(mesh.vertices):
            fh.write(f"v {i} {x!r} {y!r}\n")
        for i, (a, b, c) in enumerate(mesh.triangles):
            fh.write(f"t {i} {a} {b} {c}\n")
