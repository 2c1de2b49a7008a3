"""Linear-system assembly for the three discretizations.

Standard: P1 on the original (unfitted) mesh with the coefficient taken
at element barycenters.  Fitted: conforming P1 on the fitted mesh, with
one extra degree of freedom per cut point and the coefficient interpolated
nodally from the side's smooth extension.  Hybrid: the same element
matrices, but cut-point unknowns are duplicated per cut triangle and a
piecewise-constant Lagrange multiplier per cut edge enforces zero mean
jump, yielding the saddle-point block system (A, C, D, B).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .mesh import Mesh, cross2
from .geometry import FittedMesh, LevelSetInterface, NodeKey

__all__ = [
    "CoefficientField",
    "StandardDofMap",
    "FittedDofMap",
    "HybridDofMap",
    "AssembledSystem",
    "BlockSystem",
    "local_stiffness",
    "local_load",
    "assemble_rhs",
    "build_discrete_coefficient",
    "assemble_standard",
    "assemble_fitted",
    "assemble_hybrid",
    "apply_dirichlet",
    "evaluate_at",
    "write_system_dump",
]


def evaluate_at(func: Callable, pts: np.ndarray) -> np.ndarray:
    """Evaluate a scalar field at an (M, 2) array of points."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    vals = np.asarray(func(pts[:, 0], pts[:, 1]), dtype=float)
    return np.broadcast_to(vals, (len(pts),)).copy()


@dataclass(frozen=True)
class CoefficientField:
    """Pair of smooth extensions of the two-sided diffusion coefficient.

    Both callables are defined on the whole domain and take numpy arrays
    (x, y).  The fitted/hybrid methods interpolate the extension of the
    element's side at the element nodes.
    """

    a_plus: Callable
    a_minus: Callable

    @classmethod
    def constant(cls, alpha: float, beta: float) -> "CoefficientField":
        if alpha <= 0 or beta <= 0:
            raise ValueError("coefficient values must be positive")
        return cls(
            a_plus=lambda x, y: np.full_like(np.asarray(x, dtype=float), alpha),
            a_minus=lambda x, y: np.full_like(np.asarray(x, dtype=float), beta),
        )

    def nodal_values(self, side: str, points: np.ndarray) -> np.ndarray:
        func = self.a_plus if side == "+" else self.a_minus
        return evaluate_at(func, points)


def _grads_and_area(points: np.ndarray):
    p = np.asarray(points, dtype=float)
    det = float(cross2(p[1] - p[0], p[2] - p[0]))
    if det <= 0.0:
        raise ValueError("element has non-positive area")
    # Constant gradients of the barycentric shape functions.
    g = np.empty((3, 2))
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        g[i, 0] = p[j, 1] - p[k, 1]
        g[i, 1] = p[k, 0] - p[j, 0]
    g /= det
    return g, 0.5 * det


def local_stiffness(points: np.ndarray, nodal_coeff) -> np.ndarray:
    """3x3 element stiffness with linearly interpolated coefficient.

    The integrand a_h grad(l_i) . grad(l_j) is linear, so area times the
    vertex mean of the coefficient integrates it exactly.
    """
    g, area = _grads_and_area(points)
    abar = float(np.mean(np.broadcast_to(np.asarray(nodal_coeff, dtype=float), (3,))))
    return abar * area * (g @ g.T)


def local_load(points: np.ndarray, f: Callable) -> np.ndarray:
    """Element load by the 3-point edge-midpoint rule (exact for quadratics)."""
    p = np.asarray(points, dtype=float)
    area = 0.5 * float(cross2(p[1] - p[0], p[2] - p[0]))
    mids = 0.5 * np.array([p[1] + p[2], p[0] + p[2], p[0] + p[1]])
    fv = evaluate_at(f, mids)
    # Shape function i is 1/2 at the two midpoints not opposite to it.
    return (area / 6.0) * (fv.sum() - fv)


def _batch_stiffness(points: np.ndarray, coeff_mean: np.ndarray) -> np.ndarray:
    """Stiffness matrices for a batch of (M, 3, 2) elements at once."""
    p = points
    det = cross2(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    g = np.empty((len(p), 3, 2))
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        g[:, i, 0] = p[:, j, 1] - p[:, k, 1]
        g[:, i, 1] = p[:, k, 0] - p[:, j, 0]
    g /= det[:, None, None]
    area = 0.5 * det
    return (coeff_mean * area)[:, None, None] * np.einsum("mid,mjd->mij", g, g)


def _batch_load(points: np.ndarray, f: Callable) -> np.ndarray:
    p = points
    area = 0.5 * cross2(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    mids = 0.5 * np.stack(
        [p[:, 1] + p[:, 2], p[:, 0] + p[:, 2], p[:, 0] + p[:, 1]], axis=1
    )
    flat = mids.reshape(-1, 2)
    fv = evaluate_at(f, flat).reshape(len(p), 3)
    return (area / 6.0)[:, None] * (fv.sum(axis=1, keepdims=True) - fv)


@dataclass(frozen=True)
class StandardDofMap:
    method: str
    n_vertices: int

    @property
    def n_dofs(self) -> int:
        return self.n_vertices


@dataclass(frozen=True)
class FittedDofMap:
    method: str
    n_vertices: int
    cut_index: dict  # edge_id -> enriched slot

    @property
    def n_enriched(self) -> int:
        return len(self.cut_index)

    @property
    def n_dofs(self) -> int:
        return self.n_vertices + len(self.cut_index)

    def dof(self, node: NodeKey, parent: int | None = None) -> int:
        kind, idx = node
        if kind == "v":
            return idx
        return self.n_vertices + self.cut_index[idx]


@dataclass(frozen=True)
class HybridDofMap:
    method: str
    n_vertices: int
    enriched_index: dict  # (tri_id, edge_id) -> enriched slot
    multiplier_index: dict  # edge_id -> multiplier slot
    tri_enriched: dict  # tri_id -> list of enriched slots

    @property
    def n_enriched(self) -> int:
        return len(self.enriched_index)

    @property
    def n_multipliers(self) -> int:
        return len(self.multiplier_index)


@dataclass
class AssembledSystem:
    """Sparse system plus Dirichlet data; matrix is pre-elimination."""

    matrix: sp.csr_matrix
    rhs: np.ndarray
    dirichlet_idx: np.ndarray
    dirichlet_vals: np.ndarray
    dofmap: object

    def constrained(self):
        return apply_dirichlet(self.matrix, self.rhs, self.dirichlet_idx, self.dirichlet_vals)


@dataclass
class BlockSystem:
    """Blocks of the hybrid saddle-point system.

    Rows/columns of A and C are vertex dofs, D and B enriched dofs, and
    B's columns are the per-cut-edge multipliers.  Dirichlet data applies
    to vertex dofs only (cut edges never lie on the boundary).
    """

    A: sp.csr_matrix
    C: sp.csr_matrix
    D: sp.csr_matrix
    B: sp.csr_matrix
    b: np.ndarray
    c: np.ndarray
    dirichlet_idx: np.ndarray
    dirichlet_vals: np.ndarray
    dofmap: HybridDofMap
    fitted: FittedMesh

    def constrained(self):
        """(A, C, b, c) with boundary vertex dofs eliminated symmetrically."""
        idx, vals = self.dirichlet_idx, self.dirichlet_vals
        n = self.A.shape[0]
        keep = np.ones(n)
        keep[idx] = 0.0
        Dk = sp.diags(keep)
        b = self.b - self.A[:, idx] @ vals
        b[idx] = vals
        c = self.c - (self.C.T)[:, idx] @ vals
        A = (Dk @ self.A @ Dk + sp.diags(1.0 - keep)).tocsr()
        C = (Dk @ self.C).tocsr()
        return A, C, b, c


def apply_dirichlet(matrix: sp.spmatrix, rhs: np.ndarray, idx, vals):
    """Symmetric elimination: columns to the rhs, rows to the identity."""
    idx = np.asarray(idx, dtype=np.int64)
    vals = np.asarray(vals, dtype=float)
    n = matrix.shape[0]
    keep = np.ones(n)
    keep[idx] = 0.0
    Dk = sp.diags(keep)
    out_rhs = rhs - matrix[:, idx] @ vals
    out_rhs[idx] = vals
    out = (Dk @ matrix @ Dk + sp.diags(1.0 - keep)).tocsr()
    return out, out_rhs


def assemble_rhs(elements, f: Callable, dof_of, n_dofs: int) -> np.ndarray:
    """Load vector over an element iterable via the edge-midpoint rule."""
    rhs = np.zeros(n_dofs)
    for elem in elements:
        load = local_load(elem.points, f)
        for local, node in enumerate(elem.nodes):
            rhs[dof_of(node, elem.parent)] += load[local]
    return rhs


def build_discrete_coefficient(fitted: FittedMesh, coeff: CoefficientField) -> list[np.ndarray]:
    """Nodal coefficient values per fitted element, in elements() order.

    Every element wholly on one side of gamma_h receives the nodal values
    of that side's smooth extension, including sub-elements lying between
    the chord and the true interface.
    """
    return [coeff.nodal_values(elem.side, elem.points) for elem in fitted.elements()]


def _boundary_data(mesh: Mesh, g):
    idx = np.flatnonzero(mesh.on_boundary)
    if g is None:
        vals = np.zeros(len(idx))
    else:
        vals = evaluate_at(g, mesh.vertices[idx])
    return idx, vals


def assemble_standard(
    mesh: Mesh,
    coeff: CoefficientField,
    iface: LevelSetInterface,
    f: Callable,
    g: Callable | None = None,
) -> AssembledSystem:
    """P1 system on the unfitted mesh; coefficient at element barycenters."""
    pts = mesh.vertices[mesh.triangles]
    bary = pts.mean(axis=1)
    phi = np.asarray(iface.values(bary))
    aval = np.where(
        phi < 0,
        evaluate_at(coeff.a_plus, bary),
        evaluate_at(coeff.a_minus, bary),
    )
    ke = _batch_stiffness(pts, aval)
    fe = _batch_load(pts, f)

    tri = mesh.triangles
    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    K = sp.coo_matrix(
        (ke.ravel(), (rows, cols)), shape=(mesh.n_vertices, mesh.n_vertices)
    ).tocsr()
    rhs = np.zeros(mesh.n_vertices)
    np.add.at(rhs, tri.ravel(), fe.ravel())

    idx, vals = _boundary_data(mesh, g)
    return AssembledSystem(K, rhs, idx, vals, StandardDofMap("standard", mesh.n_vertices))


def _fitted_dofmap(fitted: FittedMesh) -> FittedDofMap:
    cut_index = {int(e): k for k, e in enumerate(fitted.cut_edges)}
    return FittedDofMap("fitted", fitted.base.n_vertices, cut_index)


def assemble_fitted(
    fitted: FittedMesh,
    coeff: CoefficientField,
    f: Callable,
    g: Callable | None = None,
) -> AssembledSystem:
    """Conforming enriched system: vertex dofs plus one dof per cut point."""
    mesh = fitted.base
    dofmap = _fitted_dofmap(fitted)
    n = dofmap.n_dofs
    rhs = np.zeros(n)

    # Bulk-assemble the uncut triangles.
    uncut = np.flatnonzero(fitted.side_of_uncut != "")
    pts = mesh.vertices[mesh.triangles[uncut]]
    plus = fitted.side_of_uncut[uncut] == "+"
    nodal = np.where(
        plus[:, None],
        evaluate_at(coeff.a_plus, pts.reshape(-1, 2)).reshape(-1, 3),
        evaluate_at(coeff.a_minus, pts.reshape(-1, 2)).reshape(-1, 3),
    )
    ke = _batch_stiffness(pts, nodal.mean(axis=1))
    fe = _batch_load(pts, f)
    tri = mesh.triangles[uncut]
    rows = [np.repeat(tri, 3, axis=1).ravel()]
    cols = [np.tile(tri, (1, 3)).ravel()]
    data = [ke.ravel()]
    np.add.at(rhs, tri.ravel(), fe.ravel())

    # Subtriangles one by one.
    for t in fitted.band:
        for s in fitted.subtriangles[int(t)]:
            dofs = np.array([dofmap.dof(nd) for nd in s.nodes])
            ke1 = local_stiffness(s.points, coeff.nodal_values(s.side, s.points))
            rows.append(np.repeat(dofs, 3))
            cols.append(np.tile(dofs, 3))
            data.append(ke1.ravel())
            rhs[dofs] += local_load(s.points, f)

    K = sp.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    ).tocsr()
    idx, vals = _boundary_data(mesh, g)
    return AssembledSystem(K, rhs, idx, vals, dofmap)


def _hybrid_dofmap(fitted: FittedMesh) -> HybridDofMap:
    enriched: dict = {}
    tri_enriched: dict = {}
    cutset = set(int(e) for e in fitted.cut_edges)
    for t in fitted.band:
        t = int(t)
        slots = []
        for e in fitted.base.tri_edges[t]:
            e = int(e)
            if e in cutset:
                enriched[(t, e)] = len(enriched)
                slots.append(enriched[(t, e)])
        tri_enriched[t] = slots
    multiplier = {int(e): k for k, e in enumerate(fitted.cut_edges)}
    return HybridDofMap("hybrid", fitted.base.n_vertices, enriched, multiplier, tri_enriched)


def assemble_hybrid(
    fitted: FittedMesh,
    coeff: CoefficientField,
    f: Callable,
    g: Callable | None = None,
) -> BlockSystem:
    """Saddle-point blocks of the hybrid method.

    Cut-point values are duplicated per adjacent cut triangle; the
    constraint block B carries +|e|/2 for the dof of the edge's first
    adjacent triangle (jump-positive side) and -|e|/2 for the second, so
    the multiplier approximates the conormal flux a du/dn with the normal
    pointing from the second triangle into the first.
    """
    mesh = fitted.base
    dofmap = _hybrid_dofmap(fitted)
    nv = mesh.n_vertices
    ne = dofmap.n_enriched
    nm = dofmap.n_multipliers

    rows_a, cols_a, data_a = [], [], []
    rows_c, cols_c, data_c = [], [], []
    rows_d, cols_d, data_d = [], [], []
    b = np.zeros(nv)
    c = np.zeros(ne)

    # Bulk uncut part goes into A and b only.
    uncut = np.flatnonzero(fitted.side_of_uncut != "")
    pts = mesh.vertices[mesh.triangles[uncut]]
    plus = fitted.side_of_uncut[uncut] == "+"
    nodal = np.where(
        plus[:, None],
        evaluate_at(coeff.a_plus, pts.reshape(-1, 2)).reshape(-1, 3),
        evaluate_at(coeff.a_minus, pts.reshape(-1, 2)).reshape(-1, 3),
    )
    ke = _batch_stiffness(pts, nodal.mean(axis=1))
    fe = _batch_load(pts, f)
    tri = mesh.triangles[uncut]
    rows_a.append(np.repeat(tri, 3, axis=1).ravel())
    cols_a.append(np.tile(tri, (1, 3)).ravel())
    data_a.append(ke.ravel())
    np.add.at(b, tri.ravel(), fe.ravel())

    for t in fitted.band:
        t = int(t)
        # Structural zeros keep A's sparsity pattern identical to the
        # standard method's even where subtriangles skip a vertex pair.
        verts = mesh.triangles[t]
        rows_a.append(np.repeat(verts, 3))
        cols_a.append(np.tile(verts, 3))
        data_a.append(np.zeros(9))
        for s in fitted.subtriangles[t]:
            ke1 = local_stiffness(s.points, coeff.nodal_values(s.side, s.points))
            load = local_load(s.points, f)
            gdofs = []
            for nd in s.nodes:
                kind, idx = nd
                if kind == "v":
                    gdofs.append(("A", idx))
                else:
                    gdofs.append(("D", dofmap.enriched_index[(t, idx)]))
            for i, (bi, di) in enumerate(gdofs):
                if bi == "A":
                    b[di] += load[i]
                else:
                    c[di] += load[i]
                for j, (bj, dj) in enumerate(gdofs):
                    v = ke1[i, j]
                    if bi == "A" and bj == "A":
                        rows_a.append(np.array([di]))
                        cols_a.append(np.array([dj]))
                        data_a.append(np.array([v]))
                    elif bi == "A" and bj == "D":
                        rows_c.append(di)
                        cols_c.append(dj)
                        data_c.append(v)
                    elif bi == "D" and bj == "D":
                        rows_d.append(di)
                        cols_d.append(dj)
                        data_d.append(v)
                    # The (D, A) case is Cᵀ; filled by symmetry.

    A = sp.coo_matrix(
        (np.concatenate(data_a), (np.concatenate(rows_a), np.concatenate(cols_a))),
        shape=(nv, nv),
    ).tocsr()
    C = sp.coo_matrix((data_c, (rows_c, cols_c)), shape=(nv, ne)).tocsr()
    D = sp.coo_matrix((data_d, (rows_d, cols_d)), shape=(ne, ne)).tocsr()

    rows_b, cols_b, data_b = [], [], []
    for e, m in dofmap.multiplier_index.items():
        tl, tr = (int(x) for x in mesh.edge_tris[e])
        v0, v1 = mesh.edges[e]
        elen = float(np.linalg.norm(mesh.vertices[v1] - mesh.vertices[v0]))
        rows_b.append(dofmap.enriched_index[(tl, e)])
        cols_b.append(m)
        data_b.append(0.5 * elen)
        rows_b.append(dofmap.enriched_index[(tr, e)])
        cols_b.append(m)
        data_b.append(-0.5 * elen)
    B = sp.coo_matrix((data_b, (rows_b, cols_b)), shape=(ne, nm)).tocsr()

    idx, vals = _boundary_data(mesh, g)
    return BlockSystem(A, C, D, B, b, c, idx, vals, dofmap, fitted)


def write_system_dump(matrix: sp.spmatrix, path) -> None:
    """Triplet text dump used by the CLI verify command."""
    coo = matrix.tocoo()
    with open(path, "w") as fh:
        fh.write(f"matrix {coo.shape[0]} {coo.shape[1]} {coo.nnz}\n")
        for i, j, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{i} {j} {v!r}\n")
