"""Interface geometry: triangle classification and cut-cell subtriangulation.

A closed implicit curve (phi < 0 inside, phi > 0 outside) cuts the
structured mesh.  Each triangle is classified as uncut, edge-aligned,
cut through two edges, or cut through an edge and the opposite vertex.
Cut triangles are split along the chord between their two intersection
points into subtriangles K1/K2(/K3), and the chords are chained into the
closed polyline gamma_h.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator, NamedTuple

import numpy as np

from .mesh import Mesh, cross2

__all__ = [
    "GeometryError",
    "LevelSetInterface",
    "CircleInterface",
    "CutPoint",
    "Uncut",
    "EdgeAligned",
    "CutTwoEdges",
    "CutEdgeVertex",
    "SubTriangle",
    "FittedMesh",
    "Element",
    "edge_intersection",
    "classify_triangle",
    "subtriangulate",
    "build_fitted_mesh",
    "side_of_point",
]

# Vertices with |phi| below this are treated as lying on the interface.
VERTEX_TOL = 1e-12
# Cut points closer than this fraction of the edge length to an endpoint
# are snapped to the vertex (case 3 degenerates to case 4 or 2).
SNAP_T = 1e-9


class GeometryError(Exception):
    """Interface geometry inconsistent with the mesh resolution."""


class LevelSetInterface:
    """Closed curve given implicitly by phi = 0, with phi < 0 inside.

    The generic path locates edge intersections by bisection and
    estimates tangents by central differences; analytic specializations
    (see CircleInterface) override both.
    """

    def __init__(self, phi: Callable[[float, float], float]):
        self._phi = phi

    def value(self, x: float, y: float) -> float:
        return self._phi(x, y)

    def values(self, pts: np.ndarray) -> np.ndarray:
        return np.asarray([self._phi(x, y) for x, y in np.atleast_2d(pts)])

    def gradient(self, x: float, y: float) -> tuple[float, float]:
        eps = 1e-6
        gx = (self.value(x + eps, y) - self.value(x - eps, y)) / (2 * eps)
        gy = (self.value(x, y + eps) - self.value(x, y - eps)) / (2 * eps)
        return gx, gy

    def tangent(self, x: float, y: float) -> tuple[float, float]:
        """Unit tangent of the counterclockwise traversal (inside on the left)."""
        gx, gy = self.gradient(x, y)
        n = math.hypot(gx, gy)
        if n == 0.0:
            raise GeometryError(f"vanishing interface gradient at ({x}, {y})")
        return -gy / n, gx / n

    def edge_cut_parameter(self, a: np.ndarray, b: np.ndarray) -> float:
        """Parameter t in [0, 1] of the zero of phi along segment a->b.

        Requires opposite signs at the endpoints; bisection to machine
        resolution in t.
        """
        fa = self.value(*a)
        fb = self.value(*b)
        if fa == 0.0:
            return 0.0
        if fb == 0.0:
            return 1.0
        if (fa < 0.0) == (fb < 0.0):
            raise GeometryError("edge endpoints do not bracket the interface")
        lo, hi = 0.0, 1.0
        flo = fa
        for _ in range(100):
            mid = 0.5 * (lo + hi)
            p = a + mid * (b - a)
            fm = self.value(*p)
            if fm == 0.0:
                return mid
            if (fm < 0.0) == (flo < 0.0):
                lo, flo = mid, fm
            else:
                hi = mid
            if hi - lo < 1e-16:
                break
        return 0.5 * (lo + hi)


class CircleInterface(LevelSetInterface):
    """Circle of radius r around (cx, cy); phi = |x - c| - r."""

    def __init__(self, cx: float, cy: float, r: float):
        if r <= 0:
            raise ValueError("circle radius must be positive")
        self.cx = cx
        self.cy = cy
        self.r = r
        super().__init__(lambda x, y: math.hypot(x - cx, y - cy) - r)

    def values(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(pts)
        return np.hypot(pts[:, 0] - self.cx, pts[:, 1] - self.cy) - self.r

    def gradient(self, x: float, y: float) -> tuple[float, float]:
        d = math.hypot(x - self.cx, y - self.cy)
        if d == 0.0:
            raise GeometryError("interface gradient undefined at the center")
        return (x - self.cx) / d, (y - self.cy) / d

    def edge_cut_parameter(self, a: np.ndarray, b: np.ndarray) -> float:
        # Closed-form quadratic root; numerically stable variant.
        d = b - a
        m = a - np.array([self.cx, self.cy])
        qa = float(d @ d)
        qb = 2.0 * float(d @ m)
        qc = float(m @ m) - self.r * self.r
        disc = qb * qb - 4.0 * qa * qc
        if disc < 0.0:
            raise GeometryError("edge endpoints do not bracket the interface")
        sq = math.sqrt(disc)
        q = -0.5 * (qb + math.copysign(sq, qb))
        roots = []
        if qa != 0.0:
            roots.append(q / qa)
        if q != 0.0:
            roots.append(qc / q)
        inside = [t for t in roots if -1e-12 <= t <= 1.0 + 1e-12]
        if not inside:
            raise GeometryError("edge endpoints do not bracket the interface")
        # Signs at the endpoints bracket exactly one root in (0, 1).
        t = min(inside, key=lambda t: abs(t - 0.5))
        return min(max(t, 0.0), 1.0)


@dataclass(frozen=True)
class CutPoint:
    """Intersection of the interface with the interior of a mesh edge."""

    edge_id: int
    t: float
    x: float
    y: float
    snapped_end: int | None = None  # 0 or 1 when the point was a vertex hit

    @property
    def point(self) -> np.ndarray:
        return np.array([self.x, self.y])


@dataclass(frozen=True)
class Uncut:
    side: str  # '+' (phi < 0) or '-'


@dataclass(frozen=True)
class EdgeAligned:
    """Interface meets the triangle only in an edge or vertex (case 2)."""

    side: str
    on_vertices: tuple[int, ...]


@dataclass(frozen=True)
class CutTwoEdges:
    """Case 3: two distinct edges crossed away from the vertices."""

    entry_edge: int
    exit_edge: int
    entry_point: CutPoint
    exit_point: CutPoint
    remaining_edge: int


@dataclass(frozen=True)
class CutEdgeVertex:
    """Case 4: one edge crossed, the opposite vertex on the interface."""

    cut_edge: int
    cut_point: CutPoint
    on_vertex: int


Classification = Uncut | EdgeAligned | CutTwoEdges | CutEdgeVertex

# Node keys identify the corners of fitted elements: ('v', vertex_id)
# for mesh vertices and ('c', edge_id) for cut points.
NodeKey = tuple[str, int]


@dataclass(frozen=True)
class SubTriangle:
    parent: int
    label: str  # 'K1' | 'K2' | 'K3'
    points: np.ndarray  # (3, 2), counterclockwise
    nodes: tuple[NodeKey, NodeKey, NodeKey]
    side: str  # '+' or '-'

    @property
    def area(self) -> float:
        p = self.points
        return 0.5 * float(cross2(p[1] - p[0], p[2] - p[0]))


class Element(NamedTuple):
    """One element of the fitted mesh (uncut triangle or subtriangle)."""

    parent: int
    points: np.ndarray
    nodes: tuple[NodeKey, NodeKey, NodeKey]
    side: str


@dataclass(frozen=True)
class FittedMesh:
    """Base mesh plus cut-triangle subtriangulations and the polyline gamma_h."""

    base: Mesh
    iface: LevelSetInterface
    vphi: np.ndarray
    on_vertex: np.ndarray
    cuts: dict  # edge_id -> CutPoint
    classifications: list
    subtriangles: dict  # tri_id -> list[SubTriangle]
    cut_edges: np.ndarray
    band: np.ndarray  # cut triangle ids (T_h^gamma)
    side_of_uncut: np.ndarray  # '<U1' per triangle; '' for cut triangles
    gamma_nodes: list  # node keys of the closed polyline, first not repeated
    gamma_points: np.ndarray  # (len+1, 2), closed
    n_snapped: int

    @property
    def gamma_length(self) -> float:
        return float(np.sum(np.linalg.norm(np.diff(self.gamma_points, axis=0), axis=1)))

    def case_counts(self) -> dict[str, int]:
        counts = {"uncut": 0, "edge_aligned": 0, "cut_two_edges": 0, "cut_edge_vertex": 0}
        for cls in self.classifications:
            if isinstance(cls, Uncut):
                counts["uncut"] += 1
            elif isinstance(cls, EdgeAligned):
                counts["edge_aligned"] += 1
            elif isinstance(cls, CutTwoEdges):
                counts["cut_two_edges"] += 1
            else:
                counts["cut_edge_vertex"] += 1
        return counts

    def elements(self) -> Iterator[Element]:
        """All fitted elements, uncut triangles first by id, then subtriangles."""
        tris = self.base.triangles
        for t in range(self.base.n_triangles):
            subs = self.subtriangles.get(t)
            if subs is None:
                v = tris[t]
                yield Element(
                    parent=t,
                    points=self.base.vertices[v],
                    nodes=(("v", int(v[0])), ("v", int(v[1])), ("v", int(v[2]))),
                    side=str(self.side_of_uncut[t]),
                )
            else:
                for s in subs:
                    yield Element(parent=t, points=s.points, nodes=s.nodes, side=s.side)


def _node_point(mesh: Mesh, cuts: dict, key: NodeKey) -> np.ndarray:
    kind, idx = key
    if kind == "v":
        return mesh.vertices[idx]
    return cuts[idx].point


def edge_intersection(mesh: Mesh, edge_id: int, iface: LevelSetInterface) -> CutPoint:
    """Intersection of the interface with one mesh edge.

    The endpoints must have opposite phi signs.  Points within SNAP_T of
    an endpoint are snapped: the returned CutPoint carries t = 0 or 1 and
    the snapped endpoint index, and creates no interior cut.
    """
    v0, v1 = mesh.edges[edge_id]
    a = mesh.vertices[v0]
    b = mesh.vertices[v1]
    t = iface.edge_cut_parameter(a, b)
    snapped = None
    if t < SNAP_T:
        t, snapped = 0.0, 0
    elif t > 1.0 - SNAP_T:
        t, snapped = 1.0, 1
    p = a + t * (b - a)
    return CutPoint(edge_id=int(edge_id), t=float(t), x=float(p[0]), y=float(p[1]), snapped_end=snapped)


def _tri_cut_data(mesh: Mesh, tri_id: int, iface: LevelSetInterface):
    """Per-triangle (on-vertex flags, interior cuts) computed locally.

    Snapping of a near-vertex cut promotes that vertex to an on-vertex,
    exactly as in the global fitted-mesh build.
    """
    verts = mesh.triangles[tri_id]
    phi = np.array([iface.value(*mesh.vertices[v]) for v in verts])
    on = {int(v) for v, f in zip(verts, phi) if abs(f) <= VERTEX_TOL}
    sign = {int(v): f for v, f in zip(verts, phi)}

    cuts: dict[int, CutPoint] = {}
    for e in mesh.tri_edges[tri_id]:
        v0, v1 = mesh.edges[e]
        if v0 in on or v1 in on:
            continue
        if (sign.get(v0, iface.value(*mesh.vertices[v0])) < 0) != (
            sign.get(v1, iface.value(*mesh.vertices[v1])) < 0
        ):
            cp = edge_intersection(mesh, int(e), iface)
            if cp.snapped_end is not None:
                on.add(int(mesh.edges[e][cp.snapped_end]))
            else:
                cuts[int(e)] = cp
    # A promotion may invalidate other cuts touching the promoted vertex.
    cuts = {
        e: cp
        for e, cp in cuts.items()
        if not (int(mesh.edges[e][0]) in on or int(mesh.edges[e][1]) in on)
    }
    return on, cuts, sign


def _classify_from_data(mesh, tri_id, on_vertex_set, cuts, vsign, iface) -> Classification:
    verts = [int(v) for v in mesh.triangles[tri_id]]
    tri_edges = [int(e) for e in mesh.tri_edges[tri_id]]
    cut_edges = [e for e in tri_edges if e in cuts]
    on_here = [v for v in verts if v in on_vertex_set]

    def side_of(v: int) -> str:
        return "+" if vsign[v] < 0 else "-"

    if not cut_edges:
        free = [v for v in verts if v not in on_here]
        if not free:
            raise GeometryError(f"triangle {tri_id}: all three vertices on the interface")
        sides = {side_of(v) for v in free}
        if len(sides) > 1:
            raise GeometryError(f"triangle {tri_id}: interface geometry unresolved by the mesh")
        if on_here:
            return EdgeAligned(side=sides.pop(), on_vertices=tuple(on_here))
        return Uncut(side=sides.pop())

    if len(cut_edges) == 1:
        e = cut_edges[0]
        ev = set(int(x) for x in mesh.edges[e])
        opp = [v for v in verts if v not in ev]
        if len(on_here) == 1 and on_here[0] == opp[0]:
            return CutEdgeVertex(cut_edge=e, cut_point=cuts[e], on_vertex=on_here[0])
        raise GeometryError(
            f"triangle {tri_id}: single cut edge without an opposite on-vertex"
        )

    if len(cut_edges) == 2:
        if on_here:
            raise GeometryError(f"triangle {tri_id}: mixed cut/on-vertex geometry")
        e1, e2 = cut_edges
        p1, p2 = cuts[e1], cuts[e2]
        remaining = next(e for e in tri_edges if e not in cut_edges)
        # Entry edge: the interface tangent at the cut point heads into T.
        entry = e1 if _enters(mesh, tri_id, e1, p1, iface) else e2
        exit_ = e2 if entry == e1 else e1
        return CutTwoEdges(
            entry_edge=entry,
            exit_edge=exit_,
            entry_point=cuts[entry],
            exit_point=cuts[exit_],
            remaining_edge=remaining,
        )

    raise GeometryError(
        f"triangle {tri_id}: interface crosses all three edges; mesh too coarse"
    )


def _enters(mesh: Mesh, tri_id: int, edge_id: int, cp: CutPoint, iface) -> bool:
    """True if the oriented interface enters the triangle at this cut point."""
    v0, v1 = mesh.edges[edge_id]
    a, b = mesh.vertices[v0], mesh.vertices[v1]
    third = next(int(v) for v in mesh.triangles[tri_id] if v not in (v0, v1))
    c = mesh.vertices[third]
    d = b - a
    n_in = np.array([-d[1], d[0]])
    if n_in @ (c - a) < 0:
        n_in = -n_in
    tx, ty = iface.tangent(cp.x, cp.y)
    return float(np.array([tx, ty]) @ n_in) > 0.0


def classify_triangle(mesh: Mesh, tri_id: int, iface: LevelSetInterface) -> Classification:
    """Classify one triangle against the interface (cases 1-4)."""
    on, cuts, sign = _tri_cut_data(mesh, tri_id, iface)
    return _classify_from_data(mesh, tri_id, on, cuts, sign, iface)


def _min_angle(p0, p1, p2) -> float:
    a = np.linalg.norm(p2 - p1)
    b = np.linalg.norm(p2 - p0)
    c = np.linalg.norm(p1 - p0)
    angles = []
    for opp, s1, s2 in ((a, b, c), (b, a, c), (c, a, b)):
        cosv = (s1 * s1 + s2 * s2 - opp * opp) / (2 * s1 * s2)
        angles.append(math.acos(min(1.0, max(-1.0, cosv))))
    return min(angles)


def _ccw(points: np.ndarray, nodes: tuple) -> tuple[np.ndarray, tuple]:
    if cross2(points[1] - points[0], points[2] - points[0]) < 0:
        return points[[0, 2, 1]], (nodes[0], nodes[2], nodes[1])
    return points, nodes


def _make_sub(mesh, tri_id, label, points, nodes, side) -> SubTriangle:
    points = np.asarray(points, dtype=float)
    points, nodes = _ccw(points, nodes)
    area = 0.5 * float(cross2(points[1] - points[0], points[2] - points[0]))
    ref = 0.5 * abs(
        float(
            cross2(
                mesh.vertices[mesh.triangles[tri_id][1]] - mesh.vertices[mesh.triangles[tri_id][0]],
                mesh.vertices[mesh.triangles[tri_id][2]] - mesh.vertices[mesh.triangles[tri_id][0]],
            )
        )
    )
    if area < 1e-14 * ref:
        raise GeometryError(f"triangle {tri_id}: degenerate subtriangle {label}")
    return SubTriangle(parent=tri_id, label=label, points=points, nodes=nodes, side=side)


def subtriangulate(
    mesh: Mesh, tri_id: int, cls: Classification, iface: LevelSetInterface
) -> list[SubTriangle]:
    """Split a cut triangle along the chord between its intersection points.

    Case 3 yields K1 (the piece on the lone-vertex side) plus K2 and K3
    from the quadrilateral, with K2 chosen to contain the chord.  The
    quadrilateral diagonal maximizes the minimum angle; ties break toward
    the lower vertex id.  Case 4 yields K1 and K2 only.
    """
    if isinstance(cls, CutTwoEdges):
        e1, e2 = cls.entry_edge, cls.exit_edge
        p_key, q_key = ("c", e1), ("c", e2)
        p = cls.entry_point.point
        q = cls.exit_point.point
        s1 = set(int(x) for x in mesh.edges[e1])
        s2 = set(int(x) for x in mesh.edges[e2])
        c = (s1 & s2).pop()
        a = (s1 - {c}).pop()
        b = (s2 - {c}).pop()
        pa, pb, pc = mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]
        side_c = "+" if iface.value(*pc) < 0 else "-"
        side_ab = "-" if side_c == "+" else "+"

        k1 = _make_sub(mesh, tri_id, "K1", [p, q, pc], (p_key, q_key, ("v", c)), side_c)

        # Quadrilateral (p, q, b, a); diagonal p-b or q-a.
        q1 = min(
            _min_angle(p, q, pb),
            _min_angle(p, pb, pa),
        )
        q2 = min(
            _min_angle(p, q, pa),
            _min_angle(q, pb, pa),
        )
        if q1 > q2 + 1e-12 or (abs(q1 - q2) <= 1e-12 and b < a):
            k2 = _make_sub(mesh, tri_id, "K2", [p, q, pb], (p_key, q_key, ("v", b)), side_ab)
            k3 = _make_sub(
                mesh, tri_id, "K3", [p, pb, pa], (p_key, ("v", b), ("v", a)), side_ab
            )
        else:
            k2 = _make_sub(mesh, tri_id, "K2", [p, q, pa], (p_key, q_key, ("v", a)), side_ab)
            k3 = _make_sub(
                mesh, tri_id, "K3", [q, pb, pa], (q_key, ("v", b), ("v", a)), side_ab
            )
        return [k1, k2, k3]

    if isinstance(cls, CutEdgeVertex):
        e = cls.cut_edge
        p = cls.cut_point.point
        p_key = ("c", e)
        v = cls.on_vertex
        a, b = (int(x) for x in mesh.edges[e])
        pv = mesh.vertices[v]
        side_a = "+" if iface.value(*mesh.vertices[a]) < 0 else "-"
        side_b = "+" if iface.value(*mesh.vertices[b]) < 0 else "-"
        ka = _make_sub(mesh, tri_id, "K1", [p, pv, mesh.vertices[a]], (p_key, ("v", v), ("v", a)), side_a)
        kb = _make_sub(mesh, tri_id, "K2", [p, mesh.vertices[b], pv], (p_key, ("v", b), ("v", v)), side_b)
        if side_b == "+":
            ka = SubTriangle(ka.parent, "K2", ka.points, ka.nodes, ka.side)
            kb = SubTriangle(kb.parent, "K1", kb.points, kb.nodes, kb.side)
            return [kb, ka]
        return [ka, kb]

    raise ValueError("only cut triangles (cases 3 and 4) are subtriangulated")


def build_fitted_mesh(mesh: Mesh, iface: LevelSetInterface) -> FittedMesh:
    """Classify all triangles, subtriangulate the cut ones, chain gamma_h."""
    vphi = np.asarray(iface.values(mesh.vertices), dtype=float)
    on_vertex = np.abs(vphi) <= VERTEX_TOL
    if np.any(on_vertex & mesh.on_boundary):
        raise GeometryError("interface touches the domain boundary")

    # Edge intersections, with snapping promoting vertices to on-vertices.
    cuts: dict[int, CutPoint] = {}
    n_snapped = 0
    changed = True
    while changed:
        changed = False
        cuts.clear()
        s0 = vphi[mesh.edges[:, 0]]
        s1 = vphi[mesh.edges[:, 1]]
        cand = np.flatnonzero(
            ((s0 < 0) != (s1 < 0))
            & ~on_vertex[mesh.edges[:, 0]]
            & ~on_vertex[mesh.edges[:, 1]]
        )
        for e in cand:
            cp = edge_intersection(mesh, int(e), iface)
            if cp.snapped_end is not None:
                v = int(mesh.edges[e][cp.snapped_end])
                if mesh.on_boundary[v]:
                    raise GeometryError("interface touches the domain boundary")
                on_vertex[v] = True
                n_snapped += 1
                changed = True
                break
            cuts[int(e)] = cp

    on_set = set(np.flatnonzero(on_vertex).tolist())
    vsign = {int(v): float(vphi[v]) for v in range(mesh.n_vertices)}

    # Triangles needing real classification: touching a cut edge or on-vertex.
    touched = set()
    for e in cuts:
        for t in mesh.edge_tris[e]:
            if t >= 0:
                touched.add(int(t))
    if on_set:
        for t, verts in enumerate(mesh.triangles):
            if any(int(v) in on_set for v in verts):
                touched.add(t)

    classifications: list = [None] * mesh.n_triangles
    side_of_uncut = np.full(mesh.n_triangles, "", dtype="<U1")
    subtriangles: dict[int, list[SubTriangle]] = {}
    band = []

    tri_sign = vphi[mesh.triangles]
    for t in range(mesh.n_triangles):
        if t not in touched:
            cls = Uncut(side="+" if tri_sign[t, 0] < 0 else "-")
            classifications[t] = cls
            side_of_uncut[t] = cls.side
            continue
        cls = _classify_from_data(mesh, t, on_set, cuts, vsign, iface)
        classifications[t] = cls
        if isinstance(cls, (Uncut, EdgeAligned)):
            side_of_uncut[t] = cls.side
        else:
            band.append(t)
            subtriangles[t] = subtriangulate(mesh, t, cls, iface)

    # Mesh edges with both endpoints on the interface are chords of gamma
    # in their own right (the aligned case) and belong to the polyline.
    aligned_edges = [
        int(e)
        for e, (v0, v1) in enumerate(mesh.edges)
        if on_vertex[v0] and on_vertex[v1]
    ]

    gamma_nodes, gamma_points = _chain_polyline(
        mesh, cuts, classifications, band, aligned_edges
    )

    return FittedMesh(
        base=mesh,
        iface=iface,
        vphi=vphi,
        on_vertex=on_vertex,
        cuts=cuts,
        classifications=classifications,
        subtriangles=subtriangles,
        cut_edges=np.asarray(sorted(cuts), dtype=np.int64),
        band=np.asarray(band, dtype=np.int64),
        side_of_uncut=side_of_uncut,
        gamma_nodes=gamma_nodes,
        gamma_points=gamma_points,
        n_snapped=n_snapped,
    )


def _chain_polyline(mesh, cuts, classifications, band, aligned_edges=()):
    """Chain per-triangle chords into one closed, counterclockwise polyline."""
    if not band and not aligned_edges:
        raise GeometryError("interface does not cut any triangle")

    segments = {}
    for t in band:
        cls = classifications[t]
        if isinstance(cls, CutTwoEdges):
            segments[t] = (("c", cls.entry_edge), ("c", cls.exit_edge))
        else:
            segments[t] = (("c", cls.cut_edge), ("v", cls.on_vertex))
    for e in aligned_edges:
        v0, v1 = (int(x) for x in mesh.edges[e])
        segments[("edge", e)] = (("v", v0), ("v", v1))

    incident: dict = {}
    for t, (n0, n1) in segments.items():
        incident.setdefault(n0, []).append((t, n1))
        incident.setdefault(n1, []).append((t, n0))
    for node, links in incident.items():
        if len(links) != 2:
            raise GeometryError(
                f"polyline node {node} has degree {len(links)}; interface not a single closed curve"
            )

    start = next(iter(segments.values()))[0]
    nodes = [start]
    used = set()
    current = start
    while True:
        link = next(((t, nxt) for t, nxt in incident[current] if t not in used), None)
        if link is None:
            break
        t, nxt = link
        used.add(t)
        if nxt == start:
            break
        nodes.append(nxt)
        current = nxt
    if len(used) != len(segments):
        raise GeometryError("interface polyline is not a single closed loop")

    pts = np.array([_node_point(mesh, cuts, k) for k in nodes])
    closed = np.vstack([pts, pts[:1]])
    area = 0.5 * float(
        np.sum(closed[:-1, 0] * closed[1:, 1] - closed[1:, 0] * closed[:-1, 1])
    )
    if area < 0:
        nodes = [nodes[0]] + nodes[1:][::-1]
        closed = np.vstack([closed[::-1]])
    return nodes, closed


def _locate_triangle(fitted: FittedMesh, pt) -> int:
    mesh = fitted.base
    n = mesh.N
    x, y = float(pt[0]), float(pt[1])
    i = min(max(int((x + 1.0) / mesh.h), 0), n - 1)
    j = min(max(int((y + 1.0) / mesh.h), 0), n - 1)
    x0 = -1.0 + i * mesh.h
    y0 = -1.0 + j * mesh.h
    lower = (y - y0) <= (x - x0)
    return 2 * (j * n + i) + (0 if lower else 1)


def _barycentric(points: np.ndarray, pt: np.ndarray) -> np.ndarray:
    mat = np.column_stack([points[1] - points[0], points[2] - points[0]])
    lam = np.linalg.solve(mat, pt - points[0])
    return np.array([1.0 - lam[0] - lam[1], lam[0], lam[1]])


def side_of_point(pt, fitted: FittedMesh) -> str:
    """Which side of gamma_h (not gamma) contains the point.

    Points exactly on gamma_h are assigned to '+' by convention.
    """
    pt = np.asarray(pt, dtype=float)
    t = _locate_triangle(fitted, pt)
    subs = fitted.subtriangles.get(t)
    if subs is None:
        return str(fitted.side_of_uncut[t])
    # Check '+'-side pieces first so on-chord points resolve to '+'.
    for s in sorted(subs, key=lambda s: s.side != "+"):
        lam = _barycentric(s.points, pt)
        if np.all(lam >= -1e-12):
            return s.side
    # Roundoff pushed the point across a sub-element boundary.
    best = min(subs, key=lambda s: -float(np.min(_barycentric(s.points, pt))))
    return best.side
