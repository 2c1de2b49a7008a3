"""Radial benchmark problem, discrete error norms, and convergence studies.

The benchmark is the transmission problem on (-1, 1)^2 with a piecewise
constant coefficient jumping across the circle of radius R1, whose exact
solution is radial and quadratic on each side.  The source is f = 1 and
the Dirichlet data is the exact trace on the square boundary.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .mesh import Mesh, build_structured_mesh, cross2
from .geometry import CircleInterface, FittedMesh, build_fitted_mesh
from .assembly import (
    AssembledSystem,
    CoefficientField,
    FittedDofMap,
    HybridDofMap,
    assemble_fitted,
    assemble_hybrid,
    assemble_standard,
)
from .solver import (
    HybridSolution,
    SolverConfig,
    solve_fitted,
    solve_hybrid,
    solve_standard,
)

__all__ = [
    "RadialProblem",
    "ErrorReport",
    "ConvergenceTable",
    "DiscreteSolution",
    "error_norms",
    "convergence_study",
    "flux_diagnostic",
    "run_single",
    "patch_test",
    "rate",
]

# Nodes numerically on the interface take the outside gradient branch.
BRANCH_TOL = 1e-12

METHODS = ("standard", "fitted", "hybrid")


@dataclass(frozen=True)
class RadialProblem:
    """Piecewise-constant radial transmission problem.

    alpha is the coefficient inside the circle of radius r1 around
    (cx, cy), beta outside; r2 fixes the boundary data level.
    """

    alpha: float
    beta: float
    r1: float = 0.5
    r2: float = math.sqrt(2.0)
    cx: float = 0.0
    cy: float = 0.0

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("coefficients must be positive")
        if not (0.0 < self.r1 < 1.0):
            raise ValueError("interface radius must lie in (0, 1)")

    @property
    def p(self) -> float:
        """Coefficient ratio alpha/beta."""
        return self.alpha / self.beta

    def interface(self) -> CircleInterface:
        return CircleInterface(self.cx, self.cy, self.r1)

    def coefficient(self) -> CoefficientField:
        return CoefficientField.constant(self.alpha, self.beta)

    def _r2sq(self, x, y):
        return (np.asarray(x) - self.cx) ** 2 + (np.asarray(y) - self.cy) ** 2

    def exact_u(self, x, y):
        rsq = self._r2sq(x, y)
        inside = (self.r1 * self.r1 - rsq) / (4.0 * self.alpha) + (
            self.r2 * self.r2 - self.r1 * self.r1
        ) / (4.0 * self.beta)
        outside = (self.r2 * self.r2 - rsq) / (4.0 * self.beta)
        return np.where(rsq < self.r1 * self.r1, inside, outside)

    def exact_grad(self, x, y):
        """Gradient; points on the circle use the outside branch."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        r = np.sqrt(self._r2sq(x, y))
        coef = np.where(r < self.r1 - BRANCH_TOL, self.alpha, self.beta)
        gx = -(x - self.cx) / (2.0 * coef)
        gy = -(y - self.cy) / (2.0 * coef)
        return gx, gy

    def grad_branch(self, side: str, x, y):
        """Smooth extension of one side's gradient ('+' inside, '-' outside)."""
        coef = self.alpha if side == "+" else self.beta
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return -(x - self.cx) / (2.0 * coef), -(y - self.cy) / (2.0 * coef)

    def source(self, x, y):
        # -div(a grad u) of the quadratic branches is 1 on both sides.
        return np.ones_like(np.asarray(x, dtype=float))

    def boundary(self, x, y):
        return self.exact_u(x, y)


@dataclass(frozen=True)
class ErrorReport:
    method: str
    N: int
    p: float
    n_nodes: int
    e0h: float
    e0inf: float
    e1h: float


@dataclass
class DiscreteSolution:
    """Vertex values plus method-specific cut-point values."""

    method: str
    mesh: Mesh
    fitted: FittedMesh | None
    vertex_values: np.ndarray
    cut_values: np.ndarray  # fitted: per cut slot; hybrid: per enriched slot
    dofmap: object
    lam: np.ndarray | None = None
    stats: dict = field(default_factory=dict)

    def node_value(self, node, parent: int) -> float:
        kind, idx = node
        if kind == "v":
            return float(self.vertex_values[idx])
        if self.method == "fitted":
            return float(self.cut_values[self.dofmap.cut_index[idx]])
        return float(self.cut_values[self.dofmap.enriched_index[(parent, idx)]])


def standard_solution(mesh: Mesh, vec: np.ndarray) -> DiscreteSolution:
    return DiscreteSolution("standard", mesh, None, vec, np.zeros(0), None)


def fitted_solution(fitted: FittedMesh, dofmap: FittedDofMap, vec: np.ndarray) -> DiscreteSolution:
    nv = fitted.base.n_vertices
    return DiscreteSolution("fitted", fitted.base, fitted, vec[:nv], vec[nv:], dofmap)


def hybrid_solution(fitted: FittedMesh, hyb: HybridSolution) -> DiscreteSolution:
    return DiscreteSolution(
        "hybrid",
        fitted.base,
        fitted,
        hyb.u_vertex,
        hyb.u_enriched,
        hyb.dofmap,
        lam=hyb.lam,
        stats=dict(hyb.stats, constraint_residual=hyb.constraint_residual),
    )


def _element_gradient(points: np.ndarray, values: np.ndarray) -> np.ndarray:
    p = points
    det = float(cross2(p[1] - p[0], p[2] - p[0]))
    g = np.empty((3, 2))
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        g[i, 0] = p[j, 1] - p[k, 1]
        g[i, 1] = p[k, 0] - p[j, 0]
    return (values @ g) / det


def _seminorm_pieces(pieces) -> float:
    """Integral of |I_h(grad u) - grad u_h|^2 over one original triangle.

    pieces is a list of (sub_points, grad_h, grad_interp): grad_h is the
    constant discrete gradient on the piece and grad_interp the constant
    gradient of the nodal interpolant of the exact solution on the same
    piece.  Both gradients are constant, so the 3-point edge-midpoint
    rule integrates the (here constant) integrand exactly.
    """
    total = 0.0
    for spoints, gh, ge in pieces:
        area = 0.5 * float(cross2(spoints[1] - spoints[0], spoints[2] - spoints[0]))
        total += area * float(np.sum((ge - gh) ** 2))
    return total


def error_norms(
    sol: DiscreteSolution, problem: RadialProblem, variant: str = "sub"
) -> ErrorReport:
    """Discrete L2, max, and broken-H1 errors of the benchmark solution.

    The nodal norms run over all (N+1)^2 mesh nodes.  The H1 seminorm
    compares the per-element constant discrete gradient against the
    gradient of the nodal interpolant of the exact solution on the same
    element (the interpolated-gradient discrete seminorm); `variant`
    'sub' works subtriangle by subtriangle on cut triangles, 'parent'
    first area-averages both gradients over the parent triangle.
    """
    if variant not in ("sub", "parent"):
        raise ValueError("norm variant must be 'sub' or 'parent'")
    mesh = sol.mesh
    exact = problem.exact_u(mesh.vertices[:, 0], mesh.vertices[:, 1])
    diff = exact - sol.vertex_values
    m = mesh.n_vertices
    e0h = math.sqrt(float(diff @ diff) / m)
    e0inf = float(np.max(np.abs(diff)))

    total = 0.0
    fitted = sol.fitted
    for t in range(mesh.n_triangles):
        verts = mesh.triangles[t]
        tpoints = mesh.vertices[verts]
        subs = fitted.subtriangles.get(t) if fitted is not None else None
        if subs is None:
            uvals = exact[verts]
            ge = _element_gradient(tpoints, uvals)
            vals = sol.vertex_values[verts]
            pieces = [(tpoints, _element_gradient(tpoints, vals), ge)]
        else:
            pieces = []
            for s in subs:
                vals = np.array([sol.node_value(nd, t) for nd in s.nodes])
                uvals = problem.exact_u(s.points[:, 0], s.points[:, 1])
                pieces.append(
                    (
                        s.points,
                        _element_gradient(s.points, vals),
                        _element_gradient(s.points, uvals),
                    )
                )
            if variant == "parent":
                # Area-average both gradients over the parent triangle and
                # compare the averages on the whole of it.
                areas = np.array(
                    [
                        0.5 * float(cross2(sp[1] - sp[0], sp[2] - sp[0]))
                        for sp, _, _ in pieces
                    ]
                )
                gavg = np.einsum("k,kd->d", areas, np.array([g for _, g, _ in pieces]))
                eavg = np.einsum("k,kd->d", areas, np.array([e for _, _, e in pieces]))
                gavg /= areas.sum()
                eavg /= areas.sum()
                pieces = [(tpoints, gavg, eavg)]
        total += _seminorm_pieces(pieces)

    return ErrorReport(
        method=sol.method,
        N=mesh.N,
        p=problem.p,
        n_nodes=m,
        e0h=e0h,
        e0inf=e0inf,
        e1h=math.sqrt(total),
    )


def rate(coarse: float, fine: float) -> float:
    """Observed order between successive mesh halvings."""
    return math.log2(coarse / fine)


@dataclass
class TableRow:
    N: int
    e0h: float
    rate0h: float | None
    e0inf: float
    rateinf: float | None
    e1h: float
    rate1h: float | None
    error: str | None = None


@dataclass
class ConvergenceTable:
    method: str
    p: float
    rows: list[TableRow] = field(default_factory=list)

    @property
    def failed(self) -> bool:
        return any(r.error for r in self.rows)

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write("method,p,N,e0h,rate0h,e0inf,rateinf,e1h,rate1h\n")
        for r in self.rows:
            if r.error:
                out.write(f"{self.method},{self.p!r},{r.N},error,,,,{r.error!r},\n")
                continue
            fields = [
                self.method,
                repr(self.p),
                str(r.N),
                repr(r.e0h),
                "" if r.rate0h is None else repr(r.rate0h),
                repr(r.e0inf),
                "" if r.rateinf is None else repr(r.rateinf),
                repr(r.e1h),
                "" if r.rate1h is None else repr(r.rate1h),
            ]
            out.write(",".join(fields) + "\n")
        return out.getvalue()

    def to_markdown(self) -> str:
        lines = [
            f"Method: {self.method}, p = {self.p:g}",
            "",
            "| 1/h | e0h | rate | e0inf | rate | e1h | rate |",
            "|-----|-----|------|-------|------|-----|------|",
        ]

        def fmt_rate(x):
            return "" if x is None else f"{x:.1f}"

        for r in self.rows:
            if r.error:
                lines.append(f"| {r.N} | failed: {r.error} | | | | | |")
                continue
            lines.append(
                f"| {r.N} | {r.e0h:.2e} | {fmt_rate(r.rate0h)} | {r.e0inf:.2e} |"
                f" {fmt_rate(r.rateinf)} | {r.e1h:.2e} | {fmt_rate(r.rate1h)} |"
            )
        return "\n".join(lines) + "\n"


def run_single(
    method: str,
    problem: RadialProblem,
    N: int,
    config: SolverConfig | None = None,
    norm_variant: str = "sub",
    f: Callable | None = None,
    g: Callable | None = None,
):
    """Mesh -> (fitted mesh) -> assemble -> solve -> error report.

    Returns (ErrorReport, DiscreteSolution).  f and g default to the
    benchmark's source and exact boundary trace.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    cfg = config or SolverConfig()
    f = problem.source if f is None else f
    g = problem.boundary if g is None else g
    mesh = build_structured_mesh(N)
    iface = problem.interface()
    coeff = problem.coefficient()

    if method == "standard":
        system = assemble_standard(mesh, coeff, iface, f, g)
        sol = standard_solution(mesh, solve_standard(system, cfg))
    else:
        fitted = build_fitted_mesh(mesh, iface)
        if method == "fitted":
            system = assemble_fitted(fitted, coeff, f, g)
            sol = fitted_solution(fitted, system.dofmap, solve_fitted(system, cfg))
        else:
            block = assemble_hybrid(fitted, coeff, f, g)
            sol = hybrid_solution(fitted, solve_hybrid(block, cfg))

    report = error_norms(sol, problem, variant=norm_variant)
    return report, sol


def convergence_study(
    problem: RadialProblem,
    method: str,
    Ns: list[int],
    config: SolverConfig | None = None,
    norm_variant: str = "sub",
) -> ConvergenceTable:
    """Run the pipeline over a doubling N list and tabulate rates.

    Per-row failures are recorded in the row and the remaining rows run.
    """
    Ns = list(Ns)
    for a, b in zip(Ns, Ns[1:]):
        if b != 2 * a:
            raise ValueError("N list must double at each refinement for the rate formula")

    table = ConvergenceTable(method=method, p=problem.p)
    prev: ErrorReport | None = None
    for N in Ns:
        try:
            report, _ = run_single(method, problem, N, config, norm_variant)
        except Exception as exc:  # per-row failure, keep going
            table.rows.append(
                TableRow(N, math.nan, None, math.nan, None, math.nan, None, error=str(exc))
            )
            prev = None
            continue
        row = TableRow(
            N=N,
            e0h=report.e0h,
            rate0h=None if prev is None else rate(prev.e0h, report.e0h),
            e0inf=report.e0inf,
            rateinf=None if prev is None else rate(prev.e0inf, report.e0inf),
            e1h=report.e1h,
            rate1h=None if prev is None else rate(prev.e1h, report.e1h),
        )
        table.rows.append(row)
        prev = report
    return table


def patch_test(
    method: str,
    N: int,
    config: SolverConfig | None = None,
    cx: float = 0.0,
    cy: float = 0.0,
    r1: float = 0.5,
) -> float:
    """Max nodal error for a unit coefficient and an exact linear solution.

    With a == 1 on both sides the transmission problem degenerates to the
    Laplacian and every method must reproduce u(x, y) = 0.3 + 0.7 x - 0.4 y
    exactly (f = 0, Dirichlet data the linear trace).  Cut-point nodes of
    the enriched methods are included in the maximum.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    cfg = config or SolverConfig()

    def u_lin(x, y):
        return 0.3 + 0.7 * np.asarray(x, dtype=float) - 0.4 * np.asarray(y)

    def zero(x, y):
        return np.zeros_like(np.asarray(x, dtype=float))

    mesh = build_structured_mesh(N)
    iface = CircleInterface(cx, cy, r1)
    coeff = CoefficientField.constant(1.0, 1.0)

    if method == "standard":
        system = assemble_standard(mesh, coeff, iface, zero, u_lin)
        sol = standard_solution(mesh, solve_standard(system, cfg))
    else:
        fitted = build_fitted_mesh(mesh, iface)
        if method == "fitted":
            system = assemble_fitted(fitted, coeff, zero, u_lin)
            sol = fitted_solution(fitted, system.dofmap, solve_fitted(system, cfg))
        else:
            block = assemble_hybrid(fitted, coeff, zero, u_lin)
            sol = hybrid_solution(fitted, solve_hybrid(block, cfg))

    err = float(
        np.max(np.abs(sol.vertex_values - u_lin(mesh.vertices[:, 0], mesh.vertices[:, 1])))
    )
    if sol.fitted is not None:
        for t, subs in sol.fitted.subtriangles.items():
            for s in subs:
                for nd, pt in zip(s.nodes, s.points):
                    if nd[0] == "c":
                        err = max(err, abs(sol.node_value(nd, t) - float(u_lin(*pt))))
    return err


# 4-point Gauss-Legendre nodes/weights on [0, 1].
_GL4_T = np.array([0.06943184420297371, 0.33000947820757187, 0.6699905217924281, 0.9305681557970262])
_GL4_W = np.array([0.17392742256872693, 0.32607257743127305, 0.32607257743127305, 0.17392742256872693])


def flux_diagnostic(fitted: FittedMesh, hyb: HybridSolution, problem: RadialProblem):
    """Compare each multiplier against the exact edge-average conormal flux.

    The normal of a cut edge points out of its second adjacent triangle
    (matching the sign convention of the constraint block).  Diagnostic
    only: returns per-edge discrepancies plus max/mean, no threshold.
    """
    mesh = fitted.base
    iface = fitted.iface
    entries = []
    for e, m in hyb.dofmap.multiplier_index.items():
        v0, v1 = mesh.edges[e]
        p0, p1 = mesh.vertices[v0], mesh.vertices[v1]
        d = p1 - p0
        elen = float(np.linalg.norm(d))
        normal = np.array([-d[1], d[0]]) / elen
        tl = int(mesh.edge_tris[e][0])
        centroid = mesh.vertices[mesh.triangles[tl]].mean(axis=0)
        if normal @ (centroid - 0.5 * (p0 + p1)) < 0:
            normal = -normal

        tcut = fitted.cuts[e].t
        avg = 0.0
        for lo, hi in ((0.0, tcut), (tcut, 1.0)):
            if hi <= lo:
                continue
            ts = lo + (hi - lo) * _GL4_T
            pts = p0[None, :] + ts[:, None] * d[None, :]
            gx, gy = problem.exact_grad(pts[:, 0], pts[:, 1])
            phi = iface.values(pts)
            a = np.where(phi < 0, problem.alpha, problem.beta)
            flux = a * (gx * normal[0] + gy * normal[1])
            avg += (hi - lo) * float(_GL4_W @ flux)
        entries.append(
            {
                "edge": int(e),
                "lambda": float(hyb.lam[m]),
                "exact_flux": avg,
                "abs_diff": abs(float(hyb.lam[m]) - avg),
            }
        )
    diffs = np.array([x["abs_diff"] for x in entries]) if entries else np.zeros(1)
    return {
        "edges": entries,
        "max_diff": float(diffs.max()),
        "mean_diff": float(diffs.mean()),
    }
