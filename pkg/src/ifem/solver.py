"""Solvers: conjugate gradients, static condensation, multiplier Schur
iteration, and a dense direct factorization used as a small-scale oracle.

The hybrid saddle system is never solved monolithically in the production
path.  The enriched unknowns are eliminated triangle by triangle (their
block D is block-diagonal with 1x1/2x2 blocks), leaving a condensed SPD
matrix with the standard method's sparsity, and the multiplier is found
by conjugate gradients on its Schur complement, each application of which
costs one condensed primal solve.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .assembly import AssembledSystem, BlockSystem

__all__ = [
    "SolverError",
    "SolverConfig",
    "CondensedOperator",
    "HybridSolution",
    "cg_solve",
    "condense",
    "solve_standard",
    "solve_fitted",
    "solve_hybrid",
    "dense_direct_solve",
    "multiplier_schur",
]

DENSE_GUARD = 5000


class SolverError(Exception):
    """Solver failed to converge or hit a singular block."""


@dataclass
class SolverConfig:
    cg_tol: float = 1e-10
    cg_max_iter: int | None = None
    outer_tol: float = 1e-10
    outer_max_iter: int = 2000
    # Inner solves run this much tighter than the outer iteration so the
    # Schur operator is effectively exact.
    inner_factor: float = 0.01
    jacobi: bool = False

    def __post_init__(self):
        if not (0.0 < self.cg_tol < 1.0) or not (0.0 < self.outer_tol < 1.0):
            raise ValueError("solver tolerances must lie in (0, 1)")
        if self.outer_max_iter <= 0:
            raise ValueError("iteration caps must be positive")


def cg_solve(
    op,
    rhs: np.ndarray,
    config: SolverConfig | None = None,
    *,
    tol: float | None = None,
    max_iter: int | None = None,
    residual_history: list | None = None,
) -> np.ndarray:
    """Conjugate gradients for an SPD operator, fixed reduction order.

    `op` is a sparse matrix or a matvec callable.  Converges to relative
    residual `tol` (default config.cg_tol); raises SolverError otherwise.
    """
    cfg = config or SolverConfig()
    tol = cfg.cg_tol if tol is None else tol
    rhs = np.asarray(rhs, dtype=float)
    n = len(rhs)
    if sp.issparse(op):
        mat = op.tocsr()
        matvec = mat.__matmul__
        diag = mat.diagonal() if cfg.jacobi else None
    else:
        matvec = op
        diag = None
    precond = None
    if diag is not None and np.all(diag > 0):
        inv_diag = 1.0 / diag
        precond = lambda r: inv_diag * r

    bnorm = float(np.linalg.norm(rhs))
    if bnorm == 0.0:
        return np.zeros(n)
    limit = max_iter if max_iter is not None else (cfg.cg_max_iter or 10 * n + 100)

    x = np.zeros(n)
    r = rhs.copy()
    z = precond(r) if precond else r
    p = z.copy()
    rz = float(r @ z)
    rnorm = float(np.linalg.norm(r))
    if residual_history is not None:
        residual_history.append(rnorm)
    for _ in range(limit):
        if rnorm <= tol * bnorm:
            return x
        Ap = matvec(p)
        alpha = rz / float(p @ Ap)
        x = x + alpha * p
        r = r - alpha * Ap
        z = precond(r) if precond else r
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
        rnorm = float(np.linalg.norm(r))
        if residual_history is not None:
            residual_history.append(rnorm)
    if rnorm <= tol * bnorm:
        return x
    raise SolverError(
        f"CG did not converge in {limit} iterations (relative residual {rnorm / bnorm:.3e})"
    )


@dataclass
class CondensedOperator:
    """Element-level elimination of the enriched unknowns.

    S_u = A - C D^-1 C^T keeps the standard sparsity pattern because the
    correction couples only vertices of the same cut triangle.  The
    recovery map gives back the enriched values for any multiplier.
    """

    S_u: sp.csr_matrix
    rhs_u: np.ndarray
    G: sp.csr_matrix  # C D^-1 B
    H: np.ndarray  # B^T D^-1 B (dense; multiplier count is O(1/h))
    g0: np.ndarray  # B^T D^-1 c
    Dinv: sp.csr_matrix
    C: sp.csr_matrix
    B: sp.csr_matrix
    c: np.ndarray

    def recover_enriched(self, u: np.ndarray, lam: np.ndarray) -> np.ndarray:
        return self.Dinv @ (self.c - self.C.T @ u - self.B @ lam)


def condense(block: BlockSystem) -> CondensedOperator:
    """Fold the block-diagonal D into the vertex system and the couplings."""
    A, C, b, c = block.constrained()
    D, B = block.D, block.B
    ne = D.shape[0]

    rows, cols, data = [], [], []
    Dd = D.toarray() if ne and ne <= 2000 else None
    for t, slots in block.dofmap.tri_enriched.items():
        if not slots:
            continue
        idx = np.asarray(slots)
        sub = (Dd[np.ix_(idx, idx)] if Dd is not None else D[np.ix_(idx, idx)].toarray())
        det = np.linalg.det(sub)
        scale = float(np.max(np.abs(sub))) or 1.0
        if abs(det) <= 1e-14 * scale ** len(idx):
            raise SolverError(f"singular enriched block in cut triangle {t}")
        inv = np.linalg.inv(sub)
        for i, gi in enumerate(idx):
            for j, gj in enumerate(idx):
                rows.append(gi)
                cols.append(gj)
                data.append(inv[i, j])
    Dinv = sp.coo_matrix((data, (rows, cols)), shape=(ne, ne)).tocsr()

    CD = (C @ Dinv).tocsr()
    S_u = (A - CD @ C.T).tocsr()
    G = (CD @ B).tocsr()
    H = (B.T @ Dinv @ B).toarray() if ne else np.zeros((B.shape[1], B.shape[1]))
    rhs_u = b - CD @ c
    g0 = B.T @ (Dinv @ c)
    return CondensedOperator(S_u, rhs_u, G, H, g0, Dinv, C, B, c)


@dataclass
class HybridSolution:
    u_vertex: np.ndarray
    u_enriched: np.ndarray
    lam: np.ndarray
    dofmap: object
    constraint_residual: float
    stats: dict = field(default_factory=dict)


def multiplier_schur(cond: CondensedOperator, config: SolverConfig):
    """Schur operator on the multiplier and its right-hand side.

    Returns (apply, r0) with apply SPD; solving apply(lam) = r0 makes the
    jump residual B^T v vanish.
    """
    inner_tol = config.outer_tol * config.inner_factor

    def solve_primal(rhs):
        return cg_solve(cond.S_u, rhs, config, tol=inner_tol)

    r0 = cond.g0 - cond.G.T @ solve_primal(cond.rhs_u)

    def apply(lam):
        return cond.H @ lam + cond.G.T @ solve_primal(cond.G @ lam)

    return apply, r0


def solve_hybrid(block: BlockSystem, config: SolverConfig | None = None) -> HybridSolution:
    """Condensation plus conjugate gradients on the multiplier Schur complement."""
    cfg = config or SolverConfig()
    cond = condense(block)
    inner_tol = cfg.outer_tol * cfg.inner_factor
    nm = block.B.shape[1]

    outer_hist: list = []
    if nm:
        apply, r0 = multiplier_schur(cond, cfg)
        lam = cg_solve(
            apply,
            r0,
            cfg,
            tol=cfg.outer_tol,
            max_iter=cfg.outer_max_iter,
            residual_history=outer_hist,
        )
    else:
        lam = np.zeros(0)

    u = cg_solve(cond.S_u, cond.rhs_u + cond.G @ lam, cfg, tol=inner_tol)
    v = cond.recover_enriched(u, lam)
    residual = float(np.linalg.norm(block.B.T @ v))
    return HybridSolution(
        u_vertex=u,
        u_enriched=v,
        lam=lam,
        dofmap=block.dofmap,
        constraint_residual=residual,
        stats={"outer_iterations": max(len(outer_hist) - 1, 0)},
    )


def solve_standard(system: AssembledSystem, config: SolverConfig | None = None) -> np.ndarray:
    K, rhs = system.constrained()
    return cg_solve(K, rhs, config or SolverConfig())


def solve_fitted(system: AssembledSystem, config: SolverConfig | None = None) -> np.ndarray:
    K, rhs = system.constrained()
    return cg_solve(K, rhs, config or SolverConfig())


def dense_direct_solve(block: BlockSystem) -> HybridSolution:
    """Monolithic dense factorization of the saddle system (test oracle)."""
    A, C, b, c = block.constrained()
    D, B = block.D, block.B
    nv, ne, nm = A.shape[0], D.shape[0], B.shape[1]
    dim = nv + ne + nm
    if dim > DENSE_GUARD:
        raise SolverError(f"dense oracle guard exceeded: dimension {dim} > {DENSE_GUARD}")

    M = np.zeros((dim, dim))
    M[:nv, :nv] = A.toarray()
    M[:nv, nv : nv + ne] = C.toarray()
    M[nv : nv + ne, :nv] = C.toarray().T
    M[nv : nv + ne, nv : nv + ne] = D.toarray()
    M[nv : nv + ne, nv + ne :] = B.toarray()
    M[nv + ne :, nv : nv + ne] = B.toarray().T
    rhs = np.concatenate([b, c, np.zeros(nm)])
    try:
        x = scipy.linalg.solve(M, rhs, assume_a="sym")
    except scipy.linalg.LinAlgError as exc:
        raise SolverError(f"singular saddle system: {exc}") from exc

    u = x[:nv]
    v = x[nv : nv + ne]
    lam = x[nv + ne :]
    return HybridSolution(
        u_vertex=u,
        u_enriched=v,
        lam=lam,
        dofmap=block.dofmap,
        constraint_residual=float(np.linalg.norm(B.T @ v)),
        stats={"dense_dimension": dim},
    )
