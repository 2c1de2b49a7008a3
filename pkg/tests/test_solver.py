"""Conjugate gradients, static condensation, and the dense saddle oracle."""

import numpy as np
import pytest

from ifem.assembly import assemble_hybrid
from ifem.benchmark import RadialProblem
from ifem.geometry import build_fitted_mesh
from ifem.mesh import build_structured_mesh
from ifem.solver import (
    SolverConfig,
    SolverError,
    cg_solve,
    condense,
    dense_direct_solve,
    solve_hybrid,
)


def random_spd(n, seed):
    rng = np.random.default_rng(seed)
    R = rng.standard_normal((n, n))
    return R @ R.T + n * np.eye(n)


def one(x, y):
    return np.ones_like(np.asarray(x, dtype=float))


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_cg_matches_direct(seed):
    A = random_spd(40, seed)
    rng = np.random.default_rng(100 + seed)
    b = rng.standard_normal(40)
    x = cg_solve(lambda v: A @ v, b, tol=1e-12)
    np.testing.assert_allclose(x, np.linalg.solve(A, b), rtol=1e-8, atol=1e-10)


def test_cg_zero_rhs():
    A = random_spd(10, 3)
    x = cg_solve(lambda v: A @ v, np.zeros(10))
    assert np.array_equal(x, np.zeros(10))


def test_cg_nonconvergence_raises():
    A = random_spd(50, 4)
    b = np.ones(50)
    with pytest.raises(SolverError):
        cg_solve(lambda v: A @ v, b, tol=1e-14, max_iter=2)


def test_cg_jacobi_preconditioner():
    import scipy.sparse as sp

    A = sp.csr_matrix(random_spd(30, 5) + np.diag(np.linspace(1, 1e4, 30)))
    b = np.arange(30, dtype=float)
    plain = cg_solve(A, b, SolverConfig(jacobi=False), tol=1e-12)
    jac = cg_solve(A, b, SolverConfig(jacobi=True), tol=1e-12)
    np.testing.assert_allclose(plain, jac, rtol=1e-7, atol=1e-10)


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(cg_tol=0.0)
    with pytest.raises(ValueError):
        SolverConfig(outer_tol=2.0)
    with pytest.raises(ValueError):
        SolverConfig(outer_max_iter=0)


@pytest.fixture(scope="module")
def block10():
    problem = RadialProblem(1.0, 10.0)
    fitted = build_fitted_mesh(build_structured_mesh(10), problem.interface())
    return assemble_hybrid(fitted, problem.coefficient(), problem.source, problem.boundary)


def test_condensation_matches_dense_schur(block10):
    cond = condense(block10)
    A, C, b, c = block10.constrained()
    Dd = block10.D.toarray()
    # Invert block-diagonal D blockwise for the oracle.
    Dinv = np.zeros_like(Dd)
    for slots in block10.dofmap.tri_enriched.values():
        idx = np.asarray(slots)
        Dinv[np.ix_(idx, idx)] = np.linalg.inv(Dd[np.ix_(idx, idx)])
    S_ref = A.toarray() - C.toarray() @ Dinv @ C.toarray().T
    np.testing.assert_allclose(cond.S_u.toarray(), S_ref, atol=1e-12)
    H_ref = block10.B.toarray().T @ Dinv @ block10.B.toarray()
    np.testing.assert_allclose(cond.H, H_ref, atol=1e-12)


@pytest.mark.parametrize("N", [4, 10])
def test_hybrid_matches_dense_oracle(N):
    problem = RadialProblem(1.0, 10.0)
    fitted = build_fitted_mesh(build_structured_mesh(N), problem.interface())
    block = assemble_hybrid(fitted, problem.coefficient(), problem.source, problem.boundary)
    iterative = solve_hybrid(block, SolverConfig())
    direct = dense_direct_solve(block)
    assert np.max(np.abs(iterative.u_vertex - direct.u_vertex)) <= 1e-8
    assert np.max(np.abs(iterative.u_enriched - direct.u_enriched)) <= 1e-8
    if len(direct.lam):
        assert np.max(np.abs(iterative.lam - direct.lam)) <= 1e-6 * max(
            1.0, np.max(np.abs(direct.lam))
        )


def test_constraint_residual_vanishes(block10):
    sol = solve_hybrid(block10, SolverConfig())
    assert sol.constraint_residual <= 1e-10
    # B^T v = 0 means the mean jump across every cut edge is zero.
    assert np.max(np.abs(block10.B.T @ sol.u_enriched)) <= 1e-10
    assert sol.stats["outer_iterations"] > 0


def test_dense_guard():
    problem = RadialProblem(1.0, 10.0)
    fitted = build_fitted_mesh(build_structured_mesh(80), problem.interface())
    block = assemble_hybrid(fitted, problem.coefficient(), problem.source, problem.boundary)
    with pytest.raises(SolverError):
        dense_direct_solve(block)
