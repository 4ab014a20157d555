import numpy as np
import pytest
import scipy.sparse as sp

from hcurl_ife.analysis import ManufacturedSolution
from hcurl_ife.assembly import Discretization, apply_dirichlet, assemble
from hcurl_ife.mesh import build_uniform_triangulation
from hcurl_ife.nedelec import interpolate
from hcurl_ife.solve import SolverBreakdown, relative_residual, solve

from conftest import EXPERIMENT_SETS


@pytest.mark.parametrize("method", ["direct", "iterative"])
def test_identity(method):
    b = np.arange(1.0, 6.0)
    rep = solve((sp.identity(5, format="csr"), b), method=method)
    assert np.allclose(rep.x, b)


@pytest.mark.parametrize("method", ["direct", "iterative"])
def test_two_by_two(method):
    A = sp.csr_matrix([[2.0, 1.0], [1.0, 3.0]])
    rep = solve((A, np.array([3.0, 4.0])), method=method)
    assert np.allclose(rep.x, [1.0, 1.0], atol=1e-10)


def test_zero_rhs():
    rep = solve((sp.identity(3, format="csr"), np.zeros(3)))
    assert rep.residual == 0.0 and not rep.x.any()


def test_singular_raises():
    A = sp.csr_matrix(np.array([[1.0, 2.0], [2.0, 4.0]]))
    with pytest.raises(SolverBreakdown):
        solve((A, np.array([1.0, 0.0])))


def test_bad_inputs():
    with pytest.raises(ValueError):
        solve((sp.identity(3, format="csr"), np.ones(2)))
    with pytest.raises(ValueError):
        solve((sp.identity(2, format="csr"), np.ones(2)), method="cg")


def manufactured_system(n, coeff, scheme="pg"):
    exact = ManufacturedSolution(coeff)
    mesh = build_uniform_triangulation(n)
    disc = Discretization(mesh, exact.interface, coeff)
    sys_ = assemble(disc, scheme, exact.f)
    g = interpolate(exact.u_piecewise, mesh, disc.cls)
    return apply_dirichlet(sys_, disc.dofmap, g)


@pytest.mark.parametrize("coeff", EXPERIMENT_SETS)
def test_pg_residual(coeff):
    system = manufactured_system(16, coeff)
    rep = solve(system, tol=1e-10)
    assert rep.residual <= 1e-10
    assert np.isclose(relative_residual(system.matrix, rep.x, system.rhs), rep.residual)


@pytest.mark.parametrize("scheme", ["pg", "pp", "c"])
def test_direct_and_iterative_agree(scheme):
    system = manufactured_system(16, EXPERIMENT_SETS[3], scheme)
    tol = 1e-10
    a = solve(system, tol=tol, method="direct")
    b = solve(system, tol=tol, method="iterative")
    # both residuals are below tol; the solutions agree up to the conditioning
    assert b.residual <= tol
    assert np.linalg.norm(a.x - b.x) <= 1e-6 * np.linalg.norm(a.x)


def test_deterministic():
    system = manufactured_system(16, EXPERIMENT_SETS[0])
    assert np.array_equal(solve(system).x, solve(system).x)
