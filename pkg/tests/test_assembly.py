import numpy as np
import pytest
import scipy.sparse as sp
import sympy

from hcurl_ife.assembly import (
    SCHEMES,
    Discretization,
    PenaltySettings,
    apply_dirichlet,
    assemble,
    assemble_bilinear,
    assemble_penalty,
    local_matrices,
    penalty_edges,
)
from hcurl_ife.geometry import MINUS, Circle
from hcurl_ife.ife import CoefficientPair
from hcurl_ife.mesh import LOCAL_EDGES, build_uniform_triangulation
from hcurl_ife.nedelec import interpolate, nd_eval, standard_basis
from hcurl_ife.solve import solve

from conftest import EXPERIMENT_SETS, unit_right_triangle

MATCHED = CoefficientPair(1.0, 1.0, 1.0, 1.0)
CIRCLE = Circle(np.pi / 5)


def whitney_mass_oracle(tri):
    """Symbolic mass matrix of lambda_a grad lambda_b - lambda_b grad lambda_a."""
    x, y = sympy.symbols("x y")
    P = [sympy.Matrix([sympy.Rational(str(c)) for c in p]) for p in tri]
    M = sympy.Matrix([[1, 1, 1], [P[0][0], P[1][0], P[2][0]], [P[0][1], P[1][1], P[2][1]]])
    lam = list(M.inv() * sympy.Matrix([1, x, y]))
    grads = [sympy.Matrix([sympy.diff(l, x), sympy.diff(l, y)]) for l in lam]
    phis = [lam[a] * grads[b] - lam[b] * grads[a] for a, b in LOCAL_EDGES]
    # integrate over the triangle through the affine map from the reference element
    s, t = sympy.symbols("s t")
    X = P[0] + s * (P[1] - P[0]) + t * (P[2] - P[0])
    det = abs(M.det())
    out = np.zeros((3, 3))
    for i in range(3):
        for j in range(3):
            g = (phis[i].T * phis[j])[0].subs({x: X[0], y: X[1]}, simultaneous=True)
            out[i, j] = float(det * sympy.integrate(g, (t, 0, 1 - s), (s, 0, 1)))
    return out


def local_standard(tri, mu=1.0, beta=1.0):
    coeff = CoefficientPair(mu, mu, beta, beta)
    S = standard_basis(tri)
    poly = np.asarray(tri, dtype=float)
    return local_matrices([(poly, MINUS)], lambda s: S, lambda s: S, coeff)


def test_whitney_stiffness_unit_triangle():
    Kc, _ = local_standard(unit_right_triangle())
    assert np.allclose(Kc, 2.0 * np.ones((3, 3)), atol=1e-14)


@pytest.mark.parametrize("tri", [unit_right_triangle(), [[0.1, 0.2], [0.9, 0.3], [0.4, 1.1]]])
def test_mass_matches_symbolic(tri):
    tri = np.asarray(tri, dtype=float)
    _, Mb = local_standard(tri, beta=3.0)
    assert np.allclose(Mb, 3.0 * whitney_mass_oracle(tri), atol=1e-13)


@pytest.mark.parametrize("scheme", SCHEMES)
def test_unknown_scheme_rejected(scheme):
    disc = Discretization(build_uniform_triangulation(4), CIRCLE, MATCHED)
    with pytest.raises(ValueError):
        assemble_bilinear(disc, scheme + "x")


@pytest.mark.parametrize("n", [8, 16])
@pytest.mark.parametrize("scheme", SCHEMES)
def test_matched_reduces_to_standard(n, scheme):
    mesh = build_uniform_triangulation(n)
    coeff = CoefficientPair(0.7, 0.7, 2.5, 2.5)
    ife = Discretization(mesh, CIRCLE, coeff)
    std = Discretization(mesh, Circle(5.0), coeff)  # no element is cut
    assert len(ife.bases) > 0 and len(std.bases) == 0
    A = assemble(ife, scheme, lambda X, s: np.ones_like(X)).matrix
    B = assemble(std, "pg", lambda X, s: np.ones_like(X)).matrix
    assert abs(A - B).max() <= 1e-12 * abs(B).max()


def test_pg_nonsymmetric_and_c_symmetric():
    mesh = build_uniform_triangulation(16)
    disc = Discretization(mesh, CIRCLE, EXPERIMENT_SETS[0])
    pg = assemble_bilinear(disc, "pg")
    A = pg["curl"] + pg["mass"]
    assert abs(A - A.T).max() > 1e-6
    c = assemble_bilinear(disc, "c")
    C = c["curl"] + c["mass"]
    assert abs(C - C.T).max() <= 1e-12 * abs(C).max()


@pytest.mark.parametrize("coeff", EXPERIMENT_SETS)
def test_pg_curl_equals_galerkin_ife(coeff):
    disc = Discretization(build_uniform_triangulation(16), CIRCLE, coeff)
    a = assemble_bilinear(disc, "pg")["curl"]
    b = assemble_bilinear(disc, "c")["curl"]
    assert abs(a - b).max() <= 1e-12 * abs(b).max()


def test_pp_without_penalty_is_c():
    disc = Discretization(build_uniform_triangulation(16), CIRCLE, EXPERIMENT_SETS[1])
    off = PenaltySettings(c0=0.0, consistency=False)
    pp = assemble(disc, "pp", lambda X, s: X, penalty=off)
    c = assemble(disc, "c", lambda X, s: X)
    assert abs(pp.matrix - c.matrix).max() == 0.0
    assert np.array_equal(pp.rhs, c.rhs)


def test_penalty_vanishes_for_matched():
    disc = Discretization(build_uniform_triangulation(16), CIRCLE, MATCHED)
    P = assemble_penalty(disc)
    assert abs(P).max() <= 1e-12


def test_penalty_swap_invariant_and_symmetric():
    disc = Discretization(build_uniform_triangulation(16), CIRCLE, EXPERIMENT_SETS[3])
    P = assemble_penalty(disc)
    Q = assemble_penalty(disc, swap=True)
    assert abs(P - Q).max() <= 1e-12 * abs(P).max()
    assert abs(P - P.T).max() <= 1e-12 * abs(P).max()


def test_penalty_edge_sets():
    disc = Discretization(build_uniform_triangulation(16), CIRCLE, EXPERIMENT_SETS[0])
    cut = penalty_edges(disc, "cut")
    full = penalty_edges(disc, "interface")
    assert set(cut) <= set(full) and len(cut) > 0
    assert np.all(disc.mesh.edge_elements[full, 1] >= 0)
    with pytest.raises(ValueError):
        penalty_edges(disc, "all")


def test_dirichlet_rows():
    disc = Discretization(build_uniform_triangulation(8), CIRCLE, EXPERIMENT_SETS[0])
    sys_ = assemble(disc, "pg", lambda X, s: np.ones_like(X))
    vals = np.arange(disc.dofmap.n_dofs, dtype=float)
    out = apply_dirichlet(sys_, disc.dofmap, vals)
    bnd = disc.dofmap.boundary
    A = out.matrix.tolil()
    for g in bnd[:10]:
        row = A.getrow(g).toarray().ravel()
        assert row[g] == 1.0 and np.count_nonzero(row) == 1
        assert out.rhs[g] == vals[g]
        col = A.getcol(g).toarray().ravel()
        assert np.count_nonzero(col) == 1
    interior = np.setdiff1d(np.arange(disc.dofmap.n_dofs), bnd)
    ref = sys_.rhs - sys_.matrix @ np.where(np.isin(np.arange(len(vals)), bnd), vals, 0.0)
    assert np.allclose(out.rhs[interior], ref[interior])


@pytest.mark.parametrize("scheme", SCHEMES)
def test_patch_test(scheme):
    # a global Nedelec field with matched coefficients solves the problem with f = beta u
    coef = np.array([0.3, -1.2, 0.8])
    beta = 2.0
    u = lambda X: nd_eval(coef, X)
    mesh = build_uniform_triangulation(8)
    disc = Discretization(mesh, CIRCLE, CoefficientPair(1.5, 1.5, beta, beta))
    sys_ = assemble(disc, scheme, lambda X, s: beta * u(X))
    exact = interpolate(u, mesh, disc.cls)
    rep = solve(apply_dirichlet(sys_, disc.dofmap, exact), tol=1e-12)
    assert np.abs(rep.x - exact).max() <= 1e-10


def test_assembly_deterministic():
    disc = Discretization(build_uniform_triangulation(16), CIRCLE, EXPERIMENT_SETS[2])
    f = lambda X, s: np.stack([np.sin(X[..., 1]), X[..., 0] * s], axis=-1)
    a = assemble(disc, "pp", f)
    b = assemble(disc, "pp", f)
    assert (a.matrix != b.matrix).nnz == 0
    assert np.array_equal(a.rhs, b.rhs)
    assert sp.issparse(a.matrix) and a.n_dofs == disc.mesh.n_edges


def test_load_integrates_constant_source():
    # sum of sign-corrected loads equals int f . (sum over DOFs) which is checked against
    # the exact integral of a Nedelec field u: int f . u = sum_i u_i F_i
    mesh = build_uniform_triangulation(8)
    disc = Discretization(mesh, CIRCLE, EXPERIMENT_SETS[0])
    coef = np.array([0.5, 0.25, -1.0])
    F = assemble(disc, "pg", lambda X, s: np.broadcast_to([1.0, 2.0], X.shape).copy()).rhs
    uh = interpolate(lambda X: nd_eval(coef, X), mesh)
    # int over [-1,1]^2 of (1,2).(a + b(y,-x)) = 4 (a1 + 2 a2)
    assert np.isclose(uh @ F, 4 * (coef[0] + 2 * coef[1]), rtol=1e-10)
