"""Immersed Nedelec and linear shape functions on interface elements."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .geometry import MINUS, PLUS, CutConfiguration
from .mesh import LOCAL_EDGES
from .nedelec import REFERENCE_TRIANGLE, dof_row, nd_eval, piola_push, shift_origin, standard_basis

_J = np.array([[0.0, 1.0], [-1.0, 0.0]])
SINGULAR_RCOND = 1e-12


class SingularSystem(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class CoefficientPair:
    mu_minus: float
    mu_plus: float
    beta_minus: float
    beta_plus: float

    def __post_init__(self):
        for name in ("mu_minus", "mu_plus", "beta_minus", "beta_plus"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)!r}")

    @property
    def kappa(self) -> float:
        return 1.0 - self.mu_plus / self.mu_minus

    @property
    def lam(self) -> float:
        return 1.0 - self.beta_minus / self.beta_plus

    @property
    def rho(self) -> float:
        return self.beta_minus / self.beta_plus

    @property
    def matched(self) -> bool:
        return self.mu_minus == self.mu_plus and self.beta_minus == self.beta_plus

    def mu(self, side: int) -> float:
        return self.mu_minus if side == MINUS else self.mu_plus

    def beta(self, side: int) -> float:
        return self.beta_minus if side == MINUS else self.beta_plus

    def swapped(self) -> "CoefficientPair":
        return CoefficientPair(self.mu_plus, self.mu_minus, self.beta_plus, self.beta_minus)


# ---------------------------------------------------------------------------
# extension operator


def ct_matrix(cut: CutConfiguration, coeff: CoefficientPair) -> np.ndarray:
    """Matrix of the map from the minus-side field to the plus-side field.

    The image adds ``b1 R (X - D) + b2 n`` with ``b1`` fixing the scaled curl
    and ``b2`` fixing the beta-weighted normal component at the chord midpoint.
    """
    n = cut.normal
    D, Xm = cut.D, cut.Xm
    rot_m = _J @ (Xm - D)
    M = np.empty((3, 3))
    for j in range(3):
        v = np.zeros(3)
        v[j] = 1.0
        b1 = 0.5 * coeff.kappa * (-2.0 * v[2])
        vn = float(nd_eval(v, Xm) @ n)
        b2 = (coeff.rho - 1.0) * vn - b1 * float(rot_m @ n)
        w = v.copy()
        w[:2] += -b1 * (_J @ D) + b2 * n
        w[2] += b1
        M[:, j] = w
    return M


def ct_apply(cut: CutConfiguration, v, coeff: CoefficientPair) -> np.ndarray:
    """Extend a minus-side field to the plus side."""
    return ct_matrix(cut, coeff) @ np.asarray(getattr(v, "coef", v), dtype=float)


def ct_inverse(cut: CutConfiguration, w, coeff: CoefficientPair) -> np.ndarray:
    """Recover the minus-side field from its plus-side extension.

    The conditions are symmetric in the two sides, so the inverse is the same
    construction with the coefficient roles exchanged.
    """
    return ct_matrix(cut, coeff.swapped()) @ np.asarray(getattr(w, "coef", w), dtype=float)


# ---------------------------------------------------------------------------
# H(curl) IFE basis


@dataclass
class LocalEdgeBasis:
    """Three piecewise Nedelec shape functions; row i belongs to local edge i."""

    cut: CutConfiguration
    coeff: CoefficientPair
    minus: np.ndarray
    plus: np.ndarray

    def piece(self, side: int) -> np.ndarray:
        return self.minus if side == MINUS else self.plus

    def __call__(self, i: int, X, side: int) -> np.ndarray:
        return nd_eval(self.piece(side)[i], X)

    def scaled_curl(self) -> np.ndarray:
        """mu^{-1} curl of each shape function on the (minus, plus) pieces."""
        return np.stack(
            [-2.0 * self.minus[:, 2] / self.coeff.mu_minus, -2.0 * self.plus[:, 2] / self.coeff.mu_plus],
            axis=1,
        )

    def dof_values(self) -> np.ndarray:
        """Matrix ``G[j, i] = int_{e_j} psi_i . t_j`` with edges split at the cut."""
        c = self.cut.centroid
        local = translate_cut(self.cut, -c)
        G = np.empty((3, 3))
        for j, segs in enumerate(_edge_segments(local)):
            row = np.zeros(3)
            for p0, p1, side in segs:
                row += shift_origin(self.piece(side), c) @ dof_row(p0, p1)
            G[j] = row
        return G


def _edge_segments(cut: CutConfiguration):
    """Per local edge: list of (p0, p1, side) along the ccw direction."""
    verts = cut.vertices
    sides = cut.vertex_sides()
    le_D, le_E = cut.cut_local_edges
    out = []
    for le, (i, j) in enumerate(LOCAL_EDGES):
        p, q = verts[i], verts[j]
        if le == le_D or le == le_E:
            X = cut.D if le == le_D else cut.E
            segs = [(p, X, sides[i]), (X, q, sides[j])]
        else:
            segs = [(p, q, sides[i])]
        out.append(segs)
    return out


def _split_dof_matrix(cut, minus_map, plus_map) -> np.ndarray:
    rows = []
    for segs in _edge_segments(cut):
        r = np.zeros(3)
        for p0, p1, side in segs:
            r = r + dof_row(p0, p1) @ (minus_map if side == MINUS else plus_map)
        rows.append(r)
    return np.array(rows)


def translate_cut(cut: CutConfiguration, shift) -> CutConfiguration:
    shift = np.asarray(shift, dtype=float)
    return replace(cut, A=cut.A + shift, D=cut.D + shift, E=cut.E + shift)


def build_local_basis(cut: CutConfiguration, coeff: CoefficientPair) -> LocalEdgeBasis:
    """IFE shape functions with Kronecker edge DOFs, built in physical coordinates.

    The 3x3 system is solved with the origin at the element centroid, which
    keeps it well conditioned for small elements far from the origin.
    With matched coefficients C_T is the identity and the space is the
    standard one, returned as is.
    """
    if coeff.matched:
        S = standard_basis(cut.vertices)
        return LocalEdgeBasis(cut, coeff, S, S.copy())
    c = cut.centroid
    local = translate_cut(cut, -c)
    C = ct_matrix(local, coeff)
    M = _split_dof_matrix(local, np.eye(3), C)
    if 1.0 / np.linalg.cond(M, 1) < SINGULAR_RCOND:
        raise SingularSystem(f"IFE DOF system singular on element {cut.elem}")
    X = np.linalg.solve(M, np.eye(3))
    minus = shift_origin(X.T, -c)
    plus = shift_origin((C @ X).T, -c)
    return LocalEdgeBasis(cut, coeff, minus, plus)


def curl_closed_form(cut: CutConfiguration, coeff: CoefficientPair) -> float:
    """Common value of mu^{-1} curl psi_i: 2 / (det B ((1-de) mu_far + de mu_apex))."""
    det = abs(np.linalg.det(cut.jacobian))
    # de is the apex-triangle share of |T|; read it off the actual points
    A1 = cut.A[0]
    u, w = cut.D - A1, cut.E - A1
    de = abs(u[0] * w[1] - u[1] * w[0]) / det
    mu_apex = coeff.mu(cut.apex_side)
    mu_far = coeff.mu(-cut.apex_side)
    return 2.0 / (det * ((1.0 - de) * mu_far + de * mu_apex))


# ---------------------------------------------------------------------------
# reference-element route (used as an independent cross-check)


def _reference_frame(cut: CutConfiguration, coeff: CoefficientPair):
    """Reference data with the apex subelement taken as the plus side."""
    rc = coeff if cut.apex_side == PLUS else coeff.swapped()
    B = cut.jacobian
    nbar = cut.normal if cut.apex_side == MINUS else -cut.normal  # away from the apex
    nhat = np.linalg.solve(B, nbar)
    return rc, B, nhat


def reference_system(cut: CutConfiguration, coeff: CoefficientPair):
    """Return (A, gamma, Bm, R, nhat) of the 2x2 reference-element systems."""
    rc, B, nhat = _reference_frame(cut, coeff)
    d, e = cut.d, cut.e
    phis = standard_basis(REFERENCE_TRIANGLE)
    Xm = np.array([d / 2, e / 2])
    s = np.array([nd_eval(phis[i], Xm) @ nhat for i in range(3)])
    alpha = 0.5 * (e * nhat[0] + d * nhat[1])
    kap, lam = rc.kappa, rc.lam
    A = np.array([[1.0, 0.0], [alpha, 2.0 * alpha]])
    gamma = np.array([kap, -lam * s[0]])
    Bm = np.array([[kap, kap], [-lam * s[1], -lam * s[2]]])
    R = d * e * np.array([[-1.0, -1.0], [0.0, 1.0]])
    return A, gamma, Bm, R, nhat


def reference_route_basis(cut: CutConfiguration, coeff: CoefficientPair) -> LocalEdgeBasis:
    """IFE basis via the reference triangle and the Piola map."""
    rc, B, nhat = _reference_frame(cut, coeff)
    A, gamma, Bm, R, _ = reference_system(cut, coeff)
    d, e = cut.d, cut.e
    phis = standard_basis(REFERENCE_TRIANGLE)
    Ainv = np.linalg.inv(A)
    K = np.eye(2) + R @ Ainv @ Bm
    far_pieces, apex_pieces = [], []
    for m in range(3):
        v = np.zeros(3)
        v[m] = 1.0
        c = np.linalg.solve(K, v[1:] - R @ Ainv @ gamma * v[0])
        b = Ainv @ (gamma * v[0] + Bm @ c)
        zf = v[0] * phis[0] + c[0] * phis[1] + c[1] * phis[2]
        za = zf.copy()
        za[:2] += b[0] * np.array([0.0, d]) + b[1] * np.array([e, d])
        za[2] += b[0]
        far_pieces.append(piola_push(B, zf, cut.A[0]).coef)
        apex_pieces.append(piola_push(B, za, cut.A[0]).coef)
    # reference edge m is the local edge opposite vertex apex + m
    far = np.empty((3, 3))
    apex = np.empty((3, 3))
    for m in range(3):
        far[(cut.apex + m) % 3] = far_pieces[m]
        apex[(cut.apex + m) % 3] = apex_pieces[m]
    if cut.apex_side == PLUS:
        return LocalEdgeBasis(cut, coeff, far, apex)
    return LocalEdgeBasis(cut, coeff, apex, far)


def unisolvence_margin(cut: CutConfiguration, coeff: CoefficientPair) -> tuple[float, float]:
    """Closed-form eigenvalues of the reduced 2x2 reference system."""
    rc, _, nhat = _reference_frame(cut, coeff)
    d, e = cut.d, cut.e
    lam_a = 1.0 - d * e * rc.kappa
    lam_b = 1.0 - d * e * (nhat[0] + nhat[1]) * rc.lam / (e * nhat[0] + d * nhat[1])
    return lam_a, lam_b


def geometric_inequalities(cut: CutConfiguration) -> tuple[float, float]:
    """(n'.n, de (n1 + n2) / n'.n) for the mapped chord normal."""
    nbar = cut.normal if cut.apex_side == MINUS else -cut.normal
    nhat = np.linalg.solve(cut.jacobian, nbar)
    d, e = cut.d, cut.e
    dot = e * nhat[0] + d * nhat[1]
    return dot, d * e * (nhat[0] + nhat[1]) / dot


# ---------------------------------------------------------------------------
# H1 IFE basis


@dataclass
class LocalNodalIFEBasis:
    """Piecewise linear functions ``c0 + c1 x + c2 y``; row i is vertex i."""

    cut: CutConfiguration
    coeff: CoefficientPair
    minus: np.ndarray
    plus: np.ndarray

    def piece(self, side: int) -> np.ndarray:
        return self.minus if side == MINUS else self.plus

    def __call__(self, i: int, X, side: int) -> np.ndarray:
        c = self.piece(side)[i]
        X = np.asarray(X, dtype=float)
        return c[0] + c[1] * X[..., 0] + c[2] * X[..., 1]

    def gradients(self, side: int) -> np.ndarray:
        return self.piece(side)[:, 1:]


def h1_extension_matrix(cut: CutConfiguration, coeff: CoefficientPair) -> np.ndarray:
    """Map minus-side linear coefficients to plus-side ones.

    Adds ``(rho - 1) (grad z . n) (X - D) . n``, which keeps the trace on the
    chord and makes the beta-weighted normal flux continuous.
    """
    n, D = cut.normal, cut.D
    M = np.eye(3)
    # grad z . n = c1 n1 + c2 n2 ; (X - D).n = n1 x + n2 y - D.n
    g = np.array([0.0, n[0], n[1]])
    q = np.array([-D @ n, n[0], n[1]])
    return M + (coeff.rho - 1.0) * np.outer(q, g)


def h1_local_basis(cut: CutConfiguration, coeff: CoefficientPair) -> LocalNodalIFEBasis:
    E = h1_extension_matrix(cut, coeff)
    verts = cut.vertices
    sides = cut.vertex_sides()
    rows = []
    for v, s in zip(verts, sides):
        r = np.array([1.0, v[0], v[1]])
        rows.append(r if s == MINUS else r @ E)
    M = np.array(rows)
    if 1.0 / np.linalg.cond(M, 1) < SINGULAR_RCOND:
        raise SingularSystem(f"H1 IFE system singular on element {cut.elem}")
    X = np.linalg.solve(M, np.eye(3))
    return LocalNodalIFEBasis(cut, coeff, X.T, (E @ X).T)


def exact_sequence_residual(cut: CutConfiguration, coeff: CoefficientPair, edge_basis=None, nodal_basis=None) -> float:
    """Relative least-squares residual of grad(S_h(T)) in span{psi_i}.

    Each candidate is a pair of Nedelec coefficient vectors (minus, plus);
    a gradient is the pair ``(grad z-, 0), (grad z+, 0)``.
    """
    eb = edge_basis or build_local_basis(cut, coeff)
    nb = nodal_basis or h1_local_basis(cut, coeff)
    span = np.hstack([eb.minus, eb.plus]).T  # (6, 3)
    worst = 0.0
    for i in range(3):
        target = np.concatenate([nb.minus[i, 1:], [0.0], nb.plus[i, 1:], [0.0]])
        x, *_ = np.linalg.lstsq(span, target, rcond=None)
        res = np.linalg.norm(span @ x - target) / max(np.linalg.norm(target), 1e-300)
        worst = max(worst, float(res))
    return worst


def curl_free_dofs(cut: CutConfiguration) -> np.ndarray:
    """Edge DOFs (rows) of gradients of the three nodal hat values."""
    out = np.zeros((3, 3))
    for le, (i, j) in enumerate(LOCAL_EDGES):
        out[j, le] += 1.0
        out[i, le] -= 1.0
    return out


# ---------------------------------------------------------------------------
# local inf-sup quantities


def infsup_eigs_closed_form(d: float, e: float) -> tuple[float, float]:
    s = d * d + e * e
    root = np.sqrt(2.0 * s)
    return d * e * (d + e - root) / (2 * s), d * e * (d + e + root) / (2 * s)


def _case_geometry(d: float, e: float, case: int):
    A1 = np.array([0.0, 0.0])
    A2 = np.array([1.0, 0.0])
    A3 = np.array([0.0, 1.0]) if case == 1 else np.array([1.0, 1.0])
    D = d * A2
    E = e * A3
    return A1, A2, A3, D, E


def interpolated_constant_map(d: float, e: float, rho: float, case: int = 1) -> np.ndarray:
    """Matrix M with Pi u = M u_far for a curl-free IFE field.

    The apex subelement holds ``Q^T diag(1, rho) Q u_far`` (chord frame Q),
    the rest holds ``u_far``; Pi is the standard edge interpolation, computed
    here from split edge integrals.
    """
    A1, A2, A3, D, E = _case_geometry(d, e, case)
    chord = E - D
    t = chord / np.linalg.norm(chord)
    n = np.array([t[1], -t[0]])
    Q = np.array([t, n])
    Lam = np.diag([1.0, rho])
    T_apex = Q.T @ Lam @ Q
    tri = np.array([A1, A2, A3])
    phis = standard_basis(tri)
    # DOF of a constant field c on a segment is c . (p1 - p0)
    segs = {
        0: [(A2, A3, "far")],
        1: [(A3, E, "far"), (E, A1, "apex")],
        2: [(A1, D, "apex"), (D, A2, "far")],
    }
    M = np.zeros((2, 2))
    for le, pieces in segs.items():
        row = np.zeros(2)
        for p0, p1, where in pieces:
            vec = p1 - p0
            row += vec @ (T_apex if where == "apex" else np.eye(2))
        # Pi u = sum_le dof_le phi_le, and Pi u is a constant field here
        M += np.outer(phis[le, :2], row)
    return M


def local_infsup_eigs(d: float, e: float, rho: float = 1.0, case: int = 1) -> dict:
    """Symmetric-part spectrum of the Case-1 map and the worst inner products.

    ``minus_min`` is min over unit ``u_far`` of ``u_far . Pi u`` and
    ``plus_min`` the same with the apex value ``u_apex`` normalised.
    """
    lam1, lam2 = infsup_eigs_closed_form(d, e)
    M = interpolated_constant_map(d, e, rho, case)
    A1, A2, A3, D, E = _case_geometry(d, e, case)
    t = (E - D) / np.linalg.norm(E - D)
    n = np.array([t[1], -t[0]])
    Q = np.array([t, n])
    T_apex = Q.T @ np.diag([1.0, rho]) @ Q
    far_form = 0.5 * (M + M.T)
    # u_apex . Pi u with u_far = T_apex^{-1} u_apex
    apex_form = M @ np.linalg.inv(T_apex)
    apex_form = 0.5 * (apex_form + apex_form.T)
    return {
        "lambda1": float(lam1),
        "lambda2": float(lam2),
        "minus_min": float(np.linalg.eigvalsh(far_form)[0]),
        "plus_min": float(np.linalg.eigvalsh(apex_form)[0]),
        "map": M,
    }
