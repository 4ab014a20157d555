"""Lowest-order first-family Nedelec element.

A local field is stored as coefficients ``(a1, a2, b)`` of
``v(x) = a + b * [x2, -x1]`` in physical coordinates, so ``curl v = -2 b``.
Stacks of fields are arrays with a trailing axis of length 3.
"""
from __future__ import annotations

import numpy as np

from .mesh import LOCAL_EDGES, MeshTopology
from .quadrature import reference_segment_rule

REFERENCE_TRIANGLE = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
_J = np.array([[0.0, 1.0], [-1.0, 0.0]])


class NDPolynomial:
    """Single Nedelec field ``a + b [x2, -x1]``."""

    __slots__ = ("coef",)

    def __init__(self, a=(0.0, 0.0), b: float = 0.0):
        self.coef = np.array([a[0], a[1], b], dtype=float)

    @classmethod
    def from_coef(cls, coef) -> "NDPolynomial":
        out = cls.__new__(cls)
        out.coef = np.asarray(coef, dtype=float).copy()
        return out

    @property
    def a(self) -> np.ndarray:
        return self.coef[:2]

    @property
    def b(self) -> float:
        return float(self.coef[2])

    def __call__(self, X) -> np.ndarray:
        return nd_eval(self.coef, X)

    def curl(self) -> float:
        return -2.0 * self.b

    def div(self) -> float:
        return 0.0

    def edge_dof(self, p0, p1) -> float:
        return float(dof_row(p0, p1) @ self.coef)

    def __add__(self, other):
        return NDPolynomial.from_coef(self.coef + other.coef)

    def __sub__(self, other):
        return NDPolynomial.from_coef(self.coef - other.coef)

    def __mul__(self, s):
        return NDPolynomial.from_coef(self.coef * s)

    __rmul__ = __mul__

    def __repr__(self):
        return f"NDPolynomial(a=({self.coef[0]:.6g}, {self.coef[1]:.6g}), b={self.coef[2]:.6g})"


def nd_eval(coef, X) -> np.ndarray:
    """Evaluate coefficient stack ``coef[..., 3]`` at points ``X[..., 2]``.

    Shapes broadcast: coef (..., 3) with X (..., 2) -> (..., 2).
    """
    coef = np.asarray(coef, dtype=float)
    X = np.asarray(X, dtype=float)
    b = coef[..., 2:3]
    return coef[..., :2] + b * np.stack([X[..., 1], -X[..., 0]], axis=-1)


def shift_origin(coef, c) -> np.ndarray:
    """Coefficients of ``x' -> v(x' + c)``; the inverse shift is ``-c``."""
    coef = np.array(coef, dtype=float)
    c = np.asarray(c, dtype=float)
    coef[..., 0] += coef[..., 2] * c[1]
    coef[..., 1] -= coef[..., 2] * c[0]
    return coef


def dof_row(p0, p1) -> np.ndarray:
    """Row ``r`` with ``r @ coef == int_{p0}^{p1} v . t ds`` (t from p0 to p1).

    Exact: the tangential trace of a Nedelec field is constant along a line.
    """
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    d = p1 - p0
    m = 0.5 * (p0 + p1)
    return np.stack([d[..., 0], d[..., 1], m[..., 1] * d[..., 0] - m[..., 0] * d[..., 1]], axis=-1)


def dof_matrix(tri) -> np.ndarray:
    """3x3 matrix of ccw edge DOFs (rows) of the monomial coefficients."""
    tri = np.asarray(tri, dtype=float)
    return np.stack([dof_row(tri[..., a, :], tri[..., b, :]) for a, b in LOCAL_EDGES], axis=-2)


def standard_basis(tri) -> np.ndarray:
    """Coefficients of the Whitney basis; row i is the field of local edge i.

    Works on a single triangle (3, 2) or a stack (ne, 3, 2).
    """
    M = dof_matrix(tri)
    return np.swapaxes(np.linalg.inv(M), -1, -2)


def reference_basis(i: int) -> NDPolynomial:
    """Basis field of edge ``i`` (opposite vertex i) on the reference triangle."""
    return NDPolynomial.from_coef(standard_basis(REFERENCE_TRIANGLE)[i])


def piola_push(B, zhat, origin=(0.0, 0.0)) -> NDPolynomial:
    """Covariant Piola map ``z(X) = B^{-T} zhat(F^{-1}(X))`` with ``F(Xh) = origin + B Xh``."""
    B = np.asarray(B, dtype=float)
    det = np.linalg.det(B)
    if abs(det) < 1e-300:
        raise np.linalg.LinAlgError("singular jacobian")
    coef = zhat.coef if isinstance(zhat, NDPolynomial) else np.asarray(zhat, dtype=float)
    origin = np.asarray(origin, dtype=float)
    b = coef[2] / det
    a = np.linalg.solve(B.T, coef[:2]) - b * (_J @ origin)
    return NDPolynomial(a, b)


def edge_dof(v, p0, p1, degree: int = 8) -> float:
    """``int_e v . t ds`` for a callable field by Gauss quadrature."""
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    s, w = reference_segment_rule(degree)
    d = p1 - p0
    vals = np.asarray(v(p0 + s[:, None] * d))
    return float(w @ (vals @ d))


def interpolate(u, mesh: MeshTopology, classification=None, space: str = "standard", degree: int = 8) -> np.ndarray:
    """Edge-integral DOFs of ``u`` under the global tangent convention.

    ``u`` maps points (..., 2) to vectors (..., 2).  Edges cut by the
    interface are split at the cut point so each piece is integrated
    smoothly.  ``space`` only selects how the DOFs will later be evaluated;
    the DOF vector itself is the same for the standard and immersed spaces.
    """
    if space not in ("standard", "immersed"):
        raise ValueError(f"unknown space {space!r}")
    a = mesh.nodes[mesh.edges[:, 0]]
    b = mesh.nodes[mesh.edges[:, 1]]
    starts, stops, owner = [a], [b], [np.arange(mesh.n_edges)]
    if classification is not None:
        r = classification.edge_ratio
        cut = np.flatnonzero(np.isfinite(r) & (r > 0.0) & (r < 1.0))
        if len(cut):
            X = a[cut] + r[cut, None] * (b[cut] - a[cut])
            starts = [np.where(np.isin(np.arange(mesh.n_edges), cut)[:, None], np.nan, a), a[cut], X]
            stops = [b, X, b[cut]]
            owner = [np.arange(mesh.n_edges), cut, cut]
    p0 = np.concatenate(starts)
    p1 = np.concatenate(stops)
    own = np.concatenate(owner)
    keep = np.isfinite(p0[:, 0])
    p0, p1, own = p0[keep], p1[keep], own[keep]
    s, w = reference_segment_rule(degree)
    d = p1 - p0
    pts = p0[:, None] + s[None, :, None] * d[:, None]
    vals = np.asarray(u(pts))
    contrib = np.einsum("q,sqc,sc->s", w, vals, d)
    out = np.zeros(mesh.n_edges)
    np.add.at(out, own, contrib)
    return out
