"""Gauss rules on triangles, segments and (cut) polygons."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

MAX_DEGREE = 10


class UnsupportedDegree(ValueError):
    pass


@dataclass(frozen=True)
class QuadratureRule:
    """Points (m, 2) and weights (m,) in physical coordinates."""

    points: np.ndarray
    weights: np.ndarray
    degree: int

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def measure(self) -> float:
        return float(self.weights.sum())

    def integrate(self, f) -> np.ndarray:
        """Integrate ``f(points) -> (m, ...)`` and return the weighted sum."""
        if len(self) == 0:
            return 0.0
        vals = np.asarray(f(self.points))
        return np.tensordot(self.weights, vals, axes=(0, 0))

    def scaled(self, factor: float) -> "QuadratureRule":
        return QuadratureRule(self.points, self.weights * factor, self.degree)

    @staticmethod
    def empty(degree: int = 0) -> "QuadratureRule":
        return QuadratureRule(np.zeros((0, 2)), np.zeros(0), degree)

    @staticmethod
    def concat(rules, degree=None) -> "QuadratureRule":
        rules = [r for r in rules if len(r)]
        if not rules:
            return QuadratureRule.empty(degree or 0)
        deg = degree if degree is not None else min(r.degree for r in rules)
        return QuadratureRule(
            np.concatenate([r.points for r in rules]),
            np.concatenate([r.weights for r in rules]),
            deg,
        )


def _check_degree(degree: int) -> int:
    if int(degree) != degree or not 0 <= degree <= MAX_DEGREE:
        raise UnsupportedDegree(f"quadrature degree {degree!r} not in [0, {MAX_DEGREE}]")
    return max(int(degree), 1)


@lru_cache(maxsize=None)
def reference_triangle_rule(degree: int) -> tuple[np.ndarray, np.ndarray]:
    """Collapsed Gauss-Jacobi rule on (0,0), (1,0), (0,1)."""
    degree = _check_degree(degree)
    n = (degree + 2) // 2
    xg, wg = np.polynomial.legendre.leggauss(n)
    xj, wj = roots_jacobi(n, 1.0, 0.0)
    xi = 0.5 * (xg + 1.0)
    eta = 0.5 * (xj + 1.0)
    XI, ETA = np.meshgrid(xi, eta, indexing="ij")
    W = np.outer(0.5 * wg, 0.25 * wj)
    pts = np.column_stack([(XI * (1.0 - ETA)).ravel(), ETA.ravel()])
    return pts, W.ravel()


@lru_cache(maxsize=None)
def reference_segment_rule(degree: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre on [0, 1]."""
    degree = _check_degree(degree)
    n = (degree + 2) // 2
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def triangle_rule(degree: int, tri) -> QuadratureRule:
    """Rule exact for polynomials of total degree ``degree`` on ``tri``."""
    tri = np.asarray(tri, dtype=float)
    ref_pts, ref_w = reference_triangle_rule(degree)
    B = np.column_stack([tri[1] - tri[0], tri[2] - tri[0]])
    det = abs(np.linalg.det(B))
    if det == 0.0:
        raise ValueError("degenerate triangle")
    return QuadratureRule(tri[0] + ref_pts @ B.T, ref_w * det, degree)


def triangle_rules_batch(degree: int, tris: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Map the reference rule onto a stack of triangles.

    Returns points (ne, m, 2) and weights (ne, m).
    """
    tris = np.asarray(tris, dtype=float)
    ref_pts, ref_w = reference_triangle_rule(degree)
    e1 = tris[:, 1] - tris[:, 0]
    e2 = tris[:, 2] - tris[:, 0]
    det = np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    pts = (
        tris[:, None, 0]
        + ref_pts[None, :, 0, None] * e1[:, None]
        + ref_pts[None, :, 1, None] * e2[:, None]
    )
    return pts, det[:, None] * ref_w[None, :]


def polygon_area(poly) -> float:
    """Signed shoelace area."""
    p = np.asarray(poly, dtype=float)
    if len(p) < 3:
        return 0.0
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def polygon_rule(degree: int, polygon) -> QuadratureRule:
    """Fan triangulation from vertex 0 of a convex polygon.

    Degenerate polygons (area below 1e-14 * diam^2) yield an empty rule.
    """
    p = np.asarray(polygon, dtype=float)
    if len(p) < 3:
        return QuadratureRule.empty(degree)
    diam2 = float(np.max(np.sum((p[:, None] - p[None]) ** 2, axis=-1)))
    if abs(polygon_area(p)) < 1e-14 * diam2 or diam2 == 0.0:
        return QuadratureRule.empty(degree)
    rules = []
    for k in range(1, len(p) - 1):
        tri = p[[0, k, k + 1]]
        a = abs(polygon_area(tri))
        if a > 1e-15 * diam2:
            rules.append(triangle_rule(degree, tri))
    return QuadratureRule.concat(rules, degree)


def segment_rule(degree: int, p0, p1) -> QuadratureRule:
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    s, w = reference_segment_rule(degree)
    L = float(np.linalg.norm(p1 - p0))
    return QuadratureRule(p0 + s[:, None] * (p1 - p0), w * L, degree)


def curved_subdomain_rule(degree: int, cut, iface, side: int, n_sub: int = 4) -> QuadratureRule:
    """Rule for the part of an interface element on ``side`` of the true curve.

    The curve is replaced by a polyline through ``n_sub - 1`` points on it.
    Cells between the chord and the polyline enter with signed weights, so the
    rule integrates smooth integrands over the polygonal approximation of
    the curved subregion.
    """
    from .geometry import interface_cells

    rules = []
    for cell in interface_cells(cut, iface, n_sub):
        if cell.exact_side == side:
            rules.append(polygon_rule(degree, cell.polygon).scaled(cell.weight))
    return QuadratureRule.concat(rules, degree)
