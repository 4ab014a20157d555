"""Level-set interfaces, element classification and cut configurations."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .mesh import MeshTopology

MINUS, INTERFACE, PLUS = -1, 0, 1


class A1Violation(RuntimeError):
    """The interface cuts an element in a way the method cannot represent.

    Usually the mesh is too coarse for the interface curvature.
    """


class NoSignChange(ValueError):
    pass


class LevelSetInterface:
    """Interface given as the zero set of ``phi``; ``phi < 0`` is the minus side."""

    def __init__(self, phi: Callable[[np.ndarray], np.ndarray], name: str = "levelset"):
        self._phi = phi
        self.name = name

    def __call__(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return np.asarray(self._phi(X), dtype=float)

    def side(self, X) -> np.ndarray:
        """+1 where phi >= 0, -1 elsewhere."""
        return np.where(self(X) >= 0.0, PLUS, MINUS)

    def crossing_counts(self, a: np.ndarray, b: np.ndarray, samples: int = 17) -> np.ndarray:
        """Sign changes of phi along each segment a -> b (sampled)."""
        s = np.linspace(0.0, 1.0, samples + 2)
        P = a[:, None] + s[None, :, None] * (b - a)[:, None]
        sg = np.where(self(P) >= 0.0, 1, -1)
        return np.count_nonzero(sg[:, 1:] != sg[:, :-1], axis=1)

    def excursion_depth(self, a: np.ndarray, b: np.ndarray, samples: int = 33) -> np.ndarray:
        """Largest distance estimate |phi| / |grad phi| along each segment."""
        s = np.linspace(0.0, 1.0, samples)
        P = a[:, None] + s[None, :, None] * (b - a)[:, None]
        step = 1e-6 * max(float(np.abs(P).max()), 1.0)
        gx = (self(P + [step, 0.0]) - self(P - [step, 0.0])) / (2 * step)
        gy = (self(P + [0.0, step]) - self(P - [0.0, step])) / (2 * step)
        dist = np.abs(self(P)) / np.maximum(np.hypot(gx, gy), 1e-300)
        return dist.max(axis=1)


class Circle(LevelSetInterface):
    def __init__(self, radius: float, center=(0.0, 0.0)):
        self.radius = float(radius)
        self.center = np.asarray(center, dtype=float)
        super().__init__(self._circle, name="circle")

    def _circle(self, X):
        d = X - self.center
        return d[..., 0] ** 2 + d[..., 1] ** 2 - self.radius**2

    def crossing_counts(self, a: np.ndarray, b: np.ndarray, samples: int = 17) -> np.ndarray:
        """Exact number of transversal crossings of each segment, from the quadratic in s."""
        t = b - a
        f = a - self.center
        qa = np.sum(t * t, axis=-1)
        qb = 2.0 * np.sum(f * t, axis=-1)
        qc = np.sum(f * f, axis=-1) - self.radius**2
        disc = qb * qb - 4.0 * qa * qc
        count = np.zeros(len(a), dtype=int)
        ok = disc > 0.0
        r = np.sqrt(np.where(ok, disc, 0.0))
        for root in ((-qb - r) / (2 * qa), (-qb + r) / (2 * qa)):
            count += (ok & (root > 0.0) & (root < 1.0)).astype(int)
        return count

    def excursion_depth(self, a: np.ndarray, b: np.ndarray, samples: int = 33) -> np.ndarray:
        """How far the circle reaches across each segment: r - dist(center, segment)."""
        t = b - a
        s = np.clip(np.sum((self.center - a) * t, axis=-1) / np.sum(t * t, axis=-1), 0.0, 1.0)
        closest = a + s[:, None] * t
        return self.radius - np.linalg.norm(closest - self.center, axis=-1)


class Line(LevelSetInterface):
    """phi = normal . (X - point)."""

    def __init__(self, normal, point=(0.0, 0.0)):
        self.normal = np.asarray(normal, dtype=float)
        self.point = np.asarray(point, dtype=float)
        super().__init__(lambda X: (X - self.point) @ self.normal, name="line")


def edge_intersection(iface: LevelSetInterface, p0, p1, tol: float = 1e-14) -> float:
    """Ratio ``s`` in (0, 1) with ``phi(p0 + s (p1 - p0)) = 0``."""
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    f0, f1 = float(iface(p0)), float(iface(p1))
    if f0 == 0.0:
        return 0.0
    if f1 == 0.0:
        return 1.0
    if f0 * f1 > 0.0:
        raise NoSignChange(f"phi does not change sign on [{p0}, {p1}]")
    d = p1 - p0
    return brentq(lambda s: float(iface(p0 + s * d)), 0.0, 1.0, xtol=tol, rtol=1e-15, maxiter=200)


@dataclass
class CutConfiguration:
    """Geometry of one interface element.

    ``A`` holds the vertices reordered as (apex, second, third) in
    counter-clockwise order; D lies on apex->second and E on apex->third.
    """

    elem: int
    apex: int
    A: np.ndarray
    D: np.ndarray
    E: np.ndarray
    d: float
    e: float
    apex_side: int
    cut_local_edges: tuple
    normal: np.ndarray = field(init=False)
    tangent: np.ndarray = field(init=False)
    Xm: np.ndarray = field(init=False)

    def __post_init__(self):
        chord = self.E - self.D
        L = np.linalg.norm(chord)
        n = np.array([chord[1], -chord[0]]) / L
        # points from the minus side to the plus side
        away_from_apex = np.dot(n, self.A[0] - self.D) < 0.0
        if away_from_apex != (self.apex_side == MINUS):
            n = -n
        self.normal = n
        self.tangent = np.array([-n[1], n[0]])
        self.Xm = 0.5 * (self.D + self.E)

    @property
    def centroid(self) -> np.ndarray:
        return self.A.mean(axis=0)

    @property
    def chord_length(self) -> float:
        return float(np.linalg.norm(self.E - self.D))

    @property
    def jacobian(self) -> np.ndarray:
        return np.column_stack([self.A[1] - self.A[0], self.A[2] - self.A[0]])

    @property
    def vertices(self) -> np.ndarray:
        """Element vertices in mesh order."""
        out = np.empty((3, 2))
        for m in range(3):
            out[(self.apex + m) % 3] = self.A[m]
        return out

    def vertex_sides(self) -> np.ndarray:
        """Material side of each vertex in mesh order."""
        s = np.full(3, -self.apex_side)
        s[self.apex] = self.apex_side
        return s

    def polygons(self):
        return subelement_polygons(self)

    def polygon(self, side: int) -> np.ndarray:
        minus, plus = subelement_polygons(self)
        return minus if side == MINUS else plus

    def area(self) -> float:
        from .quadrature import polygon_area

        return abs(polygon_area(self.A))


def _dedupe(poly) -> np.ndarray:
    out = []
    for p in poly:
        if not out or np.linalg.norm(p - out[-1]) > 0.0:
            out.append(p)
    if len(out) > 1 and np.linalg.norm(out[0] - out[-1]) == 0.0:
        out.pop()
    return np.array(out)


def subelement_polygons(cut: CutConfiguration):
    """(minus polygon, plus polygon), each counter-clockwise."""
    A1, A2, A3 = cut.A
    apex_poly = _dedupe([A1, cut.D, cut.E])
    other_poly = _dedupe([cut.D, A2, A3, cut.E])
    if cut.apex_side == MINUS:
        return apex_poly, other_poly
    return other_poly, apex_poly


@dataclass
class Classification:
    labels: np.ndarray
    cuts: dict
    edge_ratio: np.ndarray
    node_side: np.ndarray

    @property
    def interface_elements(self) -> np.ndarray:
        return np.flatnonzero(self.labels == INTERFACE)

    def edge_point(self, mesh: MeshTopology, g: int) -> np.ndarray:
        a, b = mesh.nodes[mesh.edges[g]]
        return a + self.edge_ratio[g] * (b - a)

    def cut_edges(self, mesh: MeshTopology) -> np.ndarray:
        """Edges of interface elements whose cut point lies strictly inside."""
        r = self.edge_ratio
        inner = np.isfinite(r) & (r > 0.0) & (r < 1.0)
        used = np.zeros(mesh.n_edges, dtype=bool)
        for k, cut in self.cuts.items():
            for le in cut.cut_local_edges:
                used[mesh.elem_edges[k, le]] = True
        return np.flatnonzero(inner & used)

    def interface_area(self, mesh: MeshTopology) -> float:
        return float(mesh.areas()[self.interface_elements].sum())


GRAZE_TOL = 0.05


def _check_edges_single_crossing(mesh: MeshTopology, iface: LevelSetInterface, graze_tol: float = GRAZE_TOL):
    """Raise A1Violation if the interface crosses an edge twice and reaches deep across it.

    A curve that grazes an edge (two crossings with an excursion no deeper
    than ``graze_tol`` times the edge length) is left to the vertex signs:
    the bump is of the same order as the chord approximation error.
    """
    a = mesh.nodes[mesh.edges[:, 0]]
    b = mesh.nodes[mesh.edges[:, 1]]
    changes = iface.crossing_counts(a, b)
    bad = np.flatnonzero(changes > 1)
    if len(bad):
        depth = iface.excursion_depth(a[bad], b[bad])
        length = np.linalg.norm(b[bad] - a[bad], axis=1)
        bad = bad[depth > graze_tol * length]
    if len(bad):
        raise A1Violation(
            f"interface crosses edge {int(bad[0])} more than once; refine mesh"
        )


def classify_elements(mesh: MeshTopology, iface: LevelSetInterface, snap_tol: float = 1e-8) -> Classification:
    """Label elements MINUS / PLUS / INTERFACE and build cut configurations.

    Cut points within ``snap_tol`` (relative to the edge) of a vertex are moved
    onto it.  Elements whose snapped chord degenerates onto the boundary of
    the element are labelled by the sign of phi at the centroid.
    """
    _check_edges_single_crossing(mesh, iface)
    phi_nodes = iface(mesh.nodes)
    node_side = np.where(phi_nodes >= 0.0, PLUS, MINUS)

    ends = mesh.edges
    crossing = node_side[ends[:, 0]] != node_side[ends[:, 1]]
    ratio = np.full(mesh.n_edges, np.nan)
    for g in np.flatnonzero(crossing):
        p0, p1 = mesh.nodes[ends[g]]
        s = edge_intersection(iface, p0, p1)
        if s < snap_tol:
            s = 0.0
        elif s > 1.0 - snap_tol:
            s = 1.0
        ratio[g] = s

    elem_sides = node_side[mesh.elements]
    mixed = elem_sides.min(axis=1) != elem_sides.max(axis=1)
    labels = elem_sides[:, 0].copy()
    cuts = {}
    for k in np.flatnonzero(mixed):
        sides = elem_sides[k]
        # apex: the vertex whose sign differs from the other two
        apex = next(m for m in range(3) if sides[m] != sides[(m + 1) % 3] and sides[m] != sides[(m + 2) % 3])
        verts = mesh.nodes[mesh.elements[k]]
        A = np.array([verts[apex], verts[(apex + 1) % 3], verts[(apex + 2) % 3]])
        le_D = (apex + 2) % 3  # local edge apex -> apex+1
        le_E = (apex + 1) % 3  # local edge apex+2 -> apex
        D = _cut_point(mesh, ratio, k, le_D)
        E = _cut_point(mesh, ratio, k, le_E)
        d = float(np.linalg.norm(D - A[0]) / np.linalg.norm(A[1] - A[0]))
        e = float(np.linalg.norm(E - A[0]) / np.linalg.norm(A[2] - A[0]))
        if d == 0.0 or e == 0.0 or (d == 1.0 and e == 1.0):
            labels[k] = PLUS if float(iface(verts.mean(axis=0))) >= 0.0 else MINUS
            continue
        labels[k] = INTERFACE
        cuts[int(k)] = CutConfiguration(
            elem=int(k),
            apex=int(apex),
            A=A,
            D=D,
            E=E,
            d=d,
            e=e,
            apex_side=int(sides[apex]),
            cut_local_edges=(le_D, le_E),
        )
    if not cuts and isinstance(iface, Circle):
        x0, y0 = mesh.nodes.min(axis=0)
        x1, y1 = mesh.nodes.max(axis=0)
        c, r = iface.center, iface.radius
        if x0 < c[0] - r and c[0] + r < x1 and y0 < c[1] - r and c[1] + r < y1:
            raise A1Violation("interface lies inside a single element; refine mesh")
    return Classification(labels=labels, cuts=cuts, edge_ratio=ratio, node_side=node_side)


def _cut_point(mesh, ratio, k, le):
    g = mesh.elem_edges[k, le]
    a, b = mesh.nodes[mesh.edges[g]]
    return a + ratio[g] * (b - a)


# ---------------------------------------------------------------------------
# cells between the chord and a polyline approximation of the true curve


@dataclass(frozen=True)
class Cell:
    """Polygon where the exact field uses ``exact_side`` and the discrete
    field uses ``discrete_side``; ``weight`` is +1 or -1."""

    polygon: np.ndarray
    exact_side: int
    discrete_side: int
    weight: float


def _normal_offset(iface, C, n, reach, steps=32):
    """Signed distance s along n with phi(C + s n) = 0, searching outward."""
    f0 = float(iface(C))
    if f0 == 0.0:
        return 0.0
    prev = {1: 0.0, -1: 0.0}
    for j in range(1, steps + 1):
        for direction in (1, -1):
            s = direction * reach * j / steps
            if float(iface(C + s * n)) * f0 <= 0.0:
                lo, hi = sorted((prev[direction], s))
                return brentq(lambda t: float(iface(C + t * n)), lo, hi, xtol=1e-15, rtol=1e-15)
            prev[direction] = s
    raise A1Violation("interface not found near chord; refine mesh")


def interface_polyline(cut: CutConfiguration, iface: LevelSetInterface, n_sub: int = 4):
    """Chord points and their normal projections onto the true curve."""
    t = np.linspace(0.0, 1.0, n_sub + 1)
    C = cut.D + t[:, None] * (cut.E - cut.D)
    s = np.zeros(n_sub + 1)
    reach = max(cut.chord_length, 1e-300)
    for k in range(1, n_sub):
        s[k] = _normal_offset(iface, C[k], cut.normal, reach)
    return C, s


def interface_cells(cut: CutConfiguration, iface: LevelSetInterface, n_sub: int = 4):
    """Signed cell decomposition of an interface element.

    The straight subelements carry matching exact/discrete sides; the sliver
    regions between chord and polyline add the true-side contribution and
    subtract the straight-side one.
    """
    minus, plus = subelement_polygons(cut)
    cells = [Cell(minus, MINUS, MINUS, 1.0), Cell(plus, PLUS, PLUS, 1.0)]
    C, s = interface_polyline(cut, iface, n_sub)
    n = cut.normal
    P = C + s[:, None] * n
    for k in range(n_sub):
        s0, s1 = s[k], s[k + 1]
        if s0 == 0.0 and s1 == 0.0:
            continue
        if s0 * s1 >= 0.0:
            pieces = [(np.array([C[k], C[k + 1], P[k + 1], P[k]]), s0 + s1)]
        else:
            tau = s0 / (s0 - s1)
            X = C[k] + tau * (C[k + 1] - C[k])
            pieces = [(np.array([C[k], X, P[k]]), s0), (np.array([X, C[k + 1], P[k + 1]]), s1)]
        for poly, sgn in pieces:
            poly = _dedupe(poly)
            if len(poly) < 3:
                continue
            if sgn > 0:
                # beyond the chord on the plus side, yet below the curve
                true_side, straight_side = MINUS, PLUS
            else:
                true_side, straight_side = PLUS, MINUS
            cells.append(Cell(poly, true_side, straight_side, 1.0))
            cells.append(Cell(poly, straight_side, straight_side, -1.0))
    return cells


def synthetic_cut(tri, apex: int, d: float, e: float, apex_side: int = PLUS, elem: int = -1) -> CutConfiguration:
    """Cut configuration on a free-standing triangle (mesh order, ccw).

    D sits at ratio ``d`` along apex -> apex+1 and E at ratio ``e`` along
    apex -> apex+2.
    """
    tri = np.asarray(tri, dtype=float)
    if not (0.0 < d <= 1.0 and 0.0 < e <= 1.0) or (d == 1.0 and e == 1.0):
        raise ValueError(f"invalid cut ratios d={d}, e={e}")
    A = np.array([tri[apex], tri[(apex + 1) % 3], tri[(apex + 2) % 3]])
    D = A[0] + d * (A[1] - A[0])
    E = A[0] + e * (A[2] - A[0])
    return CutConfiguration(
        elem=elem, apex=int(apex), A=A, D=D, E=E, d=float(d), e=float(e),
        apex_side=int(apex_side), cut_local_edges=((apex + 2) % 3, (apex + 1) % 3),
    )
