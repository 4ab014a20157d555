"""Global systems for the Petrov-Galerkin, penalty and classic IFE schemes."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .geometry import INTERFACE, MINUS, PLUS, Classification, LevelSetInterface, classify_elements, interface_cells
from .ife import CoefficientPair, LocalEdgeBasis, build_local_basis
from .mesh import MeshTopology
from .nedelec import nd_eval, standard_basis
from .quadrature import polygon_rule, segment_rule, triangle_rules_batch

SCHEMES = ("pg", "pp", "c")


@dataclass(frozen=True)
class QuadSettings:
    assembly_degree: int = 4
    error_degree: int = 6
    n_sub: int = 4


@dataclass(frozen=True)
class PenaltySettings:
    c0: float = 10.0
    r: float = 1.0
    edges: str = "interface"  # or "cut"
    consistency: bool = True


@dataclass
class DofMap:
    """One DOF per mesh edge; local-to-global with orientation signs."""

    n_dofs: int
    elem_dofs: np.ndarray
    elem_signs: np.ndarray
    boundary: np.ndarray

    @classmethod
    def from_mesh(cls, mesh: MeshTopology) -> "DofMap":
        return cls(mesh.n_edges, mesh.elem_edges, mesh.elem_signs, np.flatnonzero(mesh.boundary_edges))


@dataclass
class LinearSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    parts: dict = field(default_factory=dict)

    @property
    def n_dofs(self) -> int:
        return self.matrix.shape[0]


class Discretization:
    """Mesh, interface classification and local bases for one coefficient set."""

    def __init__(self, mesh: MeshTopology, iface: LevelSetInterface, coeff: CoefficientPair,
                 snap_tol: float = 1e-8, classification: Classification | None = None):
        self.mesh = mesh
        self.iface = iface
        self.coeff = coeff
        self.cls = classification or classify_elements(mesh, iface, snap_tol)
        self.dofmap = DofMap.from_mesh(mesh)
        self.tris = mesh.nodes[mesh.elements]
        self.std = standard_basis(self.tris)
        self.bases: dict[int, LocalEdgeBasis] = {
            k: build_local_basis(cut, coeff) for k, cut in self.cls.cuts.items()
        }

    @property
    def labels(self) -> np.ndarray:
        return self.cls.labels

    def is_interface(self, k: int) -> bool:
        return self.cls.labels[k] == INTERFACE

    def piece(self, k: int, side: int, space: str = "immersed") -> np.ndarray:
        """(3, 3) coefficients of the local shape functions on ``side`` of element k."""
        if space == "immersed" and k in self.bases:
            return self.bases[k].piece(side)
        return self.std[k]

    def local_field(self, u: np.ndarray, k: int, side: int, space: str = "immersed") -> np.ndarray:
        w = self.dofmap.elem_signs[k] * u[self.dofmap.elem_dofs[k]]
        return w @ self.piece(k, side, space)

    def element_side(self, k: int) -> int:
        return int(self.cls.labels[k])


# ---------------------------------------------------------------------------
# local contributions


def local_matrices(polys_sides, trial, test, coeff: CoefficientPair, degree: int = 4):
    """Curl-curl and beta-mass 3x3 blocks (rows: test, columns: trial).

    ``polys_sides`` lists (polygon, side); ``trial``/``test`` map a side to
    the (3, 3) coefficient array of the shape functions on that side.
    """
    Kc = np.zeros((3, 3))
    Mb = np.zeros((3, 3))
    for poly, side in polys_sides:
        rule = polygon_rule(degree, poly)
        if len(rule) == 0:
            continue
        U = trial(side)
        V = test(side)
        area = rule.measure
        Kc += (4.0 / coeff.mu(side)) * area * np.outer(V[:, 2], U[:, 2])
        vu = nd_eval(U[:, None, :], rule.points[None])  # (3, m, 2)
        vv = nd_eval(V[:, None, :], rule.points[None])
        Mb += coeff.beta(side) * np.einsum("q,iqc,jqc->ij", rule.weights, vv, vu)
    return Kc, Mb


def _bulk_standard(disc: Discretization, degree: int, elems: np.ndarray):
    """Vectorised curl and mass blocks on non-interface elements."""
    S = disc.std[elems]
    sides = disc.labels[elems]
    mu = np.where(sides == MINUS, disc.coeff.mu_minus, disc.coeff.mu_plus)
    beta = np.where(sides == MINUS, disc.coeff.beta_minus, disc.coeff.beta_plus)
    pts, w = triangle_rules_batch(degree, disc.tris[elems])
    area = w.sum(axis=1)
    Kc = (4.0 / mu * area)[:, None, None] * S[:, :, None, 2] * S[:, None, :, 2]
    V = nd_eval(S[:, :, None, :], pts[:, None])  # (ne, 3, m, 2)
    Mb = beta[:, None, None] * np.einsum("kq,kiqc,kjqc->kij", w, V, V)
    return Kc, Mb


def _scatter(disc: Discretization, elems, blocks):
    dm = disc.dofmap
    dofs = dm.elem_dofs[elems]
    sg = dm.elem_signs[elems]
    vals = blocks * sg[:, :, None] * sg[:, None, :]
    rows = np.repeat(dofs[:, :, None], 3, axis=2)
    cols = np.repeat(dofs[:, None, :], 3, axis=1)
    return rows.ravel(), cols.ravel(), vals.ravel()


def _coo(n, parts):
    if not parts:
        return sp.csr_matrix((n, n))
    r = np.concatenate([p[0] for p in parts])
    c = np.concatenate([p[1] for p in parts])
    v = np.concatenate([p[2] for p in parts])
    return sp.coo_matrix((v, (r, c)), shape=(n, n)).tocsr()


def _spaces(scheme: str):
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    return "immersed", ("standard" if scheme == "pg" else "immersed")


def assemble_bilinear(disc: Discretization, scheme: str, quad: QuadSettings = QuadSettings(),
                      penalty: PenaltySettings = PenaltySettings()) -> dict:
    """Return sparse parts {'curl', 'mass', 'penalty'} of the system matrix."""
    trial_space, test_space = _spaces(scheme)
    n = disc.dofmap.n_dofs
    iface_elems = np.array(sorted(disc.bases), dtype=np.int64)
    bulk = np.setdiff1d(np.arange(disc.mesh.n_elements), iface_elems)
    Kc, Mb = _bulk_standard(disc, quad.assembly_degree, bulk)
    curl_parts = [_scatter(disc, bulk, Kc)]
    mass_parts = [_scatter(disc, bulk, Mb)]
    if len(iface_elems):
        Kc_i = np.zeros((len(iface_elems), 3, 3))
        Mb_i = np.zeros_like(Kc_i)
        for idx, k in enumerate(iface_elems):
            cut = disc.cls.cuts[int(k)]
            minus, plus = cut.polygons()
            Kc_i[idx], Mb_i[idx] = local_matrices(
                [(minus, MINUS), (plus, PLUS)],
                lambda s, k=k: disc.piece(int(k), s, trial_space),
                lambda s, k=k: disc.piece(int(k), s, test_space),
                disc.coeff,
                quad.assembly_degree,
            )
        curl_parts.append(_scatter(disc, iface_elems, Kc_i))
        mass_parts.append(_scatter(disc, iface_elems, Mb_i))
    parts = {"curl": _coo(n, curl_parts), "mass": _coo(n, mass_parts)}
    if scheme == "pp":
        parts["penalty"] = assemble_penalty(disc, penalty)
    return parts


def penalty_edges(disc: Discretization, which: str = "interface") -> np.ndarray:
    """Interior edges carrying penalty terms.

    "interface": cut edges plus edges shared by two interface elements;
    "cut": cut edges only.
    """
    mesh = disc.mesh
    cut = set(disc.cls.cut_edges(mesh).tolist())
    if which == "interface":
        ee = mesh.edge_elements
        both = (ee[:, 1] >= 0) & (disc.labels[ee[:, 0]] == INTERFACE) & (disc.labels[np.maximum(ee[:, 1], 0)] == INTERFACE)
        cut |= set(np.flatnonzero(both).tolist())
    elif which != "cut":
        raise ValueError(f"unknown penalty edge set {which!r}")
    edges = [g for g in sorted(cut) if mesh.edge_elements[g, 1] >= 0]
    return np.array(edges, dtype=np.int64)


def _edge_subsegments(disc: Discretization, g: int):
    """Pieces of edge g (global orientation) with the material side of each."""
    mesh = disc.mesh
    a, b = mesh.edges[g]
    pa, pb = mesh.nodes[a], mesh.nodes[b]
    sa, sb = disc.cls.node_side[a], disc.cls.node_side[b]
    r = disc.cls.edge_ratio[g]
    if np.isfinite(r) and 0.0 < r < 1.0:
        X = pa + r * (pb - pa)
        return [(pa, X, sa), (X, pb, sb)]
    return [(pa, pb, sa if sa == sb else (sa if r >= 1.0 else sb))]


def penalty_local(disc: Discretization, g: int, T1: int, T2: int, c0: float, r: float, h: float, degree: int = 4,
                  consistency: bool = True):
    """6x6 block (rows: test, cols: trial) on edge g and the 6 global DOFs.

    The jump uses the tangent that is counter-clockwise for T1, so
    exchanging T1 and T2 leaves the block unchanged.
    """
    mesh = disc.mesh
    coeff = disc.coeff
    sigma = c0 * max(coeff.beta_minus, coeff.beta_plus) / h**r
    a, b = mesh.edges[g]
    t_glob = mesh.nodes[b] - mesh.nodes[a]
    t_glob = t_glob / np.linalg.norm(t_glob)
    le1 = int(np.flatnonzero(mesh.elem_edges[T1] == g)[0])
    t = mesh.elem_signs[T1, le1] * t_glob
    dm = disc.dofmap
    dofs = np.concatenate([dm.elem_dofs[T1], dm.elem_dofs[T2]])
    signs = np.concatenate([dm.elem_signs[T1], dm.elem_signs[T2]]).astype(float)
    orient = np.array([1.0, 1.0, 1.0, -1.0, -1.0, -1.0])
    block = np.zeros((6, 6))
    for p0, p1, side in _edge_subsegments(disc, g):
        rule = segment_rule(degree, p0, p1)
        if rule.measure == 0.0:
            continue
        jumps = []
        avgs = []
        for T in (T1, T2):
            C = disc.piece(T, side)
            mu = coeff.mu(side) if disc.is_interface(T) else coeff.mu(disc.element_side(T))
            jumps.append(nd_eval(C[:, None, :], rule.points[None]) @ t)  # (3, m)
            avgs.append(-2.0 * C[:, 2] / mu * 0.5)
        J = np.concatenate(jumps) * (signs * orient)[:, None]
        Av = np.concatenate(avgs) * signs
        w = rule.weights
        Jint = J @ w  # int [phi_q . t]
        block += sigma * (J * w) @ J.T
        if consistency:
            block -= np.outer(Jint, Av) + np.outer(Av, Jint)
    return block, dofs


def assemble_penalty(disc: Discretization, penalty: PenaltySettings = PenaltySettings(), swap: bool = False):
    n = disc.dofmap.n_dofs
    h = disc.mesh.h
    rows, cols, vals = [], [], []
    for g in penalty_edges(disc, penalty.edges):
        T1, T2 = disc.mesh.edge_elements[g]
        if swap:
            T1, T2 = T2, T1
        block, dofs = penalty_local(disc, int(g), int(T1), int(T2), penalty.c0, penalty.r, h,
                                    consistency=penalty.consistency)
        rows.append(np.repeat(dofs, 6))
        cols.append(np.tile(dofs, 6))
        vals.append(block.ravel())
    if not rows:
        return sp.csr_matrix((n, n))
    return sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)).tocsr()


# ---------------------------------------------------------------------------
# load vector and boundary conditions


def assemble_load(disc: Discretization, scheme: str, source, quad: QuadSettings = QuadSettings()) -> np.ndarray:
    """``int f . v_i`` over all test functions.

    ``source(X, side)`` evaluates the piecewise right-hand side with an
    explicit side.  Interface elements use the signed cells between the
    chord and the refined interface polyline.
    """
    _, test_space = _spaces(scheme)
    dm = disc.dofmap
    F = np.zeros(dm.n_dofs)
    iface_elems = np.array(sorted(disc.bases), dtype=np.int64)
    bulk = np.setdiff1d(np.arange(disc.mesh.n_elements), iface_elems)
    pts, w = triangle_rules_batch(quad.assembly_degree, disc.tris[bulk])
    sides = disc.labels[bulk]
    fv = np.empty_like(pts)
    for s in (MINUS, PLUS):
        mask = sides == s
        if mask.any():
            fv[mask] = source(pts[mask], s)
    S = disc.std[bulk]
    V = nd_eval(S[:, :, None, :], pts[:, None])
    loc = np.einsum("kq,kiqc,kqc->ki", w, V, fv) * dm.elem_signs[bulk]
    np.add.at(F, dm.elem_dofs[bulk].ravel(), loc.ravel())
    for k in iface_elems:
        k = int(k)
        loc = np.zeros(3)
        for cell in interface_cells(disc.cls.cuts[k], disc.iface, quad.n_sub):
            rule = polygon_rule(quad.assembly_degree, cell.polygon)
            if len(rule) == 0:
                continue
            V = nd_eval(disc.piece(k, cell.discrete_side, test_space)[:, None, :], rule.points[None])
            fvals = source(rule.points, cell.exact_side)
            loc += cell.weight * np.einsum("q,iqc,qc->i", rule.weights, V, fvals)
        np.add.at(F, dm.elem_dofs[k], loc * dm.elem_signs[k])
    return F


def assemble(disc: Discretization, scheme: str, source, quad: QuadSettings = QuadSettings(),
             penalty: PenaltySettings = PenaltySettings()) -> LinearSystem:
    parts = assemble_bilinear(disc, scheme, quad, penalty)
    A = parts["curl"] + parts["mass"]
    if "penalty" in parts:
        A = A + parts["penalty"]
    return LinearSystem(A.tocsr(), assemble_load(disc, scheme, source, quad), parts)


def apply_dirichlet(system: LinearSystem, dofmap: DofMap, values: np.ndarray | None = None) -> LinearSystem:
    """Replace boundary rows by identity rows.

    ``values`` holds prescribed DOFs for every edge (only boundary entries
    are read); ``None`` means homogeneous data.  Known columns are moved to
    the right-hand side so the interior block is untouched.
    """
    A = system.matrix.tocsr()
    n = A.shape[0]
    bnd = dofmap.boundary
    g = np.zeros(n)
    if values is not None:
        g[bnd] = np.asarray(values)[bnd]
    rhs = system.rhs - A @ g
    keep = np.ones(n)
    keep[bnd] = 0.0
    Dk = sp.diags(keep)
    A = (Dk @ A @ Dk + sp.diags(1.0 - keep)).tocsr()
    A.eliminate_zeros()
    rhs[bnd] = g[bnd]
    return LinearSystem(A, rhs, system.parts)
