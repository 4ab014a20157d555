"""Manufactured solution, H(curl) error norms and observed rates."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assembly import Discretization, QuadSettings
from .geometry import MINUS, PLUS, Cell, Circle, interface_cells
from .ife import CoefficientPair
from .nedelec import nd_eval
from .quadrature import polygon_rule, triangle_rules_batch


@dataclass(frozen=True)
class ManufacturedSolution:
    """Circular-interface solution with all jump conditions satisfied.

    Inside the circle of radius r1:  u = mu-(-k1 g y, -k1 g x), g = r1^2 - s;
    outside: u = mu+(-k2 G y, -k2 G x), G = (r2^2 - s)(r1^2 - s), s = x^2 + y^2.
    """

    coeff: CoefficientPair
    k2: float = 20.0
    r1: float = np.pi / 5
    r2: float = 1.0

    @property
    def k1(self) -> float:
        return self.k2 * (self.r2**2 - self.r1**2)

    @property
    def interface(self) -> Circle:
        return Circle(self.r1)

    def side(self, X) -> np.ndarray:
        return self.interface.side(X)

    def u(self, X, side: int) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        x, y = X[..., 0], X[..., 1]
        s = x * x + y * y
        if side == MINUS:
            f = self.coeff.mu_minus * self.k1 * (self.r1**2 - s)
        else:
            f = self.coeff.mu_plus * self.k2 * (self.r2**2 - s) * (self.r1**2 - s)
        return np.stack([-f * y, -f * x], axis=-1)

    def scaled_curl(self, X, side: int) -> np.ndarray:
        """mu^{-1} curl u."""
        X = np.asarray(X, dtype=float)
        x, y = X[..., 0], X[..., 1]
        q = x * x - y * y
        if side == MINUS:
            return 2.0 * self.k1 * q
        s = x * x + y * y
        return -2.0 * self.k2 * q * (2.0 * s - self.r1**2 - self.r2**2)

    def curl(self, X, side: int) -> np.ndarray:
        return self.coeff.mu(side) * self.scaled_curl(X, side)

    def f(self, X, side: int) -> np.ndarray:
        """curl(mu^{-1} curl u) + beta u, with curl w = (dw/dy, -dw/dx)."""
        X = np.asarray(X, dtype=float)
        x, y = X[..., 0], X[..., 1]
        if side == MINUS:
            wx, wy = 4.0 * self.k1 * x, -4.0 * self.k1 * y
        else:
            s = x * x + y * y
            c = 2.0 * s - self.r1**2 - self.r2**2
            q = x * x - y * y
            wx = -2.0 * self.k2 * (2.0 * x * c + 4.0 * x * q)
            wy = -2.0 * self.k2 * (-2.0 * y * c + 4.0 * y * q)
        return np.stack([wy, -wx], axis=-1) + self.coeff.beta(side) * self.u(X, side)

    def evaluate(self, X):
        """(u, curl u, side) with the side chosen by the level set."""
        X = np.asarray(X, dtype=float)
        side = np.where(self.side(X) == MINUS, MINUS, PLUS)
        um, up = self.u(X, MINUS), self.u(X, PLUS)
        cm, cp = self.curl(X, MINUS), self.curl(X, PLUS)
        minus = side == MINUS
        return np.where(minus[..., None], um, up), np.where(minus, cm, cp), side

    def u_piecewise(self, X) -> np.ndarray:
        return self.evaluate(X)[0]

    def jump_residuals(self, n_points: int = 64) -> dict:
        """Max |[u.t]|, |[beta u.n]|, |[mu^-1 curl u]| at points on the circle."""
        th = 2 * np.pi * np.arange(n_points) / n_points
        n = np.stack([np.cos(th), np.sin(th)], axis=-1)
        t = np.stack([-n[:, 1], n[:, 0]], axis=-1)
        X = self.r1 * n
        um, up = self.u(X, MINUS), self.u(X, PLUS)
        b = self.coeff
        return {
            "tangential": float(np.max(np.abs(np.sum((up - um) * t, axis=1)))),
            "normal_flux": float(np.max(np.abs(np.sum((b.beta_plus * up - b.beta_minus * um) * n, axis=1)))),
            "curl": float(np.max(np.abs(self.scaled_curl(X, PLUS) - self.scaled_curl(X, MINUS)))),
        }


@dataclass
class ErrorReport:
    h: float
    n_dofs: int
    e0: float
    e1: float
    l2_part: float
    curl_part: float
    e1_l2_part: float
    e1_curl_part: float
    interface_area: float


def error_cells(disc: Discretization, k: int, split: str, n_sub: int):
    """Cells over which the exact and discrete fields are compared.

    ``curved``: the exact solution follows the true curve (signed slivers);
    ``chord``: both fields are split along the straight chord.
    """
    cut = disc.cls.cuts[k]
    if split == "curved":
        return interface_cells(cut, disc.iface, n_sub)
    if split == "chord":
        minus, plus = cut.polygons()
        return [Cell(minus, MINUS, MINUS, 1.0), Cell(plus, PLUS, PLUS, 1.0)]
    raise ValueError(f"unknown error split {split!r}")


def _sq_errors(disc: Discretization, u, exact: ManufacturedSolution, space: str, quad: QuadSettings,
               split: str = "curved"):
    """Per-element squared L2 and curl errors (ne,), (ne,)."""
    mesh = disc.mesh
    dm = disc.dofmap
    ne = mesh.n_elements
    l2 = np.zeros(ne)
    cu = np.zeros(ne)
    iface = np.array(sorted(disc.bases), dtype=np.int64)
    bulk = np.setdiff1d(np.arange(ne), iface)
    pts, w = triangle_rules_batch(quad.error_degree, disc.tris[bulk])
    coef = np.einsum("ki,kij->kj", dm.elem_signs[bulk] * u[dm.elem_dofs[bulk]], disc.std[bulk])
    uh = nd_eval(coef[:, None, :], pts)
    ch = -2.0 * coef[:, 2]
    sides = disc.labels[bulk]
    for s in (MINUS, PLUS):
        m = sides == s
        if not m.any():
            continue
        du = exact.u(pts[m], s) - uh[m]
        dc = exact.curl(pts[m], s) - ch[m, None]
        l2[bulk[m]] = np.einsum("kq,kqc->k", w[m], du * du)
        cu[bulk[m]] = np.einsum("kq,kq->k", w[m], dc * dc)
    for k in iface:
        k = int(k)
        a = b = 0.0
        for cell in error_cells(disc, k, split, quad.n_sub):
            rule = polygon_rule(quad.error_degree, cell.polygon)
            if len(rule) == 0:
                continue
            c = disc.local_field(u, k, cell.discrete_side, space)
            du = exact.u(rule.points, cell.exact_side) - nd_eval(c, rule.points)
            dc = exact.curl(rule.points, cell.exact_side) + 2.0 * c[2]
            a += cell.weight * float(rule.weights @ np.sum(du * du, axis=1))
            b += cell.weight * float(rule.weights @ (dc * dc))
        l2[k], cu[k] = a, b
    return l2, cu


def hcurl_error(disc: Discretization, u: np.ndarray, exact: ManufacturedSolution,
                quad: QuadSettings = QuadSettings(), space: str = "immersed",
                split: str = "curved") -> ErrorReport:
    """Global error e0 and interface-band error e1 of the discrete field ``u``.

    ``space`` selects the basis used to evaluate ``u`` on interface elements;
    ``split`` picks how the exact solution is divided inside them.
    """
    l2, cu = _sq_errors(disc, u, exact, space, quad, split)
    # signed cells may leave tiny negative round-off on near-exact fields
    l2 = np.maximum(l2, 0.0)
    cu = np.maximum(cu, 0.0)
    iface = disc.cls.interface_elements
    area = disc.cls.interface_area(disc.mesh)
    scale = 1.0 / np.sqrt(area) if area > 0 else 0.0
    L2i, Ci = l2[iface].sum(), cu[iface].sum()
    return ErrorReport(
        h=disc.mesh.h,
        n_dofs=disc.dofmap.n_dofs,
        e0=float(np.sqrt(l2.sum() + cu.sum())),
        e1=float(scale * np.sqrt(L2i + Ci)),
        l2_part=float(np.sqrt(l2.sum())),
        curl_part=float(np.sqrt(cu.sum())),
        e1_l2_part=float(scale * np.sqrt(L2i)),
        e1_curl_part=float(scale * np.sqrt(Ci)),
        interface_area=float(area),
    )


def convergence_rates(errors) -> list[float]:
    """log2 ratios of successive errors; accepts (h, e) pairs or bare errors."""
    errors = list(errors)
    if len(errors) < 2:
        raise ValueError("need at least two refinement levels")
    pairs = [(None, e) if np.isscalar(e) else tuple(e) for e in errors]
    rates = []
    for (h0, e0), (h1, e1) in zip(pairs[:-1], pairs[1:]):
        if h0 is None or h1 is None:
            rates.append(float(np.log2(e0 / e1)))
        else:
            rates.append(float(np.log(e0 / e1) / np.log(h0 / h1)))
    return rates
