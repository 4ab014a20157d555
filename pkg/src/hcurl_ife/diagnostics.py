"""Structural checks on local IFE spaces and assembled systems."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assembly import Discretization, QuadSettings, assemble_bilinear
from .geometry import MINUS, PLUS, LevelSetInterface, synthetic_cut
from .ife import (
    CoefficientPair,
    build_local_basis,
    ct_apply,
    ct_inverse,
    curl_closed_form,
    exact_sequence_residual,
    geometric_inequalities,
    local_infsup_eigs,
    translate_cut,
    unisolvence_margin,
)
from .mesh import MeshTopology, build_uniform_triangulation
from .nedelec import nd_eval, standard_basis
from .quadrature import polygon_rule

INFSUP_LAMBDA1_MIN = (5.0 - 3.0 * np.sqrt(3.0)) / 8.0
INFSUP_CRITICAL_CONTRAST = 1.0 + 8.0 / (3.0 * np.sqrt(3.0) - 5.0)

TOLERANCES = {
    "kronecker": 1e-11,
    "tangential_continuity": 1e-12,
    "normal_flux_continuity": 1e-12,
    "curl_identity": 1e-12,
    "ct_round_trip": 1e-13,
    "exact_sequence": 1e-10,
    "pg_curl_equals_galerkin": 1e-12,
    "infsup_eigenvalue_range": 1e-12,
    "geometric_inequality_check": 0.0,
    "ife_equals_standard": 1e-12,
}


@dataclass
class CheckResult:
    name: str
    worst: float
    tol: float
    passed: bool
    detail: str = ""

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"{flag} {self.name}: worst={self.worst:.3e} tol={self.tol:.1e} {self.detail}".rstrip()


def _check(name, worst, detail="", tol=None):
    tol = TOLERANCES[name] if tol is None else tol
    return CheckResult(name, float(worst), tol, bool(worst <= tol), detail)


def _rel(x, scale):
    return float(x) / max(float(scale), 1e-300)


# ---------------------------------------------------------------------------
# single element


def element_residuals(cut, coeff: CoefficientPair, n_points: int = 10, rng=None) -> dict:
    """Worst residual of each local identity on one interface element.

    Pointwise continuity residuals are relative to the largest shape-function
    value at the sample points; curl-type residuals are relative to the
    closed-form curl.  The identities are translation invariant, so they are
    measured with the origin at the element centroid; this keeps round-off of
    the global-coordinate representation out of the residuals.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    cut = translate_cut(cut, -cut.centroid)
    basis = build_local_basis(cut, coeff)
    out = {}
    out["kronecker"] = float(np.max(np.abs(basis.dof_values() - np.eye(3))))

    s = (np.arange(n_points) + 0.5) / n_points
    P = cut.D + s[:, None] * (cut.E - cut.D)
    vm = nd_eval(basis.minus[:, None, :], P[None])
    vp = nd_eval(basis.plus[:, None, :], P[None])
    scale = max(np.abs(vm).max(), np.abs(vp).max())
    out["tangential_continuity"] = _rel(np.abs((vp - vm) @ cut.tangent).max(), scale)

    n = cut.normal
    fm = coeff.beta_minus * nd_eval(basis.minus, cut.Xm) @ n
    fp = coeff.beta_plus * nd_eval(basis.plus, cut.Xm) @ n
    out["normal_flux_continuity"] = _rel(np.abs(fp - fm).max(), max(coeff.beta_minus, coeff.beta_plus) * scale)

    c0 = curl_closed_form(cut, coeff)
    out["curl_identity"] = _rel(np.abs(basis.scaled_curl() - c0).max(), abs(c0))

    v = rng.standard_normal(3)
    out["ct_round_trip"] = _rel(np.abs(ct_inverse(cut, ct_apply(cut, v, coeff), coeff) - v).max(), np.abs(v).max())

    out["exact_sequence"] = exact_sequence_residual(cut, coeff, edge_basis=basis)

    # local curl blocks: standard test vs immersed test
    phi = standard_basis(cut.vertices)
    pg = np.zeros((3, 3))
    gal = np.zeros((3, 3))
    for side, poly in zip((MINUS, PLUS), cut.polygons()):
        rule = polygon_rule(1, poly)
        if len(rule) == 0:
            continue
        cu = -2.0 * basis.piece(side)[:, 2]
        cphi = -2.0 * phi[:, 2]
        pg += rule.measure / coeff.mu(side) * np.outer(cphi, cu)
        gal += rule.measure / coeff.mu(side) * np.outer(cu, cu)
    out["pg_curl_equals_galerkin"] = _rel(np.abs(pg - gal).max(), np.abs(gal).max())

    lam_a, lam_b = unisolvence_margin(cut, coeff)
    rc = coeff if cut.apex_side == PLUS else coeff.swapped()
    out["unisolvence_a"] = lam_a - min(1.0, rc.mu_plus / rc.mu_minus)
    out["unisolvence_b"] = lam_b - min(1.0, rc.beta_minus / rc.beta_plus)

    # L-infinity size of psi_i against the standard basis on the same element
    pts = {MINUS: cut.polygons()[0], PLUS: cut.polygons()[1]}
    big = max(np.abs(nd_eval(basis.piece(s_)[:, None, :], pts[s_][None])).max() for s_ in (MINUS, PLUS) if len(pts[s_]))
    std = np.abs(nd_eval(phi[:, None, :], cut.vertices[None])).max()
    out["linf_ratio"] = big / std
    return out


EXPERIMENT_SETS = tuple(
    CoefficientPair(1.0, mu_p, 1.0, beta_p) for mu_p in (0.1, 0.01) for beta_p in (10.0, 100.0)
)


def random_right_cut(rng, contrast_range=None, coefficient_sets=EXPERIMENT_SETS):
    """Random rotated/scaled right triangle with a random cut and coefficients.

    Coefficients are drawn from ``coefficient_sets`` unless ``contrast_range``
    is given, in which case mu+ and beta+ are log-uniform in that range.
    """
    h = 10.0 ** rng.uniform(-3, 0)
    th = rng.uniform(0, 2 * np.pi)
    R = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
    ref = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    # right angle at a random vertex; stays counter-clockwise
    ref = np.roll(ref, int(rng.integers(3)), axis=0)
    tri = rng.uniform(-1, 1, 2) + h * ref @ R.T
    d, e = rng.uniform(1e-3, 1.0, 2)
    if contrast_range is None:
        coeff = coefficient_sets[int(rng.integers(len(coefficient_sets)))]
    else:
        lo, hi = np.log10(contrast_range)
        coeff = CoefficientPair(1.0, 10.0 ** rng.uniform(lo, hi), 1.0, 10.0 ** rng.uniform(lo, hi))
    cut = synthetic_cut(tri, int(rng.integers(3)), d, e, apex_side=int(rng.choice([MINUS, PLUS])))
    return cut, coeff


def random_element_suite(n: int = 10_000, seed: int = 0, contrast_range=None) -> dict:
    """Worst value of each element residual over ``n`` random cut elements."""
    rng = np.random.default_rng(seed)
    worst: dict = {}
    for _ in range(n):
        cut, coeff = random_right_cut(rng, contrast_range)
        res = element_residuals(cut, coeff, rng=rng)
        for k, v in res.items():
            if k.startswith("unisolvence"):
                worst[k] = min(worst.get(k, np.inf), v)
            else:
                worst[k] = max(worst.get(k, 0.0), v)
    return worst


def unisolvence_sweep(n: int = 10_000, seed: int = 0, contrast_range=(1e-3, 1e3)) -> float:
    """Smallest margin of the eigenvalue surrogates above their lower bounds."""
    rng = np.random.default_rng(seed)
    worst = np.inf
    for _ in range(n):
        cut, coeff = random_right_cut(rng, contrast_range)
        lam_a, lam_b = unisolvence_margin(cut, coeff)
        rc = coeff if cut.apex_side == PLUS else coeff.swapped()
        worst = min(worst, lam_a - min(1.0, rc.mu_plus / rc.mu_minus), lam_b - min(1.0, rc.beta_minus / rc.beta_plus))
    return float(worst)


# ---------------------------------------------------------------------------
# inf-sup and geometric checks on the reference element


def infsup_grid(n: int = 100, rho: float = 1.0, case: int = 1) -> dict:
    """Sweep (d, e) over an n x n grid of (0, 1]."""
    g = np.arange(1, n + 1) / n
    lam1 = np.empty((n, n))
    lam2 = np.empty((n, n))
    inner = np.empty((n, n))
    for i, d in enumerate(g):
        for j, e in enumerate(g):
            r = local_infsup_eigs(d, e, rho, case)
            lam1[i, j], lam2[i, j], inner[i, j] = r["lambda1"], r["lambda2"], r["minus_min"]
    viol = max(
        float(np.max(INFSUP_LAMBDA1_MIN - lam1)),
        float(np.max(lam1)),
        float(np.max(-lam2)),
        float(np.max(lam2 - 1.0)),
        0.0,
    )
    return {"lambda1_min": float(lam1.min()), "lambda2_max": float(lam2.max()),
            "violation": viol, "inner_min": float(inner.min())}


def geometric_violations(disc: Discretization) -> tuple[int, float]:
    """Count of cut elements breaking the geometric inequalities, and the worst margin."""
    bad = 0
    worst = np.inf
    for cut in disc.cls.cuts.values():
        dot, q = geometric_inequalities(cut)
        margin = min(dot, q, 1.0 - q)
        worst = min(worst, margin)
        if dot <= 0.0 or q < 0.0 or q > 1.0:
            bad += 1
    return bad, float(worst)


# ---------------------------------------------------------------------------
# mesh level


def mesh_residuals(disc: Discretization, quad: QuadSettings = QuadSettings()) -> dict:
    worst: dict = {}
    rng = np.random.default_rng(1)
    for cut in disc.cls.cuts.values():
        for k, v in element_residuals(cut, disc.coeff, rng=rng).items():
            if k.startswith("unisolvence"):
                worst[k] = min(worst.get(k, np.inf), v)
            else:
                worst[k] = max(worst.get(k, 0.0), v)
    pg = assemble_bilinear(disc, "pg", quad)["curl"]
    c = assemble_bilinear(disc, "c", quad)["curl"]
    diff = abs(pg - c).max() if (pg - c).nnz else 0.0
    worst["pg_curl_equals_galerkin_global"] = _rel(diff, abs(c).max())
    return worst


def ife_standard_gap(mesh: MeshTopology, iface: LevelSetInterface, mu: float = 1.0, beta: float = 1.0) -> float:
    """Max difference between IFE and standard shape functions with matched coefficients."""
    coeff = CoefficientPair(mu, mu, beta, beta)
    disc = Discretization(mesh, iface, coeff)
    gap = 0.0
    for k, basis in disc.bases.items():
        S = disc.std[k]
        scale = np.abs(S).max()
        gap = max(gap, np.abs(basis.minus - S).max() / scale, np.abs(basis.plus - S).max() / scale)
    return float(gap)


def run_checks(n: int, iface: LevelSetInterface, coeff: CoefficientPair, n_random: int = 10_000,
               bounds=(-1.0, 1.0, -1.0, 1.0), quad: QuadSettings = QuadSettings(), seed: int = 0) -> list[CheckResult]:
    """Full structural suite on an n x n mesh plus random synthetic elements."""
    mesh = build_uniform_triangulation(n, bounds)
    disc = Discretization(mesh, iface, coeff)
    results = []
    mres = mesh_residuals(disc, quad)
    rres = random_element_suite(n_random, seed) if n_random else {}
    for name in ("kronecker", "tangential_continuity", "normal_flux_continuity", "curl_identity",
                 "ct_round_trip", "exact_sequence", "pg_curl_equals_galerkin"):
        results.append(_check(name, mres[name], f"[mesh n={n}, {len(disc.bases)} interface elements]"))
        if rres:
            results.append(_check(name, rres[name], f"[{n_random} random elements]"))
    results.append(_check("pg_curl_equals_galerkin", mres["pg_curl_equals_galerkin_global"], "[global matrices]"))
    for key, src in (("mesh", mres), ("random", rres)):
        if src:
            m = min(src["unisolvence_a"], src["unisolvence_b"])
            results.append(CheckResult("unisolvence_bounds", -m, 0.0, m >= -1e-12, f"[{key}] min margin {m:.3e}"))
            results.append(CheckResult("shape_function_linf", src["linf_ratio"], 100.0, src["linf_ratio"] < 100.0,
                                       f"[{key}] max |psi| / max |phi|"))
    if n_random:
        m = unisolvence_sweep(n_random, seed)
        results.append(CheckResult("unisolvence_bounds", -m, 0.0, m >= -1e-12,
                                   f"[random, contrast 1e-3..1e3] min margin {m:.3e}"))
    a3 = infsup_grid(100)
    results.append(_check("infsup_eigenvalue_range", a3["violation"],
                          f"lambda1_min={a3['lambda1_min']:.6f} lambda2_max={a3['lambda2_max']:.6f}"))
    contrast = max(coeff.beta_plus / coeff.beta_minus, coeff.beta_minus / coeff.beta_plus)
    pos = infsup_grid(100, rho=contrast)["inner_min"]
    expected_positive = contrast < INFSUP_CRITICAL_CONTRAST
    results.append(CheckResult(
        "infsup_positivity_prediction", pos, 0.0, (pos > 0.0) == expected_positive,
        f"contrast={contrast:g} critical={INFSUP_CRITICAL_CONTRAST:.3f} min inner product "
        f"{'positive' if pos > 0 else 'non-positive'} as predicted" if (pos > 0.0) == expected_positive
        else f"contrast={contrast:g} unexpected sign",
    ))
    bad, margin = geometric_violations(disc)
    results.append(CheckResult("geometric_inequality_check", float(bad), 0.0, bad == 0, f"min margin {margin:.3e}"))
    results.append(_check("ife_equals_standard", ife_standard_gap(mesh, iface, coeff.mu_minus, coeff.beta_minus),
                          "[matched coefficients]"))
    return results
