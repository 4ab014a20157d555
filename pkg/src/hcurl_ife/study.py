"""Run configuration, per-level pipeline and CSV output for convergence studies."""
from __future__ import annotations

import ast
import csv
import math
import operator
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis import ErrorReport, ManufacturedSolution, convergence_rates, hcurl_error
from .assembly import SCHEMES, Discretization, PenaltySettings, QuadSettings, apply_dirichlet, assemble
from .geometry import Circle
from .ife import CoefficientPair
from .mesh import build_uniform_triangulation
from .nedelec import interpolate
from .solve import solve

OUTPUT_ENV = "HCURL_IFE_OUTPUT_DIR"
CSV_COLUMNS = ("N", "h", "dofs", "e0", "e0_rate", "e1", "e1_rate", "l2_part", "curl_part", "solve_residual")


class ConfigError(ValueError):
    pass


_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
        ast.Div: operator.truediv, ast.Pow: operator.pow, ast.USub: operator.neg, ast.UAdd: operator.pos}


def parse_number(text: str) -> float:
    """Evaluate a small arithmetic expression such as ``1/10`` or ``pi/5``."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
            return _OPS[type(node.op)](ev(node.operand))
        raise ConfigError(f"not a number: {text!r}")

    try:
        return float(ev(ast.parse(text.strip(), mode="eval")))
    except (SyntaxError, ZeroDivisionError) as exc:
        raise ConfigError(f"not a number: {text!r}") from exc


def _numbers(text: str) -> list[float]:
    return [parse_number(t) for t in text.split(",") if t.strip()]


@dataclass
class RunConfig:
    sizes: list = field(default_factory=lambda: [8, 16, 32, 64, 128])
    bounds: tuple = (-1.0, 1.0, -1.0, 1.0)
    radius: float = math.pi / 5
    center: tuple = (0.0, 0.0)
    coeff: CoefficientPair = field(default_factory=lambda: CoefficientPair(1.0, 0.1, 1.0, 10.0))
    schemes: tuple = ("pg",)
    k2: float = 20.0
    r2: float = 1.0
    penalty: PenaltySettings = field(default_factory=PenaltySettings)
    quad: QuadSettings = field(default_factory=QuadSettings)
    solver_method: str = "direct"
    solver_tol: float = 1e-10
    solver_max_iter: int = 2000
    error_split: str = "curved"
    snap_tol: float = 1e-8
    interpolation: bool = False
    diagnose_n: int = 16
    diagnose_random: int = 10_000
    output_dir: str = "results"

    def validate(self) -> "RunConfig":
        if not self.sizes or any(int(n) != n or n < 1 for n in self.sizes):
            raise ConfigError("mesh.sizes must be positive integers")
        if any(b <= a for a, b in zip(self.sizes[:-1], self.sizes[1:])):
            raise ConfigError("mesh.sizes must be strictly increasing")
        x0, x1, y0, y1 = self.bounds
        if not (x1 > x0 and y1 > y0):
            raise ConfigError("mesh.bounds must describe a non-degenerate rectangle")
        for s in self.schemes:
            if s not in SCHEMES:
                raise ConfigError(f"scheme must be one of {SCHEMES}, got {s!r}")
        if self.radius <= 0:
            raise ConfigError("circle.radius must be positive")
        if self.error_split not in ("curved", "chord"):
            raise ConfigError("error.split must be curved or chord")
        if self.solver_method not in ("direct", "iterative"):
            raise ConfigError("solver.method must be direct or iterative")
        if self.penalty.edges not in ("interface", "cut"):
            raise ConfigError("penalty.edges must be interface or cut")
        return self

    @property
    def interface(self) -> Circle:
        return Circle(self.radius, self.center)

    @property
    def exact(self) -> ManufacturedSolution:
        return ManufacturedSolution(self.coeff, self.k2, self.radius, self.r2)

    def resolved_output_dir(self) -> Path:
        return Path(os.environ.get(OUTPUT_ENV) or self.output_dir)


def parse_config(text: str) -> RunConfig:
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        raw[key] = value
    cfg = RunConfig()
    mu = [cfg.coeff.mu_minus, cfg.coeff.mu_plus]
    beta = [cfg.coeff.beta_minus, cfg.coeff.beta_plus]
    pen = dict(c0=cfg.penalty.c0, r=cfg.penalty.r, edges=cfg.penalty.edges)
    quad = dict(assembly_degree=cfg.quad.assembly_degree, error_degree=cfg.quad.error_degree, n_sub=cfg.quad.n_sub)

    def as_int(v):
        x = parse_number(v)
        if x != int(x):
            raise ConfigError(f"expected an integer, got {v!r}")
        return int(x)

    try:
        for key, v in raw.items():
            if key == "mesh.sizes":
                cfg.sizes = [as_int(t) for t in v.split(",") if t.strip()]
            elif key == "mesh.n":
                cfg.sizes = [as_int(v)]
            elif key == "mesh.bounds":
                b = _numbers(v)
                if len(b) != 4:
                    raise ConfigError("mesh.bounds needs four numbers")
                cfg.bounds = tuple(b)
            elif key == "interface":
                if v != "circle":
                    raise ConfigError(f"unsupported interface {v!r}")
            elif key == "circle.radius":
                cfg.radius = parse_number(v)
            elif key == "circle.center":
                c = _numbers(v)
                if len(c) != 2:
                    raise ConfigError("circle.center needs two numbers")
                cfg.center = tuple(c)
            elif key in ("coeff.mu_minus", "coeff.mu_plus"):
                mu[key.endswith("plus")] = parse_number(v)
            elif key in ("coeff.beta_minus", "coeff.beta_plus"):
                beta[key.endswith("plus")] = parse_number(v)
            elif key == "scheme":
                cfg.schemes = tuple(t.strip().lower() for t in v.split(",") if t.strip())
            elif key in ("exact.k2", "exact.r2"):
                setattr(cfg, key.split(".")[1], parse_number(v))
            elif key in ("penalty.c0", "penalty.r"):
                pen[key.split(".")[1]] = parse_number(v)
            elif key == "penalty.edges":
                pen["edges"] = v
            elif key in ("quad.assembly_degree", "quad.error_degree", "quad.n_sub"):
                quad[key.split(".")[1]] = as_int(v)
            elif key == "solver.method":
                cfg.solver_method = v
            elif key == "solver.tol":
                cfg.solver_tol = parse_number(v)
            elif key == "solver.max_iter":
                cfg.solver_max_iter = as_int(v)
            elif key == "error.split":
                cfg.error_split = v
            elif key == "geometry.snap_tol":
                cfg.snap_tol = parse_number(v)
            elif key == "study.interpolation":
                cfg.interpolation = v.lower() in ("1", "true", "yes", "on")
            elif key == "diagnose.n":
                cfg.diagnose_n = as_int(v)
            elif key == "diagnose.random_elements":
                cfg.diagnose_random = as_int(v)
            elif key == "output.dir":
                cfg.output_dir = v
            else:
                raise ConfigError(f"unknown key {key!r}")
        cfg.coeff = CoefficientPair(mu[0], mu[1], beta[0], beta[1])
        cfg.penalty = PenaltySettings(**pen)
        cfg.quad = QuadSettings(**quad)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
    return cfg.validate()


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    return parse_config(text)


# ---------------------------------------------------------------------------
# pipeline


@dataclass
class LevelResult:
    n: int
    scheme: str
    error: ErrorReport
    residual: float
    solution: np.ndarray


def discretize(cfg: RunConfig, n: int) -> Discretization:
    mesh = build_uniform_triangulation(n, cfg.bounds)
    return Discretization(mesh, cfg.interface, cfg.coeff, cfg.snap_tol)


def solve_level(cfg: RunConfig, disc: Discretization, scheme: str) -> LevelResult:
    exact = cfg.exact
    system = assemble(disc, scheme, exact.f, cfg.quad, cfg.penalty)
    g = interpolate(exact.u_piecewise, disc.mesh, disc.cls)
    report = solve(apply_dirichlet(system, disc.dofmap, g), cfg.solver_tol, cfg.solver_method, cfg.solver_max_iter)
    err = hcurl_error(disc, report.x, exact, cfg.quad, split=cfg.error_split)
    return LevelResult(disc.mesh.n, scheme, err, report.residual, report.x)


def interpolation_level(cfg: RunConfig, disc: Discretization) -> LevelResult:
    exact = cfg.exact
    g = interpolate(exact.u_piecewise, disc.mesh, disc.cls)
    err = hcurl_error(disc, g, exact, cfg.quad, split=cfg.error_split)
    return LevelResult(disc.mesh.n, "interpolant", err, 0.0, g)


def run_study(cfg: RunConfig, progress=None) -> dict[str, list[LevelResult]]:
    """Solve every scheme on every mesh size; returns results per scheme."""
    out: dict[str, list[LevelResult]] = {s: [] for s in cfg.schemes}
    if cfg.interpolation:
        out["interpolant"] = []
    for n in cfg.sizes:
        disc = discretize(cfg, n)
        for s in cfg.schemes:
            out[s].append(solve_level(cfg, disc, s))
            if progress:
                progress(out[s][-1])
        if cfg.interpolation:
            out["interpolant"].append(interpolation_level(cfg, disc))
    return out


def _fmt(x) -> str:
    return "" if x is None else f"{x:.12e}"


def table_rows(results: list[LevelResult]) -> list[dict]:
    e0 = [r.error.e0 for r in results]
    e1 = [r.error.e1 for r in results]
    r0 = [None] + (convergence_rates(e0) if len(e0) > 1 else [])
    r1 = [None] + (convergence_rates(e1) if len(e1) > 1 else [])
    rows = []
    for r, a, b in zip(results, r0, r1):
        rows.append({
            "N": r.n, "h": r.error.h, "dofs": r.error.n_dofs, "e0": r.error.e0, "e0_rate": a,
            "e1": r.error.e1, "e1_rate": b, "l2_part": r.error.l2_part, "curl_part": r.error.curl_part,
            "solve_residual": r.residual,
        })
    return rows


def write_csv(path, results: list[LevelResult]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in table_rows(results):
            w.writerow([row["N"], _fmt(row["h"]), row["dofs"]] + [_fmt(row[c]) for c in CSV_COLUMNS[3:]])
    return path
