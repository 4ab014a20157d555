"""Sparse solves for the (generally non-symmetric) edge-element systems."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import LinearSystem


class SolverBreakdown(RuntimeError):
    """Singular factorisation or stagnated iteration."""


@dataclass
class SolveReport:
    x: np.ndarray
    residual: float
    iterations: int
    method: str


def relative_residual(A, x, b) -> float:
    nb = np.linalg.norm(b)
    r = np.linalg.norm(A @ x - b)
    return float(r / nb) if nb > 0 else float(r)


def solve(system: LinearSystem | tuple, tol: float = 1e-10, method: str = "direct", max_iter: int = 2000) -> SolveReport:
    """Solve ``A x = b`` and check ``||Ax - b|| / ||b|| <= tol``."""
    if isinstance(system, LinearSystem):
        A, b = system.matrix, system.rhs
    else:
        A, b = system
    A = sp.csc_matrix(A)
    b = np.asarray(b, dtype=float)
    if A.shape[0] != A.shape[1] or A.shape[0] != b.shape[0]:
        raise ValueError(f"incompatible system shapes {A.shape} and {b.shape}")
    if not np.any(b):
        return SolveReport(np.zeros_like(b), 0.0, 0, method)
    iters = 0
    if method == "direct":
        try:
            lu = spla.splu(A)
        except RuntimeError as exc:
            raise SolverBreakdown(str(exc)) from exc
        x = lu.solve(b)
        # one step of iterative refinement guards against mild ill-conditioning
        if relative_residual(A, x, b) > tol:
            x = x + lu.solve(b - A @ x)
    elif method == "iterative":
        try:
            ilu = spla.spilu(A, drop_tol=1e-5, fill_factor=20)
        except RuntimeError as exc:
            raise SolverBreakdown(str(exc)) from exc
        M = spla.LinearOperator(A.shape, ilu.solve)
        count = [0]

        def cb(_):
            count[0] += 1

        x, info = spla.gmres(A, b, rtol=tol * 0.1, atol=0.0, restart=100, maxiter=max_iter, M=M,
                             callback=cb, callback_type="pr_norm")
        iters = count[0]
        if info < 0:
            raise SolverBreakdown(f"gmres breakdown (info={info})")
    else:
        raise ValueError(f"unknown solver method {method!r}")
    if not np.all(np.isfinite(x)):
        raise SolverBreakdown("non-finite solution")
    res = relative_residual(A, x, b)
    if res > tol:
        raise SolverBreakdown(f"relative residual {res:.3e} exceeds tolerance {tol:.1e}")
    return SolveReport(x, res, iters, method)
