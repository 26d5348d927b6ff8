"""Conjugate-gradient solver for the 5-point Laplacian on uniform grids.

Two boundary variants back the rest of the pipeline: Dirichlet on node
fields (stream function) and pure Neumann on cell fields (pressure).
Both solve A x = b with A the *negated* Laplacian, so A is symmetric
positive (semi-)definite.

Reductions are plain numpy dot products over arrays in [j, i] order, so
results are deterministic for a given numpy build.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fields import CELL, NODE, Grid, ScalarField

DEFAULT_TOL = 1e-10


@dataclass
class SolveStats:
    iterations: int
    final_residual: float  # relative 2-norm
    converged: bool
    residual_history: list = field(default_factory=list, repr=False)


def default_max_iter(grid: Grid) -> int:
    return 10 * grid.nx * grid.ny


def cg(apply_a, b: np.ndarray, tol: float, max_iter: int, precond=None):
    """Conjugate gradients on A x = b for SPD apply_a.

    Keeps the best iterate seen so far (smallest true residual), so the
    reported residual history is non-increasing and the returned solution
    matches the final reported residual.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    bnorm = float(np.linalg.norm(b))
    x = np.zeros_like(b)
    if bnorm == 0.0:
        return x, SolveStats(0, 0.0, True, [0.0])

    r = b.copy()
    z = precond(r) if precond is not None else r
    p = z.copy()
    rz = float(np.vdot(r, z))
    best_x = x.copy()
    best_res = float(np.linalg.norm(r))
    history = [best_res / bnorm]

    it = 0
    while best_res / bnorm > tol and it < max_iter:
        ap = apply_a(p)
        pap = float(np.vdot(p, ap))
        if pap <= 0:
            break  # lost positive definiteness (round-off); keep best iterate
        alpha = rz / pap
        x = x + alpha * p
        r = r - alpha * ap
        res = float(np.linalg.norm(r))
        if res < best_res:
            best_res = res
            best_x = x.copy()
        history.append(best_res / bnorm)
        z = precond(r) if precond is not None else r
        rz_new = float(np.vdot(r, z))
        p = z + (rz_new / rz) * p
        rz = rz_new
        it += 1

    rel = best_res / bnorm
    return best_x, SolveStats(it, rel, rel <= tol, history)


def _neg_laplacian_dirichlet(x: np.ndarray, dx: float) -> np.ndarray:
    """-Laplacian of interior node values with zero Dirichlet boundary."""
    out = 4.0 * x
    out[1:, :] -= x[:-1, :]
    out[:-1, :] -= x[1:, :]
    out[:, 1:] -= x[:, :-1]
    out[:, :-1] -= x[:, 1:]
    return out / dx**2


def _neg_laplacian_neumann(x: np.ndarray, dx: float) -> np.ndarray:
    """-Laplacian of cell values with zero-flux (mirror) boundary."""
    out = 4.0 * x
    out[1:, :] -= x[:-1, :]
    out[0, :] -= x[0, :]
    out[:-1, :] -= x[1:, :]
    out[-1, :] -= x[-1, :]
    out[:, 1:] -= x[:, :-1]
    out[:, 0] -= x[:, 0]
    out[:, :-1] -= x[:, 1:]
    out[:, -1] -= x[:, -1]
    return out / dx**2


def solve_dirichlet_node(
    rhs: ScalarField,
    tol: float = DEFAULT_TOL,
    max_iter: int | None = None,
    jacobi: bool = False,
):
    """Solve -lap(x) = rhs over interior nodes with x = 0 on the boundary."""
    if rhs.siting != NODE:
        raise ValueError("dirichlet solve expects a node field")
    if not np.all(np.isfinite(rhs.data)):
        raise ValueError("rhs must be finite")
    g = rhs.grid
    if max_iter is None:
        max_iter = default_max_iter(g)
    b = rhs.data[1:-1, 1:-1]
    apply_a = lambda x: _neg_laplacian_dirichlet(x, g.dx)
    precond = (lambda r: r * (g.dx**2 / 4.0)) if jacobi else None
    xi, stats = cg(apply_a, b, tol, max_iter, precond)
    out = ScalarField.zeros(g, NODE)
    out.data[1:-1, 1:-1] = xi
    return out, stats


def solve_neumann_cell(
    rhs: ScalarField,
    tol: float = DEFAULT_TOL,
    max_iter: int | None = None,
    jacobi: bool = False,
):
    """Solve -lap(x) = rhs on cells with zero-flux walls.

    The rhs is mean-shifted onto the operator's range and the returned
    solution is pinned to zero mean (constants are the null space).
    """
    if rhs.siting != CELL:
        raise ValueError("neumann solve expects a cell field")
    if not np.all(np.isfinite(rhs.data)):
        raise ValueError("rhs must be finite")
    g = rhs.grid
    if max_iter is None:
        max_iter = default_max_iter(g)
    b = rhs.data - rhs.data.mean()
    apply_a = lambda x: _neg_laplacian_neumann(x, g.dx)
    precond = None
    if jacobi:
        diag = _neumann_diagonal(g)
        precond = lambda r: r / diag
    x, stats = cg(apply_a, b, tol, max_iter, precond)
    x = x - x.mean()
    return ScalarField(g, CELL, x), stats


def _neumann_diagonal(g: Grid) -> np.ndarray:
    d = np.full((g.ny, g.nx), 4.0)
    d[0, :] -= 1.0
    d[-1, :] -= 1.0
    d[:, 0] -= 1.0
    d[:, -1] -= 1.0
    return d / g.dx**2


def dense_dirichlet_matrix(g: Grid) -> np.ndarray:
    """Dense -Laplacian over interior nodes; small-grid oracle for tests."""
    n = (g.nx - 1) * (g.ny - 1)
    a = np.zeros((n, n))
    e = np.zeros(((g.ny - 1), (g.nx - 1)))
    for k in range(n):
        e.flat[k] = 1.0
        a[:, k] = _neg_laplacian_dirichlet(e, g.dx).ravel()
        e.flat[k] = 0.0
    return a


def dense_neumann_matrix(g: Grid) -> np.ndarray:
    """Dense -Laplacian over cells with zero-flux walls; test oracle."""
    n = g.nx * g.ny
    a = np.zeros((n, n))
    e = np.zeros((g.ny, g.nx))
    for k in range(n):
        e.flat[k] = 1.0
        a[:, k] = _neg_laplacian_neumann(e, g.dx).ravel()
        e.flat[k] = 0.0
    return a
