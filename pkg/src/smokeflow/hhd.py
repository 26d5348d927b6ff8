"""Helmholtz-Hodge decomposition and stream-function extraction.

The discrete operators are chosen so that div(curl(psi)) vanishes
identically (telescoping on the staggered grid) and so that the
vorticity of curl(psi) equals the negated 5-point Laplacian of psi,
making the stream-function round trip exact up to solver tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .fields import CELL, NODE, MacVelocity, ScalarField
from .poisson import DEFAULT_TOL, SolveStats, solve_dirichlet_node, solve_neumann_cell


@dataclass
class Decomposition:
    psi: ScalarField
    grad_potential: ScalarField  # P, cell-sited
    curl_part: MacVelocity
    grad_part: MacVelocity
    harmonic: MacVelocity
    residual_norm: float
    psi_stats: SolveStats = field(repr=False, default=None)
    potential_stats: SolveStats = field(repr=False, default=None)


def divergence(vel: MacVelocity) -> ScalarField:
    """Discrete divergence at cell centers."""
    g = vel.grid
    div = (vel.u[:, 1:] - vel.u[:, :-1] + vel.v[1:, :] - vel.v[:-1, :]) / g.dx
    return ScalarField(g, CELL, div)


def vorticity(vel: MacVelocity) -> ScalarField:
    """Discrete curl of a MAC velocity on nodes; boundary nodes set to 0."""
    g = vel.grid
    w = ScalarField.zeros(g, NODE)
    # interior nodes only: faces on all four sides exist
    w.data[1:-1, 1:-1] = (
        vel.v[1:-1, 1:] - vel.v[1:-1, :-1] - vel.u[1:, 1:-1] + vel.u[:-1, 1:-1]
    ) / g.dx
    return w


def curl_velocity(psi: ScalarField) -> MacVelocity:
    """Divergence-free velocity from a node stream function."""
    if psi.siting != NODE:
        raise ValueError("stream function must be node-sited")
    g = psi.grid
    u = (psi.data[1:, :] - psi.data[:-1, :]) / g.dx
    v = -(psi.data[:, 1:] - psi.data[:, :-1]) / g.dx
    return MacVelocity(g, u, v)


def stream_function(vel: MacVelocity, tol: float = DEFAULT_TOL, max_iter: int | None = None):
    """Recover psi with psi = 0 on the boundary by a CG Poisson solve on -lap."""
    w = vorticity(vel)
    return solve_dirichlet_node(w, tol=tol, max_iter=max_iter)


def gradient_faces(p: ScalarField) -> MacVelocity:
    """Discrete gradient of a cell scalar at interior faces; boundary faces zero."""
    if p.siting != CELL:
        raise ValueError("gradient expects a cell field")
    g = p.grid
    out = MacVelocity.zeros(g)
    out.u[:, 1:-1] = (p.data[:, 1:] - p.data[:, :-1]) / g.dx
    out.v[1:-1, :] = (p.data[1:, :] - p.data[:-1, :]) / g.dx
    return out


def decompose(vel: MacVelocity, tol: float = DEFAULT_TOL) -> Decomposition:
    """Split vel into gradient, curl and harmonic parts (exact reassembly)."""
    g = vel.grid
    div = divergence(vel)
    # -lap(P) = -div(U)  <=>  lap(P) = div(U)
    p, p_stats = solve_neumann_cell(ScalarField(g, CELL, -div.data), tol=tol)
    grad_part = gradient_faces(p)
    psi, psi_stats = stream_function(vel, tol=tol)
    curl_part = curl_velocity(psi)
    harmonic = MacVelocity(
        g,
        vel.u - grad_part.u - curl_part.u,
        vel.v - grad_part.v - curl_part.v,
    )
    unorm = float(np.sqrt(np.sum(vel.u**2) + np.sum(vel.v**2)))
    hnorm = float(np.sqrt(np.sum(harmonic.u**2) + np.sum(harmonic.v**2)))
    residual = hnorm / max(unorm, np.finfo(float).eps)
    return Decomposition(
        psi=psi,
        grad_potential=p,
        curl_part=curl_part,
        grad_part=grad_part,
        harmonic=harmonic,
        residual_norm=residual,
        psi_stats=psi_stats,
        potential_stats=p_stats,
    )
