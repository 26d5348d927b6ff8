"""Incompressible 2D smoke solver: semi-Lagrangian advection, constant external
forces, optional guidance forcing toward a target velocity, pressure projection.

Step order is forces -> advect -> project (Stable-Fluids style); boundary
faces are re-zeroed after every stage so u.n = 0 holds exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from . import hhd
from .fields import CELL, Grid, MacVelocity, ScalarField, sample_scalar, sample_velocity
from .poisson import SolveStats, solve_neumann_cell

FORCE_GLOBAL = "global"
FORCE_DENSITY = "density"


class ProjectionError(RuntimeError):
    """Pressure solve failed to converge; carries the solver stats."""

    def __init__(self, stats: SolveStats):
        super().__init__(
            f"pressure projection did not converge: residual {stats.final_residual:.3e} "
            f"after {stats.iterations} iterations"
        )
        self.stats = stats


@dataclass(frozen=True)
class Emitter:
    x: float = 0.5
    y: float = 0.15
    r: float = 0.08
    rate: float = 1.0


@dataclass(frozen=True)
class SimParams:
    grid: Grid
    dt: float = 0.02
    rho: float = 1.0
    f_e: tuple = (0.0, 0.0)
    force_mode: str = FORCE_DENSITY
    guidance_gain: float = 0.0
    tol: float = 1e-10
    steps: int = 100
    emitter: Emitter = field(default_factory=Emitter)
    seed: int = 0

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.rho > 0:
            raise ValueError("rho must be positive")
        if self.guidance_gain < 0:
            raise ValueError("guidance_gain must be >= 0")
        if self.force_mode not in (FORCE_GLOBAL, FORCE_DENSITY):
            raise ValueError(f"unknown force_mode {self.force_mode!r}")

    @classmethod
    def from_json(cls, text: str) -> "SimParams":
        cfg = json.loads(text)
        grid_cfg = cfg.get("grid", {})
        grid = Grid(grid_cfg.get("nx", 64), grid_cfg.get("ny", 64), grid_cfg.get("dx", 1.0 / grid_cfg.get("nx", 64)))
        em = cfg.get("emitter", {})
        mode = cfg.get("force_mode", FORCE_DENSITY)
        if mode == "density-weighted":
            mode = FORCE_DENSITY
        return cls(
            grid=grid,
            dt=cfg.get("dt", 0.02),
            rho=cfg.get("rho", 1.0),
            f_e=tuple(cfg.get("f_e", (0.0, 0.0))),
            force_mode=mode,
            guidance_gain=cfg.get("guidance_gain", 0.0),
            tol=cfg.get("tol", 1e-10),
            steps=cfg.get("steps", 100),
            emitter=Emitter(
                em.get("x", 0.5), em.get("y", 0.15), em.get("r", 0.08), em.get("rate", 1.0)
            ),
            seed=cfg.get("seed", 0),
        )


@dataclass
class SimState:
    vel: MacVelocity
    density: ScalarField
    pressure: ScalarField
    time: float = 0.0
    step_index: int = 0
    cfl: float = 0.0  # advisory max|u|*dt/dx of the last step

    @classmethod
    def at_rest(cls, grid: Grid) -> "SimState":
        return cls(
            vel=MacVelocity.zeros(grid),
            density=ScalarField.zeros(grid, CELL),
            pressure=ScalarField.zeros(grid, CELL),
        )

    def copy(self) -> "SimState":
        return SimState(
            self.vel.copy(), self.density.copy(), self.pressure.copy(),
            self.time, self.step_index, self.cfl,
        )


def _face_positions(grid: Grid):
    dx = grid.dx
    ux = np.arange(grid.nx + 1) * dx
    uy = (np.arange(grid.ny) + 0.5) * dx
    gux, guy = np.meshgrid(ux, uy)
    vx = (np.arange(grid.nx) + 0.5) * dx
    vy = np.arange(grid.ny + 1) * dx
    gvx, gvy = np.meshgrid(vx, vy)
    return np.stack([gux, guy], -1), np.stack([gvx, gvy], -1)


def emit(state: SimState, params: SimParams) -> SimState:
    """Add density inside the circular emitter, clamped at 1."""
    em = params.emitter
    if em.rate <= 0 or em.r <= 0:
        return state
    out = state.copy()
    pos = params.grid.cell_centers()
    mask = (pos[..., 0] - em.x) ** 2 + (pos[..., 1] - em.y) ** 2 <= em.r**2
    out.density.data[mask] = np.minimum(out.density.data[mask] + em.rate * params.dt, 1.0)
    return out


def add_forces(state: SimState, params: SimParams, target: MacVelocity | None = None) -> SimState:
    """Apply external and guidance forces over one dt."""
    if target is not None and target.grid != params.grid:
        raise ValueError("target velocity grid does not match simulation grid")
    out = state.copy()
    fx, fy = params.f_e
    if fx != 0.0 or fy != 0.0:
        if params.force_mode == FORCE_GLOBAL:
            out.vel.u += params.dt * fx
            out.vel.v += params.dt * fy
        else:
            upos, vpos = _face_positions(params.grid)
            wu = np.clip(sample_scalar(state.density, upos), 0.0, 1.0)
            wv = np.clip(sample_scalar(state.density, vpos), 0.0, 1.0)
            out.vel.u += params.dt * fx * wu
            out.vel.v += params.dt * fy * wv
    if target is not None and params.guidance_gain > 0.0:
        k = params.dt * params.guidance_gain
        out.vel.u += k * (target.u - out.vel.u)
        out.vel.v += k * (target.v - out.vel.v)
    out.vel.zero_boundary()
    return out


def _backtrace(vel: MacVelocity, pos: np.ndarray, dt: float) -> np.ndarray:
    """Two-stage midpoint backtrace, clamped into the domain."""
    g = vel.grid
    mid = pos - 0.5 * dt * sample_velocity(vel, pos)
    mid[..., 0] = np.clip(mid[..., 0], 0.0, g.lx)
    mid[..., 1] = np.clip(mid[..., 1], 0.0, g.ly)
    src = pos - dt * sample_velocity(vel, mid)
    src[..., 0] = np.clip(src[..., 0], 0.0, g.lx)
    src[..., 1] = np.clip(src[..., 1], 0.0, g.ly)
    return src


def advect_scalar(f: ScalarField, vel: MacVelocity, dt: float) -> ScalarField:
    if not dt > 0:
        raise ValueError("dt must be positive")
    src = _backtrace(vel, f.grid.cell_centers(), dt)
    return ScalarField(f.grid, CELL, sample_scalar(f, src))


def advect_velocity(vel: MacVelocity, dt: float) -> MacVelocity:
    if not dt > 0:
        raise ValueError("dt must be positive")
    upos, vpos = _face_positions(vel.grid)
    u = sample_velocity(vel, _backtrace(vel, upos, dt))[..., 0]
    v = sample_velocity(vel, _backtrace(vel, vpos, dt))[..., 1]
    return MacVelocity(vel.grid, u, v).zero_boundary()


def project(vel: MacVelocity, params: SimParams):
    """Make vel divergence-free; returns (velocity, pressure, stats)."""
    g = vel.grid
    div = hhd.divergence(vel)
    # solve_neumann_cell solves -lap(q) = rhs; lap(q) = (rho/dt) div(u)
    rhs = ScalarField(g, CELL, -(params.rho / params.dt) * div.data)
    q, stats = solve_neumann_cell(rhs, tol=params.tol)
    if not stats.converged:
        raise ProjectionError(stats)
    grad = hhd.gradient_faces(q)
    out = MacVelocity(
        g,
        vel.u - (params.dt / params.rho) * grad.u,
        vel.v - (params.dt / params.rho) * grad.v,
    ).zero_boundary()
    return out, q, stats


def step(state: SimState, params: SimParams, target: MacVelocity | None = None) -> SimState:
    """One full step: emit -> forces -> advect velocity -> project -> advect density."""
    s = emit(state, params)
    s = add_forces(s, params, target)
    s.vel = advect_velocity(s.vel, params.dt)
    s.vel, s.pressure, _ = project(s.vel, params)
    s.density = advect_scalar(s.density, s.vel, params.dt)
    s.time += params.dt
    s.step_index += 1
    s.cfl = s.vel.max_speed() * params.dt / params.grid.dx
    return s


def run(params: SimParams, target: MacVelocity | None = None, on_step=None) -> SimState:
    """Run params.steps steps from rest; on_step(state) is called after each."""
    state = SimState.at_rest(params.grid)
    for _ in range(params.steps):
        state = step(state, params, target)
        if on_step is not None:
            on_step(state)
    return state
