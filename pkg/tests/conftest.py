import numpy as np
import pytest

from smokeflow.fields import Grid, MacVelocity, ScalarField


@pytest.fixture
def grid64():
    return Grid(64, 64, 1.0 / 64)


def smooth_random_psi(grid: Grid, rng: np.random.Generator, modes: int = 4) -> ScalarField:
    """Random superposition of sine modes; zero on the boundary by construction."""
    xs = np.arange(grid.nx + 1) * grid.dx / grid.lx
    ys = np.arange(grid.ny + 1) * grid.dx / grid.ly
    data = np.zeros((grid.ny + 1, grid.nx + 1))
    for k in range(1, modes + 1):
        for m in range(1, modes + 1):
            c = rng.standard_normal()
            data += c * np.outer(np.sin(np.pi * m * ys), np.sin(np.pi * k * xs))
    return ScalarField(grid, "node", data)


def random_interior_psi(grid: Grid, rng: np.random.Generator, scale: float = 1.0) -> ScalarField:
    f = ScalarField.zeros(grid, "node")
    f.data[1:-1, 1:-1] = scale * rng.standard_normal((grid.ny - 1, grid.nx - 1))
    return f


def rotation_field(grid: Grid, cx: float = 0.5, cy: float = 0.5) -> MacVelocity:
    """Rigid rotation u = (-(y-cy), x-cx); linear, so MAC sampling is exact."""
    vel = MacVelocity.zeros(grid)
    uy = (np.arange(grid.ny) + 0.5) * grid.dx
    vel.u[:] = -(uy[:, None] - cy)
    vx = (np.arange(grid.nx) + 0.5) * grid.dx
    vel.v[:] = vx[None, :] - cx
    return vel


def sine_psi(grid: Grid) -> ScalarField:
    """psi(x, y) = sin(pi x) sin(pi y) sampled at nodes (zero boundary)."""
    xs = np.arange(grid.nx + 1) * grid.dx
    ys = np.arange(grid.ny + 1) * grid.dx
    return ScalarField(grid, "node", np.outer(np.sin(np.pi * ys), np.sin(np.pi * xs)))
