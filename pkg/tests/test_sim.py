import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smokeflow import hhd, sim
from smokeflow.fields import CELL, Grid, MacVelocity, ScalarField

from conftest import smooth_random_psi


def make_params(grid, **kw):
    defaults = dict(grid=grid, dt=0.02, f_e=(0.0, 0.0), force_mode=sim.FORCE_GLOBAL,
                    emitter=sim.Emitter(rate=0.0))
    defaults.update(kw)
    return sim.SimParams(**defaults)


class TestForces:
    def test_identity_when_no_forces(self, grid64):
        params = make_params(grid64)
        state = sim.SimState.at_rest(grid64)
        state.vel.u[:, 1:-1] = 0.3
        out = sim.add_forces(state, params)
        assert np.array_equal(out.vel.u, state.vel.u)
        assert np.array_equal(out.vel.v, state.vel.v)

    def test_global_force_arithmetic(self, grid64):
        params = make_params(grid64, dt=0.1, f_e=(1.0, 0.0))
        out = sim.add_forces(sim.SimState.at_rest(grid64), params)
        assert np.all(out.vel.u[:, 1:-1] == pytest.approx(0.1, rel=1e-15))
        assert np.all(out.vel.u[:, 0] == 0) and np.all(out.vel.u[:, -1] == 0)
        assert np.all(out.vel.v == 0)

    def test_guidance_fixed_point(self, grid64):
        params = make_params(grid64, guidance_gain=3.0)
        state = sim.SimState.at_rest(grid64)
        state.vel.u[:, 1:-1] = 0.7
        target = state.vel.copy()
        out = sim.add_forces(state, params, target)
        assert np.array_equal(out.vel.u, state.vel.u)

    def test_grid_mismatch_rejected(self, grid64):
        params = make_params(grid64)
        other = MacVelocity.zeros(Grid(32, 32, 1.0 / 32))
        with pytest.raises(ValueError, match="grid"):
            sim.add_forces(sim.SimState.at_rest(grid64), params, other)

    def test_density_weighted_mode(self, grid64):
        params = make_params(grid64, f_e=(0.0, 1.0), force_mode=sim.FORCE_DENSITY, dt=0.1)
        state = sim.SimState.at_rest(grid64)
        out = sim.add_forces(state, params)
        assert np.all(out.vel.v == 0)  # no smoke, no force
        state.density.data[:] = 1.0
        out = sim.add_forces(state, params)
        assert np.all(out.vel.v[1:-1, :] == pytest.approx(0.1, rel=1e-15))


class TestAdvection:
    def test_zero_velocity_identity(self, grid64):
        rng = np.random.default_rng(0)
        f = ScalarField(grid64, CELL, rng.uniform(size=(64, 64)))
        out = sim.advect_scalar(f, MacVelocity.zeros(grid64), 0.02)
        assert np.array_equal(out.data, f.data)

    def test_constant_field_unchanged(self, grid64):
        f = ScalarField(grid64, CELL, np.full((64, 64), 0.6))
        vel = MacVelocity.zeros(grid64)
        vel.u[:, 1:-1] = 1.0
        out = sim.advect_scalar(f, vel, 0.02)
        assert np.max(np.abs(out.data - 0.6)) < 1e-15

    def test_blob_drifts_with_uniform_flow(self):
        g = Grid(64, 64, 1.0 / 64)
        pos = g.cell_centers()
        blob = np.exp(-(((pos[..., 0] - 0.3) ** 2 + (pos[..., 1] - 0.5) ** 2) / 0.01))
        f = ScalarField(g, CELL, blob)
        a = 0.5
        vel = MacVelocity.zeros(g)
        vel.u[:] = a  # leave boundary faces set: pure translation test field
        dt = 0.5 * g.dx / a  # CFL 0.5
        steps = 10

        def com(fld):
            w = fld.data.sum()
            return (fld.data * pos[..., 0]).sum() / w

        x0 = com(f)
        for _ in range(steps):
            f = sim.advect_scalar(f, vel, dt)
        drift = com(f) - x0
        assert abs(drift - a * dt * steps) < g.dx

    def test_max_principle(self, grid64):
        rng = np.random.default_rng(1)
        f = ScalarField(grid64, CELL, rng.standard_normal((64, 64)))
        vel = MacVelocity(grid64, rng.standard_normal((64, 65)), rng.standard_normal((65, 64)))
        out = sim.advect_scalar(f, vel, 0.05)
        eps = 1e-12
        assert out.data.min() >= f.data.min() - eps
        assert out.data.max() <= f.data.max() + eps


class TestProjection:
    def test_zero_velocity(self, grid64):
        params = make_params(grid64)
        vel, p, stats = sim.project(MacVelocity.zeros(grid64), params)
        assert np.all(vel.u == 0) and np.all(vel.v == 0)
        assert np.all(p.data == 0)

    def test_divergence_free_input_unchanged(self, grid64):
        rng = np.random.default_rng(2)
        vel = hhd.curl_velocity(smooth_random_psi(grid64, rng))
        params = make_params(grid64)
        out, _, _ = sim.project(vel, params)
        scale = max(vel.max_speed(), 1.0)
        assert np.max(np.abs(out.u - vel.u)) < 10 * params.tol * scale * 1e3
        assert np.max(np.abs(out.v - vel.v)) < 10 * params.tol * scale * 1e3

    def test_gradient_field_annihilated(self, grid64):
        rng = np.random.default_rng(3)
        q = ScalarField(grid64, CELL, rng.standard_normal((64, 64)))
        vel = hhd.gradient_faces(q)
        params = make_params(grid64)
        out, _, _ = sim.project(vel, params)
        assert np.max(np.abs(out.u)) < 10 * params.tol * vel.max_speed() * 1e3
        assert np.max(np.abs(out.v)) < 10 * params.tol * vel.max_speed() * 1e3

    def test_post_projection_divergence(self, grid64):
        rng = np.random.default_rng(4)
        vel = MacVelocity(grid64, rng.standard_normal((64, 65)), rng.standard_normal((65, 64)))
        vel.zero_boundary()
        params = make_params(grid64)
        out, _, _ = sim.project(vel, params)
        assert np.max(np.abs(hhd.divergence(out).data)) <= 1e-6

    def test_idempotence(self, grid64):
        rng = np.random.default_rng(5)
        vel = MacVelocity(grid64, rng.standard_normal((64, 65)), rng.standard_normal((65, 64)))
        vel.zero_boundary()
        params = make_params(grid64)
        once, _, _ = sim.project(vel, params)
        twice, _, _ = sim.project(once, params)
        scale = max(once.max_speed(), 1.0)
        assert np.max(np.abs(twice.u - once.u)) < 10 * params.tol * scale * 1e3
        assert np.max(np.abs(twice.v - once.v)) < 10 * params.tol * scale * 1e3

    def test_non_convergence_raises(self, grid64):
        rng = np.random.default_rng(6)
        vel = MacVelocity(grid64, rng.standard_normal((64, 65)), rng.standard_normal((65, 64)))
        vel.zero_boundary()
        params = make_params(grid64, tol=1e-14)
        import smokeflow.poisson as poisson

        orig = poisson.default_max_iter
        poisson.default_max_iter = lambda g: 1
        try:
            import smokeflow.sim as sim_mod

            with pytest.raises(sim.ProjectionError):
                sim_mod.project(vel, params)
        finally:
            poisson.default_max_iter = orig


class TestStep:
    def test_equilibrium_without_forcing(self, grid64):
        params = make_params(grid64)
        state = sim.SimState.at_rest(grid64)
        out = sim.step(state, params)
        assert np.all(out.vel.u == 0) and np.all(out.vel.v == 0)
        assert np.all(out.density.data == 0)
        assert out.step_index == 1

    def test_boundary_zero_after_step(self, grid64):
        params = make_params(
            grid64, f_e=(0.3, 1.0), force_mode=sim.FORCE_DENSITY,
            emitter=sim.Emitter(0.5, 0.2, 0.1, 1.0),
        )
        state = sim.SimState.at_rest(grid64)
        for _ in range(3):
            state = sim.step(state, params)
        assert np.all(state.vel.u[:, 0] == 0) and np.all(state.vel.u[:, -1] == 0)
        assert np.all(state.vel.v[0, :] == 0) and np.all(state.vel.v[-1, :] == 0)

    def test_guidance_contracts_toward_target(self, grid64):
        rng = np.random.default_rng(7)
        target = hhd.curl_velocity(smooth_random_psi(grid64, rng))
        params = make_params(grid64, guidance_gain=5.0)
        state = sim.SimState.at_rest(grid64)

        def dist(s):
            return np.sqrt(np.sum((s.vel.u - target.u) ** 2) + np.sum((s.vel.v - target.v) ** 2))

        d0 = dist(state)
        for _ in range(50):
            state = sim.step(state, params, target)
        assert dist(state) < d0

    def test_zero_gain_target_has_no_effect(self, grid64):
        rng = np.random.default_rng(8)
        target = hhd.curl_velocity(smooth_random_psi(grid64, rng))
        params = make_params(
            grid64, f_e=(0.2, 0.8), force_mode=sim.FORCE_DENSITY,
            emitter=sim.Emitter(0.5, 0.2, 0.1, 1.0), guidance_gain=0.0,
        )
        s1 = sim.SimState.at_rest(grid64)
        s2 = sim.SimState.at_rest(grid64)
        for _ in range(5):
            s1 = sim.step(s1, params, target)
            s2 = sim.step(s2, params, None)
        assert np.array_equal(s1.vel.u, s2.vel.u)
        assert np.array_equal(s1.vel.v, s2.vel.v)
        assert np.array_equal(s1.density.data, s2.density.data)

    def test_determinism(self, grid64):
        params = make_params(
            grid64, f_e=(0.1, 1.0), force_mode=sim.FORCE_DENSITY,
            emitter=sim.Emitter(0.4, 0.2, 0.1, 1.5),
        )
        runs = []
        for _ in range(2):
            state = sim.SimState.at_rest(grid64)
            for _ in range(10):
                state = sim.step(state, params)
            runs.append(state)
        assert np.array_equal(runs[0].vel.u, runs[1].vel.u)
        assert np.array_equal(runs[0].density.data, runs[1].density.data)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**31), dt=st.floats(min_value=1e-3, max_value=0.2))
def test_max_principle_fuzz(seed, dt):
    g = Grid(16, 16, 1.0 / 16)
    rng = np.random.default_rng(seed)
    f = ScalarField(g, CELL, rng.standard_normal((16, 16)))
    vel = MacVelocity(g, rng.standard_normal((16, 17)), rng.standard_normal((17, 16)))
    out = sim.advect_scalar(f, vel, dt)
    eps = 1e-12
    assert out.data.min() >= f.data.min() - eps
    assert out.data.max() <= f.data.max() + eps
