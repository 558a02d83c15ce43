import math

import numpy as np
import pytest

from degentaxis.diagnostics import DiagConfig
from degentaxis.errors import StepCollapse
from degentaxis.grid import GridSpec, ScalarField, integrate
from degentaxis.model import Params, State
from degentaxis.stepper import StepControl, run, stable_dt, step_euler


def homogeneous_state(n=32, u=1.0, v=1.0):
    g = GridSpec(n, n)
    return State(ScalarField.full(g, u), ScalarField.full(g, v), 0.0)


class TestStableDt:
    def test_formula_homogeneous(self):
        # u = v = 1, chi = 1, h = 1/64: all gradients vanish, so the binding
        # terms are h^2/4 (twice) and 1/max(u) = 1; dt = 0.4 * h^2/4
        s = homogeneous_state(64)
        c = StepControl(t_end=1.0, dt_max=10.0)
        dt = stable_dt(s, Params(chi=1.0), c)
        assert dt == pytest.approx(0.1 * (1 / 64) ** 2, rel=1e-12)
        assert dt == pytest.approx(2.44140625e-5, rel=1e-9)

    def test_degenerate_freeze(self):
        g = GridSpec(16, 16)
        s = State(ScalarField.full(g, 5.0), ScalarField.full(g, 0.0), 0.0)
        c = StepControl(t_end=1.0, dt_max=0.125)
        assert stable_dt(s, Params(chi=1.0), c) == 0.125

    def test_reaction_term_scaling(self):
        # make 1/max(u) binding by using a coarse grid (large h^2/4)
        g = GridSpec(2, 2, 100.0, 100.0)
        c = StepControl(t_end=1.0, dt_max=1e6, cfl_safety=1.0)
        dt1 = stable_dt(State(ScalarField.full(g, 2.0), ScalarField.full(g, 1e-12)), Params(chi=1.0), c)
        dt2 = stable_dt(State(ScalarField.full(g, 4.0), ScalarField.full(g, 1e-12)), Params(chi=1.0), c)
        assert dt1 / dt2 == pytest.approx(2.0, rel=1e-12)

    def test_clamped_into_range(self):
        s = homogeneous_state(64)
        c = StepControl(t_end=1.0, dt_min=1e-3, dt_max=2e-3)
        assert stable_dt(s, Params(chi=1.0), c) == 1e-3


class TestStepEuler:
    def test_homogeneous_reduction(self):
        s = homogeneous_state(8, u=2.0, v=0.5)
        p = Params(chi=1.0, ell=1.0)
        dt = 1e-3
        out = step_euler(s, p, dt)
        assert np.allclose(out.u.values, 2.0 + dt * 1.0)
        assert np.allclose(out.v.values, 0.5 - dt * 1.0)
        assert out.t == dt

    @pytest.mark.parametrize("seed", range(3))
    def test_mass_identities(self, seed):
        g = GridSpec(16, 12, 1.2, 0.9)
        rng = np.random.default_rng(seed)
        u = ScalarField(g, 0.5 + rng.random(g.shape))
        v = ScalarField(g, 0.5 + rng.random(g.shape))
        s = State(u, v, 0.0)
        dt = 1e-5
        for ell in (0.0, 1.0):
            p = Params(chi=1.5, ell=ell)
            out = step_euler(s, p, dt)
            ruv = integrate(ScalarField(g, u.values * v.values))
            want_u = integrate(u) + dt * ell * ruv
            want_v = integrate(v) - dt * ruv
            assert integrate(out.u) == pytest.approx(want_u, rel=1e-12)
            assert integrate(out.v) == pytest.approx(want_v, rel=1e-12)
            if ell == 0.0:
                assert integrate(out.u) == pytest.approx(integrate(u), rel=1e-12)
            assert integrate(out.v) <= integrate(v)


class TestRun:
    def test_homogeneous_decay_oracle(self):
        g = GridSpec(32, 32)
        traj = run(ScalarField.full(g, 1.0), ScalarField.full(g, 1.0),
                   Params(chi=1.0, ell=0.0, eps=0.0),
                   StepControl(t_end=0.5), DiagConfig())
        assert traj.final.t == pytest.approx(0.5, abs=1e-12)
        got = traj.final.v.values.max()
        assert got == pytest.approx(math.exp(-0.5), abs=2e-3)
        # exact mass conservation when ell = 0
        assert traj.max_mass_residual_u <= 1e-12
        assert traj.max_mass_residual_v <= 1e-12
        assert traj.max_supv_growth <= 1e-12

    def test_first_integral_u_plus_v(self):
        g = GridSpec(32, 32)
        traj = run(ScalarField.full(g, 1.0), ScalarField.full(g, 1.0),
                   Params(chi=1.0, ell=1.0, eps=0.0),
                   StepControl(t_end=0.5), DiagConfig())
        total = traj.final.u.values + traj.final.v.values
        assert np.abs(total - 2.0).max() <= 1e-10
        for _, rec in traj.samples:
            assert rec.mass_u + rec.mass_v == pytest.approx(2.0, abs=1e-10)

    def test_step_collapse_forced(self):
        g = GridSpec(16, 16)
        rng = np.random.default_rng(0)
        u0 = ScalarField(g, 1.0 + 0.5 * rng.random(g.shape))
        with pytest.raises(StepCollapse):
            run(u0, ScalarField.full(g, 1.0), Params(chi=1.0, eps=0.0),
                StepControl(t_end=10.0, dt_min=50.0, dt_max=100.0))

    def test_fused_step_matches_reference(self):
        # one adaptive step of run() == step_euler with the same dt
        g = GridSpec(24, 24)
        rng = np.random.default_rng(3)
        u0 = ScalarField(g, 0.5 + rng.random(g.shape))
        v0 = ScalarField(g, 0.5 + rng.random(g.shape))
        p = Params(chi=2.0, ell=1.0, eps=0.0)
        c = StepControl(t_end=1.0)
        dt = stable_dt(State(u0, v0, 0.0), p, c)
        one = StepControl(t_end=dt, fixed_dt=dt)
        traj = run(u0, v0, p, one, DiagConfig())
        ref = step_euler(State(u0, v0, 0.0), p, dt)
        assert np.abs(traj.final.u.values - ref.u.values).max() <= 1e-14
        assert np.abs(traj.final.v.values - ref.v.values).max() <= 1e-14

    def test_snapshots_land_exactly(self):
        g = GridSpec(16, 16)
        times = [0.0, 0.01, 0.025, 0.05]
        traj = run(ScalarField.full(g, 1.0), ScalarField.full(g, 1.0),
                   Params(chi=1.0, eps=0.0), StepControl(t_end=0.05),
                   DiagConfig(), snapshot_times=times)
        assert traj.snapshot_times == pytest.approx(times, abs=1e-12)
        assert len(traj.snapshots) == 4

    def test_early_stop_on_threshold(self):
        g = GridSpec(16, 16)
        traj = run(ScalarField.full(g, 1.0), ScalarField.full(g, 1.0),
                   Params(chi=1.0, ell=0.0, eps=0.0),
                   StepControl(t_end=20.0), DiagConfig(),
                   stop_sup_v_below=0.5)
        assert traj.stopped_early and traj.stop_reason == "sup_v_threshold"
        # v = e^-t crosses 0.5 at t = ln 2
        assert traj.final.t == pytest.approx(math.log(2.0), rel=5e-2)

    def test_sample_times_strictly_increasing(self):
        g = GridSpec(16, 16)
        traj = run(ScalarField.full(g, 1.0), ScalarField.full(g, 1.0),
                   Params(chi=1.0, eps=0.0), StepControl(t_end=0.02),
                   DiagConfig(stride=7))
        ts = [t for t, _ in traj.samples]
        assert all(b > a for a, b in zip(ts, ts[1:]))
        assert ts[0] == 0.0 and ts[-1] == pytest.approx(0.02, abs=1e-12)


class TestConvergence:
    def test_temporal_order_at_least_09(self):
        # homogeneous reduction: v' = -uv with u' = 0 (ell = 0)
        g = GridSpec(4, 4)
        p = Params(chi=1.0, ell=0.0, eps=0.0)
        T = 0.25
        errs = []
        for dt in (T / 50, T / 100):
            traj = run(ScalarField.full(g, 1.0), ScalarField.full(g, 1.0), p,
                       StepControl(t_end=T, fixed_dt=dt), DiagConfig())
            errs.append(abs(traj.final.v.values.max() - math.exp(-T)))
        order = math.log2(errs[0] / errs[1])
        assert order >= 0.9

    def test_spatial_self_convergence(self):
        p = Params(chi=1.0, ell=1.0, eps=0.0)
        T = 0.1
        sols = {}
        for n in (32, 64, 128):
            g = GridSpec(n, n)
            u0 = ScalarField.from_function(
                g, lambda X, Y: 1.0 + 0.5 * np.cos(np.pi * X) * np.cos(np.pi * Y))
            v0 = ScalarField.from_function(
                g, lambda X, Y: 1.0 + 0.25 * np.cos(np.pi * Y))
            traj = run(u0, v0, p, StepControl(t_end=T), DiagConfig(stride=1000))
            sols[n] = traj.final.u.values

        def restrict(fine):
            return 0.25 * (fine[::2, ::2] + fine[1::2, ::2]
                           + fine[::2, 1::2] + fine[1::2, 1::2])

        d1 = np.abs(sols[32] - restrict(sols[64])).mean()
        d2 = np.abs(sols[64] - restrict(sols[128])).mean()
        assert 3.0 <= d1 / d2 <= 5.0
