import math
import warnings

import numpy as np
import pytest

from liftns import spectral
from liftns.diagnostics import PHYSICAL, dissipation_integral
from liftns.solver import (
    CFLWarning,
    DivergedError,
    SolverParams,
    SolverState,
    check_cfl,
    integrate_physical,
    next_step,
    step_physical,
)


def shear_wave(grid, k=3):
    x, _, _ = grid.coordinates()
    values = np.stack([np.zeros_like(x), np.cos(k * x), np.zeros_like(x)])
    return spectral.SpectralVelocity.from_physical(spectral.PhysicalField(grid, values))


class TestParams:
    @pytest.mark.parametrize("kw", [{"nu": 0.0, "dt": 0.1}, {"nu": 0.1, "dt": -1.0}])
    def test_rejects_nonpositive(self, kw):
        with pytest.raises(ValueError):
            SolverParams(**kw)

    def test_rejects_unknown_scheme(self):
        with pytest.raises(ValueError):
            SolverParams(0.1, 0.1, scheme="euler")


class TestStep:
    def test_zero_field_is_fixed_point(self, grid8):
        state = SolverState(spectral.SpectralVelocity.zeros(grid8))
        for _ in range(5):
            state = step_physical(state, SolverParams(0.1, 0.3))
        assert not np.any(state.u.coeffs)
        assert state.t == pytest.approx(1.5)

    def test_stokes_mode_exact_each_step(self, grid16):
        u0 = shear_wave(grid16)
        params = SolverParams(nu=0.05, dt=0.1)
        state = SolverState(u0)
        for _ in range(10):
            prev = state
            state = step_physical(state, params)
            expected = prev.u.coeffs * math.exp(-0.05 * 9.0 * 0.1)
            assert np.max(np.abs(state.u.coeffs - expected)) <= 1e-12 * np.max(np.abs(expected))

    def test_next_step_lands_on_horizon(self):
        assert next_step(0.0, 1.0, 0.3) == 0.3
        assert next_step(0.9, 1.0, 0.3) == pytest.approx(0.1)
        # A remainder within the relative slack is absorbed instead of leaving a sliver.
        assert next_step(0.7, 1.0 + 1e-9, 0.3) == pytest.approx(0.3 + 1e-9)

    def test_final_time_is_exact(self, grid8):
        _, series = integrate_physical(spectral.taylor_green(grid8, 1.0), SolverParams(0.01, 0.005), 0.0137)
        assert series.t[-1] == 0.0137

    def test_divergence_raises_with_last_state(self, grid8):
        u0 = spectral.taylor_green(grid8, 1e6)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            with pytest.raises(DivergedError) as info:
                integrate_physical(u0, SolverParams(1e-3, 10.0), 1e4, qs=())
        assert info.value.last_state.u.is_finite()

    def test_cfl_warning(self, grid8):
        with pytest.warns(CFLWarning):
            check_cfl(spectral.taylor_green(grid8, 100.0), 1.0)


class TestIntegration:
    def test_zero_horizon_returns_initial_state(self, grid8):
        u0 = spectral.taylor_green(grid8, 1.0)
        snaps, series = integrate_physical(u0, SolverParams(0.01, 0.01), 0.0)
        assert len(snaps) == 1 and snaps[0].u is u0
        assert len(series) == 1 and series.t[0] == 0.0

    def test_energy_monotone_and_divergence_free(self, grid16):
        u0 = spectral.taylor_green(grid16, 1.0)
        snaps, series = integrate_physical(u0, SolverParams(0.01, 0.01), 1.0, snapshot_every=1)
        assert np.all(np.diff(series.energy) <= 1e-12)
        assert np.all(np.diff(series.energy) < 0)
        assert max(s.u.divergence_residual() for s in snaps) <= 1e-10

    def test_sampling(self, grid8):
        _, series = integrate_physical(spectral.taylor_green(grid8, 1.0), SolverParams(0.01, 0.01), 0.095, sample_every=3)
        assert list(series.step) == [0, 3, 6, 9, 10]

    def test_bitwise_determinism(self, grid16):
        u0 = spectral.taylor_green(grid16, 1.0)
        a, sa = integrate_physical(u0, SolverParams(0.01, 0.01), 0.3)
        b, sb = integrate_physical(u0, SolverParams(0.01, 0.01), 0.3)
        assert np.array_equal(a[-1].u.coeffs, b[-1].u.coeffs)
        assert np.array_equal(sa.vort_sup, sb.vort_sup)

    def test_convergence_order(self):
        """Three-level self-convergence study of u(T), n=32, nu=0.01, T=1.

        The unit-amplitude Taylor-Green field is used because at the default
        amplitude the flow is so close to Stokes decay that time-stepping errors
        sit at roundoff and no order can be observed.
        """
        g = spectral.make_grid(32)
        u0 = spectral.taylor_green(g, 1.0)
        finals = []
        for dt in (1e-2, 5e-3, 2.5e-3):
            snaps, _ = integrate_physical(u0, SolverParams(0.01, dt), 1.0, sample_every=10**6, qs=())
            finals.append(snaps[-1].u.coeffs)
        d1 = np.linalg.norm(finals[0] - finals[1])
        d2 = np.linalg.norm(finals[1] - finals[2])
        assert math.log2(d1 / d2) >= 3.8


class TestShippedRun:
    """Properties of the shared n=32, T=5 Taylor-Green run."""

    def test_energy_balance_within_one_percent(self, physical_n32, shipped_configs):
        s = physical_n32.series
        nu = shipped_configs["tg_constant"].nu
        lost = 0.5 * (s.energy[0] - s.energy[-1])
        dissipated = nu * dissipation_integral(s, PHYSICAL)[-1]
        assert lost == pytest.approx(dissipated, rel=1e-2)

    def test_decay_profile_shape(self, physical_n32):
        e = physical_n32.series.energy
        assert e[0] == pytest.approx(1.25, rel=1e-12)
        assert np.all(np.diff(e) < 0)
        # Smooth decay: the discrete second difference stays tiny compared with the slope.
        assert np.max(np.abs(np.diff(e, 2))) <= 1e-3 * np.max(np.abs(np.diff(e)))
