import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from kerrcheck import rw_evolver as R


def pulse_run(m, grid, center_r, width, t_end, bc="outgoing", ell=2, record_every=20):
    pot = R.rw_potential(ell, m, grid)
    unit = m if m > 0 else 1.0
    psi0, pi0 = R.gaussian_data(grid, float(R.tortoise(center_r * unit, m)), width * unit)
    return R.run(grid, pot, psi0, pi0, t_end=t_end, bc=bc, record_every=record_every)


class TestTortoise:
    def test_r4(self):
        assert_allclose(R.tortoise(4.0, 1.0), 4.0)

    def test_monotone_and_divergent(self):
        r = 2.0 + np.logspace(-12, 2, 200)
        rs = R.tortoise(r, 1.0)
        assert np.all(np.diff(rs) > 0)
        assert rs[0] < -40

    def test_round_trip(self):
        r = np.random.default_rng(7).uniform(2.01, 500.0, 100)
        back = R.inverse_tortoise(R.tortoise(r, 1.0), 1.0)
        assert np.all(np.abs(back - r) < 1e-12 * r)

    @settings(max_examples=50, deadline=None)
    @given(st.floats(min_value=-300.0, max_value=3000.0), st.sampled_from([0.5, 1.0, 2.0]))
    def test_inverse_property(self, rstar, m):
        r = R.inverse_tortoise(rstar, m)
        assert r >= 2 * m
        if r == 2 * m:
            # x = r/2m - 1 = e^u with e^u + u = r*/2m - 1 is below one ulp of 1
            assert rstar / (2 * m) - 1 < math.log(np.finfo(float).eps)
            return
        # one ulp of r moves r* by ulp/f, so near the horizon compare at that resolution
        f = 1 - 2 * m / r
        tol = 1e-12 * max(abs(rstar), 1.0) + 4 * np.spacing(r) / f
        assert abs(R.tortoise(r, m) - rstar) <= tol

    def test_inside_horizon_rejected(self):
        with pytest.raises(ValueError):
            R.tortoise(1.5, 1.0)

    def test_flat_identity(self):
        assert_allclose(R.inverse_tortoise([1.0, 5.0], 0.0), [1.0, 5.0])


class TestPotential:
    def test_unreduced_term_at_photon_sphere(self):
        r = 3.0
        assert_allclose(4 / r**2 * (1 - 2 / r), 4 / 27)

    def test_flat_limit(self):
        r = np.array([1.0, 3.0, 10.0])
        assert_allclose(R.rw_potential_r(0, 0.0, r), 4 / r**2)

    def test_closed_form_value(self):
        # f (l(l+1)/r^2 + 2m/r^3 + 4 f/r^2) at l = 2, m = 1, r = 3
        f = 1 / 3
        assert_allclose(R.rw_potential_r(2, 1.0, 3.0), f * (6 / 9 + 2 / 27 + 4 * f / 9), rtol=1e-15)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(min_value=0, max_value=8), st.floats(min_value=1e-6, max_value=1e4))
    def test_positive_outside_horizon(self, ell, x):
        assert R.rw_potential_r(ell, 1.0, 2.0 + x) > 0

    def test_vanishes_at_both_ends(self):
        grid = R.Grid1D.with_cfl(-200.0, 2000.0, 4097)
        W = R.rw_potential(2, 1.0, grid).W
        assert W[0] < 1e-30 and W[-1] < 1e-5
        assert W.max() > 0.1

    def test_negative_ell_rejected(self):
        with pytest.raises(ValueError):
            R.rw_potential(-1, 1.0, R.Grid1D.with_cfl(0.0, 10.0, 32))


class TestModeReduction:
    @pytest.mark.parametrize("ell", [0, 1, 2, 3])
    @pytest.mark.parametrize("m", [0.5, 1.0, 2.0])
    def test_matches_four_dimensional_operator(self, ell, m):
        rng = np.random.default_rng(ell + 10 * int(4 * m))
        pts = np.column_stack(
            [rng.uniform(0, 5, 50), rng.uniform(2.2 * m, 12 * m, 50), rng.uniform(0.2, 2.9, 50), rng.uniform(0, 6, 50)]
        )
        assert R.mode_reduction_residual(ell, m, pts).max() < 1e-8

    def test_unreduced_four_over_r_squared_fails(self, monkeypatch):
        # the variant with 4/r^2 in place of 4 f/r^2 is not the reduction
        def variant(ell, m, r):
            r = np.asarray(r, dtype=float)
            f = 1 - 2 * m / r
            return f * (ell * (ell + 1) / r**2 + 2 * m / r**3 + 4 / r**2)

        monkeypatch.setattr(R, "rw_potential_r", variant)
        res = R.mode_reduction_residual(2, 1.0, [[0.3, 3.0, 1.0, 0.0], [1.0, 6.0, 2.0, 0.0]])
        assert res.max() > 1e-3


class TestGrid:
    def test_minimum_points(self):
        with pytest.raises(ValueError):
            R.Grid1D(0.0, 1.0, 15, 0.01)

    def test_cfl_violation(self):
        with pytest.raises(R.CFLError):
            R.Grid1D(0.0, 10.0, 101, 0.095)

    def test_cfl_limit_accepted(self):
        g = R.Grid1D(0.0, 10.0, 101, 0.09)
        assert_allclose(g.dt / g.dx, 0.9)

    def test_mass_weights_integrate_exactly(self):
        g = R.Grid1D.with_cfl(-3.0, 5.0, 65)
        assert_allclose(g.mass_weights.sum(), 8.0)

    def test_state_length_check(self):
        with pytest.raises(ValueError):
            R.FieldState(np.zeros(3), np.zeros(4))


class TestStep:
    def test_zero_data_stays_zero(self):
        grid = R.Grid1D.with_cfl(-50.0, 100.0, 257)
        pot = R.rw_potential(2, 1.0, grid)
        for bc in R.BOUNDARY_CONDITIONS:
            hist = R.run(grid, pot, np.zeros(257), t_end=20.0, bc=bc)
            assert np.all(hist.final.psi == 0.0)
            assert np.all(np.array(hist.rows)[:, 1:] == 0.0)

    def test_unknown_boundary(self):
        grid = R.Grid1D.with_cfl(0.0, 10.0, 32)
        s = R.FieldState(np.zeros(32), np.zeros(32))
        with pytest.raises(ValueError):
            R.step(s, R.zero_potential(grid), grid, "periodic")

    def test_traveling_pulse_second_order(self):
        def error(n):
            grid = R.Grid1D.with_cfl(-40.0, 40.0, n, 0.5)
            pot = R.zero_potential(grid)
            x = grid.rstar
            psi0 = np.exp(-(x**2) / 4)
            pi0 = x / 2 * psi0  # d_t of g(x - t)
            hist = R.run(grid, pot, psi0, pi0, t_end=10.0, record_every=10**6)
            exact = np.exp(-((x - hist.final.t) ** 2) / 4)
            return np.abs(hist.final.psi - exact).max()

        e1, e2 = error(401), error(801)
        assert e1 < 1e-2
        assert_allclose(e1 / e2, 4.0, rtol=0.1)

    def test_self_convergence_order(self):
        assert abs(R.self_convergence(1.0, 2) - 2.0) < 0.15


class TestEnergy:
    def test_zero_state(self):
        grid = R.Grid1D.with_cfl(0.0, 10.0, 32)
        s = R.FieldState(np.zeros(32), np.zeros(32))
        assert R.energy(s, R.rw_potential(1, 1.0, grid), grid) == 0.0

    def test_matches_trapezoid_energy(self):
        grid = R.Grid1D.with_cfl(-60.0, 80.0, 2049, 0.25)
        pot = R.rw_potential(2, 1.0, grid)
        psi0, pi0 = R.gaussian_data(grid, 10.0, 3.0)
        s = R.initial_state(grid, pot, psi0, pi0)
        d = np.gradient(psi0, grid.dx)
        naive = 0.5 * np.sum(grid.mass_weights * (d**2 + pot.W * psi0**2))
        assert_allclose(R.energy(s, pot, grid), naive, rtol=1e-3)

    def test_reflecting_conservation(self):
        grid = R.Grid1D.with_cfl(-100.0, 150.0, 2049, 0.5)
        hist = pulse_run(1.0, grid, 3.0, 2.0, 200.0, bc="reflecting")
        assert R.energy_drift(hist) < 1e-6

    def test_outgoing_monotone(self):
        grid = R.Grid1D.with_cfl(-60.0, 80.0, 1025, 0.5)
        hist = pulse_run(1.0, grid, 3.0, 2.0, 200.0, record_every=1)
        e = hist.column("E_total")
        assert np.all(np.diff(e) <= 1e-10 * e[0])
        assert e[-1] < 1e-3 * e[0]


class TestMorawetz:
    def test_zero_state(self):
        grid = R.Grid1D.with_cfl(-10.0, 10.0, 64)
        assert R.morawetz_bulk(R.FieldState(np.zeros(64), np.zeros(64)), grid, 1.0) == 0.0

    def test_weight_vanishes_on_photon_sphere(self):
        assert R.morawetz_weight(3.0, 1.0) == 0.0
        assert R.morawetz_weight(6.0, 2.0) == 0.0

    def test_degenerate_below_full(self):
        grid = R.Grid1D.with_cfl(-40.0, 60.0, 513)
        psi0, _ = R.gaussian_data(grid, 5.0, 3.0)
        s = R.FieldState(psi0, np.zeros_like(psi0))
        assert R.morawetz_bulk(s, grid, 1.0) < R.morawetz_bulk(s, grid, 1.0, degenerate=False)

    def test_trapped_data_decay_slower(self):
        grid = R.Grid1D.with_cfl(-200.0, 400.0, 4097, 0.5)
        ratios = []
        for center in (3.0, 10.0):
            m_deg = pulse_run(1.0, grid, center, 1.0, 60.0).column("M_degenerate")
            ratios.append(m_deg[1:] / m_deg[0])
        assert np.all(ratios[0] > ratios[1])


@pytest.fixture(scope="module")
def runs():
    grid = R.Grid1D.with_cfl(-200.0, 400.0, 4097, 0.5)
    flat = R.Grid1D.with_cfl(0.5, 600.5, 4097, 0.5)
    return {
        "kerr": pulse_run(1.0, grid, 10.0, 1.0, 300.0),
        "flat": pulse_run(0.0, flat, 10.0, 1.0, 300.0),
    }


class TestDecay:
    def test_zero_data(self):
        grid = R.Grid1D.with_cfl(-20.0, 20.0, 129)
        hist = R.run(grid, R.rw_potential(2, 1.0, grid), np.zeros(129), t_end=10.0, bc="outgoing")
        rep = R.decay_report(hist)
        assert np.all(rep.e_local == 0) and np.all(rep.m_degenerate == 0)
        assert rep.drop_orders == 0.0

    def test_local_energy_drop(self, runs):
        assert R.decay_report(runs["kerr"]).drop_orders >= 3

    def test_flat_decays_faster(self, runs):
        e0 = runs["flat"].column("E_local")
        e1 = runs["kerr"].column("E_local")
        t = runs["kerr"].column("t")
        late = t >= 50
        assert np.all(e0[late] / e0.max() < e1[late] / e1.max())
        assert R.decay_report(runs["flat"]).drop_orders > R.decay_report(runs["kerr"]).drop_orders

    def test_flat_tail_exponent(self, runs):
        # inverse-square barrier of strength 10: psi ~ t^-(2 nu + 2), nu = sqrt(41)/2
        rep = R.decay_report(runs["flat"])
        assert_allclose(rep.slope, -(2 * math.sqrt(41) + 4), atol=0.5)
        assert rep.slope_ci[0] < rep.slope < rep.slope_ci[1]

    def test_csv(self, runs):
        text = R.decay_report(runs["kerr"]).to_csv()
        lines = text.splitlines()
        assert lines[0] == "t,E_local,M_degenerate"
        assert any(line.startswith("# tail_slope=") for line in lines)
        hist_csv = runs["kerr"].to_csv({"energy_drift": 0.5})
        assert hist_csv.splitlines()[0] == ",".join(R.CSV_COLUMNS)
        assert hist_csv.rstrip().endswith("# energy_drift=0.5")
