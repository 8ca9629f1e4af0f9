import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

import lagrangas as lg
from lagrangas import functionals

from conftest import make_state


class TestEntropy:
    def test_equilibrium_value(self, grid64, equilibrium64, unit_params):
        assert lg.entropy(equilibrium64, grid64, unit_params) == pytest.approx(2.0, abs=1e-14)

    def test_closed_form_volume_e(self, grid64, unit_params):
        s = make_state(np.full(64, np.e), np.zeros(65), np.ones(64))
        assert lg.entropy(s, grid64, unit_params) == pytest.approx(np.e, abs=1e-13)

    def test_cosine_profile_vs_dense_quadrature(self, unit_params):
        # the discrete cell sum is the midpoint rule, second order, so at
        # N = 256 it should sit within 1e-6 of the continuum integral
        g = lg.build_grid(256)
        a = 0.1
        s = lg.make_initial_data(
            lg.InitialSpec(kind="cosine", a_v=a, a_u=a, a_theta=a), g)
        theta_c = s.theta[0] - a * np.cos(2 * np.pi * g.cell_centers[0])

        def integrand(x):
            v = 1 + a * np.cos(2 * np.pi * x)
            th = theta_c + a * np.cos(2 * np.pi * x)
            u = a * np.sin(2 * np.pi * x)
            return (v - np.log(v)) + (th - np.log(th)) + 0.5 * u * u

        exact, _ = quad(integrand, 0.0, 1.0, epsabs=1e-13, limit=200)
        assert lg.entropy(s, g, unit_params) == pytest.approx(exact, abs=1e-6)

    def test_nonnegative_on_random_states(self, grid64, unit_params):
        for seed in range(5):
            s = lg.make_initial_data(
                lg.InitialSpec(kind="random_smooth", a_v=0.4, a_u=0.5,
                               a_theta=0.3, seed=seed), grid64)
            assert lg.entropy(s, grid64, unit_params) >= 0.0


class TestDissipation:
    def test_constant_state_is_zero(self, grid64, equilibrium64, unit_params):
        assert lg.dissipation(equilibrium64, grid64, unit_params) == 0.0

    def test_hand_computed_hat_profile(self, unit_params):
        # u = (0, 1/2, 1, 1/2, 0) on N = 4: slopes (2, 2, -2, -2), v = theta = 1,
        # so the shear sum is 4 * 4 * dx = 4 and the thermal sum is 0
        g = lg.build_grid(4)
        s = make_state(np.ones(4), [0.0, 0.5, 1.0, 0.5, 0.0], np.ones(4))
        assert lg.dissipation(s, g, unit_params) == pytest.approx(4.0, abs=1e-14)

    def test_temperature_only_perturbation(self, grid64, unit_params):
        s = lg.make_initial_data(
            lg.InitialSpec(kind="cosine", a_v=0.0, a_u=0.0, a_theta=0.1), grid64)
        full = lg.dissipation(s, grid64, unit_params)
        assert full > 0.0
        # zero out the velocity part by construction: u is already zero
        assert np.all(s.u == 0.0)

    def test_zero_iff_flat(self, grid64, unit_params):
        th = np.ones(64)
        th[10] += 1e-9
        s = make_state(np.ones(64), np.zeros(65), th)
        assert lg.dissipation(s, grid64, unit_params) > 0.0


class TestMeanTheta:
    def test_unit(self, grid64, equilibrium64):
        assert lg.mean_theta(equilibrium64, grid64) == pytest.approx(1.0, abs=1e-15)

    def test_cosine_mean_one(self, grid64):
        s = lg.make_initial_data(lg.InitialSpec(kind="cosine", a_theta=0.2,
                                                a_v=0.0, a_u=0.0), grid64)
        assert lg.mean_theta(s, grid64) == pytest.approx(s.theta.mean(), abs=1e-14)

    def test_constant_point_three(self, grid64):
        s = make_state(np.ones(64), np.zeros(65), np.full(64, 0.3))
        assert lg.mean_theta(s, grid64) == pytest.approx(0.3, abs=1e-15)


class TestInverseTemperatureMoment:
    def test_unit_theta_any_p(self, grid64, equilibrium64):
        for p in (0.5, 1.0, 2.0, 7.0):
            assert lg.inverse_temperature_moment(equilibrium64, grid64, p) == \
                pytest.approx(1.0, abs=1e-14)

    def test_theta_four(self, grid64):
        s = make_state(np.ones(64), np.zeros(65), np.full(64, 4.0))
        assert lg.inverse_temperature_moment(s, grid64, 2.0) == pytest.approx(0.25, abs=1e-14)
        assert lg.inverse_temperature_moment(s, grid64, 1.0) == pytest.approx(1.0, abs=1e-14)

    def test_requires_positive_exponent(self, grid64, equilibrium64):
        with pytest.raises(ValueError):
            lg.inverse_temperature_moment(equilibrium64, grid64, 0.0)


class TestH1Deviation:
    def test_zero_at_reference(self, grid64, equilibrium64):
        assert lg.h1_deviation(equilibrium64, grid64, 1.0, 1.0) == 0.0

    def test_constant_shift(self, grid64):
        delta = 0.37
        s = make_state((1 + delta) * np.ones(64), np.zeros(65), np.ones(64))
        assert lg.h1_deviation(s, grid64, 1.0, 1.0) == pytest.approx(delta, rel=1e-12)

    def test_cosine_vs_analytic_norm(self):
        # continuum H1 norm of (a cos, a sin, a cos) deviations:
        # each field contributes a^2/2 * (1 + (2 pi)^2)
        g = lg.build_grid(256)
        a = 0.1
        s = lg.make_initial_data(lg.InitialSpec(kind="cosine", a_v=a, a_u=a, a_theta=a), g)
        theta_c = (s.theta - a * np.cos(2 * np.pi * g.cell_centers))[0]
        exact = np.sqrt(3 * (a ** 2 / 2) * (1 + (2 * np.pi) ** 2))
        got = lg.h1_deviation(s, g, 1.0, theta_c)
        assert got == pytest.approx(exact, abs=1e-4)

    def test_zero_iff_reference(self, grid64):
        v = np.ones(64)
        v[5] += 1e-8
        s = make_state(v, np.zeros(65), np.ones(64))
        assert lg.h1_deviation(s, grid64, 1.0, 1.0) > 0.0

    def test_rejects_nonpositive_reference(self, grid64, equilibrium64):
        with pytest.raises(ValueError):
            lg.h1_deviation(equilibrium64, grid64, 0.0, 1.0)


class TestStressField:
    def test_equilibrium_minus_one(self, grid64, equilibrium64, unit_params):
        sigma = lg.stress_field(equilibrium64, grid64, unit_params)
        assert np.allclose(sigma, -1.0, atol=1e-15)

    def test_cancellation(self, unit_params):
        # u_x = R*theta/mu cellwise makes the stress vanish identically
        g = lg.build_grid(4)
        u = np.array([0.0, 0.5, 1.0, 0.5, 0.0])
        th = np.diff(u) / g.dx * unit_params.mu_tilde / unit_params.R
        th = np.abs(th)
        u = np.abs(np.cumsum(np.concatenate(([0.0], th * g.dx))))
        s = make_state(np.full(4, 0.7), u, th)
        sigma = lg.stress_field(s, g, unit_params)
        assert np.allclose(sigma, 0.0, atol=1e-15)

    def test_duplicate_formula_oracle(self, grid64):
        p = lg.PhysParams(beta=0.7, mu_tilde=1.3, kappa_tilde=0.8, R=1.1, c_v=0.9)
        s = lg.make_initial_data(
            lg.InitialSpec(kind="random_smooth", a_v=0.3, a_u=0.4, a_theta=0.2,
                           seed=11), grid64)
        got = lg.stress_field(s, grid64, p)
        expect = np.array([
            (p.mu_tilde * (s.u[j + 1] - s.u[j]) / grid64.dx - p.R * s.theta[j]) / s.v[j]
            for j in range(64)])
        assert np.allclose(got, expect, rtol=1e-14, atol=0.0)


class TestExtrema:
    def test_equilibrium(self, equilibrium64):
        assert lg.extrema(equilibrium64) == (1.0, 1.0, 1.0, 1.0)

    def test_two_cells(self):
        s = make_state([0.5, 2.0], [0.0, 0.0, 0.0], [1.0, 3.0])
        assert lg.extrema(s) == (0.5, 2.0, 1.0, 3.0)

    def test_cosine_min(self, grid64):
        s = lg.make_initial_data(lg.InitialSpec(kind="cosine", a_v=0.1), grid64)
        expected_min = 1.0 - 0.1 * np.max(np.abs(np.cos(2 * np.pi * grid64.cell_centers)))
        assert lg.extrema(s)[0] == pytest.approx(expected_min, rel=1e-14)


class TestRecord:
    def test_equilibrium_record(self, grid64, equilibrium64, unit_params):
        r = lg.record(equilibrium64, grid64, unit_params)
        assert r.dissipation_V == 0.0
        assert r.h1_dev == 0.0
        assert r.mass == 1.0
        assert r.total_energy == 1.0

    def test_determinism(self, grid64, cosine64, unit_params):
        a = lg.record(cosine64, grid64, unit_params)
        b = lg.record(cosine64, grid64, unit_params)
        assert a == b

    def test_composition_matches_parts(self, grid64, cosine64, unit_params):
        r = lg.record(cosine64, grid64, unit_params, int_v_dt=0.25,
                      lp_exponents=(1.0, 2.0), v_star=1.0, theta_star=0.9975)
        g, s, p = grid64, cosine64, unit_params
        assert r.entropy_E == lg.entropy(s, g, p)
        assert r.dissipation_V == lg.dissipation(s, g, p)
        assert r.mean_theta == lg.mean_theta(s, g)
        assert r.int_V_dt == 0.25
        assert r.h1_dev == lg.h1_deviation(s, g, 1.0, 0.9975)
        assert (r.min_v, r.max_v, r.min_theta, r.max_theta) == lg.extrema(s)
        assert r.lp_moments == {1.0: lg.inverse_temperature_moment(s, g, 1.0),
                                2.0: lg.inverse_temperature_moment(s, g, 2.0)}
        mass, energy = lg.check_normalization(s, g, p)
        assert (r.mass, r.total_energy) == (mass, energy)

    def test_default_moment_exponents(self):
        p = lg.PhysParams(beta=0.5)
        assert functionals.default_lp_exponents(p) == (0.5, 1.5, 2.0)
        p2 = lg.PhysParams(beta=1.0)
        assert functionals.default_lp_exponents(p2) == (1.0, 2.0)

    @given(seed=st.integers(0, 1000))
    def test_entropy_and_dissipation_nonnegative(self, seed):
        g = lg.build_grid(16)
        p = lg.PhysParams(beta=1.5)
        s = lg.make_initial_data(
            lg.InitialSpec(kind="random_smooth", a_v=0.5, a_u=0.8,
                           a_theta=0.4, seed=seed), g)
        r = lg.record(s, g, p)
        assert r.entropy_E >= 0.0
        assert r.dissipation_V >= 0.0
