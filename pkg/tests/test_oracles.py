import math

import numpy as np
import pytest
from scipy.integrate import quad

from relosc.oracles import (CBRT2, ConvergenceError, OracleReport,
                            default_p_max, gap_coefficient, grid_diagonalize,
                            grid_oracle, lambda0, oracle_report, sho_oracle,
                            ultra_density, ultra_oracle)
from relosc.specfun import airy_ai

ULTRA_SCALE = (0.1 * 100.0 ** 2) ** (1.0 / 3.0)  # = 10 for (m, omega) = (0.1, 100)


class TestSpectralConstants:
    def test_lambda0(self):
        assert lambda0() == pytest.approx(0.808617, abs=1e-6)

    def test_gap_coefficient(self):
        # 2.3381/2^(1/3) - lambda0
        assert gap_coefficient() == pytest.approx(1.0471, abs=1e-4)
        assert gap_coefficient() == pytest.approx(
            2.3381074105 / CBRT2 - 1.0187929716 / CBRT2, abs=1e-9)


class TestShoOracle:
    def test_reference_point(self):
        rep = sho_oracle(100.0, 1.0)
        assert rep.ground_energy == 100.5
        assert rep.potential == 0.25
        assert rep.kinetic == 100.25
        assert rep.q_squared == 0.005
        assert rep.gap == 1.0
        assert rep.corr_amplitude == 0.005 and rep.corr_rate == 1.0

    def test_unit_oscillator(self):
        assert sho_oracle(1.0, 1.0).ground_energy == 1.5

    @pytest.mark.parametrize("m,omega", [(2.0, 0.5), (10.0, 3.0), (0.3, 7.0)])
    def test_virial_and_consistency(self, m, omega):
        rep = sho_oracle(m, omega)
        assert rep.kinetic - m == pytest.approx(rep.potential, rel=1e-15)
        assert rep.kinetic + rep.potential == pytest.approx(rep.ground_energy, abs=1e-10)

    def test_density_is_unit_gaussian_with_exponent_m_omega(self):
        rep = sho_oracle(100.0, 1.0)
        q = rep.density_q
        assert np.trapezoid(rep.density_rho, q) == pytest.approx(1.0, abs=1e-6)
        expected = math.sqrt(100.0 / math.pi) * np.exp(-100.0 * q * q)
        np.testing.assert_allclose(rep.density_rho, expected, rtol=1e-12)

    def test_domain(self):
        with pytest.raises(ValueError):
            sho_oracle(0.0, 1.0)
        with pytest.raises(ValueError):
            sho_oracle(1.0, 0.0)


class TestUltraOracle:
    def test_reference_point(self):
        rep = ultra_oracle(0.1, 100.0)
        assert rep.ground_energy == pytest.approx(8.08617, abs=2e-5)
        assert rep.kinetic == pytest.approx(5.3908, abs=2e-4)
        assert rep.potential == pytest.approx(2.6954, abs=1e-4)
        assert rep.q_squared == pytest.approx(0.0053908, abs=1e-7)
        assert rep.gap == pytest.approx(10.4714, abs=1e-3)
        assert rep.corr_amplitude == rep.q_squared
        assert rep.corr_rate == rep.gap

    def test_virial(self):
        rep = ultra_oracle(0.05, 50.0)
        assert rep.kinetic == pytest.approx(2.0 * rep.potential, rel=1e-14)
        assert rep.kinetic + rep.potential == pytest.approx(rep.ground_energy, abs=1e-10)

    def test_cube_root_scaling(self):
        base = ultra_oracle(0.1, 100.0).ground_energy
        assert ultra_oracle(0.8, 100.0).ground_energy == pytest.approx(2.0 * base, rel=1e-12)

    def test_regime_warning(self):
        with pytest.warns(UserWarning):
            ultra_oracle(2.0, 1.0)


class TestUltraDensity:
    @pytest.fixture(scope="class")
    def grid_and_rho(self):
        q = np.linspace(-12.0 * 0.073422, 12.0 * 0.073422, 1201)
        return q, ultra_density(0.1, 100.0, q)

    def test_unit_integral(self, grid_and_rho):
        q, rho = grid_and_rho
        assert np.trapezoid(rho, q) == pytest.approx(1.0, abs=1e-6)

    def test_even(self, grid_and_rho):
        q, rho = grid_and_rho
        np.testing.assert_allclose(rho, rho[::-1], atol=1e-12 * rho.max())

    def test_second_moment_matches_virial_value(self, grid_and_rho):
        q, rho = grid_and_rho
        q2 = np.trapezoid(rho * q * q, q)
        assert q2 == pytest.approx(0.0053907767831, rel=1e-4)

    def test_spot_values_against_direct_quadrature(self, grid_and_rho):
        # independent evaluation of the double-integral density at 5 grid nodes
        q_grid, rho = grid_and_rho
        lam0 = lambda0()
        e0 = lam0 * ULTRA_SCALE
        c = (2.0 / (0.1 * 100.0 ** 2)) ** (1.0 / 3.0)
        p_max = e0 + 8.5 / c

        def psi(qv):
            val, _ = quad(lambda p: airy_ai(c * (p - e0)) * math.cos(p * qv),
                          0.0, p_max, limit=400, epsabs=1e-12, epsrel=1e-10)
            return val

        norm, _ = quad(lambda p: airy_ai(c * (p - e0)) ** 2, 0.0, p_max,
                       limit=400, epsabs=1e-14)
        mid = len(q_grid) // 2
        for i in (mid, mid + 20, mid + 50, mid + 90, mid + 160):
            direct = psi(q_grid[i]) ** 2 / (math.pi * norm)
            assert rho[i] == pytest.approx(direct, rel=1e-4)

    def test_grid_validation(self):
        with pytest.raises(ValueError):
            ultra_density(0.1, 100.0, np.linspace(-0.1, 0.2, 101))  # asymmetric
        with pytest.raises(ValueError):
            ultra_density(0.1, 100.0, np.linspace(-0.2, 0.2, 101))  # too narrow


class TestGridDiagonalize:
    def test_heavy_mass_regime(self):
        evals, rel = grid_diagonalize(100.0, 1.0, default_p_max(100.0, 1.0), 4096)
        assert evals[0] == pytest.approx(100.5, rel=1e-3)
        assert rel < 1e-4

    def test_light_mass_regime(self):
        evals, _ = grid_diagonalize(0.1, 100.0, default_p_max(0.1, 100.0), 4096)
        assert evals[0] == pytest.approx(8.086, rel=1e-3)
        assert evals[1] - evals[0] == pytest.approx(10.4714, rel=1e-2)

    def test_intermediate_regime_bracketed_by_limits(self):
        evals, _ = grid_diagonalize(1.0, 1.0, default_p_max(1.0, 1.0), 4096)
        ultra_e0 = lambda0()
        sho_e0 = 1.5
        assert ultra_e0 < evals[0] < sho_e0

    def test_refinement_monotone_from_below(self):
        # central differences weaken the confining q^2 term, so coarse grids
        # underestimate: E0 rises toward the continuum as n_points doubles
        p_max = default_p_max(1.0, 1.0)
        e0s = [grid_diagonalize(1.0, 1.0, p_max, n)[0][0]
               for n in (512, 1024, 2048, 4096)]
        assert all(a < b for a, b in zip(e0s, e0s[1:]))

    def test_nonconvergence_error(self):
        # absurd p_max leaves too few points across the wave function
        with pytest.raises(ConvergenceError):
            grid_diagonalize(100.0, 1.0, 2e5, 512)

    def test_input_validation(self):
        with pytest.raises(ValueError):
            grid_diagonalize(1.0, 1.0, default_p_max(1.0, 1.0), 256)
        with pytest.raises(ValueError):
            grid_diagonalize(1.0, 1.0, 0.5, 1024)


class TestGridOracle:
    @pytest.fixture(scope="class")
    def rep(self):
        return grid_oracle(1.0, 1.0)

    def test_energy_split_exact(self, rep):
        assert rep.kinetic + rep.potential == pytest.approx(rep.ground_energy, abs=1e-10)
        assert rep.q_squared == pytest.approx(2.0 * rep.potential / 1.0, rel=1e-12)

    def test_density_normalized_and_even(self, rep):
        assert np.trapezoid(rep.density_rho, rep.density_q) == pytest.approx(1.0, abs=1e-6)
        np.testing.assert_allclose(rep.density_rho, rep.density_rho[::-1],
                                   atol=1e-9 * rep.density_rho.max())

    def test_sho_regime_consistency(self):
        rep = grid_oracle(100.0, 1.0)
        exact = sho_oracle(100.0, 1.0)
        assert rep.ground_energy == pytest.approx(exact.ground_energy, rel=1e-3)
        assert rep.q_squared == pytest.approx(exact.q_squared, rel=2e-2)
        assert rep.gap == pytest.approx(exact.gap, rel=2e-2)
        # q couples the SHO ground state to n=1 only: amplitude ~ <q^2>
        assert rep.corr_amplitude == pytest.approx(rep.q_squared, rel=1e-2)

    def test_ultra_regime_consistency(self):
        rep = grid_oracle(0.1, 100.0)
        exact = ultra_oracle(0.1, 100.0)
        assert rep.ground_energy == pytest.approx(exact.ground_energy, rel=1e-3)
        assert rep.gap == pytest.approx(exact.gap, rel=1e-2)
        # higher odd states carry ~5% of <q^2> here
        assert rep.corr_amplitude < rep.q_squared
        assert 0.90 < rep.corr_amplitude / rep.q_squared < 1.0


class TestDispatchAndSerialization:
    def test_dispatch(self):
        assert oracle_report("sho", 100.0, 1.0).regime == "sho"
        assert oracle_report("grid", 1.0, 1.0, n_points=1024).regime == "grid"
        with pytest.raises(ValueError):
            oracle_report("bogus", 1.0, 1.0)

    def test_report_round_trip(self):
        rep = sho_oracle(2.0, 3.0)
        back = OracleReport.from_dict(rep.to_dict())
        assert back.ground_energy == rep.ground_energy
        assert back.corr_rate == rep.corr_rate
        np.testing.assert_allclose(back.density_rho, rep.density_rho)
