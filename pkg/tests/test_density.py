import numpy as np
import pytest

from dsbm_ns import (
    TauOutOfRangeError,
    VarianceProfile,
    density_sigma,
    density_sigma_via_integral,
)
from dsbm_ns.dyson import cached_spectral_radius


class TestQuadraticFormRoute:
    @pytest.mark.parametrize("s", [0.25, 1.0])
    def test_circular_law(self, s):
        m = VarianceProfile(np.array([[s]]))
        for r in np.linspace(0.05, 0.9, 6) * np.sqrt(s):
            ev = density_sigma(m, r)
            assert ev.sigma == pytest.approx(1 / (np.pi * s), rel=1e-10)
            assert ev.method == "QuadraticForm"

    def test_all_ones_block(self, all_ones3):
        for r in (0.2, 0.9, 1.5):
            assert density_sigma(all_ones3, r).sigma == pytest.approx(1 / (3 * np.pi), rel=1e-10)

    def test_two_cycle_product_law(self):
        # eigenvalues are square roots of a two-Ginibre product: the density
        # is uniform 1/(pi sqrt(ab)) on the disk of radius (ab)^(1/4)
        for a, b in ((1.0, 2.0), (0.25, 4.0)):
            m = VarianceProfile(np.array([[0.0, a], [b, 0.0]]))
            target = 1 / (np.pi * np.sqrt(a * b))
            for frac in (0.2, 0.6, 0.9):
                r = frac * (a * b) ** 0.25
                assert density_sigma(m, r).sigma == pytest.approx(target, rel=1e-10)

    def test_complex_argument_radial(self, example1):
        a = density_sigma(example1, 0.5)
        b = density_sigma(example1, 0.5j)
        c = density_sigma(example1, 0.5 * np.exp(1j * 0.7))
        assert a.sigma == pytest.approx(b.sigma, rel=1e-12)
        assert a.sigma == pytest.approx(c.sigma, rel=1e-12)

    def test_rejects_out_of_bulk(self, example1):
        rho, _ = cached_spectral_radius(example1)
        with pytest.raises(TauOutOfRangeError):
            density_sigma(example1, np.sqrt(rho) * 1.01)
        with pytest.raises(TauOutOfRangeError):
            density_sigma(example1, 0.0)

    def test_kernel_matrix_contract(self, example1, example2, example3):
        # stationarity vector and spectral bounds of the symmetrized kernel
        for m in (example1, example2, example3):
            for r in (1e-4, 0.3, 0.8):
                ev = density_sigma(m, r)
                assert ev.fr_eig_max == pytest.approx(1.0, abs=1e-10)
                assert -1.0 - 1e-10 <= ev.fr_eig_min
                assert ev.fr_eig_min <= 0.0  # strictly indefinite in these models
                assert np.all(ev.vhat > 0) and np.all(ev.vhat < 1)

    def test_positive_across_bulk(self, example2):
        rho, _ = cached_spectral_radius(example2)
        for frac in (1e-5, 1e-2, 0.5, 0.99):
            assert density_sigma(example2, frac * np.sqrt(rho)).sigma > 0


class TestIntegralOracle:
    def test_circular_law_value(self):
        m = VarianceProfile(np.array([[1.0]]))
        ev = density_sigma_via_integral(m, 0.5)
        assert ev.sigma == pytest.approx(1 / np.pi, abs=1e-4)
        assert ev.method == "IntegralLaplacian"

    def test_agrees_with_direct_route(self, example1):
        rho, _ = cached_spectral_radius(example1)
        for frac in (0.4, 0.7):
            z = frac * np.sqrt(rho)
            direct = density_sigma(example1, z).sigma
            oracle = density_sigma_via_integral(example1, z).sigma
            assert oracle == pytest.approx(direct, rel=1e-4)

    def test_step_validation(self, example1):
        with pytest.raises(ValueError):
            density_sigma_via_integral(example1, 0.5, h=0.6)
        with pytest.raises(ValueError):
            density_sigma_via_integral(example1, 0.5, h=-0.1)

    def test_rejects_out_of_bulk(self, example1):
        rho, _ = cached_spectral_radius(example1)
        with pytest.raises(TauOutOfRangeError):
            density_sigma_via_integral(example1, np.sqrt(rho) * 1.1)


class TestNearOriginExponent:
    @pytest.mark.parametrize("fixture,kappa", [
        ("example1", 0.5), ("example2", 1 / 3), ("example3", 0.25)])
    def test_blowup_exponent(self, request, fixture, kappa):
        m = request.getfixturevalue(fixture)
        radii = np.geomspace(1e-5, 1e-3, 7)
        sigmas = [density_sigma(m, r).sigma for r in radii]
        slope = np.polyfit(np.log(radii), np.log(sigmas), 1)[0]
        assert slope == pytest.approx(-2 + 2 * kappa, abs=0.05)
