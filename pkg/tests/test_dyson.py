import numpy as np
import pytest

from dsbm_ns import (
    DomainViolationError,
    DysonParams,
    TauOutOfRangeError,
    VarianceProfile,
    build_block_graph,
    exponent_profile,
    functional_J,
    normal_form,
    scaling_check,
    solve_dyson,
    verify_variational,
)
from dsbm_ns.dyson import (
    cached_spectral_radius,
    edge_weights,
    minmax_defect,
    successor_weight_slack,
)


def scalar_solution(s, tau):
    return np.sqrt((1 - tau / s) / s)


class TestSolveDyson:
    @pytest.mark.parametrize("s,tau", [(1.0, 0.5), (0.25, 0.1), (4.0, 1e-6)])
    def test_scalar_closed_form(self, s, tau):
        sol = solve_dyson(VarianceProfile(np.array([[s]])), DysonParams(tau=tau))
        expected = scalar_solution(s, tau)
        assert sol.v[0] == pytest.approx(expected, rel=1e-12)
        assert sol.w[0] == pytest.approx(expected, rel=1e-12)
        assert sol.residual <= 1e-12

    def test_all_ones_symmetry_reduction(self):
        k, tau = 5, 0.8
        sol = solve_dyson(VarianceProfile(np.ones((k, k))), DysonParams(tau=tau))
        expected = np.sqrt((1 - tau / k) / k)
        assert sol.v == pytest.approx(np.full(k, expected), rel=1e-12)
        assert sol.w == pytest.approx(np.full(k, expected), rel=1e-12)

    def test_large_eta_dominant_balance(self, example1):
        eta = 1e8
        sol = solve_dyson(example1, DysonParams(tau=0.5, eta=eta))
        assert sol.v == pytest.approx(np.full(4, 1 / eta), rel=1e-6)

    def test_eta_zero_requires_tau_below_rho(self, example1):
        rho, _ = cached_spectral_radius(example1)
        with pytest.raises(TauOutOfRangeError):
            solve_dyson(example1, DysonParams(tau=rho * 1.01))

    def test_rejects_nonpositive_tau(self):
        with pytest.raises(TauOutOfRangeError):
            DysonParams(tau=0.0)

    def test_normalization_and_identities(self, example1, example2, example3):
        for m in (example1, example2, example3):
            for tau in (1e-2, 1e-6, 1e-10):
                sol = solve_dyson(m, DysonParams(tau=tau))
                assert np.all(sol.v > 0) and np.all(sol.w > 0)
                assert abs(sol.v.mean() - sol.w.mean()) <= 1e-12 * sol.v.mean()
                defects = sol.identity_defects(m)
                assert defects["one_lhs"] <= 1e-10
                assert defects["vw_symmetry"] <= 1e-10

    def test_warm_start_agrees(self, example2):
        cold = solve_dyson(example2, DysonParams(tau=1e-6))
        near = solve_dyson(example2, DysonParams(tau=2e-6))
        warm = solve_dyson(example2, DysonParams(tau=1e-6), warm_start=near)
        assert warm.v == pytest.approx(cold.v, rel=1e-10)


class TestScalingCheck:
    def test_scalar_exact_slopes(self):
        # 1 - v*S*w = tau/s exactly, so the slope is 1 and <vw> slope is 0
        m = VarianceProfile(np.array([[2.0]]))
        result = scaling_check(m, np.geomspace(1e-4, 1e-8, 5))
        assert result.slope_one_minus == pytest.approx(1.0, abs=1e-8)
        assert result.slope_vw == pytest.approx(0.0, abs=1e-3)
        assert result.one_minus_means == pytest.approx(result.tau_grid / 2.0, rel=1e-10)

    def test_grid_validation(self, example1):
        with pytest.raises(ValueError):
            scaling_check(example1, [1e-8, 1e-4])  # increasing
        with pytest.raises(TauOutOfRangeError):
            scaling_check(example1, [1.5, 1e-4])   # above rho/2


class TestExponentProfile:
    def test_scalar_flat(self):
        m = VarianceProfile(np.array([[1.0]]))
        profile = exponent_profile(m, np.geomspace(1e-4, 1e-8, 4))
        assert profile.delta is None
        assert profile.f_hat[0] == pytest.approx(0.0, abs=1e-6)
        assert profile.weights == {(0, 0): pytest.approx(1.0, abs=1e-9)}

    def test_all_ones_flat(self, all_ones3):
        profile = exponent_profile(all_ones3, np.geomspace(1e-4, 1e-8, 4))
        assert profile.f_hat == pytest.approx(np.zeros(1), abs=1e-6)

    def test_example1_exponent_structure(self, example1):
        nf = normal_form(example1)
        graph = build_block_graph(nf)
        profile = exponent_profile(example1, np.geomspace(1e-6, 1e-10, 5),
                                   nf=nf, graph=graph)
        # known limiting exponents, equally spaced by kappa = 1/2
        assert profile.f_hat == pytest.approx([-0.75, -0.25, 0.25, 0.75], abs=5e-3)
        assert profile.delta == pytest.approx(0.5, abs=5e-3)
        assert profile.delta_hat == pytest.approx(0.5, abs=5e-3)
        assert minmax_defect(profile.f_hat, graph).max() <= 5e-3
        assert successor_weight_slack(profile.weights, graph) <= 5e-3

    def test_block_means_monotone_along_lhd(self, example3):
        nf = normal_form(example3)
        graph = build_block_graph(nf)
        profile = exponent_profile(example3, np.geomspace(1e-5, 1e-9, 4),
                                   nf=nf, graph=graph)
        for (l, k), labels in graph.edges.items():
            if "LHD" in labels:
                assert np.all(profile.vtilde_means[l] <= 5 * profile.vtilde_means[k])
                assert np.all(profile.wtilde_means[k] <= 5 * profile.wtilde_means[l])


class TestFunctionalJ:
    def test_perron_closed_form(self, example2):
        rho, perron = cached_spectral_radius(example2)
        tau = 0.05
        expected = tau / rho - np.log(tau / rho)
        assert functional_J(example2, tau, perron) == pytest.approx(expected, rel=1e-12)

    def test_scale_invariance_and_lower_bound(self, example1):
        rng = np.random.default_rng(0)
        tau = 0.01
        for _ in range(20):
            x = np.exp(rng.uniform(-1, 1, 4))
            j = functional_J(example1, tau, x)
            assert j >= 1.0
            assert functional_J(example1, tau, 2.0 * x) == pytest.approx(j, rel=1e-12)

    def test_domain_violation_reports_index(self):
        m = VarianceProfile(np.array([[1.0, 1.0], [1.0, 1.0]]))
        with pytest.raises(DomainViolationError) as err:
            functional_J(m, 0.5, np.array([1.0, -2.0]))
        assert err.value.index == 1
        with pytest.raises(DomainViolationError) as err:
            functional_J(m, 1.9, np.array([1.0, 1e-6]))
        assert err.value.index == 0  # 1.9 * 1 / (1 + 1e-6) >= 1


class TestVariational:
    def test_solution_beats_probes(self, example1):
        report = verify_variational(example1, tau=0.01, trials=300, seed=5)
        assert report.violations == 0
        assert report.min_gap >= -1e-10
        assert report.j_solution <= report.perron_bound + 1e-12
        assert report.j_perron == pytest.approx(report.perron_bound, rel=1e-12)

    def test_scalar_unique_minimum(self):
        m = VarianceProfile(np.array([[1.0]]))
        report = verify_variational(m, tau=0.3, trials=100, seed=1)
        assert report.violations == 0

    def test_perturbation_second_order(self, example2):
        tau = 1e-3
        sol = solve_dyson(example2, DysonParams(tau=tau))
        j_v = functional_J(example2, tau, sol.v)
        rng = np.random.default_rng(3)
        direction = rng.standard_normal(4)
        gaps = []
        for eps in (1e-3, 1e-4):
            j_pert = functional_J(example2, tau, sol.v * (1 + eps * direction))
            gap = j_pert - j_v
            assert gap >= -1e-12  # no first-order decrease
            gaps.append(gap)
        # quadratic scaling: shrinking eps by 10 shrinks the gap by ~100
        assert gaps[1] <= gaps[0] / 50
