"""Population operator checks: fixed points, oracles, consistency."""

import math

import numpy as np
import pytest

from ssem.errors import DegenerateDenominator, DomainError
from ssem.model import (
    MixtureParams,
    ModelKind,
    gaussian_spec,
    poisson_spec,
    responsibilities,
)
from ssem.population import (
    PopulationModel,
    QuadratureScheme,
    c_theta,
    dm0_dtheta_sym2,
    expect,
    pop_m0,
    pop_m_gamma,
    run_population_em,
    theta_star_from_labels,
)
from ssem.sampling import SampleConfig, sample_dataset

GMM = ModelKind.gmm()
SYM2 = ModelKind.sym2()

GMM2 = MixtureParams([0.5, 0.5], [-1.0, 1.0])
GMM3 = MixtureParams([0.2, 0.5, 0.3], [-2.0, 0.0, 2.0])


def mc_expectation(kind, star, f, n=10_000_000, seed=77):
    """Monte Carlo oracle for E[f(Y)] under the true marginal."""
    ds = sample_dataset(kind, star, SampleConfig(seed=seed, m=0, n=n))
    vals = f(ds.unlabeled_y)
    return vals.mean(), vals.std() / math.sqrt(n)


class TestExpect:
    def test_density_normalization(self):
        pm = PopulationModel.sym2(1.5, 0.0)
        assert expect(pm, lambda y: np.ones_like(y)) == pytest.approx(1.0, abs=1e-10)

    def test_symmetric_first_moment(self):
        pm = PopulationModel.sym2(2.0, 0.0)
        assert expect(pm, lambda y: y) == pytest.approx(0.0, abs=1e-10)

    def test_second_moment(self):
        pm = PopulationModel.sym2(1.5, 0.0)
        assert expect(pm, lambda y: y * y) == pytest.approx(3.25, abs=1e-10)

    def test_poisson_discrete_moments(self):
        star = MixtureParams([0.5, 0.5], [math.log(2.0), math.log(5.0)])
        pm = PopulationModel(ModelKind.expfam(poisson_spec()), star, 0.0)
        assert expect(pm, lambda y: np.ones_like(y)) == pytest.approx(1.0, abs=1e-12)
        assert expect(pm, lambda y: y) == pytest.approx(3.5, abs=1e-10)


class TestCTheta:
    def test_sym2_always_half(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            pm = PopulationModel.sym2(float(rng.uniform(0.0, 4.0)),
                                      float(rng.uniform(0.0, 0.9)))
            probe = MixtureParams.symmetric(float(rng.uniform(-4.0, 4.0)))
            for k in (0, 1):
                assert c_theta(pm, probe, k) == pytest.approx(0.5, abs=1e-10)

    def test_expected_responsibility_is_weight_at_truth(self):
        pm = PopulationModel(GMM, GMM3, 0.0)
        for k in range(3):
            assert c_theta(pm, GMM3, k) == pytest.approx(GMM3.pi[k], abs=1e-10)

    def test_far_separated_saturates_to_weights(self):
        star = MixtureParams([0.5, 0.5], [-10.0, 10.0])
        pm = PopulationModel(GMM, star, 0.0)
        value = c_theta(pm, star, 0)
        assert value == pytest.approx(0.5, abs=1e-6)
        mc, se = mc_expectation(
            GMM, star, lambda y: responsibilities(GMM, star, y)[:, 0],
            n=1_000_000)
        assert abs(value - mc) < 4 * se

    def test_equal_weight_relabeling_symmetry(self):
        pm = PopulationModel(GMM, GMM2, 0.0)
        assert c_theta(pm, GMM2, 0) == pytest.approx(c_theta(pm, GMM2, 1),
                                                     abs=1e-10)


class TestPopM0:
    def test_zero_probe_maps_to_zero(self):
        # At probe 0 the responsibilities are identically 1/2, so the tied
        # update vanishes whatever the truth.
        for star in (0.0, 1.0, 2.5):
            pm = PopulationModel.sym2(star, 0.0)
            assert pop_m0(pm, MixtureParams.symmetric(0.0), 1) == pytest.approx(
                0.0, abs=1e-10)

    def test_degenerate_truth_decays_toward_zero(self):
        # With a point-mass truth the update strictly shrinks positive
        # probes (tanh(x) < x), approaching the origin only in the limit.
        pm = PopulationModel.sym2(0.0, 0.0)
        for theta in (0.5, 1.0, 3.0):
            value = pop_m0(pm, MixtureParams.symmetric(theta), 1)
            assert 0.0 < value < theta

    def test_between_truth_and_probe(self):
        pm = PopulationModel.sym2(1.5, 0.0)
        value = pop_m0(pm, MixtureParams.symmetric(3.0), 1)
        assert 1.5 < value < 3.0
        mc, se = mc_expectation(
            SYM2, MixtureParams.symmetric(1.5),
            lambda y: -2.0 * responsibilities(
                SYM2, MixtureParams.symmetric(3.0), y)[:, 0] * y)
        assert abs(value - mc) < 4 * se

    def test_component_sign_convention(self):
        pm = PopulationModel.sym2(1.0, 0.0)
        probe = MixtureParams.symmetric(2.0)
        assert pop_m0(pm, probe, 0) == -pop_m0(pm, probe, 1)

    def test_degenerate_denominator(self):
        pm = PopulationModel(GMM, GMM2, 0.0)
        probe = MixtureParams([0.5, 0.5], [0.0, 40.0])
        with pytest.raises(DegenerateDenominator):
            pop_m0(pm, probe, 1)


class TestPopMGamma:
    def test_gamma_zero_is_bitwise_m0(self):
        pm = PopulationModel(GMM, GMM3, 0.0)
        probe = MixtureParams(GMM3.pi, [-2.4, 0.3, 2.5])
        for k in range(3):
            assert pop_m_gamma(pm, probe, k) == pop_m0(pm, probe, k)

    @pytest.mark.parametrize("gamma", [0.0, 0.25, 0.5, 0.9])
    def test_fixed_point_all_kinds(self, gamma):
        models = [
            PopulationModel.sym2(1.5, gamma),
            PopulationModel(GMM, GMM2, gamma),
            PopulationModel(GMM, GMM3, gamma),
            PopulationModel(ModelKind.expfam(gaussian_spec()), GMM2, gamma),
            PopulationModel(
                ModelKind.expfam(poisson_spec()),
                MixtureParams([0.5, 0.5], [math.log(2.0), math.log(5.0)]), gamma),
        ]
        for pm in models:
            for k in range(pm.theta_star.K):
                value = pop_m_gamma(pm, pm.theta_star, k)
                assert abs(value - pm.theta_star.theta[k]) <= 2e-10

    def test_sym2_two_code_paths_agree(self):
        # The tied scalar update must match the generic two-component ratio
        # evaluated on the same mixture (independent code route).
        star_pair = MixtureParams.symmetric(1.0)
        probe = MixtureParams.symmetric(2.0)
        pm_sym = PopulationModel.sym2(1.0, 0.5)
        pm_gmm = PopulationModel(GMM, star_pair, 0.5)
        for k in (0, 1):
            assert pop_m_gamma(pm_sym, probe, k) == pytest.approx(
                pop_m_gamma(pm_gmm, probe, k), abs=1e-9)

    def test_sym2_convex_combination_identity(self):
        pm = PopulationModel.sym2(1.0, 0.5)
        pm0 = pm.with_gamma(0.0)
        probe = MixtureParams.symmetric(2.0)
        lhs = pop_m_gamma(pm, probe, 1)
        rhs = 0.5 * pop_m0(pm0, probe, 1) + 0.5 * 1.0
        assert lhs == pytest.approx(rhs, abs=1e-12)

    def test_gamma_one_rejected(self):
        with pytest.raises(DomainError):
            PopulationModel.sym2(1.0, 1.0)


class TestThetaStarFromLabels:
    def test_gaussian_exact(self):
        pm = PopulationModel(GMM, GMM3, 0.3)
        for k in range(3):
            assert theta_star_from_labels(pm, k) == GMM3.theta[k]

    def test_poisson_inversion(self):
        star = MixtureParams([0.5, 0.5], [math.log(3.0), math.log(7.0)])
        pm = PopulationModel(ModelKind.expfam(poisson_spec()), star, 0.3)
        assert theta_star_from_labels(pm, 0) == pytest.approx(math.log(3.0),
                                                              abs=1e-12)

    def test_sym2_pair(self):
        pm = PopulationModel.sym2(1.25, 0.0)
        assert theta_star_from_labels(pm, 0) == -1.25
        assert theta_star_from_labels(pm, 1) == 1.25


class TestDerivative:
    def test_at_zero_equals_second_moment(self):
        pm = PopulationModel.sym2(1.5, 0.0)
        assert dm0_dtheta_sym2(pm, 0.0) == pytest.approx(1.0 + 1.5 ** 2,
                                                         abs=1e-9)

    def test_bounded_by_supremum_at_truth(self):
        pm = PopulationModel.sym2(2.0, 0.0)
        assert dm0_dtheta_sym2(pm, 2.0) <= math.exp(-2.0) + 1e-8

    def test_matches_central_difference(self):
        rng = np.random.default_rng(11)
        for _ in range(5):
            star = float(rng.uniform(0.4, 3.0))
            theta = float(rng.uniform(0.2, 2.0 * star + 1.0))
            pm = PopulationModel.sym2(star, 0.0)
            analytic = dm0_dtheta_sym2(pm, theta)
            h = 1e-5
            fd = (pop_m0(pm, MixtureParams.symmetric(theta + h), 1)
                  - pop_m0(pm, MixtureParams.symmetric(theta - h), 1)) / (2 * h)
            assert analytic >= 0.0
            assert abs(analytic - fd) < 1e-6

    def test_requires_sym2_and_nonnegative_probe(self):
        pm = PopulationModel(GMM, GMM2, 0.0)
        with pytest.raises(DomainError):
            dm0_dtheta_sym2(pm, 1.0)
        with pytest.raises(DomainError):
            dm0_dtheta_sym2(PopulationModel.sym2(1.0, 0.0), -0.5)


class TestShapeOnRay:
    def test_monotone_concave_above_truth(self):
        pm = PopulationModel.sym2(1.5, 0.0)
        grid = np.arange(1.5, 4.0 + 1e-9, 0.1)
        values = np.array([pop_m0(pm, MixtureParams.symmetric(t), 1)
                           for t in grid])
        diffs = np.diff(values)
        assert np.all(diffs >= -2e-10)
        assert np.all(np.diff(diffs) <= 2e-10)


class TestFiniteSampleConsistency:
    def test_sym2_m_step_matches_population(self):
        from ssem.em import m_step_sym2
        from ssem.sampling import SampleConfig

        star, gamma, probe = 1.2, 0.5, 2.1
        pm = PopulationModel.sym2(star, gamma)
        target = pop_m_gamma(pm, MixtureParams.symmetric(probe), 1)

        total = 1_000_000
        m = int(round(gamma * total))
        ds = sample_dataset(SYM2, MixtureParams.symmetric(star),
                            SampleConfig(seed=29, m=m, n=total - m))
        estimate = m_step_sym2(ds, probe)

        lab = (1.0 - 2.0 * (ds.labeled_x == 0)) * ds.labeled_y
        q = responsibilities(SYM2, MixtureParams.symmetric(probe),
                             ds.unlabeled_y)[:, 0]
        unl = (1.0 - 2.0 * q) * ds.unlabeled_y
        se = math.sqrt(ds.m * lab.var() + ds.n * unl.var()) / total
        assert abs(estimate - target) < 4 * se


class TestPopulationEm:
    def test_starts_at_truth_stays(self):
        pm = PopulationModel.sym2(2.0, 0.0)
        traj = run_population_em(pm, pm.theta_star, max_iters=5, tol=1e-10)
        assert traj.n_steps <= 1
        assert traj.errors[-1] < 1e-10

    def test_labels_accelerate_convergence(self):
        theta0 = MixtureParams.symmetric(4.0)
        slow = run_population_em(PopulationModel.sym2(2.0, 0.0), theta0,
                                 max_iters=60, tol=1e-9)
        fast = run_population_em(PopulationModel.sym2(2.0, 0.9), theta0,
                                 max_iters=60, tol=1e-9)
        assert fast.n_steps < slow.n_steps


def test_scheme_validation():
    with pytest.raises(ValueError):
        QuadratureScheme(range_sigma=4.0)
    with pytest.raises(ValueError):
        QuadratureScheme(abs_tol=0.0)
