"""Population model, risks, the weighted optimum, and frontier tracing."""

import numpy as np
import pytest

from fafrontier.model import (
    BLUE,
    RED,
    FrontierMonotonicityError,
    GroupSpec,
    ModelValidationError,
    PopulationModel,
    RiskPair,
    Weight,
    default_lambda_grid,
    excess_risk_identity,
    fa_dominates,
    group_balance_check,
    optimal_beta_lambda,
    per_group_excess_identity,
    population_risk,
    stationarity_residual,
    trace_frontier,
    weighted_risk,
)
from fafrontier.datagen import sample_group
from fafrontier.rng import RngSpec

from helpers import random_model

# Hand-solved 2x2 instance used throughout: Sigma_lam = 1.5 I at lam = 1/2 and
# nu_lam = (1, 1), so the weighted optimum is exactly (2/3, 2/3).
ORACLE_MODEL = PopulationModel.from_arrays(
    beta_r=[1.0, 0.0],
    sigma_r=np.diag([2.0, 1.0]),
    beta_b=[0.0, 1.0],
    sigma_b=np.diag([1.0, 2.0]),
    noise_var=1.0,
)


class TestValidation:
    def test_bad_label_rejected(self):
        with pytest.raises(ModelValidationError, match="label"):
            GroupSpec(beta=[0.0], sigma=[[1.0]], noise_var=1.0, label="nope")

    def test_asymmetric_sigma_rejected(self):
        with pytest.raises(ModelValidationError, match="symmetric"):
            GroupSpec(
                beta=[0.0, 0.0],
                sigma=[[1.0, 0.5], [0.2, 1.0]],
                noise_var=1.0,
                label=RED,
            )

    def test_non_spd_sigma_rejected(self):
        with pytest.raises(ModelValidationError, match="positive definite"):
            GroupSpec(beta=[0.0, 0.0], sigma=np.diag([1.0, 0.0]), noise_var=1.0, label=RED)
        with pytest.raises(ModelValidationError, match="positive definite"):
            GroupSpec(beta=[0.0], sigma=[[-1.0]], noise_var=1.0, label=RED)

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ModelValidationError):
            GroupSpec(beta=[0.0, 0.0, 0.0], sigma=np.eye(2), noise_var=1.0, label=RED)
        with pytest.raises(ModelValidationError):
            PopulationModel.from_arrays([0.0], np.eye(1), [0.0, 0.0], np.eye(2), 1.0)

    def test_negative_noise_rejected(self):
        with pytest.raises(ModelValidationError):
            PopulationModel.from_arrays([0.0], np.eye(1), [0.0], np.eye(1), -0.5)

    def test_weight_range(self):
        with pytest.raises(ModelValidationError):
            Weight(-0.01)
        with pytest.raises(ModelValidationError):
            Weight(1.01)
        assert float(Weight(0.25)) == 0.25

    def test_spherical_radius(self):
        spec = GroupSpec(beta=[0.0, 0.0], sigma=2.25 * np.eye(2), noise_var=0.0, label=RED)
        assert spec.spherical_radius() == pytest.approx(1.5, rel=1e-12)
        assert ORACLE_MODEL.red.spherical_radius() is None


class TestPopulationRisk:
    def test_group_optimum_attains_noise_floor(self):
        # risk of the group-optimal coefficients is exactly the noise variance
        rng = np.random.default_rng(11)
        for d in (1, 2, 4):
            model = random_model(rng, d)
            assert population_risk(model, RED, model.red.beta) == pytest.approx(
                model.noise_var, abs=1e-14
            )
            assert population_risk(model, BLUE, model.blue.beta) == pytest.approx(
                model.noise_var, abs=1e-14
            )

    def test_one_dimensional_value(self):
        model = PopulationModel.from_arrays([0.0], [[1.0]], [0.0], [[1.0]], 1.0)
        assert population_risk(model, RED, [2.0]) == pytest.approx(5.0, rel=1e-15)

    def test_matches_monte_carlo_squared_error(self):
        # Independent oracle: average of (x . beta - y)^2 over one million draws.
        rng = np.random.default_rng(202)
        model = random_model(rng, 3, noise_var=0.7)
        beta = rng.normal(size=3)
        data = sample_group(model, RED, 1_000_000, RngSpec(99, 0))
        sq_err = (data.xs @ beta - data.ys) ** 2
        mc = float(np.mean(sq_err))
        se = float(np.std(sq_err, ddof=1) / np.sqrt(len(sq_err)))
        assert abs(population_risk(model, RED, beta) - mc) <= 3 * se

    def test_dimension_checked(self):
        with pytest.raises(ModelValidationError):
            population_risk(ORACLE_MODEL, RED, [1.0])


class TestWeightedRisk:
    def test_endpoints(self):
        beta = np.array([0.3, -0.4])
        assert weighted_risk(ORACLE_MODEL, 1.0, beta) == population_risk(
            ORACLE_MODEL, RED, beta
        )
        assert weighted_risk(ORACLE_MODEL, 0.0, beta) == population_risk(
            ORACLE_MODEL, BLUE, beta
        )

    def test_symmetric_midpoint(self):
        # Swap-invariant model evaluated midway: both groups carry the same risk.
        beta = np.array([0.5, 0.5])
        r_r = population_risk(ORACLE_MODEL, RED, beta)
        r_b = population_risk(ORACLE_MODEL, BLUE, beta)
        assert r_r == pytest.approx(r_b, rel=1e-14)
        assert weighted_risk(ORACLE_MODEL, 0.5, beta) == pytest.approx(r_r, rel=1e-14)


class TestOptimalBeta:
    def test_endpoints_exact(self):
        assert np.array_equal(optimal_beta_lambda(ORACLE_MODEL, 1.0), ORACLE_MODEL.red.beta)
        assert np.array_equal(optimal_beta_lambda(ORACLE_MODEL, 0.0), ORACLE_MODEL.blue.beta)

    def test_equal_covariances_interpolate(self):
        rng = np.random.default_rng(5)
        sigma = np.array([[2.0, 0.3], [0.3, 1.0]])
        model = PopulationModel.from_arrays(
            rng.normal(size=2), sigma, rng.normal(size=2), sigma, 0.5
        )
        for lam in (0.2, 0.5, 0.9):
            expected = lam * model.red.beta + (1 - lam) * model.blue.beta
            np.testing.assert_allclose(
                optimal_beta_lambda(model, lam), expected, rtol=1e-12, atol=1e-14
            )

    def test_two_by_two_oracle(self):
        # Pre-solved by hand: 1.5 x = 1 per coordinate.
        np.testing.assert_allclose(
            optimal_beta_lambda(ORACLE_MODEL, 0.5), [2.0 / 3.0, 2.0 / 3.0], rtol=1e-14
        )

    def test_equal_betas_exact(self):
        beta = np.array([0.7, -0.2])
        model = PopulationModel.from_arrays(
            beta, np.diag([2.0, 1.0]), beta.copy(), np.diag([1.0, 3.0]), 1.0
        )
        for lam in (0.0, 0.3, 0.5, 0.77, 1.0):
            assert np.array_equal(optimal_beta_lambda(model, lam), beta)

    def test_stationarity_property(self):
        rng = np.random.default_rng(31)
        for _ in range(200):
            d = int(rng.integers(1, 7))
            model = random_model(rng, d)
            lam = float(rng.uniform())
            beta = optimal_beta_lambda(model, lam)
            residual = np.linalg.norm(stationarity_residual(model, lam, beta))
            scale = np.linalg.norm(model.red.beta) + np.linalg.norm(model.blue.beta) + 1.0
            assert residual <= 1e-8 * scale

    def test_minimizer_property(self):
        rng = np.random.default_rng(47)
        model = random_model(rng, 3)
        lam = 0.37
        best = weighted_risk(model, lam, optimal_beta_lambda(model, lam))
        for _ in range(100):
            other = rng.normal(scale=2.0, size=3)
            assert best <= weighted_risk(model, lam, other) + 1e-12


class TestExcessIdentities:
    def test_zero_at_optimum(self):
        lhs, rhs = excess_risk_identity(ORACLE_MODEL, 0.4, optimal_beta_lambda(ORACLE_MODEL, 0.4))
        assert lhs == pytest.approx(0.0, abs=1e-12)
        assert rhs == pytest.approx(0.0, abs=1e-12)

    def test_identity_at_red_optimum(self):
        rng = np.random.default_rng(13)
        for _ in range(25):
            model = random_model(rng, int(rng.integers(1, 5)))
            lhs, rhs = excess_risk_identity(model, 0.5, model.red.beta)
            assert abs(lhs - rhs) <= 1e-9 * (1.0 + abs(lhs))

    def test_identity_random_instances(self):
        rng = np.random.default_rng(17)
        for _ in range(100):
            model = random_model(rng, 4)
            beta = rng.normal(size=4)
            lam = float(rng.uniform())
            lhs, rhs = excess_risk_identity(model, lam, beta)
            assert abs(lhs - rhs) <= 1e-9 * (1.0 + abs(lhs))

    def test_per_group_identity(self):
        rng = np.random.default_rng(19)
        for _ in range(100):
            d = int(rng.integers(1, 6))
            model = random_model(rng, d)
            beta = rng.normal(size=d)
            lam = float(rng.uniform())
            for group in (RED, BLUE):
                lhs, quad, cross = per_group_excess_identity(model, lam, group, beta)
                assert abs(lhs - (quad + cross)) <= 1e-9 * (1.0 + abs(lhs))

    def test_per_group_identity_trivial_points(self):
        lam = 0.3
        b_lam = optimal_beta_lambda(ORACLE_MODEL, lam)
        lhs, quad, cross = per_group_excess_identity(ORACLE_MODEL, lam, RED, b_lam)
        assert (lhs, quad, cross) == (0.0, 0.0, 0.0)
        # at the group optimum the group does at least as well as anywhere
        lhs, _, _ = per_group_excess_identity(ORACLE_MODEL, lam, RED, ORACLE_MODEL.red.beta)
        assert lhs <= 0.0

    def test_weighted_per_group_matches_weighted_excess(self):
        rng = np.random.default_rng(23)
        for _ in range(50):
            model = random_model(rng, 3)
            beta = rng.normal(size=3)
            lam = float(rng.uniform())
            lhs, _ = excess_risk_identity(model, lam, beta)
            lhs_r, _, _ = per_group_excess_identity(model, lam, RED, beta)
            lhs_b, _, _ = per_group_excess_identity(model, lam, BLUE, beta)
            combo = lam * lhs_r + (1 - lam) * lhs_b
            assert abs(combo - lhs) <= 1e-9 * (1.0 + abs(lhs))


class TestFaDominance:
    def test_plain_improvement(self):
        assert fa_dominates(RiskPair(1.0, 1.0), RiskPair(2.0, 2.0))

    def test_disparity_violation(self):
        # lower red risk but a wider gap between groups
        assert not fa_dominates(RiskPair(1.0, 3.0), RiskPair(2.0, 2.0))

    def test_reflexive_is_false(self):
        p = RiskPair(1.5, 2.5)
        assert not fa_dominates(p, p)

    def test_single_strict_axis_suffices(self):
        # equal blue risk and equal disparity, strictly better red risk
        assert fa_dominates(RiskPair(1.0, 2.0), RiskPair(3.0, 2.0))


class TestFrontier:
    def test_endpoint_grid(self):
        points = trace_frontier(ORACLE_MODEL, [0.0, 1.0])
        assert np.array_equal(points[0].beta, ORACLE_MODEL.blue.beta)
        assert np.array_equal(points[1].beta, ORACLE_MODEL.red.beta)
        assert points[0].risks.risk_b == pytest.approx(ORACLE_MODEL.noise_var)
        assert points[1].risks.risk_r == pytest.approx(ORACLE_MODEL.noise_var)

    def test_degenerate_model_single_point(self):
        beta = np.array([0.4, 0.1])
        model = PopulationModel.from_arrays(
            beta, np.diag([2.0, 1.0]), beta.copy(), np.eye(2), 0.25
        )
        points = trace_frontier(model, default_lambda_grid(11))
        for p in points:
            assert p.risks.risk_r == pytest.approx(0.25, abs=1e-15)
            assert p.risks.risk_b == pytest.approx(0.25, abs=1e-15)

    def test_pairwise_non_dominance(self):
        points = trace_frontier(ORACLE_MODEL, default_lambda_grid(101))
        assert len(points) == 101
        for i, p in enumerate(points):
            for j, q in enumerate(points):
                if i != j:
                    assert not fa_dominates(p.risks, q.risks)

    def test_monotone_risks(self):
        points = trace_frontier(ORACLE_MODEL, default_lambda_grid(33))
        risk_r = [p.risks.risk_r for p in points]
        risk_b = [p.risks.risk_b for p in points]
        assert all(b <= a + 1e-10 for a, b in zip(risk_r, risk_r[1:]))
        assert all(b >= a - 1e-10 for a, b in zip(risk_b, risk_b[1:]))

    def test_empty_and_unsorted_grids_rejected(self):
        with pytest.raises(ModelValidationError, match="empty"):
            trace_frontier(ORACLE_MODEL, [])
        with pytest.raises(ModelValidationError, match="ascending"):
            trace_frontier(ORACLE_MODEL, [0.5, 0.2])

    def test_grid_needs_two_points(self):
        with pytest.raises(ModelValidationError):
            default_lambda_grid(1)


class TestGroupBalance:
    def test_equal_betas_zero_gaps(self):
        beta = np.array([1.0, 2.0])
        model = PopulationModel.from_arrays(beta, np.eye(2), beta.copy(), 2 * np.eye(2), 0.3)
        diag = group_balance_check(model)
        assert diag.is_balanced
        assert diag.gap_at_red_optimum == pytest.approx(0.0, abs=1e-14)
        assert diag.gap_at_blue_optimum == pytest.approx(0.0, abs=1e-14)

    def test_strict_gap_when_betas_differ(self):
        diag = group_balance_check(ORACLE_MODEL)
        assert diag.gap_at_red_optimum > 0.0
        assert population_risk(ORACLE_MODEL, BLUE, ORACLE_MODEL.red.beta) > ORACLE_MODEL.noise_var

    def test_random_instances_balanced(self):
        rng = np.random.default_rng(61)
        for _ in range(100):
            model = random_model(rng, int(rng.integers(1, 6)))
            assert group_balance_check(model).is_balanced
