"""Finite-sample estimators of the weighted-risk minimizer.

Three estimators: per-group least squares, the known-covariance estimator
that blends the group fits through the true covariances, and pooled least
squares on the weighted empirical risk.  All solves are factorization-based
with explicit rank detection; nothing is regularized, degenerate inputs are
errors rather than silently smoothed fits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .datagen import GroupDataset
from .model import (
    BLUE,
    EIG_RATIO_TOL,
    RED,
    DimensionMismatchError,
    ModelValidationError,
    PopulationModel,
    as_weight,
    optimal_beta_lambda,
    validate_spd,
)


class RankDeficientError(ArithmeticError):
    """A (blended) sample covariance is numerically rank deficient."""

    def __init__(self, what: str, min_eig: float, max_eig: float):
        self.what = what
        self.min_eig = min_eig
        self.max_eig = max_eig
        super().__init__(
            f"{what} sample covariance is rank deficient "
            f"(eigenvalues in [{min_eig:.3e}, {max_eig:.3e}])"
        )


def solve_spd(mat: np.ndarray, rhs: np.ndarray, what: str) -> np.ndarray:
    """Solve mat @ x = rhs for symmetric PD ``mat`` with a pivot-ratio rank check."""
    eigs = np.linalg.eigvalsh(mat)
    if eigs[-1] <= 0.0 or eigs[0] <= EIG_RATIO_TOL * eigs[-1]:
        raise RankDeficientError(what, float(eigs[0]), float(eigs[-1]))
    factor = cho_factor(mat, lower=True, check_finite=False)
    return cho_solve(factor, rhs, check_finite=False)


@dataclass(frozen=True)
class EmpiricalMoments:
    """Uncentered second moments of one group's sample."""

    sigma_hat: np.ndarray
    nu_hat: np.ndarray
    n: int

    def min_eig(self) -> float:
        return float(np.linalg.eigvalsh(self.sigma_hat)[0])


def empirical_moments(data: GroupDataset) -> EmpiricalMoments:
    """Sample covariance (about zero, matching the model's moments) and cross-moment."""
    xs, ys = data.xs, data.ys
    sigma_hat = xs.T @ xs / data.n
    nu_hat = xs.T @ ys / data.n
    return EmpiricalMoments(sigma_hat=sigma_hat, nu_hat=nu_hat, n=data.n)


@dataclass(frozen=True)
class EstimatorKind:
    """Which estimator to fit; ``group`` is required only for single-group OLS."""

    kind: str
    group: str | None = None

    KINDS = ("group_ols", "known_cov", "pooled_ols")

    def __post_init__(self) -> None:
        if self.kind not in self.KINDS:
            raise ModelValidationError(f"kind must be one of {self.KINDS}, got {self.kind!r}")
        if self.kind == "group_ols":
            if self.group not in (RED, BLUE):
                raise ModelValidationError("group_ols requires group 'red' or 'blue'")
        elif self.group is not None:
            raise ModelValidationError(f"{self.kind} takes no group")

    @classmethod
    def group_ols(cls, group: str) -> "EstimatorKind":
        return cls("group_ols", group)

    @classmethod
    def known_cov(cls) -> "EstimatorKind":
        return cls("known_cov")

    @classmethod
    def pooled_ols(cls) -> "EstimatorKind":
        return cls("pooled_ols")


def group_ols(data: GroupDataset) -> np.ndarray:
    """Least-squares fit for a single group; errors if the design is rank deficient."""
    moments = empirical_moments(data)
    return solve_spd(moments.sigma_hat, moments.nu_hat, f"group {data.group}")


def known_cov_estimator(
    data_r: GroupDataset,
    data_b: GroupDataset,
    sigma_r: np.ndarray,
    sigma_b: np.ndarray,
    lam,
) -> np.ndarray:
    """Blend the two group fits through the true covariances.

    Keeps the structure of the population optimum but substitutes each
    group's fitted coefficients; unbiased for the weighted optimum.  At the
    endpoint weights this is exactly the single-group fit, so those cases
    short-circuit to the same solve path.
    """
    w = as_weight(lam)
    if w == 0.0:
        return group_ols(data_b)
    if w == 1.0:
        return group_ols(data_r)
    sigma_r = np.asarray(sigma_r, dtype=float)
    sigma_b = np.asarray(sigma_b, dtype=float)
    validate_spd(sigma_r, "sigma_r")
    validate_spd(sigma_b, "sigma_b")
    if sigma_r.shape != sigma_b.shape or sigma_r.shape[0] != data_r.d:
        raise DimensionMismatchError("covariance dimensions must match the data")
    beta_r_hat = group_ols(data_r)
    beta_b_hat = group_ols(data_b)
    sig_lam = w * sigma_r + (1.0 - w) * sigma_b
    rhs = w * (sigma_r @ beta_r_hat) + (1.0 - w) * (sigma_b @ beta_b_hat)
    return solve_spd(sig_lam, rhs, "blended true")


def pooled_ols(data_r: GroupDataset, data_b: GroupDataset, lam) -> np.ndarray:
    """Minimizer of the weighted empirical risk over both samples."""
    w = as_weight(lam)
    if w == 0.0:
        return group_ols(data_b)
    if w == 1.0:
        return group_ols(data_r)
    if data_r.d != data_b.d:
        raise DimensionMismatchError("group datasets disagree on covariate dimension")
    mom_r = empirical_moments(data_r)
    mom_b = empirical_moments(data_b)
    sig_lam = w * mom_r.sigma_hat + (1.0 - w) * mom_b.sigma_hat
    nu_lam = w * mom_r.nu_hat + (1.0 - w) * mom_b.nu_hat
    return solve_spd(sig_lam, nu_lam, "pooled")


def fit_estimator(
    kind: EstimatorKind,
    data_r: GroupDataset,
    data_b: GroupDataset,
    lam,
    model: PopulationModel | None = None,
) -> np.ndarray:
    """Dispatch on the estimator kind; known_cov needs the model's true covariances."""
    if kind.kind == "group_ols":
        return group_ols(data_r if kind.group == RED else data_b)
    if kind.kind == "pooled_ols":
        return pooled_ols(data_r, data_b, lam)
    if model is None:
        raise ModelValidationError("known_cov estimation requires the true covariances")
    return known_cov_estimator(data_r, data_b, model.red.sigma, model.blue.sigma, lam)


def cross_term(model: PopulationModel, lam, beta_est) -> tuple[float, float]:
    """Per-group cross terms of the excess decomposition at ``beta_est``.

    Their weighted sum vanishes for any estimate whatsoever (it is the
    stationarity identity applied to the displacement), so one group's gain
    from estimation error is always the other group's loss.
    """
    w = as_weight(lam)
    beta_est = np.asarray(beta_est, dtype=float)
    b_lam = optimal_beta_lambda(model, w)
    delta = beta_est - b_lam
    term_r = float(delta @ (model.red.sigma @ (b_lam - model.red.beta)))
    term_b = float(delta @ (model.blue.sigma @ (b_lam - model.blue.beta)))
    return term_r, term_b
