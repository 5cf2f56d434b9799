"""Population-level objects for two-group linear regression.

Holds the ground-truth model (per-group coefficients, covariances, shared
noise variance), closed-form group risks, the weighted-risk minimizer, and
the trade-off frontier traced by sweeping the group weight from 0 to 1.

All functions are pure; model objects are immutable after construction and
safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve

RED = "red"
BLUE = "blue"
GROUPS = (RED, BLUE)

# Numerical policy: symmetry is checked absolutely, positive-definiteness by
# the eigenvalue ratio (Assumption-style conditions carry no tolerance of
# their own, finite precision needs one).
SYMMETRY_TOL = 1e-10
EIG_RATIO_TOL = 1e-12
STATIONARITY_TOL = 1e-8
FRONTIER_MONOTONE_SLACK = 1e-10


class ModelError(ValueError):
    """Base class for model construction and usage errors."""


class ModelValidationError(ModelError):
    """A matrix or scalar failed validation (asymmetry, non-SPD, bad range)."""


class DimensionMismatchError(ModelValidationError):
    """Vector/matrix dimensions do not agree."""


class PreconditionError(ModelValidationError):
    """A stated sample-size or feasibility precondition is violated.

    Carries the violated inequality in the message so front ends can name it.
    """


def _as_vector(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ModelValidationError(f"{name} must be a 1-d real vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ModelValidationError(f"{name} contains non-finite entries")
    return arr


def _as_matrix(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ModelValidationError(f"{name} must be a square matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ModelValidationError(f"{name} contains non-finite entries")
    return arr


def validate_spd(sigma: np.ndarray, name: str = "sigma") -> tuple[float, float]:
    """Check symmetry and strict positive-definiteness; return (min, max) eigenvalues."""
    asym = float(np.max(np.abs(sigma - sigma.T))) if sigma.size else 0.0
    scale = max(1.0, float(np.max(np.abs(sigma)))) if sigma.size else 1.0
    if asym > SYMMETRY_TOL * scale:
        raise ModelValidationError(f"{name} is not symmetric (max asymmetry {asym:.3e})")
    eigs = np.linalg.eigvalsh(sigma)
    min_eig, max_eig = float(eigs[0]), float(eigs[-1])
    if max_eig <= 0.0 or min_eig <= EIG_RATIO_TOL * max_eig:
        raise ModelValidationError(
            f"{name} is not positive definite (eigenvalues in [{min_eig:.3e}, {max_eig:.3e}])"
        )
    return min_eig, max_eig


@dataclass(frozen=True)
class GroupSpec:
    """One group's regression coefficients and covariate covariance."""

    beta: np.ndarray
    sigma: np.ndarray
    noise_var: float
    label: str
    chol_lower: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        beta = _as_vector(self.beta, f"{self.label}.beta")
        sigma = _as_matrix(self.sigma, f"{self.label}.sigma")
        if self.label not in GROUPS:
            raise ModelValidationError(f"label must be one of {GROUPS}, got {self.label!r}")
        if beta.shape[0] != sigma.shape[0]:
            raise DimensionMismatchError(
                f"{self.label}: beta has length {beta.shape[0]} but sigma is {sigma.shape[0]}x{sigma.shape[1]}"
            )
        if not (np.isfinite(self.noise_var) and self.noise_var >= 0.0):
            raise ModelValidationError(f"{self.label}.noise_var must be a nonnegative real")
        validate_spd(sigma, f"{self.label}.sigma")
        sym = 0.5 * (sigma + sigma.T)
        chol = np.linalg.cholesky(sym)
        for attr, value in (("beta", beta), ("sigma", sym), ("chol_lower", chol)):
            value.setflags(write=False)
            object.__setattr__(self, attr, value)

    @property
    def d(self) -> int:
        return self.beta.shape[0]

    def mahalanobis_sq(self, v: np.ndarray) -> float:
        """||v||^2 in this group's covariance geometry, guaranteed >= 0."""
        w = self.chol_lower.T @ v
        return float(w @ w)

    def spherical_radius(self, rtol: float = 1e-9) -> float | None:
        """Return rho when sigma == rho^2 * I within rtol, else None."""
        diag = np.diagonal(self.sigma)
        rho_sq = float(diag[0])
        scale = max(rho_sq, 1e-300)
        if np.max(np.abs(diag - rho_sq)) > rtol * scale:
            return None
        off = self.sigma - np.diag(diag)
        if np.max(np.abs(off)) > rtol * scale:
            return None
        return float(np.sqrt(rho_sq))


@dataclass(frozen=True)
class PopulationModel:
    """Full two-group specification; the ground truth all risks refer to."""

    red: GroupSpec
    blue: GroupSpec
    noise_var: float

    def __post_init__(self) -> None:
        if self.red.label != RED or self.blue.label != BLUE:
            raise ModelValidationError("groups must be labeled 'red' and 'blue' respectively")
        if self.red.d != self.blue.d:
            raise DimensionMismatchError(
                f"red has d={self.red.d} but blue has d={self.blue.d}"
            )
        if not (np.isfinite(self.noise_var) and self.noise_var >= 0.0):
            raise ModelValidationError("noise_var must be a nonnegative real")
        if self.red.noise_var != self.noise_var or self.blue.noise_var != self.noise_var:
            raise ModelValidationError("both groups must share the model noise_var")

    @classmethod
    def from_arrays(cls, beta_r, sigma_r, beta_b, sigma_b, noise_var: float) -> "PopulationModel":
        return cls(
            red=GroupSpec(beta=beta_r, sigma=sigma_r, noise_var=noise_var, label=RED),
            blue=GroupSpec(beta=beta_b, sigma=sigma_b, noise_var=noise_var, label=BLUE),
            noise_var=noise_var,
        )

    @property
    def d(self) -> int:
        return self.red.d

    def group(self, label: str) -> GroupSpec:
        if label == RED:
            return self.red
        if label == BLUE:
            return self.blue
        raise ModelValidationError(f"unknown group label {label!r}")


@dataclass(frozen=True)
class Weight:
    """Preference weight on the red group's risk; 1 - value weighs blue."""

    value: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.value) and 0.0 <= self.value <= 1.0):
            raise ModelValidationError(f"weight must lie in [0, 1], got {self.value}")

    def __float__(self) -> float:
        return float(self.value)


def as_weight(lam) -> float:
    """Coerce a float or Weight to a validated float in [0, 1]."""
    return float(lam if isinstance(lam, Weight) else Weight(float(lam)))


@dataclass(frozen=True)
class RiskPair:
    risk_r: float
    risk_b: float

    @property
    def disparity(self) -> float:
        return abs(self.risk_r - self.risk_b)


@dataclass(frozen=True)
class FrontierPoint:
    lam: float
    beta: np.ndarray
    risks: RiskPair


@dataclass(frozen=True)
class GroupBalanceDiagnostic:
    """Self-test hook: both gaps are nonnegative for any valid model here."""

    is_balanced: bool
    gap_at_red_optimum: float
    gap_at_blue_optimum: float


def _check_beta(model: PopulationModel, beta) -> np.ndarray:
    arr = np.asarray(beta, dtype=float)
    if arr.shape != (model.d,):
        raise DimensionMismatchError(
            f"coefficient vector has shape {arr.shape}, expected ({model.d},)"
        )
    return arr


def population_risk(model: PopulationModel, group: str, beta) -> float:
    """Expected squared prediction error of ``beta`` on ``group``.

    Equals the squared covariance-weighted distance to the group optimum
    plus the irreducible noise floor.
    """
    g = model.group(group)
    b = _check_beta(model, beta)
    return g.mahalanobis_sq(b - g.beta) + model.noise_var


def weighted_risk(model: PopulationModel, lam, beta) -> float:
    """Convex combination of the two group risks with weight ``lam`` on red."""
    w = as_weight(lam)
    b = _check_beta(model, beta)
    return w * population_risk(model, RED, b) + (1.0 - w) * population_risk(model, BLUE, b)


def blended_covariance(model: PopulationModel, lam) -> np.ndarray:
    w = as_weight(lam)
    return w * model.red.sigma + (1.0 - w) * model.blue.sigma


def optimal_beta_lambda(model: PopulationModel, lam) -> np.ndarray:
    """Minimizer of the weighted risk.

    Solved as an anchored linear system (never by explicit inversion): the
    displacement from the nearer group optimum has right-hand side
    proportional to the coefficient gap, so the endpoints lam in {0, 1} and
    the degenerate case beta_r == beta_b come out exactly.
    """
    w = as_weight(lam)
    sig_lam = blended_covariance(model, w)
    if w <= 0.5:
        anchor, other, scale = model.blue, model.red, w
    else:
        anchor, other, scale = model.red, model.blue, 1.0 - w
    rhs = scale * (other.sigma @ (other.beta - anchor.beta))
    try:
        factor = cho_factor(sig_lam, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:  # unreachable for valid models; defensive
        raise ModelValidationError(f"blended covariance is singular at lam={w}") from exc
    return anchor.beta + cho_solve(factor, rhs, check_finite=False)


def stationarity_residual(model: PopulationModel, lam, beta) -> np.ndarray:
    """First-order optimality residual of the weighted risk at ``beta``."""
    w = as_weight(lam)
    b = _check_beta(model, beta)
    return w * (model.red.sigma @ (model.red.beta - b)) + (1.0 - w) * (
        model.blue.sigma @ (model.blue.beta - b)
    )


def excess_risk_identity(model: PopulationModel, lam, beta) -> tuple[float, float]:
    """Both sides of the weighted-excess identity.

    Left: weighted risk of ``beta`` minus the optimum's.  Right: the
    weighted sum of squared covariance-norm distances to the optimum.  The
    two agree to 1e-9 relative; the right side is the numerically safe form
    (a weighted sum of squares, hence nonnegative by construction).
    """
    w = as_weight(lam)
    b = _check_beta(model, beta)
    b_lam = optimal_beta_lambda(model, w)
    lhs = weighted_risk(model, w, b) - weighted_risk(model, w, b_lam)
    delta = b - b_lam
    rhs = w * model.red.mahalanobis_sq(delta) + (1.0 - w) * model.blue.mahalanobis_sq(delta)
    return lhs, rhs


def per_group_excess_identity(
    model: PopulationModel, lam, group: str, beta
) -> tuple[float, float, float]:
    """Per-group excess split into its quadratic and cross parts.

    Returns (lhs, quadratic, cross) where lhs is the group's risk change
    relative to the weighted optimum and lhs == quadratic + cross to 1e-9
    relative.  The cross part carries the sign that lets one group gain.
    """
    w = as_weight(lam)
    g = model.group(group)
    b = _check_beta(model, beta)
    b_lam = optimal_beta_lambda(model, w)
    lhs = population_risk(model, group, b) - population_risk(model, group, b_lam)
    delta = b - b_lam
    quad = g.mahalanobis_sq(delta)
    cross = 2.0 * float(delta @ (g.sigma @ (b_lam - g.beta)))
    return lhs, quad, cross


def fa_dominates(p1: RiskPair, p2: RiskPair) -> bool:
    """Weak improvement in both risks and the disparity, strict somewhere.

    Comparisons are exact on the given floats; callers that want tolerance
    must quantize first.
    """
    le_r = p1.risk_r <= p2.risk_r
    le_b = p1.risk_b <= p2.risk_b
    le_d = p1.disparity <= p2.disparity
    if not (le_r and le_b and le_d):
        return False
    return p1.risk_r < p2.risk_r or p1.risk_b < p2.risk_b or p1.disparity < p2.disparity


def default_lambda_grid(points: int = 101) -> np.ndarray:
    """Uniform weight grid including both endpoints."""
    if points < 2:
        raise ModelValidationError("grid needs at least 2 points")
    return np.linspace(0.0, 1.0, points)


class FrontierMonotonicityError(ModelError):
    """Traced risks violated the frontier's monotone structure."""


def frontier_point(model: PopulationModel, lam) -> FrontierPoint:
    w = as_weight(lam)
    beta = optimal_beta_lambda(model, w)
    risks = RiskPair(
        risk_r=population_risk(model, RED, beta),
        risk_b=population_risk(model, BLUE, beta),
    )
    return FrontierPoint(lam=w, beta=beta, risks=risks)


def trace_frontier(
    model: PopulationModel, grid: Iterable[float] | Sequence[float]
) -> list[FrontierPoint]:
    """One frontier point per weight, lowest to highest red weight.

    The red risk must be nonincreasing and the blue risk nondecreasing along
    the sweep; violations beyond a small slack indicate a broken model and
    raise rather than returning a corrupt frontier.
    """
    lams = [as_weight(x) for x in grid]
    if not lams:
        raise ModelValidationError("frontier grid is empty")
    if any(b < a for a, b in zip(lams, lams[1:])):
        raise ModelValidationError("frontier grid must be sorted ascending")
    points = [frontier_point(model, w) for w in lams]
    slack = FRONTIER_MONOTONE_SLACK * (
        1.0 + max(max(p.risks.risk_r, p.risks.risk_b) for p in points)
    )
    for prev, cur in zip(points, points[1:]):
        if cur.risks.risk_r > prev.risks.risk_r + slack:
            raise FrontierMonotonicityError(
                f"red risk increased from {prev.risks.risk_r!r} to {cur.risks.risk_r!r} "
                f"between lam={prev.lam} and lam={cur.lam}"
            )
        if cur.risks.risk_b < prev.risks.risk_b - slack:
            raise FrontierMonotonicityError(
                f"blue risk decreased from {prev.risks.risk_b!r} to {cur.risks.risk_b!r} "
                f"between lam={prev.lam} and lam={cur.lam}"
            )
    return points


def group_balance_check(model: PopulationModel) -> GroupBalanceDiagnostic:
    """Check that each group's own optimum serves it at least as well as the other group.

    Always true for this model class; exposed as a diagnostic because the
    frontier parametrization by a single weight relies on it.
    """
    gap_red = population_risk(model, BLUE, model.red.beta) - population_risk(
        model, RED, model.red.beta
    )
    gap_blue = population_risk(model, RED, model.blue.beta) - population_risk(
        model, BLUE, model.blue.beta
    )
    return GroupBalanceDiagnostic(
        is_balanced=bool(gap_red >= 0.0 and gap_blue >= 0.0),
        gap_at_red_optimum=gap_red,
        gap_at_blue_optimum=gap_blue,
    )
