"""Sampling-budget allocation across the two groups.

With known covariances the optimal split is closed-form (sample sizes
proportional to weight times covariance radius, the regression analogue of
classical proportional-to-variability stratified allocation).  With unknown
covariances the variance and bias parts pull in different directions, so the
plan is found by exhaustive integer scan of the combined excess bound.
"""

from __future__ import annotations

from dataclasses import dataclass

from .bounds import BoundConfig, combined_excess_bound
from .model import ModelValidationError, PreconditionError, as_weight

KNOWN_COV_RULE = "known_cov_rule"
BOUND_SEARCH = "bound_search"


@dataclass(frozen=True)
class AllocationPlan:
    n_r: int
    n_b: int
    regime: str
    objective_value: float
    variance_term: float | None = None
    bias_term: float | None = None
    dominant: str | None = None

    @property
    def budget(self) -> int:
        return self.n_r + self.n_b


def _known_cov_objective(lam: float, rho_r: float, rho_b: float, n_r: int, n_b: int) -> float:
    return lam**2 * rho_r**2 / n_r + (1.0 - lam) ** 2 * rho_b**2 / n_b


def known_cov_allocation(
    budget: int, lam, rho_r: float, rho_b: float, floor: int = 1
) -> AllocationPlan:
    """Split ``budget`` by the closed-form rule n_r / n_b = lam rho_r / ((1-lam) rho_b).

    The continuous optimum is rounded to whichever integer neighbor gives the
    smaller variance objective.  Endpoint weights put everything on the
    weighted group except the feasibility floor for the other (the rule
    itself is silent there; the pooled fit still needs both designs full rank).
    """
    w = as_weight(lam)
    if rho_r <= 0.0 or rho_b <= 0.0:
        raise ModelValidationError("covariance radii must be positive")
    if floor < 1:
        raise ModelValidationError("floor must be >= 1")
    if budget < 2 * floor:
        raise PreconditionError(
            f"budget must satisfy n_g >= {floor} for both groups (budget >= {2 * floor}), got {budget}"
        )
    lo, hi = floor, budget - floor
    if w == 0.0:
        n_r = lo
    elif w == 1.0:
        n_r = hi
    else:
        target = budget * w * rho_r / (w * rho_r + (1.0 - w) * rho_b)
        candidates = {min(max(int(c), lo), hi) for c in (int(target), int(target) + 1)}
        n_r = min(
            candidates,
            key=lambda c: (
                _known_cov_objective(w, rho_r, rho_b, c, budget - c),
                abs(2 * c - budget),
                c,
            ),
        )
    n_b = budget - n_r
    return AllocationPlan(
        n_r=n_r,
        n_b=n_b,
        regime=KNOWN_COV_RULE,
        objective_value=_known_cov_objective(w, rho_r, rho_b, n_r, n_b),
    )


def unknown_cov_allocation(budget: int, cfg: BoundConfig, floor: int | None = None) -> AllocationPlan:
    """Minimize the combined excess bound over all feasible integer splits.

    No closed form exists once the bias term competes with the variance term,
    and desk-scale budgets make the O(budget) scan trivial.  Ties break
    toward balance (the bias part prefers n_r = n_b), then toward lower n_r.
    """
    if floor is None:
        floor = cfg.d
    if floor < 1:
        raise ModelValidationError("floor must be >= 1")
    if budget < 2 * floor:
        raise PreconditionError(
            f"budget {budget} cannot satisfy n_g >= {floor} for both groups"
        )

    def objective(n_r: int) -> float:
        return combined_excess_bound(cfg.with_sizes(n_r=n_r, n_b=budget - n_r)).value

    best = min(
        range(floor, budget - floor + 1),
        key=lambda c: (objective(c), abs(2 * c - budget), c),
    )
    report = combined_excess_bound(cfg.with_sizes(n_r=best, n_b=budget - best))
    variance_term = report.constants_used["variance_term"]
    bias_term = report.constants_used["bias_term"]
    return AllocationPlan(
        n_r=best,
        n_b=budget - best,
        regime=BOUND_SEARCH,
        objective_value=report.value,
        variance_term=variance_term,
        bias_term=bias_term,
        dominant="variance" if variance_term >= bias_term else "bias",
    )
