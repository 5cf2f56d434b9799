"""Closed-form risk-bound evaluators.

Every bound is an explicit function of the problem size (d, n_r, n_b), the
weight, the spherical covariance radii, the noise level, the coefficient
heterogeneity, and the distributional constants (anticoncentration pair
(C_g, alpha_g), psi_2 constants K_g, coefficient cap B).

Bounds stated only up to an absolute constant carry an explicit
``constant_multiplier`` (default 1.0) so callers can calibrate once and test
stability; bounds with fully explicit constants are evaluated as displayed.
Sample-size preconditions are never thrown — they are recorded on the report
so sweeps can cross precondition boundaries without dying.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .datagen import GAUSSIAN_PSI2, GAUSSIAN_SMALL_BALL
from .model import BLUE, RED, ModelValidationError, as_weight

UPPER = "upper"
LOWER = "lower"

KNOWN_COV_RISK = "known_cov_risk"
VARIANCE = "variance"
BIAS = "bias"
COMBINED_EXCESS = "combined_excess"
CROSS_TERM = "cross_term"


def small_ball_constant(c: float, alpha: float) -> float:
    """Fourth-moment constant controlling the inverse sample-covariance spectrum:
    3 C^4 exp(1 + 9/alpha)."""
    if alpha <= 0.0:
        raise ModelValidationError(f"alpha must be positive, got {alpha}")
    if c <= 0.0:
        raise ModelValidationError(f"small-ball constant must be positive, got {c}")
    return 3.0 * c**4 * math.exp(1.0 + 9.0 / alpha)


def gaussian_cprime_limit(d: int, n: int) -> float:
    """Sharper Gaussian replacement for the small-ball constant.

    Asymptotic in the aspect ratio h = d/n in (0, 1):
    (1/h)^(3h) * (sqrt(e)/(1-h))^(3(1-h)); bounded above by (1+sqrt(e))^3.
    """
    if not 0 < d < n:
        raise ModelValidationError(f"need 0 < d < n, got d={d}, n={n}")
    h = d / n
    return (1.0 / h) ** (3.0 * h) * (math.sqrt(math.e) / (1.0 - h)) ** (3.0 * (1.0 - h))


def smallball_for_cprime(cprime: float, alpha: float = 1.0) -> tuple[float, float]:
    """Invert the constant map: the (C, alpha) pair whose derived constant is ``cprime``.

    Lets configs target an externally chosen constant (for example the
    sharper Gaussian one above) through the ordinary anticoncentration slots.
    """
    if cprime <= 0.0:
        raise ModelValidationError("cprime must be positive")
    if alpha <= 0.0:
        raise ModelValidationError("alpha must be positive")
    c = (cprime / (3.0 * math.exp(1.0 + 9.0 / alpha))) ** 0.25
    return (c, alpha)


@dataclass(frozen=True)
class BoundConfig:
    """Scalar configuration all bound formulas read from.

    ``het`` is the Euclidean norm of the coefficient gap between groups.
    ``rho_max_*`` support covariances sandwiched between rho^2 I and
    rho_max^2 I; they default to the spherical case rho_max = rho.
    """

    d: int
    n_r: int
    n_b: int
    lam: float
    rho_r: float
    rho_b: float
    noise_var: float
    het: float
    smallball_r: tuple[float, float] = GAUSSIAN_SMALL_BALL
    smallball_b: tuple[float, float] = GAUSSIAN_SMALL_BALL
    subg_r: float = GAUSSIAN_PSI2
    subg_b: float = GAUSSIAN_PSI2
    bound_B: float = 1.0
    constant_multiplier: float = 1.0
    zeta: float = 1.0
    rho_max_r: float | None = None
    rho_max_b: float | None = None

    def __post_init__(self) -> None:
        if self.d < 1:
            raise ModelValidationError("d must be >= 1")
        if self.n_r < 1 or self.n_b < 1:
            raise ModelValidationError("sample sizes must be >= 1")
        as_weight(self.lam)
        for name in ("rho_r", "rho_b", "bound_B", "constant_multiplier", "zeta"):
            if getattr(self, name) <= 0.0:
                raise ModelValidationError(f"{name} must be positive")
        if self.noise_var < 0.0 or self.het < 0.0:
            raise ModelValidationError("noise_var and het must be nonnegative")
        for name in ("smallball_r", "smallball_b"):
            c, alpha = getattr(self, name)
            if c <= 0.0 or not 0.0 < alpha <= 1.0:
                raise ModelValidationError(f"{name} must be (C > 0, alpha in (0, 1])")
        if self.subg_r < 1.0 or self.subg_b < 1.0:
            raise ModelValidationError("psi_2 constants must be >= 1")
        for name in ("rho_max_r", "rho_max_b"):
            v = getattr(self, name)
            if v is not None and v < getattr(self, name.replace("rho_max", "rho")):
                raise ModelValidationError(f"{name} must be >= its rho counterpart")

    def with_sizes(self, n_r: int | None = None, n_b: int | None = None) -> "BoundConfig":
        return replace(
            self,
            n_r=self.n_r if n_r is None else n_r,
            n_b=self.n_b if n_b is None else n_b,
        )

    # -- derived scalars -------------------------------------------------
    def smallball(self, group: str) -> tuple[float, float]:
        return self.smallball_r if group == RED else self.smallball_b

    def subg(self, group: str) -> float:
        return self.subg_r if group == RED else self.subg_b

    def rho(self, group: str) -> float:
        return self.rho_r if group == RED else self.rho_b

    def rho_max(self, group: str) -> float:
        v = self.rho_max_r if group == RED else self.rho_max_b
        return self.rho(group) if v is None else v

    def n(self, group: str) -> int:
        return self.n_r if group == RED else self.n_b

    def cprime(self, group: str) -> float:
        c, alpha = self.smallball(group)
        return small_ball_constant(c, alpha)

    def rho_lam_sq(self) -> float:
        w = self.lam
        return w * self.rho_r**2 + (1.0 - w) * self.rho_b**2

    def cprime_denominator(self) -> float:
        """lam * rho_r^2 / C'_r + (1 - lam) * rho_b^2 / C'_b."""
        w = self.lam
        return w * self.rho_r**2 / self.cprime(RED) + (1.0 - w) * self.rho_b**2 / self.cprime(BLUE)

    def smallball_warnings(self) -> tuple[str, ...]:
        # The anticoncentration assumption nominally requires C >= 1; Gaussian
        # gives sqrt(2/pi) < 1, which only makes the tail bound stronger.
        out = []
        for group in (RED, BLUE):
            c, _ = self.smallball(group)
            if c < 1.0:
                out.append(f"smallball C for {group} is {c:.6g} < 1 (bound still valid)")
        return tuple(out)


@dataclass(frozen=True)
class BoundReport:
    """One evaluated bound with its constants and precondition status."""

    value: float
    kind: str
    target: str
    group: str | None
    constants_used: dict[str, float]
    preconditions_met: bool
    violated: tuple[str, ...] = ()
    warnings: tuple[str, ...] = field(default=())


def _check_sizes(cfg: BoundConfig, conditions: list[tuple[str, str, float]]) -> tuple[bool, tuple[str, ...]]:
    """conditions: (group, description, threshold) applied to that group's n."""
    violated = [
        f"n_{g[0]} >= {desc} requires {thr:.6g}, got {cfg.n(g)}"
        for g, desc, thr in conditions
        if cfg.n(g) < thr
    ]
    return (not violated, tuple(violated))


def _base_constants(cfg: BoundConfig) -> dict[str, float]:
    return {
        "C_prime_r": cfg.cprime(RED),
        "C_prime_b": cfg.cprime(BLUE),
        "K_r": cfg.subg_r,
        "K_b": cfg.subg_b,
        "rho_r": cfg.rho_r,
        "rho_b": cfg.rho_b,
    }


def known_cov_group_bound(cfg: BoundConfig, group: str, refined: bool = False) -> BoundReport:
    """Per-group risk bound of the known-covariance estimator.

    2 sigma^2 d rho_g^2 / rho_lam^4 * (lam^2 C'_r rho_r^2 / n_r
    + (1-lam)^2 C'_b rho_b^2 / n_b); the constant 2 is explicit, no
    multiplier applies.  ``refined`` swaps each C'_g for the subgaussian
    correction 1 + 8 C'_g zeta rho_g^8 K_g^4 d / n_g.
    """
    w = cfg.lam
    conditions = []
    for g in (RED, BLUE):
        _, alpha = cfg.smallball(g)
        if refined:
            thr = min(6.0 * cfg.d / alpha, 12.0 / alpha * math.log(12.0 / alpha))
            conditions.append((g, f"min(6d/alpha_{g[0]}, 12/alpha log(12/alpha))", thr))
        else:
            conditions.append((g, f"6d/alpha_{g[0]}", 6.0 * cfg.d / alpha))
    ok, violated = _check_sizes(cfg, conditions)
    if cfg.d < 2:
        ok = False
        violated = violated + ("d >= 2 required",)

    def factor(g: str) -> float:
        cp = cfg.cprime(g)
        if not refined:
            return cp
        return 1.0 + 8.0 * cp * cfg.zeta * cfg.rho(g) ** 8 * cfg.subg(g) ** 4 * cfg.d / cfg.n(g)

    rho_lam_sq = cfg.rho_lam_sq()
    n_term = (
        w**2 * factor(RED) * cfg.rho_r**2 / cfg.n_r
        + (1.0 - w) ** 2 * factor(BLUE) * cfg.rho_b**2 / cfg.n_b
    )
    value = 2.0 * cfg.noise_var * cfg.d * cfg.rho(group) ** 2 / rho_lam_sq**2 * n_term
    constants = _base_constants(cfg)
    if refined:
        constants.update({"zeta": cfg.zeta, "factor_r": factor(RED), "factor_b": factor(BLUE)})
    return BoundReport(
        value=value,
        kind=UPPER,
        target=KNOWN_COV_RISK,
        group=group,
        constants_used=constants,
        preconditions_met=ok,
        violated=violated,
        warnings=cfg.smallball_warnings(),
    )


def known_cov_excess_bound(cfg: BoundConfig, refined: bool = False) -> BoundReport:
    """Weighted-excess bound of the known-covariance estimator.

    The weight-combined per-group bounds collapse one blended-radius factor,
    leaving a first-power denominator: 2 sigma^2 d / rho_lam^2 * (lam^2 C'_r
    rho_r^2 / n_r + (1-lam)^2 C'_b rho_b^2 / n_b).
    """
    report_r = known_cov_group_bound(cfg, RED, refined=refined)
    value = report_r.value / cfg.rho_r**2 * cfg.rho_lam_sq()
    return BoundReport(
        value=value,
        kind=UPPER,
        target=KNOWN_COV_RISK,
        group=None,
        constants_used=report_r.constants_used,
        preconditions_met=report_r.preconditions_met,
        violated=report_r.violated,
        warnings=report_r.warnings,
    )


def variance_upper_bound(cfg: BoundConfig, group: str) -> BoundReport:
    """Order-optimal ceiling on the pooled estimator's variance part (times multiplier)."""
    w = cfg.lam
    conditions = []
    for g in (RED, BLUE):
        _, alpha = cfg.smallball(g)
        thr = max(48.0 / alpha, cfg.subg(g) ** 4 * cfg.d)
        conditions.append((g, f"max(48/alpha_{g[0]}, K^4 d)", thr))
    ok, violated = _check_sizes(cfg, conditions)
    cden = cfg.cprime_denominator()
    n_term = w**2 * cfg.rho_max(RED) ** 2 / cfg.n_r + (1.0 - w) ** 2 * cfg.rho_max(BLUE) ** 2 / cfg.n_b
    value = (
        cfg.constant_multiplier
        * cfg.rho_max(group) ** 2
        * cfg.noise_var
        * cfg.d
        / cden**2
        * n_term
    )
    constants = _base_constants(cfg) | {"constant_multiplier": cfg.constant_multiplier}
    return BoundReport(value, UPPER, VARIANCE, group, constants, ok, violated, cfg.smallball_warnings())


def variance_lower_bound(cfg: BoundConfig, group: str) -> BoundReport:
    """Information-theoretic floor on any estimator's variance part (times multiplier)."""
    w = cfg.lam
    conditions = [
        (g, "sigma^2/(B rho^2)", cfg.noise_var / (cfg.bound_B * cfg.rho(g) ** 2))
        for g in (RED, BLUE)
    ]
    ok, violated = _check_sizes(cfg, conditions)
    n_term = w**2 * cfg.rho_r**2 / cfg.n_r + (1.0 - w) ** 2 * cfg.rho_b**2 / cfg.n_b
    value = (
        cfg.constant_multiplier
        * cfg.rho(group) ** 2
        * cfg.noise_var
        * cfg.d
        / cfg.rho_lam_sq() ** 2
        * n_term
    )
    constants = _base_constants(cfg) | {"constant_multiplier": cfg.constant_multiplier}
    return BoundReport(value, LOWER, VARIANCE, group, constants, ok, violated)


def bias_upper_bound(cfg: BoundConfig, group: str) -> BoundReport:
    """Ceiling on the covariance-estimation bias part; vanishes with het or endpoint weights."""
    w = cfg.lam
    conditions = []
    for g in (RED, BLUE):
        _, alpha = cfg.smallball(g)
        conditions.append((g, f"48/alpha_{g[0]}", 48.0 / alpha))
    ok, violated = _check_sizes(cfg, conditions)
    cden = cfg.cprime_denominator()
    k_term = cfg.subg_r**4 / cfg.n_r + cfg.subg_b**4 / cfg.n_b
    value = (
        cfg.constant_multiplier
        * w**2
        * (1.0 - w) ** 2
        * cfg.rho_max(group) ** 2
        * cfg.rho_max(RED) ** 4
        * cfg.rho_max(BLUE) ** 4
        * cfg.d
        / (cden**2 * cfg.rho_lam_sq() ** 2)
        * k_term
        * cfg.het**2
    )
    constants = _base_constants(cfg) | {"constant_multiplier": cfg.constant_multiplier}
    return BoundReport(value, UPPER, BIAS, group, constants, ok, violated, cfg.smallball_warnings())


def bias_lower_bound(cfg: BoundConfig, group: str) -> BoundReport:
    """Floor on the bias part from the covariance-perturbation construction."""
    w = cfg.lam
    thr = 16.0 * cfg.d**2
    ok, violated = _check_sizes(cfg, [(g, "16 d^2", thr) for g in (RED, BLUE)])
    value = (
        cfg.constant_multiplier
        * w**2
        * (1.0 - w) ** 2
        * cfg.rho(group) ** 2
        * cfg.rho_r**4
        * cfg.rho_b**4
        * cfg.d
        / cfg.rho_lam_sq() ** 4
        * (1.0 / cfg.n_r + 1.0 / cfg.n_b)
        * cfg.het**2
    )
    constants = _base_constants(cfg) | {"constant_multiplier": cfg.constant_multiplier}
    return BoundReport(value, LOWER, BIAS, group, constants, ok, violated)


def combined_excess_bound(cfg: BoundConfig) -> BoundReport:
    """Weighted-excess ceiling for the pooled estimator: variance plus bias terms.

    Algebraically identical to the weight-combined per-group variance and
    bias ceilings, so tests cross-check it against those.
    """
    w = cfg.lam
    conditions = []
    for g in (RED, BLUE):
        _, alpha = cfg.smallball(g)
        thr = max(48.0 / alpha, cfg.subg(g) ** 4 * cfg.d)
        conditions.append((g, f"max(48/alpha_{g[0]}, K^4 d)", thr))
    ok, violated = _check_sizes(cfg, conditions)
    cden = cfg.cprime_denominator()
    p_lam_sq = w * cfg.rho_max(RED) ** 2 + (1.0 - w) * cfg.rho_max(BLUE) ** 2
    variance_term = (
        cfg.noise_var
        * cfg.d
        * p_lam_sq
        / cden**2
        * (w**2 * cfg.rho_max(RED) ** 2 / cfg.n_r + (1.0 - w) ** 2 * cfg.rho_max(BLUE) ** 2 / cfg.n_b)
    )
    bias_term = (
        w**2
        * (1.0 - w) ** 2
        * p_lam_sq
        * cfg.rho_max(RED) ** 4
        * cfg.rho_max(BLUE) ** 4
        * cfg.d
        / (cden**2 * cfg.rho_lam_sq() ** 2)
        * (cfg.subg_r**4 / cfg.n_r + cfg.subg_b**4 / cfg.n_b)
        * cfg.het**2
    )
    value = cfg.constant_multiplier * (variance_term + bias_term)
    constants = _base_constants(cfg) | {
        "constant_multiplier": cfg.constant_multiplier,
        "variance_term": cfg.constant_multiplier * variance_term,
        "bias_term": cfg.constant_multiplier * bias_term,
    }
    return BoundReport(
        value, UPPER, COMBINED_EXCESS, None, constants, ok, violated, cfg.smallball_warnings()
    )


def cross_term_bound(cfg: BoundConfig, group: str) -> BoundReport:
    """Ceiling on the per-group cross term's magnitude.

    The weight prefactor is lam (1-lam)^2 for red and lam^2 (1-lam) for
    blue, so the groups trade places as the weight crosses 1/2; at the
    endpoint weights the term is exactly zero.
    """
    w = cfg.lam
    conditions = []
    for g in (RED, BLUE):
        _, alpha = cfg.smallball(g)
        conditions.append((g, f"48/alpha_{g[0]}", 48.0 / alpha))
    ok, violated = _check_sizes(cfg, conditions)
    if w in (0.0, 1.0):
        value = 0.0
    else:
        prefactor = w * (1.0 - w) ** 2 if group == RED else w**2 * (1.0 - w)
        cden = cfg.cprime_denominator()
        k_factor = cfg.subg_r**2 / math.sqrt(cfg.n_r) + cfg.subg_b**2 / math.sqrt(cfg.n_b)
        weighted_k = (
            w * cfg.subg_r**2 * cfg.rho_max(RED) ** 2 / math.sqrt(cfg.n_r)
            + (1.0 - w) * cfg.subg_b**2 * cfg.rho_max(BLUE) ** 2 / math.sqrt(cfg.n_b)
        )
        value = (
            cfg.constant_multiplier
            * prefactor
            * cfg.d
            * cfg.rho_max(RED) ** 4
            * cfg.rho_max(BLUE) ** 4
            * cfg.het**2
            / (cfg.rho_lam_sq() ** 3 * cden)
            * k_factor
            * weighted_k
        )
    constants = _base_constants(cfg) | {"constant_multiplier": cfg.constant_multiplier}
    return BoundReport(value, UPPER, CROSS_TERM, group, constants, ok, violated)


def evaluate_all(cfg: BoundConfig) -> dict[str, BoundReport]:
    """Every bound at this configuration, keyed 'target_kind[_group]'."""
    out: dict[str, BoundReport] = {}
    for group in (RED, BLUE):
        suffix = group[0]
        out[f"known_cov_risk_upper_{suffix}"] = known_cov_group_bound(cfg, group)
        out[f"variance_upper_{suffix}"] = variance_upper_bound(cfg, group)
        out[f"variance_lower_{suffix}"] = variance_lower_bound(cfg, group)
        out[f"bias_upper_{suffix}"] = bias_upper_bound(cfg, group)
        out[f"bias_lower_{suffix}"] = bias_lower_bound(cfg, group)
        out[f"cross_term_upper_{suffix}"] = cross_term_bound(cfg, group)
    out["known_cov_excess_upper"] = known_cov_excess_bound(cfg)
    out["combined_excess_upper"] = combined_excess_bound(cfg)
    return out


def parse_sweep(spec: str) -> tuple[str, list[float]]:
    """Parse 'param=start:stop:scale[:count]' into (param, values)."""
    try:
        param, rest = spec.split("=", 1)
        parts = rest.split(":")
        start, stop, scale = float(parts[0]), float(parts[1]), parts[2]
        count = int(parts[3]) if len(parts) > 3 else 25
    except (ValueError, IndexError):
        raise ModelValidationError(f"bad sweep spec {spec!r}; expected param=start:stop:log|linear[:count]")
    if scale == "log":
        if start <= 0:
            raise ModelValidationError("log sweeps need a positive start")
        values = np.geomspace(start, stop, count)
    elif scale == "linear":
        values = np.linspace(start, stop, count)
    else:
        raise ModelValidationError(f"unknown sweep scale {scale!r}")
    return param, [float(v) for v in values]


def sweep_bound_configs(cfg: BoundConfig, param: str, values: list[float]) -> list[BoundConfig]:
    int_fields = {"n_r", "n_b", "d"}
    field = "lam" if param == "lambda" else param
    out: list[BoundConfig] = []
    seen: set = set()
    for v in values:
        value = int(round(v)) if field in int_fields else float(v)
        if value in seen:
            continue
        seen.add(value)
        try:
            out.append(replace(cfg, **{field: value}))
        except TypeError:
            raise ModelValidationError(f"unknown sweep parameter {param!r}")
    return out
