"""Seeded replicate engine behind every empirical check.

Each replicate draws fresh group datasets from its own random stream (stream
id = replicate index, so replicates are independent and order-free), fits the
requested estimator, and evaluates population risk quantities in closed form
(never on held-out samples, which would add noise the expectations being
estimated do not have).

Per-replicate invariants are asserted on every run: the weighted excess is
nonnegative (the weighted optimum minimizes the weighted risk), and the
weighted cross terms cancel.  Rank-deficient replicates are a hard anomaly
for continuous designs with n >= d; they are counted, excluded, and flagged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from .datagen import GROUP_STREAM_CODE, AssouadBiasInstance, AssouadVarianceInstance
from .estimators import EstimatorKind
from .model import (
    BLUE,
    EIG_RATIO_TOL,
    RED,
    FrontierPoint,
    ModelValidationError,
    PopulationModel,
    PreconditionError,
    as_weight,
    frontier_point,
    optimal_beta_lambda,
    population_risk,
)
from .rng import RngSpec, standard_normals_from_raw

CHUNK = 512
CROSS_CANCEL_TOL = 1e-9
EXCESS_FLOOR = -1e-12
# Mean excess at or below this is indistinguishable from exact zero: solve
# round-off enters squared, so noiseless runs land near 1e-32, while any real
# excess at desk scales is at least ~1e-10.
EXCESS_ZERO_FLOOR = 1e-20


class McInvariantError(AssertionError):
    """A per-replicate identity that must hold failed; indicates a broken build."""


@dataclass(frozen=True)
class MeanSE:
    mean: float
    se: float


@dataclass(frozen=True)
class McConfig:
    model: PopulationModel
    lam: float
    n_r: int
    n_b: int
    estimator: EstimatorKind
    replicates: int = 10_000
    master_seed: int = 0

    def __post_init__(self) -> None:
        as_weight(self.lam)
        if self.replicates < 1:
            raise ModelValidationError("replicates must be >= 1")
        if self.n_r < 1 or self.n_b < 1:
            raise ModelValidationError("sample sizes must be >= 1")
        d = self.model.d
        needs_r = self.estimator.kind != "group_ols" or self.estimator.group == RED
        needs_b = self.estimator.kind != "group_ols" or self.estimator.group == BLUE
        if needs_r and self.n_r < d:
            raise PreconditionError(f"n_g >= d violated: n_r={self.n_r} < d={d}")
        if needs_b and self.n_b < d:
            raise PreconditionError(f"n_g >= d violated: n_b={self.n_b} < d={d}")


@dataclass(frozen=True)
class McReport:
    """Aggregates of one seeded run; byte-stable given the same config."""

    mean_excess: MeanSE
    per_group_excess_r: MeanSE
    per_group_excess_b: MeanSE
    quadratic_r: MeanSE
    quadratic_b: MeanSE
    cross_r: MeanSE
    cross_b: MeanSE
    frac_improved_r: float
    frac_improved_b: float
    both_improved: int
    bias_vector_norm_sq: float
    mean_beta: np.ndarray
    se_beta: np.ndarray
    replicates: int
    master_seed: int
    excluded_replicates: int
    anomaly: bool


def _mean_se(values: np.ndarray) -> MeanSE:
    n = values.shape[0]
    mean = float(np.mean(values)) if n else math.nan
    se = float(np.std(values, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return MeanSE(mean=mean, se=se)


def _draw_group_chunk(
    model: PopulationModel, group: str, n: int, master_seed: int, ids: range
) -> tuple[np.ndarray, np.ndarray]:
    """Covariates and unscaled noise for replicates ``ids``: (c, n, d) and (c, n).

    Stream layout per replicate matches ``datagen.sample_group`` exactly:
    n*d covariate normals then n noise normals from stream
    (master_seed, replicate, group).
    """
    spec = model.group(group)
    d = spec.d
    count = n * d + n
    raws = np.empty((len(ids), count), dtype=np.uint64)
    code = GROUP_STREAM_CODE[group]
    for j, i in enumerate(ids):
        raws[j] = RngSpec(master_seed, i).stream(code).random_raw(count)
    z = standard_normals_from_raw(raws)
    xs = z[:, : n * d].reshape(len(ids), n, d) @ spec.chol_lower.T
    eps = z[:, n * d :]
    return xs, eps


def _batched_moments(xs: np.ndarray, ys: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = xs.shape[1]
    sigma_hat = np.einsum("cni,cnj->cij", xs, xs) / n
    nu_hat = np.einsum("cni,cn->ci", xs, ys) / n
    return sigma_hat, nu_hat


def _solve_vec(mats: np.ndarray, vecs: np.ndarray) -> np.ndarray:
    """Batched solve with vector right-hand sides: (c,d,d) x (c,d) -> (c,d)."""
    return np.linalg.solve(mats, vecs[..., None])[..., 0]


def _rank_ok(mats: np.ndarray) -> np.ndarray:
    eigs = np.linalg.eigvalsh(mats)
    return eigs[:, 0] > EIG_RATIO_TOL * np.maximum(eigs[:, -1], 0.0)


@dataclass
class _ChunkFits:
    beta_hat: np.ndarray  # (kept, d)
    kept: np.ndarray  # bool mask over the chunk
    sigma_hat_r: np.ndarray
    sigma_hat_b: np.ndarray
    sigma_hat_lam: np.ndarray
    z_vec: np.ndarray | None  # noise moment vector per replicate (kept, d)
    b_vec: np.ndarray | None  # coefficient-gap moment vector per replicate (kept, d)


def _fit_chunk(
    cfg: McConfig, ids: range, beta_lam: np.ndarray, want_split: bool = False
) -> _ChunkFits:
    model, w = cfg.model, as_weight(cfg.lam)
    xs_r, eps_r = _draw_group_chunk(model, RED, cfg.n_r, cfg.master_seed, ids)
    xs_b, eps_b = _draw_group_chunk(model, BLUE, cfg.n_b, cfg.master_seed, ids)
    noise = math.sqrt(model.noise_var)
    noise_r = noise * eps_r
    noise_b = noise * eps_b
    ys_r = xs_r @ model.red.beta + noise_r
    ys_b = xs_b @ model.blue.beta + noise_b
    sig_r, nu_r = _batched_moments(xs_r, ys_r)
    sig_b, nu_b = _batched_moments(xs_b, ys_b)

    kind = cfg.estimator.kind
    if kind == "pooled_ols" and w == 1.0:
        kind, group = "group_ols", RED
    elif kind == "pooled_ols" and w == 0.0:
        kind, group = "group_ols", BLUE
    else:
        group = cfg.estimator.group

    sig_lam = w * sig_r + (1.0 - w) * sig_b
    if kind == "group_ols":
        need = sig_r if group == RED else sig_b
        kept = _rank_ok(need)
    elif kind == "known_cov":
        kept = _rank_ok(sig_r) & _rank_ok(sig_b)
    else:
        kept = _rank_ok(sig_lam)

    sig_r_k, sig_b_k = sig_r[kept], sig_b[kept]
    nu_r_k, nu_b_k = nu_r[kept], nu_b[kept]
    sig_lam_k = sig_lam[kept]

    if kind == "group_ols":
        if group == RED:
            beta_hat = _solve_vec(sig_r_k, nu_r_k)
        else:
            beta_hat = _solve_vec(sig_b_k, nu_b_k)
    elif kind == "known_cov":
        bhat_r = _solve_vec(sig_r_k, nu_r_k)
        bhat_b = _solve_vec(sig_b_k, nu_b_k)
        rhs = w * bhat_r @ model.red.sigma.T + (1.0 - w) * bhat_b @ model.blue.sigma.T
        true_lam = w * model.red.sigma + (1.0 - w) * model.blue.sigma
        factor = cho_factor(true_lam, lower=True, check_finite=False)
        beta_hat = cho_solve(factor, rhs.T, check_finite=False).T
    else:
        nu_lam_k = w * nu_r_k + (1.0 - w) * nu_b_k
        beta_hat = _solve_vec(sig_lam_k, nu_lam_k)

    z_vec = b_vec = None
    if want_split:
        # Moment vectors of the error split (noise part and coefficient-gap part).
        z_vec = (w / cfg.n_r) * np.einsum("cni,cn->ci", xs_r, noise_r)[kept] + (
            (1.0 - w) / cfg.n_b
        ) * np.einsum("cni,cn->ci", xs_b, noise_b)[kept]
        b_vec = w * sig_r_k @ (model.red.beta - beta_lam) + (1.0 - w) * sig_b_k @ (
            model.blue.beta - beta_lam
        )
    return _ChunkFits(
        beta_hat=beta_hat,
        kept=kept,
        sigma_hat_r=sig_r_k,
        sigma_hat_b=sig_b_k,
        sigma_hat_lam=sig_lam_k,
        z_vec=z_vec,
        b_vec=b_vec,
    )


def _chunks(replicates: int) -> list[range]:
    return [range(start, min(start + CHUNK, replicates)) for start in range(0, replicates, CHUNK)]


@dataclass
class _RunAccumulator:
    quad_r: list
    quad_b: list
    cross_r: list
    cross_b: list
    beta_sum: np.ndarray
    kept: int
    excluded: int


def _excess_metrics(
    model: PopulationModel, beta_lam: np.ndarray, beta_hat: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Per-replicate quadratic and cross parts of each group's excess."""
    delta = beta_hat - beta_lam
    w_r = delta @ model.red.chol_lower
    w_b = delta @ model.blue.chol_lower
    quad_r = np.einsum("cd,cd->c", w_r, w_r)
    quad_b = np.einsum("cd,cd->c", w_b, w_b)
    m_r = model.red.sigma @ (beta_lam - model.red.beta)
    m_b = model.blue.sigma @ (beta_lam - model.blue.beta)
    cross_r = 2.0 * delta @ m_r
    cross_b = 2.0 * delta @ m_b
    return quad_r, quad_b, cross_r, cross_b


def _assert_replicate_invariants(
    lam: float, quad_r, quad_b, cross_r, cross_b
) -> np.ndarray:
    weighted = lam * quad_r + (1.0 - lam) * quad_b
    if weighted.size and float(weighted.min()) < EXCESS_FLOOR:
        raise McInvariantError(f"weighted excess fell below {EXCESS_FLOOR}: {weighted.min()}")
    cancel = lam * cross_r + (1.0 - lam) * cross_b
    scale = 1.0 + np.maximum(np.abs(cross_r), np.abs(cross_b))
    if cancel.size and float(np.max(np.abs(cancel) / scale)) > CROSS_CANCEL_TOL:
        raise McInvariantError("weighted cross terms failed to cancel (stationarity broken)")
    return weighted


def run_excess_mc(cfg: McConfig) -> McReport:
    """Estimate the excess risk and its per-group split for one configuration."""
    w = as_weight(cfg.lam)
    beta_lam = optimal_beta_lambda(cfg.model, w)
    quad_r_all, quad_b_all, cross_r_all, cross_b_all = [], [], [], []
    beta_rows = []
    excluded = 0
    for ids in _chunks(cfg.replicates):
        fits = _fit_chunk(cfg, ids, beta_lam)
        excluded += int(len(ids) - fits.kept.sum())
        quad_r, quad_b, cross_r, cross_b = _excess_metrics(cfg.model, beta_lam, fits.beta_hat)
        _assert_replicate_invariants(w, quad_r, quad_b, cross_r, cross_b)
        quad_r_all.append(quad_r)
        quad_b_all.append(quad_b)
        cross_r_all.append(cross_r)
        cross_b_all.append(cross_b)
        beta_rows.append(fits.beta_hat)
    quad_r = np.concatenate(quad_r_all)
    quad_b = np.concatenate(quad_b_all)
    cross_r = np.concatenate(cross_r_all)
    cross_b = np.concatenate(cross_b_all)
    weighted = w * quad_r + (1.0 - w) * quad_b
    excess_r = quad_r + cross_r
    excess_b = quad_b + cross_b
    improved_r = excess_r < 0.0
    improved_b = excess_b < 0.0
    betas = np.concatenate(beta_rows, axis=0)
    beta_mean = np.mean(betas, axis=0)
    if betas.shape[0] > 1:
        beta_se = np.std(betas, axis=0, ddof=1) / math.sqrt(betas.shape[0])
    else:
        beta_se = np.zeros_like(beta_mean)
    return McReport(
        mean_excess=_mean_se(weighted),
        per_group_excess_r=_mean_se(excess_r),
        per_group_excess_b=_mean_se(excess_b),
        quadratic_r=_mean_se(quad_r),
        quadratic_b=_mean_se(quad_b),
        cross_r=_mean_se(cross_r),
        cross_b=_mean_se(cross_b),
        frac_improved_r=float(np.mean(improved_r)),
        frac_improved_b=float(np.mean(improved_b)),
        both_improved=int(np.sum(improved_r & improved_b)),
        bias_vector_norm_sq=float(np.sum((beta_mean - beta_lam) ** 2)),
        mean_beta=beta_mean,
        se_beta=beta_se,
        replicates=cfg.replicates,
        master_seed=cfg.master_seed,
        excluded_replicates=excluded,
        anomaly=excluded > 0,
    )


def exact_risk_rhs_mc(
    model: PopulationModel,
    lam,
    n_r: int,
    n_b: int,
    group: str,
    replicates: int,
    seed: int,
) -> MeanSE:
    """Monte Carlo of the exact minimax risk expression for ``group``.

    Per replicate, the two expected-trace terms are evaluated on freshly
    drawn sample covariances; the replicate streams match run_excess_mc so
    the same seed sees the same designs.
    """
    w = as_weight(lam)
    if replicates < 1:
        raise ModelValidationError("replicates must be >= 1")
    if n_r < model.d or n_b < model.d:
        raise PreconditionError(f"n_g >= d violated: need n_r, n_b >= {model.d}")
    sig_lam = w * model.red.sigma + (1.0 - w) * model.blue.sigma
    factor = cho_factor(sig_lam, lower=True, check_finite=False)
    a_mid = cho_solve(factor, model.group(group).sigma, check_finite=False)
    a_mat = cho_solve(factor, a_mid.T, check_finite=False)  # Sigma_lam^-1 Sigma_g Sigma_lam^-1
    n_r_mat = model.red.sigma @ a_mat @ model.red.sigma
    n_b_mat = model.blue.sigma @ a_mat @ model.blue.sigma
    values = []
    sigma2 = model.noise_var
    for ids in _chunks(replicates):
        xs_r, _ = _draw_group_chunk(model, RED, n_r, seed, ids)
        xs_b, _ = _draw_group_chunk(model, BLUE, n_b, seed, ids)
        sig_r = np.einsum("cni,cnj->cij", xs_r, xs_r) / n_r
        sig_b = np.einsum("cni,cnj->cij", xs_b, xs_b) / n_b
        kept = _rank_ok(sig_r) & _rank_ok(sig_b)
        rhs_r = np.broadcast_to(n_r_mat, sig_r[kept].shape).copy()
        rhs_b = np.broadcast_to(n_b_mat, sig_b[kept].shape).copy()
        tr_r = np.trace(np.linalg.solve(sig_r[kept], rhs_r), axis1=1, axis2=2)
        tr_b = np.trace(np.linalg.solve(sig_b[kept], rhs_b), axis1=1, axis2=2)
        values.append(w**2 * sigma2 / n_r * tr_r + (1.0 - w) ** 2 * sigma2 / n_b * tr_b)
    return _mean_se(np.concatenate(values))


@dataclass(frozen=True)
class GroupDecomposition:
    total: MeanSE
    variance: MeanSE
    bias: MeanSE
    cross: MeanSE


@dataclass(frozen=True)
class DecompositionReport:
    red: GroupDecomposition
    blue: GroupDecomposition
    replicates: int
    master_seed: int
    excluded_replicates: int
    max_bias_part: float  # over replicates and groups; exactly 0 when betas agree
    max_variance_part: float  # exactly 0 when the noise variance is 0


def decomposition_mc(cfg: McConfig) -> DecompositionReport:
    """Split the pooled estimator's squared error into noise and covariance parts.

    The error vector factors through the blended sample covariance applied to
    the sum of a noise moment (Z) and a coefficient-gap moment (B); both are
    formed explicitly per replicate, so the noise part vanishes identically
    at zero noise and the gap part vanishes identically for equal coefficients.
    """
    if cfg.estimator.kind != "pooled_ols":
        raise ModelValidationError("decomposition applies to the pooled estimator")
    w = as_weight(cfg.lam)
    model = cfg.model
    beta_lam = optimal_beta_lambda(model, w)
    parts: dict[str, dict[str, list]] = {
        g: {"total": [], "variance": [], "bias": [], "cross": []} for g in (RED, BLUE)
    }
    excluded = 0
    for ids in _chunks(cfg.replicates):
        fits = _fit_chunk(cfg, ids, beta_lam, want_split=True)
        excluded += int(len(ids) - fits.kept.sum())
        vz = _solve_vec(fits.sigma_hat_lam, fits.z_vec)
        vb = _solve_vec(fits.sigma_hat_lam, fits.b_vec)
        for g, spec in ((RED, model.red), (BLUE, model.blue)):
            wz = vz @ spec.chol_lower
            wb = vb @ spec.chol_lower
            wt = (vz + vb) @ spec.chol_lower
            parts[g]["variance"].append(np.einsum("cd,cd->c", wz, wz))
            parts[g]["bias"].append(np.einsum("cd,cd->c", wb, wb))
            parts[g]["cross"].append(2.0 * np.einsum("cd,cd->c", wz, wb))
            parts[g]["total"].append(np.einsum("cd,cd->c", wt, wt))
    summaries = {}
    for g in (RED, BLUE):
        summaries[g] = GroupDecomposition(
            **{k: _mean_se(np.concatenate(v)) for k, v in parts[g].items()}
        )
    max_bias = max(float(np.max(np.concatenate(parts[g]["bias"]))) for g in (RED, BLUE))
    max_var = max(float(np.max(np.concatenate(parts[g]["variance"]))) for g in (RED, BLUE))
    return DecompositionReport(
        red=summaries[RED],
        blue=summaries[BLUE],
        replicates=cfg.replicates,
        master_seed=cfg.master_seed,
        excluded_replicates=excluded,
        max_bias_part=max_bias,
        max_variance_part=max_var,
    )


@dataclass(frozen=True)
class AsymmetryReport:
    frac_improved_r: float
    frac_improved_b: float
    both_improved: int
    report: McReport


def realization_asymmetry_mc(cfg: McConfig) -> AsymmetryReport:
    """Fraction of replicates in which each group's own risk improves.

    Requires the known-covariance estimator and an interior weight; the
    engine also verifies that no replicate improves both groups at once
    (impossible, since the weighted excess is nonnegative).
    """
    if cfg.estimator.kind != "known_cov":
        raise ModelValidationError("realization asymmetry is defined for the known_cov estimator")
    w = as_weight(cfg.lam)
    if w in (0.0, 1.0):
        raise ModelValidationError("realization asymmetry needs an interior weight")
    report = run_excess_mc(cfg)
    return AsymmetryReport(
        frac_improved_r=report.frac_improved_r,
        frac_improved_b=report.frac_improved_b,
        both_improved=report.both_improved,
        report=report,
    )


@dataclass(frozen=True)
class RatePoint:
    n: int
    mean_excess: float
    se: float


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    points: tuple[RatePoint, ...]


def rate_fit(cfg_template: McConfig, n_grid: list[int] | tuple[int, ...]) -> RateFit:
    """Least-squares slope of log mean-excess against log n with n_r = n_b = n."""
    if len(n_grid) < 4:
        raise ModelValidationError("rate fit needs at least 4 grid points")
    if any(b <= a for a, b in zip(n_grid, n_grid[1:])):
        raise ModelValidationError("n_grid must be strictly increasing")
    steps = np.diff(np.log(np.asarray(n_grid, dtype=float)))
    if np.max(np.abs(steps - steps.mean())) > 0.15 * steps.mean():
        raise ModelValidationError("n_grid should be (approximately) geometric")
    points = []
    for n in n_grid:
        report = run_excess_mc(replace(cfg_template, n_r=int(n), n_b=int(n)))
        mean = report.mean_excess.mean
        if mean <= EXCESS_ZERO_FLOOR:
            raise ModelValidationError(
                f"mean excess is zero (up to round-off) at n={n}; rate fitting needs "
                "noise_var > 0 or coefficient heterogeneity"
            )
        points.append(RatePoint(n=int(n), mean_excess=mean, se=report.mean_excess.se))
    slope, intercept = np.polyfit(
        np.log([p.n for p in points]), np.log([p.mean_excess for p in points]), 1
    )
    return RateFit(slope=float(slope), intercept=float(intercept), points=tuple(points))


@dataclass(frozen=True)
class BandPoint:
    lam: float
    population: FrontierPoint
    q05_r: float
    q50_r: float
    q95_r: float
    q05_b: float
    q50_b: float
    q95_b: float


def frontier_band_mc(
    model: PopulationModel,
    lambda_grid,
    n_r: int,
    n_b: int,
    estimator: EstimatorKind,
    replicates: int,
    seed: int,
) -> list[BandPoint]:
    """Replicate risk-pair clouds along the frontier, summarized by quantiles.

    Datasets depend only on the replicate stream, so the same draws are
    reused across the weight grid (exactly what rerunning per weight with the
    same seed would produce).
    """
    lams = [as_weight(x) for x in lambda_grid]
    if not lams:
        raise ModelValidationError("lambda grid is empty")
    per_lam_risks: dict[float, list[np.ndarray]] = {w: [] for w in lams}
    excluded = {w: 0 for w in lams}
    for w in lams:
        cfg = McConfig(
            model=model,
            lam=w,
            n_r=n_r,
            n_b=n_b,
            estimator=estimator,
            replicates=replicates,
            master_seed=seed,
        )
        beta_lam = optimal_beta_lambda(model, w)
        pop_r = population_risk(model, RED, beta_lam)
        pop_b = population_risk(model, BLUE, beta_lam)
        for ids in _chunks(replicates):
            fits = _fit_chunk(cfg, ids, beta_lam)
            excluded[w] += int(len(ids) - fits.kept.sum())
            quad_r, quad_b, cross_r, cross_b = _excess_metrics(model, beta_lam, fits.beta_hat)
            _assert_replicate_invariants(w, quad_r, quad_b, cross_r, cross_b)
            risks = np.stack([pop_r + quad_r + cross_r, pop_b + quad_b + cross_b], axis=1)
            per_lam_risks[w].append(risks)
    out = []
    for w in lams:
        risks = np.concatenate(per_lam_risks[w], axis=0)
        q = np.quantile(risks, [0.05, 0.5, 0.95], axis=0)
        out.append(
            BandPoint(
                lam=w,
                population=frontier_point(model, w),
                q05_r=float(q[0, 0]),
                q50_r=float(q[1, 0]),
                q95_r=float(q[2, 0]),
                q05_b=float(q[0, 1]),
                q50_b=float(q[1, 1]),
                q95_b=float(q[2, 1]),
            )
        )
    return out


@dataclass(frozen=True)
class ProbeResult:
    risk_r: MeanSE
    risk_b: MeanSE
    report: McReport


def assouad_probe(
    instance: AssouadVarianceInstance | AssouadBiasInstance,
    lam,
    estimator: EstimatorKind,
    n_r: int,
    n_b: int,
    replicates: int,
    seed: int,
) -> ProbeResult:
    """Estimator risk on one adversarial instance, per group.

    The per-group value is the expected squared covariance-norm distance to
    the instance's weighted optimum -- the quantity the worst-case floors
    constrain.
    """
    cfg = McConfig(
        model=instance.model,
        lam=lam,
        n_r=n_r,
        n_b=n_b,
        estimator=estimator,
        replicates=replicates,
        master_seed=seed,
    )
    report = run_excess_mc(cfg)
    return ProbeResult(risk_r=report.quadratic_r, risk_b=report.quadratic_b, report=report)


@dataclass(frozen=True)
class SweepResult:
    max_risk_r: float
    max_risk_b: float
    argmax_xi_r: tuple[int, ...]
    argmax_xi_b: tuple[int, ...]
    probes: tuple[tuple[tuple[int, ...], ProbeResult], ...]


def assouad_sweep(
    build_instance,
    d: int,
    lam,
    estimator: EstimatorKind,
    n_r: int,
    n_b: int,
    replicates: int,
    seed: int,
    max_exhaustive_d: int = 12,
) -> SweepResult:
    """Probe every sign pattern of a d-dimensional instance family and take the max.

    ``build_instance`` maps a sign vector to an instance.  Exhaustive
    enumeration is capped (2^d growth); larger d must sample patterns
    explicitly instead.
    """
    if d > max_exhaustive_d:
        raise ModelValidationError(
            f"exhaustive sweep over 2^{d} patterns refused; sample sign patterns instead"
        )
    probes = []
    best_r = best_b = -math.inf
    arg_r = arg_b = None
    for mask in range(2**d):
        xi = tuple(1 if mask & (1 << i) else -1 for i in range(d))
        instance = build_instance(np.asarray(xi, dtype=float))
        probe = assouad_probe(instance, lam, estimator, n_r, n_b, replicates, seed)
        probes.append((xi, probe))
        if probe.risk_r.mean > best_r:
            best_r, arg_r = probe.risk_r.mean, xi
        if probe.risk_b.mean > best_b:
            best_b, arg_b = probe.risk_b.mean, xi
    return SweepResult(
        max_risk_r=best_r,
        max_risk_b=best_b,
        argmax_xi_r=arg_r,
        argmax_xi_b=arg_b,
        probes=tuple(probes),
    )
