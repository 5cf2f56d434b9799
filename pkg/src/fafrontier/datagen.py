"""Seeded synthetic data for the two-group linear model, plus adversarial instances.

Covariates are Gaussian with the group covariance, responses are linear plus
homoskedastic noise.  Draw order within a group's stream is frozen: first the
n*d covariate normals in row-major order, then the n noise normals.  The
stream itself is addressed by (master_seed, stream_id, group), so the same
``RngSpec`` always reproduces the same dataset bit for bit.

The adversarial ("sign hypercube") instance families are the constructions
used to probe worst-case estimator risk: one perturbs the group coefficient
vectors on a scaled hypercube, the other perturbs one group's covariance with
rank-one bumps aligned with the coefficient gap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import (
    BLUE,
    GROUPS,
    RED,
    DimensionMismatchError,
    ModelValidationError,
    PopulationModel,
)
from .rng import RngSpec, standard_normals

GROUP_STREAM_CODE = {RED: 0, BLUE: 1}

# Gaussian covariates satisfy the anticoncentration condition with exponent 1
# and constant 2*phi(0) = sqrt(2/pi), and have psi_2 norm sqrt(8/3) per unit
# of covariance scale (E exp(Z^2 * 3/8) = 2 exactly for standard normal Z).
GAUSSIAN_SMALL_BALL = (math.sqrt(2.0 / math.pi), 1.0)
GAUSSIAN_PSI2 = math.sqrt(8.0 / 3.0)


@dataclass(frozen=True)
class GroupDataset:
    """Design matrix and responses for one group."""

    xs: np.ndarray
    ys: np.ndarray
    group: str

    def __post_init__(self) -> None:
        xs = np.asarray(self.xs, dtype=float)
        ys = np.asarray(self.ys, dtype=float)
        if self.group not in GROUPS:
            raise ModelValidationError(f"group must be one of {GROUPS}, got {self.group!r}")
        if xs.ndim != 2 or ys.ndim != 1:
            raise ModelValidationError("xs must be 2-d and ys 1-d")
        if xs.shape[0] != ys.shape[0]:
            raise DimensionMismatchError(
                f"xs has {xs.shape[0]} rows but ys has {ys.shape[0]} entries"
            )
        if xs.shape[0] < 1:
            raise ModelValidationError("dataset needs at least one sample")
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
            raise ModelValidationError("dataset contains non-finite entries")
        xs.setflags(write=False)
        ys.setflags(write=False)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)

    @property
    def n(self) -> int:
        return self.xs.shape[0]

    @property
    def d(self) -> int:
        return self.xs.shape[1]


def sample_group(model: PopulationModel, group: str, n: int, rng: RngSpec) -> GroupDataset:
    """Draw n i.i.d. rows for ``group``: X ~ N(0, Sigma_g), Y = X beta_g + noise."""
    if n < 1:
        raise ModelValidationError(f"sample size must be positive, got {n}")
    spec = model.group(group)
    stream = rng.stream(GROUP_STREAM_CODE[group])
    d = spec.d
    z = standard_normals(stream, n * d).reshape(n, d)
    eps = standard_normals(stream, n)
    xs = z @ spec.chol_lower.T
    ys = xs @ spec.beta + math.sqrt(model.noise_var) * eps
    return GroupDataset(xs=xs, ys=ys, group=group)


def gaussian_small_ball_params() -> tuple[float, float]:
    """(C, alpha) of the Gaussian lower-tail anticoncentration bound."""
    return GAUSSIAN_SMALL_BALL


def gaussian_subgaussian_param() -> float:
    """psi_2 norm of a standard normal; scale-free across covariance radii."""
    return GAUSSIAN_PSI2


def _sign_vector(xi, name: str) -> np.ndarray:
    arr = np.asarray(xi, dtype=float)
    if arr.ndim != 1 or not np.all(np.abs(arr) == 1.0):
        raise ModelValidationError(f"{name} must be a vector with entries in {{-1, +1}}")
    return arr


@dataclass(frozen=True)
class AssouadVarianceInstance:
    """Coefficient-hypercube instance: beta_g = h_g * xi_g on spherical covariances."""

    xi_r: np.ndarray
    xi_b: np.ndarray
    h_r: float
    h_b: float
    model: PopulationModel


def build_assouad_variance_instance(
    xi_r, xi_b, n_r: int, n_b: int, rho_r: float, rho_b: float, sigma2: float
) -> AssouadVarianceInstance:
    """Scale the hypercube so each coordinate flip is barely detectable at (n_r, n_b).

    The side length satisfies h_g^2 = sigma2 / (4 n_g rho_g^2), which pins the
    per-sample information of a single sign flip at a constant.
    """
    xi_r = _sign_vector(xi_r, "xi_r")
    xi_b = _sign_vector(xi_b, "xi_b")
    if xi_r.shape != xi_b.shape:
        raise DimensionMismatchError("xi_r and xi_b must share a dimension")
    if n_r < 1 or n_b < 1:
        raise ModelValidationError("sample sizes must be positive")
    if rho_r <= 0.0 or rho_b <= 0.0:
        raise ModelValidationError("covariance radii must be positive")
    if sigma2 < 0.0:
        raise ModelValidationError("sigma2 must be nonnegative")
    d = xi_r.shape[0]
    h_r = math.sqrt(sigma2 / (4.0 * n_r * rho_r**2))
    h_b = math.sqrt(sigma2 / (4.0 * n_b * rho_b**2))
    model = PopulationModel.from_arrays(
        beta_r=h_r * xi_r,
        sigma_r=rho_r**2 * np.eye(d),
        beta_b=h_b * xi_b,
        sigma_b=rho_b**2 * np.eye(d),
        noise_var=sigma2,
    )
    return AssouadVarianceInstance(xi_r=xi_r, xi_b=xi_b, h_r=h_r, h_b=h_b, model=model)


@dataclass(frozen=True)
class AssouadBiasInstance:
    """Covariance-perturbation instance: rank-one bumps along the coefficient gap."""

    xi: np.ndarray
    perturbed_group: str
    h: float
    u: np.ndarray  # d x d, row i is the unit direction of bump i
    model: PopulationModel


def bias_perturbation_directions(beta_r, beta_b) -> np.ndarray:
    """Unit vectors u_i mixing each axis with the normalized coefficient gap.

    Signs are chosen so each u_i keeps an inner product of at least 1/sqrt(2)
    with both its axis and the gap direction.  Exact ties take the '+' branch.
    """
    beta_r = np.asarray(beta_r, dtype=float)
    beta_b = np.asarray(beta_b, dtype=float)
    gap = beta_r - beta_b
    norm = float(np.linalg.norm(gap))
    if norm == 0.0:
        raise ModelValidationError("beta_r and beta_b must differ to define a gap direction")
    v = gap / norm
    d = v.shape[0]
    u = np.empty((d, d))
    for i in range(d):
        e = np.zeros(d)
        e[i] = 1.0
        cand = e + v if v[i] >= 0.0 else e - v
        u[i] = cand / np.linalg.norm(cand)
    return u


def build_assouad_bias_instance(
    xi,
    perturbed_group: str,
    beta_r,
    beta_b,
    rho_r: float,
    rho_b: float,
    n: int,
    noise_var: float = 0.0,
) -> AssouadBiasInstance:
    """Perturb one group's spherical covariance by signed rank-one bumps.

    Requires n >= 16 d^2 so the bump level h = 2 rho^2 / (5 sqrt(n)) keeps
    every perturbed covariance within [0.9, 1.1] of the base in the
    positive-semidefinite order; that sandwich is re-verified on the result.
    """
    xi = _sign_vector(xi, "xi")
    if perturbed_group not in GROUPS:
        raise ModelValidationError(f"perturbed_group must be one of {GROUPS}")
    if rho_r <= 0.0 or rho_b <= 0.0:
        raise ModelValidationError("covariance radii must be positive")
    d = xi.shape[0]
    if n < 16 * d * d:
        raise ModelValidationError(f"need n >= 16*d^2 = {16 * d * d} for the sandwich, got {n}")
    u = bias_perturbation_directions(beta_r, beta_b)
    if u.shape[0] != d:
        raise DimensionMismatchError("xi dimension must match the coefficient dimension")
    rho = rho_r if perturbed_group == RED else rho_b
    h = 2.0 * rho**2 / (5.0 * math.sqrt(n))
    bump = np.einsum("i,ij,ik->jk", xi, u, u)
    perturbed = rho**2 * np.eye(d) + h * bump
    perturbed = 0.5 * (perturbed + perturbed.T)
    eigs = np.linalg.eigvalsh(perturbed)
    if eigs[0] < 0.9 * rho**2 - 1e-12 or eigs[-1] > 1.1 * rho**2 + 1e-12:
        raise ModelValidationError(
            f"perturbed covariance escaped the [0.9, 1.1] sandwich: eigs in [{eigs[0]}, {eigs[-1]}]"
        )
    if perturbed_group == RED:
        sigma_r, sigma_b = perturbed, rho_b**2 * np.eye(d)
    else:
        sigma_r, sigma_b = rho_r**2 * np.eye(d), perturbed
    model = PopulationModel.from_arrays(
        beta_r=beta_r, sigma_r=sigma_r, beta_b=beta_b, sigma_b=sigma_b, noise_var=noise_var
    )
    return AssouadBiasInstance(xi=xi, perturbed_group=perturbed_group, h=h, u=u, model=model)


@dataclass(frozen=True)
class GaussClassReport:
    in_class: bool
    violations: tuple[str, ...]


def gauss_class_check(
    model: PopulationModel, rho_r: float, rho_b: float, bound_b: float
) -> GaussClassReport:
    """Report whether the model satisfies the bounded-coefficient Gaussian class
    with covariance eigenvalues inside [rho^2/2, 3 rho^2/2] per group."""
    violations: list[str] = []
    for spec, rho in ((model.red, rho_r), (model.blue, rho_b)):
        eigs = np.linalg.eigvalsh(spec.sigma)
        lo, hi = 0.5 * rho**2, 1.5 * rho**2
        if eigs[0] < lo or eigs[-1] > hi:
            violations.append(
                f"{spec.label}: covariance eigenvalues [{eigs[0]:.6g}, {eigs[-1]:.6g}] "
                f"outside [{lo:.6g}, {hi:.6g}]"
            )
        norm = float(np.linalg.norm(spec.beta))
        if norm > bound_b:
            violations.append(f"{spec.label}: coefficient norm {norm:.6g} exceeds bound {bound_b:.6g}")
    return GaussClassReport(in_class=not violations, violations=tuple(violations))
