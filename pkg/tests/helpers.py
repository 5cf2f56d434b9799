"""Shared test utilities: random instances and independent optimizer oracles."""

from __future__ import annotations

import numpy as np

from fafrontier.model import PopulationModel


def random_spd(rng: np.random.Generator, d: int, jitter: float = 0.5) -> np.ndarray:
    a = rng.normal(size=(d, d))
    return a @ a.T + jitter * np.eye(d)


def random_model(
    rng: np.random.Generator, d: int, noise_var: float | None = None
) -> PopulationModel:
    if noise_var is None:
        noise_var = float(rng.uniform(0.1, 2.0))
    return PopulationModel.from_arrays(
        beta_r=rng.normal(size=d),
        sigma_r=random_spd(rng, d),
        beta_b=rng.normal(size=d),
        sigma_b=random_spd(rng, d),
        noise_var=noise_var,
    )


def gradient_descent_quadratic(
    grad, x0: np.ndarray, lr: float, steps: int = 200_000, tol: float = 1e-13
) -> np.ndarray:
    """Plain gradient descent; the independent oracle for least-squares fits."""
    x = np.asarray(x0, dtype=float).copy()
    for _ in range(steps):
        step = lr * grad(x)
        x = x - step
        if np.max(np.abs(step)) < tol:
            break
    return x
