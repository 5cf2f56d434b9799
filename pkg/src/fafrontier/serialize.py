"""Stable serialization shared by the CLI and the HTTP service.

All floats are written with 17 significant digits so values round-trip
exactly, field order is fixed, and the emitter is hand-rolled so identical
inputs always produce identical bytes (the determinism contract covers
entire report files).
"""

from __future__ import annotations

import io
import math
from typing import Any

import numpy as np

from .allocation import AllocationPlan
from .bounds import BoundConfig, BoundReport
from .datagen import GroupDataset
from .estimators import EstimatorKind
from .model import (
    BLUE,
    RED,
    FrontierPoint,
    ModelValidationError,
    PopulationModel,
)
from .montecarlo import (
    AsymmetryReport,
    BandPoint,
    DecompositionReport,
    McConfig,
    McReport,
    MeanSE,
    ProbeResult,
    RateFit,
)


def format_float(x: float) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if not math.isfinite(x):
        raise ModelValidationError(f"cannot serialize non-finite value {x!r}")
    return format(float(x), ".17g")


def dumps_stable(obj: Any, indent: int = 0) -> str:
    """JSON text with insertion-ordered keys and 17-significant-digit floats."""
    pad = "  " * indent
    child = "  " * (indent + 1)
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(float(obj))
    if isinstance(obj, str):
        out = obj.replace("\\", "\\\\").replace('"', '\\"')
        out = out.replace("\n", "\\n").replace("\r", "\\r").replace("\t", "\\t")
        return f'"{out}"'
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [dumps_stable(v, indent + 1) for v in obj]
        return "[\n" + ",\n".join(child + it for it in items) + "\n" + pad + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f'{child}"{k}": {dumps_stable(v, indent + 1)}' for k, v in obj.items()
        ]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    raise ModelValidationError(f"cannot serialize {type(obj).__name__}")


# ---------------------------------------------------------------------------
# Model schema
# ---------------------------------------------------------------------------

def _group_from_json(obj: Any, d: int, label: str) -> tuple[np.ndarray, np.ndarray]:
    if not isinstance(obj, dict):
        raise ModelValidationError(f"{label} must be an object")
    if "beta" not in obj:
        raise ModelValidationError(f"{label}.beta is required")
    beta = np.asarray(obj["beta"], dtype=float)
    if beta.shape != (d,):
        raise ModelValidationError(f"{label}.beta must have length d={d}")
    has_sigma = "sigma" in obj
    has_rho = "rho" in obj
    if has_sigma == has_rho:
        raise ModelValidationError(f"{label} needs exactly one of 'sigma' or 'rho'")
    if has_rho:
        rho = float(obj["rho"])
        if rho <= 0.0:
            raise ModelValidationError(f"{label}.rho must be positive")
        sigma = rho**2 * np.eye(d)
    else:
        sigma = np.asarray(obj["sigma"], dtype=float)
        if sigma.shape != (d, d):
            raise ModelValidationError(f"{label}.sigma must be {d}x{d}")
    return beta, sigma


def model_from_json(obj: Any) -> PopulationModel:
    if not isinstance(obj, dict):
        raise ModelValidationError("model document must be an object")
    for key in ("d", "noise_var", "red", "blue"):
        if key not in obj:
            raise ModelValidationError(f"model is missing required key {key!r}")
    d = int(obj["d"])
    if d < 1:
        raise ModelValidationError("d must be >= 1")
    beta_r, sigma_r = _group_from_json(obj["red"], d, "red")
    beta_b, sigma_b = _group_from_json(obj["blue"], d, "blue")
    return PopulationModel.from_arrays(
        beta_r=beta_r,
        sigma_r=sigma_r,
        beta_b=beta_b,
        sigma_b=sigma_b,
        noise_var=float(obj["noise_var"]),
    )


def model_to_json(model: PopulationModel) -> dict:
    return {
        "d": model.d,
        "noise_var": model.noise_var,
        "red": {"beta": model.red.beta, "sigma": model.red.sigma},
        "blue": {"beta": model.blue.beta, "sigma": model.blue.sigma},
    }


# ---------------------------------------------------------------------------
# CSV emitters
# ---------------------------------------------------------------------------

def _csv(rows: list[list], header: list[str]) -> str:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(format_float(v) for v in row) + "\n")
    return buf.getvalue()


def frontier_to_csv(points: list[FrontierPoint]) -> str:
    d = points[0].beta.shape[0]
    header = ["lambda", "risk_r", "risk_b"] + [f"beta_{i}" for i in range(d)]
    rows = [
        [p.lam, p.risks.risk_r, p.risks.risk_b, *p.beta.tolist()] for p in points
    ]
    return _csv(rows, header)


def frontier_to_json(points: list[FrontierPoint]) -> list[dict]:
    return [
        {
            "lambda": p.lam,
            "risk_r": p.risks.risk_r,
            "risk_b": p.risks.risk_b,
            "beta": p.beta,
        }
        for p in points
    ]


def band_to_csv(points: list[BandPoint]) -> str:
    header = [
        "lambda",
        "pop_risk_r",
        "pop_risk_b",
        "q05_r",
        "q50_r",
        "q95_r",
        "q05_b",
        "q50_b",
        "q95_b",
    ]
    rows = [
        [
            p.lam,
            p.population.risks.risk_r,
            p.population.risks.risk_b,
            p.q05_r,
            p.q50_r,
            p.q95_r,
            p.q05_b,
            p.q50_b,
            p.q95_b,
        ]
        for p in points
    ]
    return _csv(rows, header)


def band_to_json(points: list[BandPoint]) -> list[dict]:
    return [
        {
            "lambda": p.lam,
            "pop_risk_r": p.population.risks.risk_r,
            "pop_risk_b": p.population.risks.risk_b,
            "q05_r": p.q05_r,
            "q50_r": p.q50_r,
            "q95_r": p.q95_r,
            "q05_b": p.q05_b,
            "q50_b": p.q50_b,
            "q95_b": p.q95_b,
        }
        for p in points
    ]


def dataset_to_csv(data: GroupDataset) -> str:
    header = [f"x_{i}" for i in range(data.d)] + ["y"]
    rows = [[*x.tolist(), y] for x, y in zip(data.xs, data.ys)]
    return _csv(rows, header)


def dataset_sidecar(data: GroupDataset, master_seed: int, stream_id: int) -> dict:
    return {
        "seed": int(master_seed),
        "stream": int(stream_id),
        "n": data.n,
        "d": data.d,
        "group": data.group,
    }


# ---------------------------------------------------------------------------
# Estimators / MC / bounds / allocation
# ---------------------------------------------------------------------------

def estimator_kind_from_json(obj: Any) -> EstimatorKind:
    if isinstance(obj, str):
        return EstimatorKind(kind=obj)
    if isinstance(obj, dict):
        return EstimatorKind(kind=obj.get("kind", ""), group=obj.get("group"))
    raise ModelValidationError("estimator must be a string or {kind, group} object")


def estimator_kind_to_json(kind: EstimatorKind) -> dict:
    out: dict[str, Any] = {"kind": kind.kind}
    if kind.group is not None:
        out["group"] = kind.group
    return out


def estimate_to_json(
    kind: EstimatorKind, lam: float, beta: np.ndarray, min_eig_r: float | None, min_eig_b: float | None
) -> dict:
    return {
        "kind": estimator_kind_to_json(kind),
        "lambda": lam,
        "beta": beta,
        "diagnostics": {
            "min_eig_sigma_hat_r": min_eig_r,
            "min_eig_sigma_hat_b": min_eig_b,
        },
    }


def mc_config_from_json(obj: Any) -> McConfig:
    if not isinstance(obj, dict):
        raise ModelValidationError("mc config must be an object")
    for key in ("model", "lambda", "n_r", "n_b", "estimator"):
        if key not in obj:
            raise ModelValidationError(f"mc config is missing required key {key!r}")
    return McConfig(
        model=model_from_json(obj["model"]),
        lam=float(obj["lambda"]),
        n_r=int(obj["n_r"]),
        n_b=int(obj["n_b"]),
        estimator=estimator_kind_from_json(obj["estimator"]),
        replicates=int(obj.get("replicates", 10_000)),
        master_seed=int(obj.get("seed", 0)),
    )


def _mean_se_json(m: MeanSE) -> dict:
    return {"mean": m.mean, "se": m.se}


def mc_report_to_json(report: McReport) -> dict:
    return {
        "mean_excess": _mean_se_json(report.mean_excess),
        "per_group_excess": {
            "red": _mean_se_json(report.per_group_excess_r),
            "blue": _mean_se_json(report.per_group_excess_b),
        },
        "mean_quadratic": {
            "red": _mean_se_json(report.quadratic_r),
            "blue": _mean_se_json(report.quadratic_b),
        },
        "mean_cross": {
            "red": _mean_se_json(report.cross_r),
            "blue": _mean_se_json(report.cross_b),
        },
        "frac_group_improved": {
            "red": report.frac_improved_r,
            "blue": report.frac_improved_b,
        },
        "both_improved": report.both_improved,
        "bias_vector_norm_sq": report.bias_vector_norm_sq,
        "mean_beta": report.mean_beta,
        "se_beta": report.se_beta,
        "replicates": report.replicates,
        "seed": report.master_seed,
        "excluded_replicates": report.excluded_replicates,
        "anomaly": report.anomaly,
    }


def decomposition_to_json(report: DecompositionReport) -> dict:
    def group(g) -> dict:
        return {
            "total": _mean_se_json(g.total),
            "variance": _mean_se_json(g.variance),
            "bias": _mean_se_json(g.bias),
            "cross": _mean_se_json(g.cross),
        }

    return {
        "red": group(report.red),
        "blue": group(report.blue),
        "replicates": report.replicates,
        "seed": report.master_seed,
        "excluded_replicates": report.excluded_replicates,
        "max_bias_part": report.max_bias_part,
        "max_variance_part": report.max_variance_part,
    }


def rate_fit_to_json(fit: RateFit) -> dict:
    return {
        "slope": fit.slope,
        "intercept": fit.intercept,
        "points": [
            {"n": p.n, "mean_excess": p.mean_excess, "se": p.se} for p in fit.points
        ],
    }


def asymmetry_to_json(report: AsymmetryReport) -> dict:
    return {
        "frac_improved_r": report.frac_improved_r,
        "frac_improved_b": report.frac_improved_b,
        "both_improved": report.both_improved,
        "mc": mc_report_to_json(report.report),
    }


def probe_to_json(result: ProbeResult) -> dict:
    return {
        "risk_r": _mean_se_json(result.risk_r),
        "risk_b": _mean_se_json(result.risk_b),
        "mc": mc_report_to_json(result.report),
    }


def bound_config_from_json(obj: Any) -> BoundConfig:
    if not isinstance(obj, dict):
        raise ModelValidationError("bound config must be an object")
    for key in ("d", "n_r", "n_b", "lambda", "rho_r", "rho_b", "noise_var", "het"):
        if key not in obj:
            raise ModelValidationError(f"bound config is missing required key {key!r}")
    kwargs: dict[str, Any] = dict(
        d=int(obj["d"]),
        n_r=int(obj["n_r"]),
        n_b=int(obj["n_b"]),
        lam=float(obj["lambda"]),
        rho_r=float(obj["rho_r"]),
        rho_b=float(obj["rho_b"]),
        noise_var=float(obj["noise_var"]),
        het=float(obj["het"]),
    )
    for key, attr in (
        ("smallball_r", "smallball_r"),
        ("smallball_b", "smallball_b"),
    ):
        if key in obj:
            pair = obj[key]
            kwargs[attr] = (float(pair[0]), float(pair[1]))
    for key in ("subg_r", "subg_b", "bound_B", "constant_multiplier", "zeta", "rho_max_r", "rho_max_b"):
        if key in obj and obj[key] is not None:
            kwargs[key] = float(obj[key])
    return BoundConfig(**kwargs)


def bound_config_to_json(cfg: BoundConfig) -> dict:
    return {
        "d": cfg.d,
        "n_r": cfg.n_r,
        "n_b": cfg.n_b,
        "lambda": cfg.lam,
        "rho_r": cfg.rho_r,
        "rho_b": cfg.rho_b,
        "noise_var": cfg.noise_var,
        "het": cfg.het,
        "smallball_r": list(cfg.smallball_r),
        "smallball_b": list(cfg.smallball_b),
        "subg_r": cfg.subg_r,
        "subg_b": cfg.subg_b,
        "bound_B": cfg.bound_B,
        "constant_multiplier": cfg.constant_multiplier,
        "zeta": cfg.zeta,
        "rho_max_r": cfg.rho_max_r,
        "rho_max_b": cfg.rho_max_b,
    }


def bound_report_to_json(report: BoundReport) -> dict:
    return {
        "value": report.value,
        "kind": report.kind,
        "target": report.target,
        "group": report.group,
        "constants_used": dict(report.constants_used),
        "preconditions_met": report.preconditions_met,
        "violated": list(report.violated),
        "warnings": list(report.warnings),
    }


def bounds_sweep_to_csv(cfgs: list[BoundConfig], reports: list[dict[str, BoundReport]]) -> str:
    if not reports:
        raise ModelValidationError("empty sweep")
    bound_names = list(reports[0].keys())
    header = ["d", "n_r", "n_b", "lambda", "rho_r", "rho_b", "noise_var", "het"] + bound_names
    rows = []
    for cfg, rep in zip(cfgs, reports):
        rows.append(
            [cfg.d, cfg.n_r, cfg.n_b, cfg.lam, cfg.rho_r, cfg.rho_b, cfg.noise_var, cfg.het]
            + [rep[name].value for name in bound_names]
        )
    return _csv(rows, header)


def allocation_to_json(plan: AllocationPlan) -> dict:
    out: dict[str, Any] = {
        "n_r": plan.n_r,
        "n_b": plan.n_b,
        "regime": plan.regime,
        "objective_value": plan.objective_value,
    }
    if plan.variance_term is not None:
        out["variance_term"] = plan.variance_term
        out["bias_term"] = plan.bias_term
        out["dominant"] = plan.dominant
    return out
