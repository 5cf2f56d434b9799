"""Command-line front door.

Subcommands: frontier, estimate, bounds, allocate, mc, probe, serve, validate.
Exit codes: 0 success, 2 validation error, 3 numerical error (rank
deficiency or an anomalous run), 4 precondition violation under --strict,
64 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

import numpy as np

from . import serialize
from .allocation import known_cov_allocation, unknown_cov_allocation
from .bounds import evaluate_all, parse_sweep, sweep_bound_configs
from .datagen import (
    GroupDataset,
    build_assouad_bias_instance,
    build_assouad_variance_instance,
    sample_group,
)
from .estimators import (
    EstimatorKind,
    RankDeficientError,
    empirical_moments,
    fit_estimator,
)
from .model import (
    BLUE,
    RED,
    ModelValidationError,
    PreconditionError,
    default_lambda_grid,
    trace_frontier,
)
from .montecarlo import (
    McConfig,
    McInvariantError,
    assouad_probe,
    assouad_sweep,
    decomposition_mc,
    frontier_band_mc,
    rate_fit,
    realization_asymmetry_mc,
    run_excess_mc,
)
from .rng import RngSpec

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_PRECONDITION = 4
EXIT_USAGE = 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse defaults to exit code 2
        raise UsageError(message)


def _read_json(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ModelValidationError(f"file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ModelValidationError(f"{path} is not valid JSON: {exc}")


def _write_out(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")


def _emit_json(obj, out: str | None) -> None:
    _write_out(serialize.dumps_stable(obj), out)


def _read_dataset_csv(path: str, group: str) -> GroupDataset:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[-1] != "y":
            raise ModelValidationError(f"{path}: expected columns x_0..x_(d-1), y")
        rows = [[float(v) for v in row] for row in reader if row]
    if not rows:
        raise ModelValidationError(f"{path}: no data rows")
    arr = np.asarray(rows, dtype=float)
    return GroupDataset(xs=arr[:, :-1], ys=arr[:, -1], group=group)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _cmd_validate(args) -> int:
    model = serialize.model_from_json(_read_json(args.model))
    _emit_json({"valid": True, "d": model.d, "noise_var": model.noise_var}, args.out)
    return EXIT_OK


def _cmd_frontier(args) -> int:
    model = serialize.model_from_json(_read_json(args.model))
    points = trace_frontier(model, default_lambda_grid(args.grid))
    if args.format == "json" or (args.out or "").endswith(".json"):
        _emit_json(serialize.frontier_to_json(points), args.out)
    else:
        _write_out(serialize.frontier_to_csv(points), args.out)
    return EXIT_OK


def _cmd_estimate(args) -> int:
    kind = EstimatorKind(kind=args.kind, group=args.group)
    model = serialize.model_from_json(_read_json(args.model)) if args.model else None
    if args.sample:
        if model is None:
            raise ModelValidationError("--sample requires --model")
        if args.n_r is None or args.n_b is None:
            raise ModelValidationError("--sample requires --n-r and --n-b")
        data_r = sample_group(model, RED, args.n_r, RngSpec(args.seed, args.stream))
        data_b = sample_group(model, BLUE, args.n_b, RngSpec(args.seed, args.stream))
        if args.export_data:
            for data in (data_r, data_b):
                _write_out(serialize.dataset_to_csv(data), f"{args.export_data}_{data.group}.csv")
                _emit_json(
                    serialize.dataset_sidecar(data, args.seed, args.stream),
                    f"{args.export_data}_{data.group}.json",
                )
    else:
        if not (args.data_r and args.data_b):
            raise ModelValidationError("provide --data-r and --data-b, or --sample")
        data_r = _read_dataset_csv(args.data_r, RED)
        data_b = _read_dataset_csv(args.data_b, BLUE)
    beta = fit_estimator(kind, data_r, data_b, args.lam, model=model)
    payload = serialize.estimate_to_json(
        kind,
        args.lam,
        beta,
        empirical_moments(data_r).min_eig(),
        empirical_moments(data_b).min_eig(),
    )
    _emit_json(payload, args.out)
    return EXIT_OK


def _cmd_bounds(args) -> int:
    cfg = serialize.bound_config_from_json(_read_json(args.config))
    if args.sweep:
        param, values = parse_sweep(args.sweep)
        cfgs = sweep_bound_configs(cfg, param, values)
    else:
        cfgs = [cfg]
    reports = [evaluate_all(c) for c in cfgs]
    violations = sorted({v for rep in reports for r in rep.values() for v in r.violated})
    if violations:
        if args.strict:
            raise PreconditionError("; ".join(violations))
        print("warning: precondition violations: " + "; ".join(violations), file=sys.stderr)
    if args.format == "json" or (args.out or "").endswith(".json"):
        payload = [
            {
                "config": serialize.bound_config_to_json(c),
                "bounds": {k: serialize.bound_report_to_json(r) for k, r in rep.items()},
            }
            for c, rep in zip(cfgs, reports)
        ]
        _emit_json(payload, args.out)
    else:
        _write_out(serialize.bounds_sweep_to_csv(cfgs, reports), args.out)
    return EXIT_OK


def _cmd_allocate(args) -> int:
    cfg = serialize.bound_config_from_json(_read_json(args.config))
    if args.rule == "known":
        plan = known_cov_allocation(args.budget, cfg.lam, cfg.rho_r, cfg.rho_b, floor=args.floor or 1)
    else:
        plan = unknown_cov_allocation(args.budget, cfg, floor=args.floor)
    _emit_json(serialize.allocation_to_json(plan), args.out)
    return EXIT_OK


def _cmd_mc(args) -> int:
    doc = _read_json(args.config)
    if args.seed is not None:
        doc["seed"] = args.seed
    if args.replicates is not None:
        doc["replicates"] = args.replicates
    mode = args.mode or doc.get("mode", "excess")
    cfg = serialize.mc_config_from_json(doc)
    if mode == "excess":
        report = run_excess_mc(cfg)
        _emit_json(serialize.mc_report_to_json(report), args.out)
        if report.anomaly:
            # Rank-deficient replicates have probability zero for continuous
            # designs with n >= d; the report is still written for forensics.
            print(
                f"numerical error: {report.excluded_replicates} rank-deficient replicates",
                file=sys.stderr,
            )
            return EXIT_NUMERICAL
    elif mode == "decomposition":
        _emit_json(serialize.decomposition_to_json(decomposition_mc(cfg)), args.out)
    elif mode == "asymmetry":
        _emit_json(serialize.asymmetry_to_json(realization_asymmetry_mc(cfg)), args.out)
    elif mode == "rate":
        n_grid = doc.get("n_grid")
        if not n_grid:
            raise ModelValidationError("rate mode needs 'n_grid' in the config")
        _emit_json(serialize.rate_fit_to_json(rate_fit(cfg, [int(n) for n in n_grid])), args.out)
    elif mode == "band":
        grid = doc.get("lambda_grid") or list(default_lambda_grid(int(doc.get("grid", 101))))
        band = frontier_band_mc(
            cfg.model, grid, cfg.n_r, cfg.n_b, cfg.estimator, cfg.replicates, cfg.master_seed
        )
        # band is tabular; CSV unless JSON is asked for explicitly
        if args.format == "json" or (args.out or "").endswith(".json"):
            _emit_json(serialize.band_to_json(band), args.out)
        else:
            _write_out(serialize.band_to_csv(band), args.out)
    else:
        raise ModelValidationError(f"unknown mc mode {mode!r}")
    return EXIT_OK


def _cmd_probe(args) -> int:
    doc = _read_json(args.config)
    for key in ("kind", "lambda", "estimator", "n_r", "n_b", "replicates", "seed"):
        if key not in doc:
            raise ModelValidationError(f"probe config is missing required key {key!r}")
    estimator = serialize.estimator_kind_from_json(doc["estimator"])
    lam = float(doc["lambda"])
    n_r, n_b = int(doc["n_r"]), int(doc["n_b"])
    replicates, seed = int(doc["replicates"]), int(doc["seed"])
    kind = doc["kind"]

    if kind == "variance":
        def build(xi):
            return build_assouad_variance_instance(
                xi_r=xi,
                xi_b=xi,
                n_r=n_r,
                n_b=n_b,
                rho_r=float(doc["rho_r"]),
                rho_b=float(doc["rho_b"]),
                sigma2=float(doc["sigma2"]),
            )
        d = int(doc["d"]) if "d" in doc else len(doc["xi_r"])
    elif kind == "bias":
        def build(xi):
            return build_assouad_bias_instance(
                xi=xi,
                perturbed_group=doc.get("perturbed_group", RED),
                beta_r=np.asarray(doc["beta_r"], dtype=float),
                beta_b=np.asarray(doc["beta_b"], dtype=float),
                rho_r=float(doc["rho_r"]),
                rho_b=float(doc["rho_b"]),
                n=int(doc.get("n", max(n_r, n_b))),
                noise_var=float(doc.get("noise_var", 0.0)),
            )
        d = len(doc["beta_r"])
    else:
        raise ModelValidationError("probe kind must be 'variance' or 'bias'")

    if doc.get("sweep", False):
        result = assouad_sweep(build, d, lam, estimator, n_r, n_b, replicates, seed)
        payload = {
            "max_risk_r": result.max_risk_r,
            "max_risk_b": result.max_risk_b,
            "argmax_xi_r": list(result.argmax_xi_r),
            "argmax_xi_b": list(result.argmax_xi_b),
            "patterns": len(result.probes),
        }
        _emit_json(payload, args.out)
    else:
        if kind == "variance":
            xi = np.asarray(doc["xi_r"], dtype=float)
        else:
            xi = np.asarray(doc["xi"], dtype=float)
        probe = assouad_probe(build(xi), lam, estimator, n_r, n_b, replicates, seed)
        _emit_json(serialize.probe_to_json(probe), args.out)
    return EXIT_OK


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(persist_dir=args.persist, max_workers=args.workers, static_dir=args.ui)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="faf", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="validate a model JSON file")
    p.add_argument("--model", required=True)
    p.add_argument("--out")
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("frontier", help="trace the population frontier to CSV/JSON")
    p.add_argument("--model", required=True)
    p.add_argument("--grid", type=int, default=101)
    p.add_argument("--out")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=_cmd_frontier)

    p = sub.add_parser("estimate", help="fit an estimator from data files or sampled data")
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--kind", choices=list(EstimatorKind.KINDS), default="pooled_ols")
    p.add_argument("--group", choices=[RED, BLUE])
    p.add_argument("--data-r")
    p.add_argument("--data-b")
    p.add_argument("--model")
    p.add_argument("--sample", action="store_true", help="sample data from --model first")
    p.add_argument("--n-r", type=int)
    p.add_argument("--n-b", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stream", type=int, default=0)
    p.add_argument("--export-data", help="prefix for dataset CSV + sidecar export")
    p.add_argument("--out")
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=_cmd_estimate)

    p = sub.add_parser("bounds", help="evaluate closed-form bounds, optionally on a sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--sweep", help="param=start:stop:log|linear[:count]")
    p.add_argument("--out")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=_cmd_bounds)

    p = sub.add_parser("allocate", help="allocate a sampling budget across groups")
    p.add_argument("--budget", type=int, required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--rule", choices=["known", "bound"], default="bound")
    p.add_argument("--floor", type=int)
    p.add_argument("--out")
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=_cmd_allocate)

    p = sub.add_parser("mc", help="run a seeded Monte Carlo study")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--replicates", type=int)
    p.add_argument("--mode", choices=["excess", "decomposition", "asymmetry", "band", "rate"])
    p.add_argument("--out")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=_cmd_mc)

    p = sub.add_parser("probe", help="probe adversarial instances empirically")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=_cmd_probe)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--port", type=int, default=8080)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--persist", help="directory for persisted model JSON files")
    p.add_argument("--workers", type=int)
    p.add_argument("--ui", help="directory of built explorer assets to serve at /")
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except PreconditionError as exc:
        print(f"precondition violation: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION if args.strict else EXIT_VALIDATION
    except (RankDeficientError, McInvariantError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ModelValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
