"""HTTP service exposing the same computations as the CLI.

Stateless except for an in-memory model/job registry (optionally persisted
as JSON files); a restart loses the registry but never corrupts results.
Monte Carlo runs execute asynchronously on a bounded worker pool with
per-job seeding carried in the request, so scheduling order cannot change
any result.  Responses are rendered with the same stable serializer as the
CLI, so identical logical inputs produce byte-identical JSON.

Error mapping: 400 malformed/schema-violating body, 404 unknown id,
409 duplicate model id or result not ready, 422 violated precondition
(named in the detail).
"""

from __future__ import annotations

import os
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from typing import Any

from fastapi import Body, FastAPI, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from . import serialize
from .allocation import known_cov_allocation, unknown_cov_allocation
from .bounds import evaluate_all, sweep_bound_configs
from .datagen import GroupDataset, sample_group
from .estimators import RankDeficientError, empirical_moments, fit_estimator
from .model import (
    BLUE,
    RED,
    ModelValidationError,
    PreconditionError,
    default_lambda_grid,
    trace_frontier,
)
from .montecarlo import (
    decomposition_mc,
    frontier_band_mc,
    rate_fit,
    realization_asymmetry_mc,
    run_excess_mc,
)
from .rng import RngSpec


class ServiceError(Exception):
    def __init__(self, status: int, detail: str):
        self.status = status
        self.detail = detail
        super().__init__(detail)


def _stable(payload: Any, status: int = 200) -> Response:
    return Response(
        content=serialize.dumps_stable(payload) + "\n",
        media_type="application/json",
        status_code=status,
    )


class Registry:
    """Thread-safe model and job storage for one service instance."""

    def __init__(self, persist_dir: str | None):
        self._lock = threading.Lock()
        self._models: dict[str, dict] = {}
        self._jobs: dict[str, dict] = {}
        self._persist_dir = persist_dir
        if persist_dir:
            os.makedirs(persist_dir, exist_ok=True)
            for name in sorted(os.listdir(persist_dir)):
                if not name.endswith(".json"):
                    continue
                path = os.path.join(persist_dir, name)
                with open(path, "r", encoding="utf-8") as fh:
                    import json

                    doc = json.load(fh)
                self._models[name[: -len(".json")]] = doc

    def add_model(self, model_id: str, doc: dict) -> None:
        with self._lock:
            if model_id in self._models:
                raise ServiceError(409, f"model id {model_id!r} already registered")
            self._models[model_id] = doc
        if self._persist_dir:
            path = os.path.join(self._persist_dir, f"{model_id}.json")
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(serialize.dumps_stable(doc) + "\n")

    def model_doc(self, model_id: str) -> dict:
        with self._lock:
            if model_id not in self._models:
                raise ServiceError(404, f"unknown model id {model_id!r}")
            return self._models[model_id]

    def new_job(self, kind: str) -> str:
        job_id = uuid.uuid4().hex
        with self._lock:
            self._jobs[job_id] = {"job_id": job_id, "kind": kind, "status": "pending", "result": None, "error": None}
        return job_id

    def update_job(self, job_id: str, **fields) -> None:
        with self._lock:
            self._jobs[job_id].update(fields)

    def job(self, job_id: str) -> dict:
        with self._lock:
            if job_id not in self._jobs:
                raise ServiceError(404, f"unknown job id {job_id!r}")
            return dict(self._jobs[job_id])


def _parse_model(registry: Registry, body: dict) -> tuple[Any, dict]:
    """Model from inline JSON or a registered id."""
    if "model_id" in body:
        doc = registry.model_doc(str(body["model_id"]))
        return serialize.model_from_json(doc), doc
    if "model" in body:
        doc = body["model"]
        return serialize.model_from_json(doc), doc
    raise ModelValidationError("request needs 'model' or 'model_id'")


def _dataset_from_json(obj: Any, group: str) -> GroupDataset:
    if not isinstance(obj, dict) or "xs" not in obj or "ys" not in obj:
        raise ModelValidationError(f"data_{group[0]} must be an object with 'xs' and 'ys'")
    import numpy as np

    return GroupDataset(
        xs=np.asarray(obj["xs"], dtype=float), ys=np.asarray(obj["ys"], dtype=float), group=group
    )


def create_app(
    persist_dir: str | None = None,
    max_workers: int | None = None,
    static_dir: str | None = None,
) -> FastAPI:
    app = FastAPI(title="fafrontier", version="0.1.0", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    registry = Registry(persist_dir)
    pool = ThreadPoolExecutor(max_workers=max_workers or (os.cpu_count() or 2))
    app.state.registry = registry
    app.state.pool = pool

    @app.exception_handler(ServiceError)
    async def _service_error(_, exc: ServiceError):
        return JSONResponse(status_code=exc.status, content={"detail": exc.detail})

    @app.exception_handler(PreconditionError)
    async def _precondition(_, exc: PreconditionError):
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.exception_handler(ModelValidationError)
    async def _validation(_, exc: ModelValidationError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(RankDeficientError)
    async def _rank(_, exc: RankDeficientError):
        return JSONResponse(status_code=422, content={"detail": str(exc)})

    @app.post("/models")
    def register_model(body: dict = Body(...)):
        doc = body.get("model", body)
        doc = {k: v for k, v in doc.items() if k != "id"}
        serialize.model_from_json(doc)  # validate before storing
        model_id = str(body.get("id") or uuid.uuid4().hex[:12])
        registry.add_model(model_id, doc)
        return _stable({"model_id": model_id}, status=201)

    @app.get("/models/{model_id}")
    def get_model(model_id: str):
        return _stable(registry.model_doc(model_id))

    @app.get("/models/{model_id}/frontier")
    def get_frontier(model_id: str, grid: int = 101):
        model = serialize.model_from_json(registry.model_doc(model_id))
        points = trace_frontier(model, default_lambda_grid(grid))
        return _stable({"model_id": model_id, "points": serialize.frontier_to_json(points)})

    @app.post("/estimate")
    def post_estimate(body: dict = Body(...)):
        if "lambda" not in body or "estimator" not in body:
            raise ModelValidationError("estimate needs 'lambda' and 'estimator'")
        lam = float(body["lambda"])
        kind = serialize.estimator_kind_from_json(body["estimator"])
        model = None
        if "model_id" in body or "model" in body:
            model, _ = _parse_model(registry, body)
        if "data_r" in body or "data_b" in body:
            data_r = _dataset_from_json(body.get("data_r"), RED)
            data_b = _dataset_from_json(body.get("data_b"), BLUE)
        else:
            if model is None:
                raise ModelValidationError("sampling-based estimation needs 'model' or 'model_id'")
            for key in ("n_r", "n_b"):
                if key not in body:
                    raise ModelValidationError(f"sampling-based estimation needs {key!r}")
            spec = RngSpec(int(body.get("seed", 0)), int(body.get("stream", 0)))
            data_r = sample_group(model, RED, int(body["n_r"]), spec)
            data_b = sample_group(model, BLUE, int(body["n_b"]), spec)
        if kind.kind == "known_cov" and model is None:
            raise ModelValidationError("known_cov estimation needs 'model' or 'model_id'")
        beta = fit_estimator(kind, data_r, data_b, lam, model=model)
        return _stable(
            serialize.estimate_to_json(
                kind,
                lam,
                beta,
                empirical_moments(data_r).min_eig(),
                empirical_moments(data_b).min_eig(),
            )
        )

    @app.post("/bounds/sweep")
    def post_bounds_sweep(body: dict = Body(...)):
        if "config" not in body:
            raise ModelValidationError("bounds sweep needs 'config'")
        cfg = serialize.bound_config_from_json(body["config"])
        sweep = body.get("sweep")
        if sweep:
            for key in ("param", "start", "stop"):
                if key not in sweep:
                    raise ModelValidationError(f"sweep needs {key!r}")
            import numpy as np

            count = int(sweep.get("count", 25))
            if sweep.get("scale", "log") == "log":
                values = [float(v) for v in np.geomspace(float(sweep["start"]), float(sweep["stop"]), count)]
            else:
                values = [float(v) for v in np.linspace(float(sweep["start"]), float(sweep["stop"]), count)]
            cfgs = sweep_bound_configs(cfg, str(sweep["param"]), values)
        else:
            cfgs = [cfg]
        rows = [
            {
                "config": serialize.bound_config_to_json(c),
                "bounds": {k: serialize.bound_report_to_json(r) for k, r in evaluate_all(c).items()},
            }
            for c in cfgs
        ]
        return _stable(rows)

    @app.post("/allocate")
    def post_allocate(body: dict = Body(...)):
        if "budget" not in body or "config" not in body:
            raise ModelValidationError("allocate needs 'budget' and 'config'")
        cfg = serialize.bound_config_from_json(body["config"])
        budget = int(body["budget"])
        rule = body.get("rule", "bound")
        floor = body.get("floor")
        if rule == "known":
            plan = known_cov_allocation(budget, cfg.lam, cfg.rho_r, cfg.rho_b, floor=int(floor or 1))
        elif rule == "bound":
            plan = unknown_cov_allocation(budget, cfg, floor=None if floor is None else int(floor))
        else:
            raise ModelValidationError("rule must be 'known' or 'bound'")
        return _stable(serialize.allocation_to_json(plan))

    def _run_mc_job(job_id: str, doc: dict, mode: str) -> None:
        registry.update_job(job_id, status="running")
        try:
            cfg = serialize.mc_config_from_json(doc)
            if mode == "excess":
                result = serialize.mc_report_to_json(run_excess_mc(cfg))
            elif mode == "decomposition":
                result = serialize.decomposition_to_json(decomposition_mc(cfg))
            elif mode == "asymmetry":
                result = serialize.asymmetry_to_json(realization_asymmetry_mc(cfg))
            elif mode == "rate":
                n_grid = [int(n) for n in doc.get("n_grid", [])]
                if not n_grid:
                    raise ModelValidationError("rate mode needs 'n_grid'")
                result = serialize.rate_fit_to_json(rate_fit(cfg, n_grid))
            elif mode == "band":
                grid = doc.get("lambda_grid") or list(default_lambda_grid(int(doc.get("grid", 101))))
                result = serialize.band_to_json(
                    frontier_band_mc(
                        cfg.model, grid, cfg.n_r, cfg.n_b, cfg.estimator, cfg.replicates, cfg.master_seed
                    )
                )
            else:
                raise ModelValidationError(f"unknown mc mode {mode!r}")
            registry.update_job(job_id, status="done", result=result)
        except Exception as exc:  # job errors surface through the job record
            registry.update_job(job_id, status="failed", error=str(exc))

    @app.post("/mc")
    def post_mc(body: dict = Body(...)):
        doc = dict(body)
        if "model_id" in doc and "model" not in doc:
            doc["model"] = registry.model_doc(str(doc["model_id"]))
        mode = str(doc.get("mode", "excess"))
        serialize.mc_config_from_json(doc)  # validate eagerly: schema errors are 400 now
        job_id = registry.new_job(f"mc:{mode}")
        pool.submit(_run_mc_job, job_id, doc, mode)
        return _stable({"job_id": job_id}, status=202)

    @app.get("/jobs/{job_id}")
    def get_job(job_id: str):
        record = registry.job(job_id)
        return _stable(
            {
                "job_id": record["job_id"],
                "kind": record["kind"],
                "status": record["status"],
                "error": record["error"],
            }
        )

    @app.get("/jobs/{job_id}/result")
    def get_job_result(job_id: str):
        record = registry.job(job_id)
        if record["status"] == "failed":
            raise ServiceError(409, f"job failed: {record['error']}")
        if record["status"] != "done":
            raise ServiceError(409, f"job is {record['status']}, result not ready")
        return _stable(record["result"])

    if static_dir:
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")

    return app
