"""HTTP facade over the workbench modules.

Every endpoint is a thin adapter onto exactly one module operation; no
simulation, fitting, or validation logic lives in the handlers. Errors
leave as a single error object ``{"code", "message", "details"}`` with
code one of ``validation_failed``, ``not_found``, ``bad_request``,
``engine_error``.
"""

from __future__ import annotations

import warnings as _warnings
from dataclasses import asdict
from typing import Optional

from fastapi import Body, FastAPI, Query, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .calibration import (
    fit_result_to_dict,
    import_observations,
    observations_from_dict,
    observations_to_dict,
    recommend_parameters,
)
from .compiler import CompileWarning, InvalidModelError, compile_model, spec_to_dict
from .engine import (
    EngineError,
    RunConfig,
    ensemble_mean,
    run_ode,
    run_stochastic,
    timeseries_to_dict,
)
from .library import ModelLibrary, NotFoundError
from .model import ModelFormatError, model_from_dict, model_to_dict, validate_model
from .traits import TraitStore

__all__ = ["create_app"]


class RunRequest(BaseModel):
    engine: str = Field(default="stochastic", pattern="^(stochastic|ode)$")
    duration: float
    dt: float
    seed: int = 0
    record_every: int = 1
    runs: int = 1


class FitRequest(BaseModel):
    observations: dict
    free: list[str]
    budget: int
    dt: Optional[float] = None


class CopyRequest(BaseModel):
    new_name: str


def _error(status: int, code: str, message: str, details=None) -> JSONResponse:
    return JSONResponse(
        status_code=status,
        content={"code": code, "message": message, "details": details},
    )


def create_app(
    library_path: str,
    traits_csv: Optional[str] = None,
    sim_time_cap: float = 60.0,
) -> FastAPI:
    """Build the service around a model library directory and an optional
    trait CSV ingested at startup."""
    library = ModelLibrary(library_path)
    traits = TraitStore()
    if traits_csv is not None:
        with open(traits_csv, encoding="utf-8") as stream:
            traits.ingest(stream)

    app = FastAPI(title="vera", version="0.1.0")
    # the web client is served separately (static files); open CORS so a
    # local workbench page can reach the service
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(InvalidModelError)
    async def _invalid_model(request: Request, exc: InvalidModelError):
        return _error(
            422,
            "validation_failed",
            "model failed validation",
            details=[asdict(v) for v in exc.report],
        )

    @app.exception_handler(NotFoundError)
    async def _not_found(request: Request, exc: NotFoundError):
        return _error(404, "not_found", str(exc.model_id))

    @app.exception_handler(EngineError)
    async def _engine_error(request: Request, exc: EngineError):
        return _error(500, "engine_error", str(exc))

    @app.exception_handler(RequestValidationError)
    async def _bad_body(request: Request, exc: RequestValidationError):
        return _error(400, "bad_request", "malformed request body", details=exc.errors())

    # ModelFormatError, ObservationFormatError, CalibrationError, and
    # CompileError are all ValueError subclasses; the more specific
    # InvalidModelError handler above still wins via the MRO walk.
    @app.exception_handler(ValueError)
    async def _bad_request(request: Request, exc: ValueError):
        return _error(400, "bad_request", str(exc))

    @app.get("/health")
    async def health():
        return {"status": "ok"}

    @app.get("/models")
    async def list_models(q: Optional[str] = Query(default=None)):
        return {"models": [asdict(s) for s in library.list(q)]}

    @app.post("/models", status_code=201)
    async def save_model(doc: dict = Body(...), tags: Optional[str] = Query(default=None)):
        model = model_from_dict(doc)
        tag_list = [t for t in tags.split(",") if t] if tags else None
        return {"id": library.save(model, tags=tag_list)}

    @app.get("/models/{model_id}")
    async def get_model(model_id: str):
        return model_to_dict(library.load(model_id).model)

    @app.put("/models/{model_id}")
    async def put_model(model_id: str, doc: dict = Body(...)):
        model = model_from_dict(doc)
        if model.id != model_id:
            raise ModelFormatError(
                f"document id {model.id!r} does not match path id {model_id!r}"
            )
        return {"id": library.save(model)}

    @app.post("/models/{model_id}/copy", status_code=201)
    async def copy_model(model_id: str, body: CopyRequest):
        return {"id": library.copy(model_id, body.new_name)}

    @app.post("/models/{model_id}/validate")
    async def validate(model_id: str):
        report = validate_model(library.load(model_id).model)
        return {"valid": not report, "violations": [asdict(v) for v in report]}

    @app.post("/models/{model_id}/compile")
    async def compile_endpoint(model_id: str):
        model = library.load(model_id).model
        with _warnings.catch_warnings(record=True) as caught:
            _warnings.simplefilter("always", CompileWarning)
            spec = compile_model(model)
        doc = spec_to_dict(spec)
        doc["warnings"] = [str(w.message) for w in caught]
        return doc

    @app.post("/models/{model_id}/simulate")
    async def simulate(model_id: str, body: RunRequest):
        model = library.load(model_id).model
        with _warnings.catch_warnings():
            _warnings.simplefilter("ignore", CompileWarning)
            spec = compile_model(model)
        config = RunConfig(
            duration=body.duration,
            dt=body.dt,
            seed=body.seed,
            record_every=body.record_every,
        )
        if body.engine == "ode":
            ts = run_ode(spec, config, deadline=sim_time_cap)
        elif body.runs > 1:
            ts = ensemble_mean(spec, config, body.runs, deadline=sim_time_cap)
        else:
            ts = run_stochastic(spec, config, deadline=sim_time_cap)
        return timeseries_to_dict(ts)

    @app.post("/models/{model_id}/fit")
    async def fit(model_id: str, body: FitRequest):
        model = library.load(model_id).model
        obs = observations_from_dict(body.observations)
        result = recommend_parameters(model, obs, body.free, body.budget, dt=body.dt)
        return fit_result_to_dict(result)

    @app.get("/species")
    async def species(q: str = Query(default="")):
        return {
            "species": [
                {
                    "species_id": r.species_id,
                    "common_name": r.common_name,
                    "lifespan_years": r.lifespan,
                    "body_mass_g": r.body_mass,
                    "offspring_count": r.offspring_count,
                    "reproductive_maturity_years": r.reproductive_maturity,
                }
                for r in (traits.lookup(q) if q else traits.records())
            ]
        }

    @app.post("/observations/parse")
    async def parse_observations(request: Request):
        text = (await request.body()).decode("utf-8")
        with _warnings.catch_warnings(record=True) as caught:
            _warnings.simplefilter("always")
            obs = import_observations(text)
        doc = observations_to_dict(obs)
        doc["warnings"] = [str(w.message) for w in caught]
        return doc

    return app
