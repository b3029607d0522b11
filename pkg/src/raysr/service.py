"""HTTP API backing the interactive explorer.

Three stateless endpoints under /api/v1: estimate a success rate, solve
the smallest width reaching a target rate, and expose model metadata.
Numeric results are exactly the library's: the service adds no math of
its own. Malformed bodies get 400 with field paths; inputs outside the
model's validity range get 422 carrying both the warning and the computed
result so clients can still display it.
"""

from __future__ import annotations

import math
from dataclasses import replace
from typing import Literal

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, ConfigDict, Field

from .fitting import VARIANT_K
from .integrate import (
    UnreachableTargetRate,
    inverse_width,
    sr_circle,
    sr_rect,
)
from .model import (
    WARN_OUTSIDE_VALIDITY,
    ModelSpec,
    ModelVariant,
    constants_version,
    distribution_params,
    model_to_document,
    per_axis_params,
    preset,
)

API_VERSION = 1


class EstimateRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    shape_kind: Literal["disc", "rect"]
    diameter_deg: float | None = Field(default=None, gt=0)
    extent_deg: tuple[float, float] | None = None
    size_m: float | tuple[float, float] | None = None
    distance_m: float | None = Field(default=None, gt=0)
    variant: Literal["baseline", "with_amplitude", "zero_offset", "world_coordinate"] = "baseline"
    offset_enabled: bool = True
    amplitude_deg: float | None = Field(default=None, gt=0)


class InverseRequest(BaseModel):
    model_config = ConfigDict(extra="forbid")

    shape_kind: Literal["disc", "square"]
    target_sr: float = Field(gt=0, lt=1)
    search_range_deg: tuple[float, float] | None = None
    variant: Literal["baseline", "with_amplitude", "zero_offset", "world_coordinate"] = "baseline"
    offset_enabled: bool = True
    amplitude_deg: float | None = Field(default=None, gt=0)


class ApiError(Exception):
    def __init__(self, status: int, payload: dict):
        self.status = status
        self.payload = payload


def _angular_extent(req: EstimateRequest) -> tuple[float, float]:
    """Resolve the request's sizing route to per-axis angular widths."""
    angular = req.diameter_deg is not None or req.extent_deg is not None
    metric = req.size_m is not None
    if angular == metric:
        raise ApiError(400, {
            "error": "invalid_request",
            "details": [{
                "path": "body",
                "message": "give either an angular size (diameter_deg / extent_deg) "
                           "or a metric one (size_m with distance_m)",
            }],
        })

    if angular:
        if req.shape_kind == "disc":
            if req.diameter_deg is None:
                raise ApiError(400, {"error": "invalid_request", "details": [
                    {"path": "body.diameter_deg", "message": "required for disc targets"}]})
            return req.diameter_deg, req.diameter_deg
        if req.extent_deg is None:
            raise ApiError(400, {"error": "invalid_request", "details": [
                {"path": "body.extent_deg", "message": "required for rect targets"}]})
        w_x, w_y = req.extent_deg
        if w_x <= 0 or w_y <= 0:
            raise ApiError(400, {"error": "invalid_request", "details": [
                {"path": "body.extent_deg", "message": "extents must be positive"}]})
        return w_x, w_y

    if req.distance_m is None:
        raise ApiError(400, {"error": "invalid_request", "details": [
            {"path": "body.distance_m", "message": "required with size_m"}]})
    d = req.distance_m
    if req.shape_kind == "disc":
        if not isinstance(req.size_m, (int, float)) or req.size_m <= 0:
            raise ApiError(400, {"error": "invalid_request", "details": [
                {"path": "body.size_m", "message": "disc needs a positive scalar size"}]})
        if req.size_m / 2.0 >= d:
            raise ApiError(400, {"error": "invalid_request", "details": [
                {"path": "body.distance_m", "message": "viewpoint inside the sphere"}]})
        w = math.degrees(2.0 * math.asin(req.size_m / 2.0 / d))
        return w, w
    if isinstance(req.size_m, (int, float)):
        sizes = (float(req.size_m), float(req.size_m))
    else:
        sizes = req.size_m
    if sizes is None or sizes[0] <= 0 or sizes[1] <= 0:
        raise ApiError(400, {"error": "invalid_request", "details": [
            {"path": "body.size_m", "message": "sizes must be positive"}]})
    # face-on flat target: per-axis full angle
    return (
        math.degrees(2.0 * math.atan(sizes[0] / 2.0 / d)),
        math.degrees(2.0 * math.atan(sizes[1] / 2.0 / d)),
    )


def create_app(loaded_spec: ModelSpec | None = None) -> FastAPI:
    """Application factory; ``loaded_spec`` overrides the builtin preset of
    its own variant (and is the only way to serve an amplitude-aware model)."""
    app = FastAPI(title="raysr", version=str(API_VERSION))
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"],
    )

    def resolve_spec(variant_name: str) -> ModelSpec:
        variant = ModelVariant(variant_name)
        if loaded_spec is not None and loaded_spec.variant is variant:
            return loaded_spec
        if variant is ModelVariant.WITH_AMPLITUDE:
            raise ApiError(400, {
                "error": "invalid_request",
                "details": [{
                    "path": "body.variant",
                    "message": "no amplitude-aware model loaded; start the server "
                               "with a fitted model document",
                }],
            })
        return preset(variant)

    @app.exception_handler(RequestValidationError)
    async def on_validation_error(request: Request, exc: RequestValidationError):
        details = [
            {
                "path": ".".join(str(p) for p in err["loc"]),
                "message": err["msg"],
            }
            for err in exc.errors()
        ]
        return JSONResponse(status_code=400, content={
            "error": "invalid_request", "details": details,
        })

    @app.exception_handler(ApiError)
    async def on_api_error(request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status, content=exc.payload)

    @app.get("/api/v1/model")
    async def model_info():
        spec = loaded_spec if loaded_spec is not None else preset()
        doc = model_to_document(spec)
        return {
            "api_version": API_VERSION,
            "variant": spec.variant.value,
            "constants": doc["constants"],
            "amplitude_constants": doc.get("amplitude_constants"),
            "constants_version": constants_version(spec),
            "variants": [v.value for v in ModelVariant],
            "parameter_counts": {v.value: k for v, k in VARIANT_K.items()},
            "validity_range_deg": doc["validity_range_deg"],
            "schema_versions": {"scene": 1, "report": 1, "model": 1, "fit": 1, "metrics": 1},
        }

    @app.post("/api/v1/estimate")
    async def estimate(req: EstimateRequest):
        spec = resolve_spec(req.variant)
        w_x, w_y = _angular_extent(req)
        amplitude = req.amplitude_deg if spec.variant is ModelVariant.WITH_AMPLITUDE else None
        if spec.variant is ModelVariant.WITH_AMPLITUDE and amplitude is None:
            raise ApiError(400, {"error": "invalid_request", "details": [
                {"path": "body.amplitude_deg", "message": "required for the amplitude-aware variant"}]})
        try:
            params = per_axis_params((w_x, w_y), spec, amplitude)
        except ValueError as exc:
            raise ApiError(400, {"error": "invalid_request", "details": [
                {"path": "body", "message": str(exc)}]})
        if not req.offset_enabled and params.mu_x != 0.0:
            params = replace(params, mu_x=0.0)
        if req.shape_kind == "disc":
            rate = sr_circle(params, w_x)
        else:
            rate = sr_rect(params, (w_x, w_y))
        result = {
            "api_version": API_VERSION,
            "variant": spec.variant.value,
            "constants_version": constants_version(spec),
            "extent_deg": {"w_x": w_x, "w_y": w_y},
            "params": {
                "mu_x_deg": params.mu_x,
                "mu_y_deg": params.mu_y,
                "sigma_x_deg": params.sigma_x,
                "sigma_y_deg": params.sigma_y,
                "rho": params.rho,
            },
            "success_rate": rate.value,
            "method": rate.method.value,
            "warnings": list(params.warnings),
        }
        if WARN_OUTSIDE_VALIDITY in params.warnings:
            raise ApiError(422, {
                "error": "outside_validity_range",
                "warnings": list(params.warnings),
                "result": result,
            })
        return result

    @app.post("/api/v1/inverse")
    async def inverse(req: InverseRequest):
        spec = resolve_spec(req.variant)
        if not req.offset_enabled and spec.variant is not ModelVariant.ZERO_OFFSET:
            if spec.variant is ModelVariant.WITH_AMPLITUDE:
                raise ApiError(400, {"error": "invalid_request", "details": [
                    {"path": "body.offset_enabled",
                     "message": "offset toggle is not available for amplitude-aware models"}]})
            spec = ModelSpec(
                variant=ModelVariant.ZERO_OFFSET, constants=spec.constants,
                validity_range=spec.validity_range,
            )
        amplitude = req.amplitude_deg if spec.variant is ModelVariant.WITH_AMPLITUDE else None
        if spec.variant is ModelVariant.WITH_AMPLITUDE and amplitude is None:
            raise ApiError(400, {"error": "invalid_request", "details": [
                {"path": "body.amplitude_deg", "message": "required for the amplitude-aware variant"}]})
        try:
            w_star = inverse_width(
                req.target_sr, spec, shape_kind=req.shape_kind,
                search_range=req.search_range_deg, amplitude=amplitude,
            )
        except UnreachableTargetRate as exc:
            raise ApiError(422, {
                "error": "unreachable_target_sr",
                "target_sr": exc.target_sr,
                "w_max_deg": exc.w_max,
                "sr_at_range_max": exc.sr_at_max,
            })
        except ValueError as exc:
            raise ApiError(400, {"error": "invalid_request", "details": [
                {"path": "body", "message": str(exc)}]})
        params = distribution_params(w_star, spec, amplitude)
        if req.shape_kind == "disc":
            achieved = sr_circle(params, w_star).value
        else:
            achieved = sr_rect(params, (w_star, w_star)).value
        return {
            "api_version": API_VERSION,
            "variant": spec.variant.value,
            "constants_version": constants_version(spec),
            "shape_kind": req.shape_kind,
            "w_for_threshold_deg": w_star,
            "achieved_sr": achieved,
        }

    return app


app = create_app()
