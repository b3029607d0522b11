"""Scene documents in, estimation reports out.

A scene is a camera plus a list of sphere/rect targets with estimation
options. Parsing is strict: unknown fields, duplicate ids and broken
cross-field invariants are rejected with the offending path. Estimation
converts each target to its apparent angular extent, asks the model for
the endpoint distribution, and integrates the success rate; per-target
geometry failures are recorded in the report without affecting the rest.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

from . import geometry
from .geometry import AngularExtent, CameraPose, Rect, Sphere, TargetShape
from .integrate import SuccessRate, sr_circle, sr_rect
from .model import (
    DistributionParams,
    ModelSpec,
    ModelVariant,
    distribution_params,
    per_axis_params,
)

SCENE_SCHEMA_VERSION = 1
REPORT_SCHEMA_VERSION = 1

WARN_GRAZING = "grazing_angle"
WARN_WORLD_EXTENT_FOR_MOVEMENT_FRAME = "movement_frame_extent_uses_view_axes"


class SchemaError(ValueError):
    """A document violated the scene schema; ``path`` names the field."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


@dataclass(frozen=True)
class SceneOptions:
    variant: ModelVariant = ModelVariant.BASELINE
    offset_enabled: bool = True
    distance_enabled: bool = False
    frame: str = "world"  # "movement" | "world"
    default_amplitude: float | None = None
    model_path: str | None = None


@dataclass(frozen=True)
class SceneTarget:
    id: str
    shape: TargetShape
    amplitude: float | None = None


@dataclass(frozen=True)
class Scene:
    camera: CameraPose
    targets: tuple[SceneTarget, ...]
    options: SceneOptions


@dataclass(frozen=True)
class TargetEstimate:
    id: str
    extent: AngularExtent | None = None
    params: DistributionParams | None = None
    success_rate: SuccessRate | None = None
    warnings: tuple[str, ...] = ()
    error: str | None = None


@dataclass(frozen=True)
class EstimateReport:
    targets: tuple[TargetEstimate, ...]


# ---------------------------------------------------------------------------
# parsing

def _expect_keys(obj: dict, path: str, required: set[str], optional: set[str] = frozenset()):
    if not isinstance(obj, dict):
        raise SchemaError(path, "expected an object")
    unknown = sorted(set(obj) - required - set(optional))
    if unknown:
        raise SchemaError(f"{path}.{unknown[0]}", "unknown field")
    missing = sorted(required - set(obj))
    if missing:
        raise SchemaError(f"{path}.{missing[0]}", "missing required field")


def _number(obj, path: str) -> float:
    if isinstance(obj, bool) or not isinstance(obj, (int, float)):
        raise SchemaError(path, f"expected a number, got {type(obj).__name__}")
    return float(obj)


def _vector(obj, path: str) -> tuple[float, float, float]:
    if not isinstance(obj, list) or len(obj) != 3:
        raise SchemaError(path, "expected a [x, y, z] triple")
    return tuple(_number(v, f"{path}[{i}]") for i, v in enumerate(obj))


def _boolean(obj, path: str) -> bool:
    if not isinstance(obj, bool):
        raise SchemaError(path, f"expected a boolean, got {type(obj).__name__}")
    return obj


def _parse_shape(obj, path: str) -> TargetShape:
    if not isinstance(obj, dict):
        raise SchemaError(path, "expected an object")
    kind = obj.get("kind")
    try:
        if kind == "sphere":
            _expect_keys(obj, path, {"kind", "center", "diameter_m"})
            return Sphere(
                center=_vector(obj["center"], f"{path}.center"),
                diameter=_number(obj["diameter_m"], f"{path}.diameter_m"),
            )
        if kind == "rect":
            _expect_keys(obj, path, {"kind", "center", "normal", "up", "width_m", "height_m"})
            return Rect(
                center=_vector(obj["center"], f"{path}.center"),
                normal=_vector(obj["normal"], f"{path}.normal"),
                up=_vector(obj["up"], f"{path}.up"),
                width=_number(obj["width_m"], f"{path}.width_m"),
                height=_number(obj["height_m"], f"{path}.height_m"),
            )
    except ValueError as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError(path, str(exc)) from None
    raise SchemaError(f"{path}.kind", f"expected 'sphere' or 'rect', got {kind!r}")


def parse_scene(document: bytes | str | dict) -> Scene:
    """Parse and fully validate a scene.json document."""
    if isinstance(document, (bytes, str)):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise SchemaError("$", f"invalid JSON: {exc}") from None
    else:
        doc = document
    if not isinstance(doc, dict):
        raise SchemaError("$", "scene document must be a JSON object")
    if doc.get("raysr_scene") != SCENE_SCHEMA_VERSION:
        raise SchemaError(
            "$.raysr_scene", f"must be {SCENE_SCHEMA_VERSION}"
        )
    _expect_keys(doc, "$", {"raysr_scene", "camera", "targets"}, {"options"})

    cam = doc["camera"]
    _expect_keys(cam, "$.camera", {"position", "forward", "up"})
    try:
        camera = CameraPose(
            position=_vector(cam["position"], "$.camera.position"),
            forward=_vector(cam["forward"], "$.camera.forward"),
            up=_vector(cam["up"], "$.camera.up"),
        )
    except ValueError as exc:
        if isinstance(exc, SchemaError):
            raise
        raise SchemaError("$.camera", str(exc)) from None

    raw_targets = doc["targets"]
    if not isinstance(raw_targets, list):
        raise SchemaError("$.targets", "expected an array")
    targets = []
    seen_ids: set[str] = set()
    for i, t in enumerate(raw_targets):
        path = f"$.targets[{i}]"
        _expect_keys(t, path, {"id", "shape"}, {"amplitude_deg"})
        tid = t["id"]
        if not isinstance(tid, str) or not tid:
            raise SchemaError(f"{path}.id", "expected a non-empty string")
        if tid in seen_ids:
            raise SchemaError(f"{path}.id", f"duplicate target id {tid!r}")
        seen_ids.add(tid)
        amplitude = None
        if "amplitude_deg" in t:
            amplitude = _number(t["amplitude_deg"], f"{path}.amplitude_deg")
            if amplitude <= 0.0:
                raise SchemaError(f"{path}.amplitude_deg", "must be positive")
        targets.append(SceneTarget(
            id=tid, shape=_parse_shape(t["shape"], f"{path}.shape"),
            amplitude=amplitude,
        ))

    options = _parse_options(doc.get("options", {}))
    if options.distance_enabled and options.default_amplitude is None:
        if not all(t.amplitude is not None for t in targets):
            raise SchemaError(
                "$.options.default_amplitude_deg",
                "required when distance_enabled is true and a target lacks amplitude_deg",
            )
    return Scene(camera=camera, targets=tuple(targets), options=options)


def _parse_options(obj) -> SceneOptions:
    path = "$.options"
    _expect_keys(obj, path, set(), {
        "variant", "offset_enabled", "distance_enabled", "frame",
        "default_amplitude_deg", "model_path",
    })
    variant = ModelVariant.BASELINE
    if "variant" in obj:
        try:
            variant = ModelVariant(obj["variant"])
        except ValueError:
            raise SchemaError(
                f"{path}.variant",
                f"expected one of {[v.value for v in ModelVariant]}, got {obj['variant']!r}",
            ) from None
    frame = obj.get("frame", "world")
    if frame not in ("movement", "world"):
        raise SchemaError(f"{path}.frame", f"expected 'movement' or 'world', got {frame!r}")
    default_amplitude = None
    if "default_amplitude_deg" in obj:
        default_amplitude = _number(obj["default_amplitude_deg"], f"{path}.default_amplitude_deg")
        if default_amplitude <= 0.0:
            raise SchemaError(f"{path}.default_amplitude_deg", "must be positive")
    model_path = obj.get("model_path")
    if model_path is not None and not isinstance(model_path, str):
        raise SchemaError(f"{path}.model_path", "expected a string")
    return SceneOptions(
        variant=variant,
        offset_enabled=_boolean(obj["offset_enabled"], f"{path}.offset_enabled")
        if "offset_enabled" in obj else True,
        distance_enabled=_boolean(obj["distance_enabled"], f"{path}.distance_enabled")
        if "distance_enabled" in obj else False,
        frame=frame,
        default_amplitude=default_amplitude,
        model_path=model_path,
    )


def scene_to_document(scene: Scene) -> dict:
    doc: dict = {
        "raysr_scene": SCENE_SCHEMA_VERSION,
        "camera": {
            "position": list(scene.camera.position),
            "forward": list(scene.camera.forward),
            "up": list(scene.camera.up),
        },
        "targets": [],
    }
    for t in scene.targets:
        entry: dict = {"id": t.id}
        if isinstance(t.shape, Sphere):
            entry["shape"] = {
                "kind": "sphere",
                "center": list(t.shape.center),
                "diameter_m": t.shape.diameter,
            }
        else:
            entry["shape"] = {
                "kind": "rect",
                "center": list(t.shape.center),
                "normal": list(t.shape.normal),
                "up": list(t.shape.up),
                "width_m": t.shape.width,
                "height_m": t.shape.height,
            }
        if t.amplitude is not None:
            entry["amplitude_deg"] = t.amplitude
        doc["targets"].append(entry)
    opt = scene.options
    options: dict = {
        "variant": opt.variant.value,
        "offset_enabled": opt.offset_enabled,
        "distance_enabled": opt.distance_enabled,
        "frame": opt.frame,
    }
    if opt.default_amplitude is not None:
        options["default_amplitude_deg"] = opt.default_amplitude
    if opt.model_path is not None:
        options["model_path"] = opt.model_path
    doc["options"] = options
    return doc


# ---------------------------------------------------------------------------
# estimation

def estimate_scene(scene: Scene, spec: ModelSpec) -> EstimateReport:
    """Estimate each target's success rate; geometry failures stay local."""
    if spec.variant is not scene.options.variant:
        raise ValueError(
            f"scene options ask for variant {scene.options.variant.value!r} but "
            f"the model is {spec.variant.value!r}"
        )
    entries = []
    for target in scene.targets:
        try:
            entries.append(_estimate_target(scene, spec, target))
        except ValueError as exc:
            entries.append(TargetEstimate(id=target.id, error=str(exc)))
    return EstimateReport(targets=tuple(entries))


def _estimate_target(scene: Scene, spec: ModelSpec, target: SceneTarget) -> TargetEstimate:
    camera = scene.camera
    opt = scene.options
    amplitude = None
    if opt.distance_enabled and spec.variant is ModelVariant.WITH_AMPLITUDE:
        amplitude = target.amplitude if target.amplitude is not None else opt.default_amplitude

    warnings: list[str] = []
    if isinstance(target.shape, Sphere):
        w = geometry.angular_width_sphere(camera, target.shape)
        extent = AngularExtent(w_x=w, w_y=w, grazing=False)
        params = distribution_params(w, spec, amplitude)
    else:
        frame = geometry.world_frame(camera, target.shape.center)
        if opt.frame == "movement":
            # a static scene carries no movement direction; extents fall back
            # to the camera's view axes
            warnings.append(WARN_WORLD_EXTENT_FOR_MOVEMENT_FRAME)
        extent = geometry.angular_extent_rect(camera, target.shape, frame)
        params = per_axis_params((extent.w_x, extent.w_y), spec, amplitude)

    if not opt.offset_enabled and params.mu_x != 0.0:
        params = replace(params, mu_x=0.0)

    if isinstance(target.shape, Sphere):
        rate = sr_circle(params, extent.w_x)
    else:
        rate = sr_rect(params, extent)

    warnings.extend(params.warnings)
    if extent.grazing:
        warnings.append(WARN_GRAZING)
    return TargetEstimate(
        id=target.id, extent=extent, params=params, success_rate=rate,
        warnings=tuple(dict.fromkeys(warnings)),
    )


def report_to_document(report: EstimateReport) -> dict:
    targets = []
    for t in report.targets:
        if t.error is not None:
            targets.append({"id": t.id, "error": t.error})
            continue
        targets.append({
            "id": t.id,
            "extent_deg": {"w_x": t.extent.w_x, "w_y": t.extent.w_y},
            "grazing": t.extent.grazing,
            "params": {
                "mu_x_deg": t.params.mu_x,
                "mu_y_deg": t.params.mu_y,
                "sigma_x_deg": t.params.sigma_x,
                "sigma_y_deg": t.params.sigma_y,
                "rho": t.params.rho,
            },
            "success_rate": t.success_rate.value,
            "method": t.success_rate.method.value,
            "warnings": list(t.warnings),
        })
    return {"raysr_report": REPORT_SCHEMA_VERSION, "targets": targets}


# ---------------------------------------------------------------------------
# width sweeps

@dataclass(frozen=True)
class SweepRow:
    w: float
    success_rate: float
    warnings: tuple[str, ...] = ()


def sweep(
    spec: ModelSpec,
    shape_kind: str,
    w_range: tuple[float, float],
    step: float,
    amplitude: float | None = None,
) -> list[SweepRow]:
    """Success rate on a width grid: ``w_range`` start to end inclusive."""
    lo, hi = float(w_range[0]), float(w_range[1])
    if not step > 0.0:
        raise ValueError(f"step must be positive, got {step}")
    if not 0.0 < lo <= hi:
        raise ValueError(f"empty or invalid width range [{lo}, {hi}]")
    if shape_kind not in ("disc", "square"):
        raise ValueError(f"shape_kind must be 'disc' or 'square', got {shape_kind!r}")

    rows = []
    i = 0
    while True:
        w = lo + i * step
        if w > hi + 1e-9:
            break
        params = distribution_params(w, spec, amplitude)
        if shape_kind == "disc":
            rate = sr_circle(params, w)
        else:
            rate = sr_rect(params, (w, w))
        rows.append(SweepRow(w=w, success_rate=rate.value, warnings=params.warnings))
        i += 1
    return rows
