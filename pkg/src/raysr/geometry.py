"""World-space scenes to angular quantities.

The model lives entirely in angular coordinates as seen from the camera:
target sizes become apparent angular widths, and ray endpoints become 2D
angular errors around the goal direction. Directions are decomposed
great-circle style: an endpoint's total angular error is preserved and
split by its direction in the tangent plane, so x**2 + y**2 equals the
squared angle between the ray and the goal direction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

#: Incidence angle (view ray vs surface normal, degrees) beyond which a flat
#: target is flagged as grazing: the extent is still returned but the
#: prediction deserves less trust.
GRAZING_THRESHOLD_DEG = 75.0

_UNIT_TOL = 1e-6

Vec3 = tuple[float, float, float]


def _vec(v) -> np.ndarray:
    a = np.asarray(v, dtype=float)
    if a.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {a.shape}")
    return a


def _unit(v: np.ndarray) -> np.ndarray:
    n = float(np.linalg.norm(v))
    if n < 1e-12:
        raise ValueError("cannot normalize a near-zero vector")
    return v / n


def _check_unit(v, name: str) -> np.ndarray:
    a = _vec(v)
    if abs(float(np.linalg.norm(a)) - 1.0) > _UNIT_TOL:
        raise ValueError(f"{name} must be unit length, |v|={np.linalg.norm(a):.8f}")
    return a


@dataclass(frozen=True)
class CameraPose:
    position: Vec3
    forward: Vec3
    up: Vec3

    def __post_init__(self) -> None:
        _vec(self.position)
        f = _check_unit(self.forward, "camera forward")
        u = _check_unit(self.up, "camera up")
        if float(np.linalg.norm(np.cross(f, u))) < 1e-6:
            raise ValueError("camera forward and up must not be parallel")


@dataclass(frozen=True)
class Sphere:
    center: Vec3
    diameter: float

    def __post_init__(self) -> None:
        _vec(self.center)
        if not self.diameter > 0.0:
            raise ValueError(f"sphere diameter must be positive, got {self.diameter}")


@dataclass(frozen=True)
class Rect:
    """Flat rectangular target: ``width`` along up x normal, ``height`` along up."""

    center: Vec3
    normal: Vec3
    up: Vec3
    width: float
    height: float

    def __post_init__(self) -> None:
        _vec(self.center)
        n = _check_unit(self.normal, "rect normal")
        u = _check_unit(self.up, "rect up")
        if abs(float(np.dot(n, u))) > _UNIT_TOL:
            raise ValueError("rect normal and up must be orthogonal")
        if not (self.width > 0.0 and self.height > 0.0):
            raise ValueError(
                f"rect sides must be positive, got {self.width} x {self.height}"
            )


TargetShape = Sphere | Rect


@dataclass(frozen=True)
class AngularExtent:
    """Apparent per-axis angular widths of a target, in degrees."""

    w_x: float
    w_y: float
    grazing: bool = False

    def __post_init__(self) -> None:
        if not (self.w_x > 0.0 and self.w_y > 0.0):
            raise ValueError(
                f"angular extents must be positive, got ({self.w_x}, {self.w_y})"
            )


@dataclass(frozen=True)
class AngularEndpoint:
    """Signed angular error (degrees): x along the frame's first axis."""

    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("endpoint coordinates must be finite")


@dataclass(frozen=True)
class AngularFrame:
    """Orthonormal decomposition basis around a center direction.

    ``center`` is the unit direction the frame is anchored at; ``x_axis``
    and ``y_axis`` span its tangent plane with x cross y = center.
    """

    x_axis: Vec3
    y_axis: Vec3
    center: Vec3


def _make_frame(x_axis: np.ndarray, y_axis: np.ndarray, center: np.ndarray) -> AngularFrame:
    return AngularFrame(
        x_axis=tuple(float(c) for c in x_axis),
        y_axis=tuple(float(c) for c in y_axis),
        center=tuple(float(c) for c in center),
    )


def angular_width_sphere(camera: CameraPose, sphere: Sphere) -> float:
    """Full angular diameter (degrees) of the cone of rays hitting a sphere."""
    d = float(np.linalg.norm(_vec(sphere.center) - _vec(camera.position)))
    r = sphere.diameter / 2.0
    if d <= r:
        raise ValueError(
            f"camera is inside (or on) the sphere: distance {d} <= radius {r}"
        )
    return math.degrees(2.0 * math.asin(r / d))


def world_frame(camera: CameraPose, at: Vec3) -> AngularFrame:
    """View-aligned frame at the direction of ``at``: x follows the camera's
    horizontal axis, y its vertical axis, projected onto the tangent plane."""
    pos = _vec(camera.position)
    z = _unit(_vec(at) - pos)
    fwd = _unit(_vec(camera.forward))
    up = _unit(_vec(camera.up))
    right = _unit(np.cross(up, fwd))
    x = right - np.dot(right, z) * z
    if float(np.linalg.norm(x)) < 1e-9:
        # looking straight down the horizontal axis; fall back to camera up
        x = up - np.dot(up, z) * z
    x = _unit(x)
    y = np.cross(z, x)
    return _make_frame(x, y, z)


def movement_frame(camera: CameraPose, start_center, goal_center) -> AngularFrame:
    """Frame at the goal direction whose x-axis is the apparent movement
    direction (start toward goal, as seen from the camera)."""
    pos = _vec(camera.position)
    fwd = _unit(_vec(camera.forward))
    to_goal = _vec(goal_center) - pos
    to_start = _vec(start_center) - pos
    if np.dot(to_goal, fwd) <= 0.0 or np.dot(to_start, fwd) <= 0.0:
        raise ValueError("start and goal must both be in front of the camera")
    z = _unit(to_goal)
    u_s = _unit(to_start)
    toward_start = u_s - np.dot(u_s, z) * z
    if float(np.linalg.norm(toward_start)) < 1e-9:
        raise ValueError("start and goal are angularly coincident from the camera")
    x = -_unit(toward_start)  # direction of movement at arrival
    y = np.cross(z, x)
    return _make_frame(x, y, z)


def endpoint_to_angular(
    camera: CameraPose,
    frame: AngularFrame,
    goal_center,
    ray_direction,
) -> AngularEndpoint:
    """Decompose a ray's angular error about the goal into frame components.

    The total angle between the ray and the camera-to-goal direction is
    split by its bearing in the frame's tangent plane, so the returned
    (x, y) satisfies hypot(x, y) == total angular error.
    """
    pos = _vec(camera.position)
    z = _unit(_vec(goal_center) - pos)
    r = _check_unit(ray_direction, "ray direction")
    c = float(np.dot(r, z))
    if c <= 0.0:
        raise ValueError("ray points away from the goal hemisphere")
    p = r - c * z
    pn = float(np.linalg.norm(p))
    theta = math.degrees(math.atan2(pn, c))
    if pn == 0.0:
        return AngularEndpoint(0.0, 0.0)
    px = float(np.dot(p, _vec(frame.x_axis)))
    py = float(np.dot(p, _vec(frame.y_axis)))
    bearing = math.atan2(py, px)
    return AngularEndpoint(theta * math.cos(bearing), theta * math.sin(bearing))


def angular_extent_rect(camera: CameraPose, rect: Rect, frame: AngularFrame) -> AngularExtent:
    """Apparent per-axis widths of a flat rect, measured between the angular
    positions of opposite edge midpoints along the frame's axes."""
    pos = _vec(camera.position)
    center = _vec(rect.center)
    fwd = _unit(_vec(camera.forward))
    view = center - pos
    dist = float(np.linalg.norm(view))
    if np.dot(view, fwd) <= 0.0:
        raise ValueError("rect is not in front of the camera")
    n = _unit(_vec(rect.normal))
    side = float(np.dot(pos - center, n))
    if abs(side) < 1e-9 * dist:
        raise ValueError("camera lies in the rect's plane")
    if side < 0.0:
        raise ValueError("camera is behind the rect's plane")

    up = _unit(_vec(rect.up))
    right = np.cross(up, n)

    def angular(point: np.ndarray) -> AngularEndpoint:
        return endpoint_to_angular(camera, frame, center, _unit(point - pos))

    left_m = angular(center - right * (rect.width / 2.0))
    right_m = angular(center + right * (rect.width / 2.0))
    bottom_m = angular(center - up * (rect.height / 2.0))
    top_m = angular(center + up * (rect.height / 2.0))

    w_x = abs(right_m.x - left_m.x)
    w_y = abs(top_m.y - bottom_m.y)

    v = view / dist
    incidence = math.degrees(math.acos(min(1.0, abs(float(np.dot(v, n))))))
    grazing = incidence > GRAZING_THRESHOLD_DEG

    if w_x <= 0.0 or w_y <= 0.0:
        raise ValueError("rect has no angular extent along a frame axis (seen edge-on?)")
    return AngularExtent(w_x=w_x, w_y=w_y, grazing=grazing)
