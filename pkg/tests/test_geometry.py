import math

import numpy as np
import pytest

from raysr import (
    CameraPose,
    Rect,
    Sphere,
    angular_extent_rect,
    angular_width_sphere,
    endpoint_to_angular,
    movement_frame,
    world_frame,
)

CAM = CameraPose(position=(0.0, 0.0, 0.0), forward=(0.0, 0.0, 1.0), up=(0.0, 1.0, 0.0))


def rotated_rect(angle_deg: float, dist: float = 10.0) -> Rect:
    """1x1 rect at (0,0,dist), facing the camera, then yawed about its up axis."""
    a = math.radians(angle_deg)
    normal = (-math.sin(a), 0.0, -math.cos(a))
    return Rect(center=(0.0, 0.0, dist), normal=normal, up=(0.0, 1.0, 0.0),
                width=1.0, height=1.0)


# ---------------------------------------------------------------------------
# spheres

def test_sphere_width_inverse_of_asin():
    w = angular_width_sphere(CAM, Sphere(center=(0.0, 0.0, 100.0), diameter=3.49))
    expected = math.degrees(2.0 * math.asin(1.745 / 100.0))
    assert w == pytest.approx(expected, abs=1e-12)
    assert w == pytest.approx(2.0, abs=1e-3)


def test_sphere_width_exact_sixty_degrees():
    # distance equal to the diameter: half-angle asin(1/2)
    w = angular_width_sphere(CAM, Sphere(center=(0.0, 0.0, 2.0), diameter=2.0))
    assert w == pytest.approx(60.0, abs=1e-9)


def test_sphere_width_vanishes_with_diameter():
    w = angular_width_sphere(CAM, Sphere(center=(0.0, 0.0, 10.0), diameter=1e-9))
    assert 0.0 < w < 1e-8


def test_camera_inside_sphere_rejected():
    with pytest.raises(ValueError):
        angular_width_sphere(CAM, Sphere(center=(0.0, 0.0, 1.0), diameter=4.0))
    with pytest.raises(ValueError):
        angular_width_sphere(CAM, Sphere(center=(0.0, 0.0, 1.0), diameter=2.0))


def test_sphere_and_flat_widths_agree_at_range():
    # 2*asin(s/2d) and 2*atan(s/2d) converge for distance >> size
    s, d = 1.0, 100.0
    asin_w = 2.0 * math.asin(s / (2 * d))
    atan_w = 2.0 * math.atan(s / (2 * d))
    assert abs(asin_w - atan_w) / atan_w < 1e-3


# ---------------------------------------------------------------------------
# movement frames

def test_movement_frame_horizontal():
    f = movement_frame(CAM, (-5.0, 0.0, 10.0), (0.0, 0.0, 10.0))
    assert np.dot(f.x_axis, (1.0, 0.0, 0.0)) > 0.999
    assert np.dot(f.y_axis, (0.0, 1.0, 0.0)) > 0.999


def test_movement_frame_swap_negates_x():
    # anchored at either end of a short hop, so the two tangent planes
    # nearly coincide and the axes compare directly
    a, b = (-0.2, 0.0, 10.0), (0.2, 0.0, 10.0)
    f1 = movement_frame(CAM, a, b)
    f2 = movement_frame(CAM, b, a)
    assert np.dot(f1.x_axis, f2.x_axis) < -0.999
    assert abs(np.dot(f1.y_axis, f2.y_axis)) > 0.999


def test_movement_frame_diagonal():
    f = movement_frame(CAM, (-1.0, -1.0, 10.0), (0.0, 0.0, 10.0))
    c45 = math.cos(math.radians(45.0))
    assert np.dot(f.x_axis, (1.0, 0.0, 0.0)) == pytest.approx(c45, abs=1e-3)
    assert np.dot(f.x_axis, (0.0, 1.0, 0.0)) == pytest.approx(c45, abs=1e-3)


def test_movement_frame_orthonormal():
    rng = np.random.default_rng(7)
    for _ in range(50):
        start = rng.uniform(-3, 3, 3) + (0, 0, 8)
        goal = rng.uniform(-3, 3, 3) + (0, 0, 8)
        if np.linalg.norm(start - goal) < 1e-3:
            continue
        f = movement_frame(CAM, tuple(start), tuple(goal))
        x, y, z = np.array(f.x_axis), np.array(f.y_axis), np.array(f.center)
        for v in (x, y, z):
            assert abs(np.linalg.norm(v) - 1.0) < 1e-9
        assert abs(np.dot(x, y)) < 1e-9
        assert abs(np.dot(x, z)) < 1e-9
        assert np.allclose(np.cross(x, y), z, atol=1e-9)


def test_movement_frame_rejects_coincident_targets():
    with pytest.raises(ValueError):
        movement_frame(CAM, (0.0, 0.0, 5.0), (0.0, 0.0, 10.0))


def test_movement_frame_rejects_targets_behind_camera():
    with pytest.raises(ValueError):
        movement_frame(CAM, (0.0, 0.0, -5.0), (0.0, 0.0, 10.0))


# ---------------------------------------------------------------------------
# endpoint decomposition

def test_endpoint_through_center_is_exactly_zero():
    goal = (3.0, -2.0, 12.0)
    f = world_frame(CAM, goal)
    d = np.array(goal) / np.linalg.norm(goal)
    e = endpoint_to_angular(CAM, f, goal, tuple(d))
    assert (e.x, e.y) == (0.0, 0.0)


def test_endpoint_axis_aligned_offset():
    goal = (0.0, 0.0, 10.0)
    f = world_frame(CAM, goal)
    a = math.radians(1.0)
    ray = (math.sin(a), 0.0, math.cos(a))  # rotated toward +x
    e = endpoint_to_angular(CAM, f, goal, ray)
    assert e.x == pytest.approx(1.0, abs=1e-9)
    assert e.y == pytest.approx(0.0, abs=1e-9)


def test_endpoint_diagonal_small_angles():
    goal = (0.0, 0.0, 10.0)
    f = world_frame(CAM, goal)
    t = math.tan(math.radians(1.0))
    ray = np.array([t, t, 1.0])
    ray /= np.linalg.norm(ray)
    e = endpoint_to_angular(CAM, f, goal, tuple(ray))
    assert e.x == pytest.approx(1.0, abs=1e-3)
    assert e.y == pytest.approx(1.0, abs=1e-3)


def test_endpoint_total_angle_preserved():
    goal = (0.0, 0.0, 10.0)
    f = world_frame(CAM, goal)
    rng = np.random.default_rng(3)
    for _ in range(20):
        ray = np.array([0.0, 0.0, 1.0]) + rng.uniform(-0.3, 0.3, 3)
        ray /= np.linalg.norm(ray)
        e = endpoint_to_angular(CAM, f, goal, tuple(ray))
        total = math.degrees(math.acos(min(1.0, float(ray[2]))))
        assert math.hypot(e.x, e.y) == pytest.approx(total, abs=1e-9)


def test_endpoint_rejects_ray_away_from_goal():
    goal = (0.0, 0.0, 10.0)
    f = world_frame(CAM, goal)
    with pytest.raises(ValueError):
        endpoint_to_angular(CAM, f, goal, (0.0, 0.0, -1.0))


# ---------------------------------------------------------------------------
# rect extents

def test_rect_extent_on_axis():
    rect = rotated_rect(0.0)
    ext = angular_extent_rect(CAM, rect, world_frame(CAM, rect.center))
    expected = math.degrees(2.0 * math.atan(0.05))
    assert ext.w_x == pytest.approx(expected, abs=1e-9)
    assert ext.w_y == pytest.approx(expected, abs=1e-9)
    assert ext.w_x == pytest.approx(5.725, abs=1e-3)
    assert not ext.grazing


def test_rect_width_doubled():
    rect = Rect(center=(0.0, 0.0, 10.0), normal=(0.0, 0.0, -1.0), up=(0.0, 1.0, 0.0),
                width=2.0, height=1.0)
    ext = angular_extent_rect(CAM, rect, world_frame(CAM, rect.center))
    assert ext.w_x == pytest.approx(math.degrees(2.0 * math.atan(0.1)), abs=1e-9)
    assert ext.w_x == pytest.approx(11.42, abs=1e-2)
    assert ext.w_y == pytest.approx(math.degrees(2.0 * math.atan(0.05)), abs=1e-9)


def test_rect_grazing_flag():
    near_edge_on = rotated_rect(89.0)
    ext = angular_extent_rect(CAM, near_edge_on, world_frame(CAM, near_edge_on.center))
    assert ext.grazing
    assert ext.w_x > 0.0

    moderate = rotated_rect(60.0)
    ext = angular_extent_rect(CAM, moderate, world_frame(CAM, moderate.center))
    assert not ext.grazing

    just_past = rotated_rect(76.0)
    ext = angular_extent_rect(CAM, just_past, world_frame(CAM, just_past.center))
    assert ext.grazing


def test_rect_exactly_edge_on_is_in_plane_error():
    rect = Rect(center=(0.0, 0.0, 10.0), normal=(1.0, 0.0, 0.0), up=(0.0, 1.0, 0.0),
                width=1.0, height=1.0)
    with pytest.raises(ValueError, match="plane"):
        angular_extent_rect(CAM, rect, world_frame(CAM, rect.center))


def test_rect_back_face_rejected():
    rect = Rect(center=(0.0, 0.0, 10.0), normal=(0.0, 0.0, 1.0), up=(0.0, 1.0, 0.0),
                width=1.0, height=1.0)
    with pytest.raises(ValueError, match="behind"):
        angular_extent_rect(CAM, rect, world_frame(CAM, rect.center))


def test_rect_behind_camera_rejected():
    rect = Rect(center=(0.0, 0.0, -10.0), normal=(0.0, 0.0, 1.0), up=(0.0, 1.0, 0.0),
                width=1.0, height=1.0)
    with pytest.raises(ValueError, match="front"):
        angular_extent_rect(CAM, rect, world_frame(CAM, rect.center))


def test_rect_extent_rigid_motion_invariant():
    rect = rotated_rect(30.0)
    ext1 = angular_extent_rect(CAM, rect, world_frame(CAM, rect.center))
    shift = np.array([3.0, -2.0, 5.0])
    cam2 = CameraPose(position=tuple(shift), forward=CAM.forward, up=CAM.up)
    rect2 = Rect(center=tuple(np.array(rect.center) + shift), normal=rect.normal,
                 up=rect.up, width=rect.width, height=rect.height)
    ext2 = angular_extent_rect(cam2, rect2, world_frame(cam2, rect2.center))
    assert ext1.w_x == pytest.approx(ext2.w_x, abs=1e-12)
    assert ext1.w_y == pytest.approx(ext2.w_y, abs=1e-12)


def test_rect_square_matches_sphere_at_range():
    # flat and spherical widths converge when distance dominates size
    rect = Rect(center=(0.0, 0.0, 200.0), normal=(0.0, 0.0, -1.0), up=(0.0, 1.0, 0.0),
                width=1.0, height=1.0)
    ext = angular_extent_rect(CAM, rect, world_frame(CAM, rect.center))
    ws = angular_width_sphere(CAM, Sphere(center=(0.0, 0.0, 200.0), diameter=1.0))
    assert abs(ext.w_x - ws) / ws < 1e-3


# ---------------------------------------------------------------------------
# validation

def test_pose_and_shape_validation():
    with pytest.raises(ValueError):
        CameraPose(position=(0, 0, 0), forward=(0, 0, 2.0), up=(0, 1, 0))
    with pytest.raises(ValueError):
        CameraPose(position=(0, 0, 0), forward=(0, 0, 1.0), up=(0, 0, 1.0))
    with pytest.raises(ValueError):
        Sphere(center=(0, 0, 0), diameter=0.0)
    with pytest.raises(ValueError):
        Rect(center=(0, 0, 0), normal=(0, 0, 1), up=(0, 1, 0), width=0.0, height=1.0)
    with pytest.raises(ValueError):
        # normal and up not orthogonal
        n = (0.0, math.sin(0.1), math.cos(0.1))
        Rect(center=(0, 0, 0), normal=n, up=(0, 1, 0), width=1.0, height=1.0)
