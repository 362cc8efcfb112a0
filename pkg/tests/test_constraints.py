import math

import numpy as np
import pytest

from admmplan.constraints import (
    InputBounds,
    Obstacle,
    ellipse_shape,
    obstacle_violation,
    project_inputs,
    project_outside_ellipse,
    project_timestep,
)
from admmplan.errors import DegenerateProjection, NonConvergence

from oracles import dense_ellipse_boundary, nearest_on_boundary


def test_ellipse_shape_axis_aligned():
    np.testing.assert_allclose(ellipse_shape(0.0, 5.0, 2.5), np.diag([0.04, 0.16]),
                               atol=1e-15)


def test_ellipse_shape_quarter_turn_swaps_axes():
    np.testing.assert_allclose(
        ellipse_shape(math.pi / 2, 5.0, 2.5), np.diag([0.16, 0.04]), atol=1e-15
    )


def test_ellipse_shape_point_symmetry():
    np.testing.assert_allclose(
        ellipse_shape(math.pi, 5.0, 2.5), ellipse_shape(0.0, 5.0, 2.5), atol=1e-15
    )


def test_violation_at_center_is_one():
    obs = Obstacle(center0=(3.0, -1.0))
    assert obstacle_violation((3.0, -1.0), obs, 0, 0.1) == pytest.approx(1.0)


def test_violation_zero_on_major_axis_boundary():
    obs = Obstacle(center0=(0.0, 0.0), heading=0.4, semi_major=5.0, semi_minor=2.5)
    p = (5.0 * math.cos(0.4), 5.0 * math.sin(0.4))
    assert obstacle_violation(p, obs, 0, 0.1) == pytest.approx(0.0, abs=1e-12)


def test_violation_scenario_point():
    obs = Obstacle(center0=(15.0, -1.0), semi_major=5.0, semi_minor=2.5)
    assert obstacle_violation((15.0, 2.0), obs, 0, 0.1) == pytest.approx(-0.44)


def test_violation_moving_obstacle_center():
    obs = Obstacle(center0=(0.0, 0.0), velocity=(3.0, 0.0))
    np.testing.assert_allclose(obs.center_at(10, 0.1), [3.0, 0.0])
    assert obstacle_violation((3.0, 0.0), obs, 10, 0.1) == pytest.approx(1.0)


def test_violation_rotation_invariance():
    rng = np.random.default_rng(2)
    for _ in range(100):
        center = rng.normal(size=2) * 5
        heading = rng.uniform(-3, 3)
        p = rng.normal(size=2) * 8
        angle = rng.uniform(-3, 3)
        c, s = math.cos(angle), math.sin(angle)
        rot = np.array([[c, -s], [s, c]])
        a = Obstacle(center0=tuple(center), heading=heading, semi_major=4.0,
                     semi_minor=1.5)
        b = Obstacle(center0=tuple(rot @ center), heading=heading + angle,
                     semi_major=4.0, semi_minor=1.5)
        va = obstacle_violation(p, a, 0, 0.1)
        vb = obstacle_violation(rot @ p, b, 0, 0.1)
        assert va == pytest.approx(vb, abs=1e-12)


def test_project_inputs_clamps_to_paper_limits():
    bounds = InputBounds(max_steer=0.6, max_accel=3.0, min_accel=-3.0)
    np.testing.assert_allclose(project_inputs((0.9, 0.0), bounds), [0.6, 0.0])
    np.testing.assert_allclose(project_inputs((0.0, -5.0), bounds), [0.0, -3.0])
    np.testing.assert_allclose(project_inputs((-0.2, 1.0), bounds), [-0.2, 1.0])


def test_bounds_validation():
    with pytest.raises(ValueError):
        InputBounds(max_steer=0.0)
    with pytest.raises(ValueError):
        InputBounds(min_accel=1.0)


def test_obstacle_validation():
    with pytest.raises(ValueError):
        Obstacle(center0=(0, 0), semi_major=1.0, semi_minor=2.0)


def test_projection_leaves_exterior_points_alone():
    shape = ellipse_shape(0.3, 5.0, 2.5)
    p = np.array([9.0, 4.0])
    np.testing.assert_array_equal(project_outside_ellipse(p, shape, (0, 0)), p)


def test_projection_leaves_boundary_points_alone():
    shape = ellipse_shape(0.0, 5.0, 2.5)
    p = np.array([5.0, 0.0])
    np.testing.assert_array_equal(project_outside_ellipse(p, shape, (0, 0)), p)


def test_projection_interior_on_major_axis_goes_to_minor_side():
    # Inside the evolute cusp the nearest boundary point leaves the axis.
    shape = ellipse_shape(0.0, 5.0, 2.5)
    out = project_outside_ellipse(np.array([1.0, 0.0]), shape, (0.0, 0.0))
    np.testing.assert_allclose(
        out, [4.0 / 3.0, 2.4094720491334934], atol=1e-9
    )
    boundary = dense_ellipse_boundary((0, 0), 0.0, 5.0, 2.5, 1_000_000)
    best = nearest_on_boundary([1.0, 0.0], boundary)
    assert np.linalg.norm(out - best) < 1e-4


def test_projection_center_degenerate_flagged():
    shape = ellipse_shape(0.7, 5.0, 2.5)
    center = np.array([2.0, -3.0])
    with pytest.warns(DegenerateProjection):
        out = project_outside_ellipse(center.copy(), shape, center)
    # lands on the minor axis of the rotated ellipse
    minor = np.array([-math.sin(0.7), math.cos(0.7)]) * 2.5
    np.testing.assert_allclose(out, center + minor, atol=1e-12)


@pytest.mark.parametrize("heading", [0.0, 0.9, -2.2])
def test_projection_matches_dense_sampling(heading):
    rng = np.random.default_rng(int(abs(heading) * 100) + 1)
    center = np.array([4.0, -2.0])
    a, b = 5.0, 2.5
    shape = ellipse_shape(heading, a, b)
    boundary = dense_ellipse_boundary(center, heading, a, b, 1_000_000)
    for _ in range(50):
        # random interior point (rejection-free: sample inside unit disk)
        r = math.sqrt(rng.uniform(0.0, 0.98))
        phi = rng.uniform(0, 2 * math.pi)
        c, s = math.cos(heading), math.sin(heading)
        rot = np.array([[c, -s], [s, c]])
        p = center + rot @ np.array([a * r * math.cos(phi), b * r * math.sin(phi)])
        out = project_outside_ellipse(p, shape, center)
        assert abs(1.0 - (out - center) @ shape @ (out - center)) < 1e-9
        best = nearest_on_boundary(p, boundary)
        assert np.linalg.norm(out - best) < 1e-4


def test_projection_nearest_point_optimality():
    rng = np.random.default_rng(9)
    center = np.zeros(2)
    shape = ellipse_shape(0.5, 4.0, 1.5)
    boundary = dense_ellipse_boundary(center, 0.5, 4.0, 1.5, 10_000)
    for _ in range(100):
        p = rng.normal(size=2) * 1.2
        if 1.0 - p @ shape @ p <= 0.0:
            continue
        out = project_outside_ellipse(p, shape, center)
        dist = np.linalg.norm(out - p)
        sampled = np.linalg.norm(boundary - p, axis=1).min()
        assert dist <= sampled + 1e-6


def make_bounds():
    return InputBounds(max_steer=0.6, max_accel=3.0, min_accel=-3.0)


def test_project_timestep_identity_when_feasible():
    block = np.array([100.0, 100.0, 0.1, 1.0])
    obs = [Obstacle(center0=(0.0, 0.0))]
    np.testing.assert_array_equal(
        project_timestep(block, obs, make_bounds(), 0, 0.1), block
    )


def test_project_timestep_single_obstacle_matches_single_projection():
    obs = Obstacle(center0=(15.0, -1.0), semi_major=5.0, semi_minor=2.5)
    block = np.array([15.5, 0.0, 0.2, 1.0])
    out = project_timestep(block, [obs], make_bounds(), 0, 0.1)
    expected = project_outside_ellipse(
        block[:2], obs.shape(), np.array(obs.center0)
    )
    np.testing.assert_allclose(out[:2], expected, atol=1e-12)
    np.testing.assert_array_equal(out[2:], block[2:])


def test_project_timestep_inactive_second_obstacle():
    near = Obstacle(center0=(0.0, 0.0), semi_major=2.0, semi_minor=1.0)
    far = Obstacle(center0=(100.0, 0.0), semi_major=2.0, semi_minor=1.0)
    block = np.array([0.5, 0.2, 0.0, 0.0])
    both = project_timestep(block, [near, far], make_bounds(), 0, 0.1)
    alone = project_timestep(block, [near], make_bounds(), 0, 0.1)
    np.testing.assert_allclose(both, alone, atol=1e-12)


def test_project_timestep_clamps_inputs_and_clears_obstacles():
    obs = Obstacle(center0=(0.0, 0.0), semi_major=5.0, semi_minor=2.5)
    block = np.array([1.0, 0.5, 0.9, -4.5])
    out = project_timestep(block, [obs], make_bounds(), 0, 0.1)
    assert out[2] == pytest.approx(0.6)
    assert out[3] == pytest.approx(-3.0)
    assert obstacle_violation(out[:2], obs, 0, 0.1) <= 1e-6


def test_project_timestep_idempotent():
    rng = np.random.default_rng(31)
    obstacles = [
        Obstacle(center0=(0.0, 0.0), heading=0.3, semi_major=4.0, semi_minor=2.0),
        Obstacle(center0=(5.0, 1.0), heading=-0.5, semi_major=3.0, semi_minor=1.0),
    ]
    bounds = make_bounds()
    for _ in range(200):
        block = np.concatenate([rng.normal(size=2) * 4, rng.normal(size=2) * 2])
        once = project_timestep(block, obstacles, bounds, 0, 0.1)
        twice = project_timestep(once, obstacles, bounds, 0, 0.1)
        np.testing.assert_allclose(twice, once, atol=1e-9)


def test_project_timestep_moving_obstacle_uses_time_index():
    obs = Obstacle(center0=(0.0, 0.0), velocity=(10.0, 0.0), semi_major=2.0,
                   semi_minor=1.0)
    block = np.array([10.0, 0.1, 0.0, 0.0])
    moved = project_timestep(block, [obs], make_bounds(), 10, 0.1)
    assert obstacle_violation(moved[:2], obs, 10, 0.1) <= 1e-6
    unmoved = project_timestep(block, [obs], make_bounds(), 0, 0.1)
    np.testing.assert_array_equal(unmoved, block)


def test_project_timestep_nonconvergence_on_impossible_cover():
    # A dense ring of overlapping ellipses around the point leaves no nearby
    # feasible position for cyclic projection to settle in.
    ring = [
        Obstacle(center0=(3.0 * math.cos(t), 3.0 * math.sin(t)),
                 heading=t + math.pi / 2, semi_major=40.0, semi_minor=3.5)
        for t in np.linspace(0, 2 * math.pi, 8, endpoint=False)
    ]
    with pytest.raises(NonConvergence):
        project_timestep(np.zeros(4), ring, make_bounds(), 0, 0.1)


def test_ego_heading_convention_switch():
    obs = Obstacle(center0=(0.0, 0.0), heading=0.0, semi_major=5.0, semi_minor=2.5)
    block = np.array([0.0, 3.0, 0.0, 0.0])  # outside with heading 0 (minor = 2.5)
    default = project_timestep(block, [obs], make_bounds(), 0, 0.1, ego_heading=1.2)
    np.testing.assert_array_equal(default, block)  # ego heading ignored
    rotated = project_timestep(
        block, [obs], make_bounds(), 0, 0.1,
        ego_heading=math.pi / 2, use_ego_heading=True,
    )
    # with the ellipse rotated a quarter turn the point sits inside
    assert np.linalg.norm(rotated[:2] - block[:2]) > 0.5
