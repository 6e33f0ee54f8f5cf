import math

import numpy as np
import pytest

import graspfn


def small_grid():
    return graspfn.PoseGrid.centered(8, 6, 6, 10.0, 1.4)


def test_grid_index_round_trip():
    g = graspfn.PoseGrid.desk()
    assert len(g) == 24 * 18 * 6
    assert (g.image_width, g.image_height) == (336, 252)
    for i in (0, 17, 1000, len(g) - 1):
        assert g.pose_to_index(g.index_to_pose(i)) == i


def test_render_and_noise_shapes():
    g = small_grid()
    s = graspfn.rectangle_scene(60.0, 30.0, 40.0)
    img = graspfn.render_depth(s, g)
    assert img.shape == (g.image_height, g.image_width)
    assert img.max() == pytest.approx(600.0)
    assert img.min() == pytest.approx(560.0)
    noisy = graspfn.apply_noise(img, g.px_per_mm, seed=3)
    assert noisy.shape == img.shape
    again = graspfn.apply_noise(img, g.px_per_mm, seed=3)
    assert np.array_equal(noisy, again)


def test_oracle_bar_grasp():
    g = small_grid()
    s = graspfn.rectangle_scene(150.0, 40.0, 60.0)
    grip = graspfn.GripperSpec()
    assert graspfn.attempt_grasp(s, grip, graspfn.Pose(0.0, 0.0, math.pi / 2))
    assert not graspfn.attempt_grasp(s, grip, graspfn.Pose(0.0, 0.0, 0.0))
    f = graspfn.compute_grasp_function(s, grip, g, seed=1, jobs=2)
    scores = f.scores
    assert scores.shape == (6, 6, 8)
    assert scores.min() >= 0.0 and scores.max() <= 1.0
    assert np.allclose(scores * 5, np.round(scores * 5))
    assert scores.max() > 0.0


def test_smooth_and_plan():
    g = small_grid()
    rng = np.random.default_rng(0)
    arr = rng.random((6, 6, 8))
    f = graspfn.GraspFunction(g, arr)
    assert np.array_equal(f.scores, arr)
    same = graspfn.smooth(f, graspfn.UncertaintyModel.isotropic(0.0, 0.0))
    assert np.allclose(same.scores, arr)
    sm = graspfn.smooth(f, graspfn.UncertaintyModel.from_degrees(10.0, 10.0))
    assert sm.scores.std() < arr.std()
    u, v, th, score = graspfn.argmax_continuous(f, refine=4)
    assert score >= arr.max() - 1e-12
    assert graspfn.interpolate(f, graspfn.Pose(u, v, th)) == pytest.approx(score)
    r = graspfn.robust_best_grasp_plan(f, graspfn.UncertaintyModel.from_degrees(10.0, 10.0))
    assert len(r) == 4


def test_json_round_trip_and_errors():
    g = small_grid()
    f = graspfn.GraspFunction(g, np.full((6, 6, 8), 0.4))
    back = graspfn.GraspFunction.from_json(f.to_json())
    assert np.array_equal(back.scores, f.scores)
    s = graspfn.random_scene(5, 6, graspfn.PoseGrid.desk())
    assert graspfn.Scene.from_json(s.to_json()).to_json() == s.to_json()
    with pytest.raises(graspfn.RangeError):
        graspfn.GraspFunction(g, np.zeros((2, 2, 2)))
    with pytest.raises(graspfn.ParseError):
        graspfn.check_config('{"no_such_field": 1}')
    with pytest.raises(graspfn.Error):
        graspfn.centroid_plan(graspfn.render_depth(graspfn.empty_scene(), g), g, 600.0)


def test_predictor_and_sweep():
    g = small_grid()
    model = graspfn.init_model(g, seed=2)
    assert model.parameter_count > 0
    img = graspfn.render_depth(graspfn.rectangle_scene(60.0, 30.0, 40.0), g)
    pred = model.predict(img)
    assert pred.scores.shape == (6, 6, 8)
    assert pred.scores.min() >= 0.0 and pred.scores.max() <= 1.0
    csv = graspfn.run_sweep('{"eval": {"sigma_uv_mm": [5], "sigma_theta_deg": [10]}}', objects=2, trials=3)
    lines = csv.strip().splitlines()
    assert len(lines) == 1 + 3
    assert csv == graspfn.run_sweep('{"eval": {"sigma_uv_mm": [5], "sigma_theta_deg": [10]}}', objects=2, trials=3)
