import numpy as np
import pytest

import depthup


def test_defaults_follow_the_factor_schedule():
    assert depthup.default_alpha_for_factor(4) == 0.9
    assert depthup.default_max_iters_for_factor(16) == 100
    cfg = depthup.SolverConfig()
    assert cfg.alpha is None
    assert cfg.resolved_for_factor(8).alpha == 0.96


def test_upsample_beats_bicubic_on_a_step():
    depth, color = depthup.synthetic_scene(height=48, width=48, texture="checker")
    assert depth.shape == (48, 48)
    assert color.shape == (48, 48, 3)
    low = depthup.degrade(depth, factor=4, noise_sigma=3 / 255, seed=7)
    assert low.shape == (12, 12)

    result = depthup.upsample(low, color)
    assert result["depth"].shape == (48, 48)
    assert result["bandwidth"].shape == (48, 48)
    assert len(result["objective_trace"]) == result["iterations"] + 1
    assert result["alpha"] == 0.9

    cubic = depthup.bicubic_upsample(low, 4)
    assert depthup.rmse(result["depth"], depth) < depthup.rmse(cubic, depth)


def test_mrf_and_config_overrides():
    depth, color = depthup.synthetic_scene(height=32, width=32)
    low = depthup.degrade(depth, factor=2)
    cfg = depthup.SolverConfig()
    cfg.alpha = 0.7
    cfg.max_iters = 2
    res = depthup.mrf_upsample(low, color, cfg)
    assert res["alpha"] == 0.7
    assert res["iterations"] <= 2


def test_objective_is_zero_for_constant_maps():
    _, color = depthup.synthetic_scene(height=16, width=16)
    d = np.full((16, 16), 0.3)
    cfg = depthup.SolverConfig()
    cfg.alpha = 0.9
    assert depthup.objective(d, d, color, np.full((16, 16), 7 / 255), cfg) == 0.0


def test_gradient_check():
    assert depthup.gradient_check(size=6, seed=3) < 1e-4
    assert depthup.gradient_check(size=6, seed=3, flip_regularizer=True) > 1e-1


def test_errors_become_python_exceptions():
    _, color = depthup.synthetic_scene(height=28, width=28)
    with pytest.raises(depthup.ConfigError, match="non-integer upsampling factor"):
        depthup.upsample(np.full((8, 8), 0.5), color)
    with pytest.raises(ValueError):
        depthup.upsample(np.full((8, 8), 1.5), color)
    with pytest.raises(ValueError):
        depthup.rmse(np.zeros((2, 2)), np.zeros((3, 3)))
