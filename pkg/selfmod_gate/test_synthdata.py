#!/usr/bin/env python3
"""Tests for the seeded synthetic task"""
import math
import os
import sys

import numpy as np
import pytest

# Add app directory to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from services.synthdata import (
    SynthConfig,
    bayes_error_estimate,
    draw_dataset,
    generate_split,
    read_dataset,
    true_score,
    write_split,
)
from utils.helpers import derive_rng


def test_true_score_closed_form():
    assert true_score(np.array([0.0])) == 0.0
    assert true_score(np.array([math.pi / 4])) == pytest.approx(1.8927, abs=1e-4)
    batch = true_score(np.array([[0.0], [math.pi / 4]]))
    assert batch.shape == (2,)


def test_true_score_rejects_non_finite():
    with pytest.raises(ValueError):
        true_score(np.array([np.nan]))


def test_split_sizes_follow_config():
    split = generate_split(SynthConfig(seed=7))
    assert (len(split.train), len(split.val), len(split.test)) == (150, 60, 1000)
    assert split.train.x.shape == (150, 1)
    assert set(np.unique(split.train.y)) <= {0, 1}


def test_same_seed_gives_identical_split():
    first = generate_split(SynthConfig(seed=7))
    second = generate_split(SynthConfig(seed=7))
    for name in ("train", "val", "test"):
        np.testing.assert_array_equal(getattr(first, name).x, getattr(second, name).x)
        np.testing.assert_array_equal(getattr(first, name).y, getattr(second, name).y)


def test_different_seeds_differ():
    assert not np.array_equal(generate_split(SynthConfig(seed=1)).train.x, generate_split(SynthConfig(seed=2)).train.x)


def test_half_flip_rate_carries_no_signal():
    data = draw_dataset(SynthConfig(flip_rate=0.5), 100_000, derive_rng(3, 0))
    corr = np.corrcoef(data.x1, data.y)[0, 1]
    assert abs(corr) < 0.02


def test_noise_is_clipped():
    cfg = SynthConfig(noise_sigma=1.0)
    clean = derive_rng(5, 0).standard_normal((1000, 1))
    noisy = draw_dataset(cfg, 1000, derive_rng(5, 0)).x
    assert np.all(np.abs(noisy - clean) <= 3.0 + 1e-12)


def test_config_validation():
    with pytest.raises(ValueError):
        SynthConfig(flip_rate=0.6)
    with pytest.raises(ValueError):
        SynthConfig(n_train=0)
    with pytest.raises(ValueError):
        SynthConfig(link="probit")


def test_bayes_error_pure_noise():
    value, stderr = bayes_error_estimate(SynthConfig(flip_rate=0.5), n_mc=100_000)
    assert value == pytest.approx(0.5, abs=0.01)
    assert stderr >= 0.0


def test_bayes_error_deterministic_labels():
    cfg = SynthConfig(flip_rate=0.0, link="threshold", noise_sigma=0.0)
    value, _ = bayes_error_estimate(cfg, n_mc=100_000)
    assert value == 0.0


def test_bayes_error_at_defaults():
    value, stderr = bayes_error_estimate(SynthConfig(), n_mc=100_000)
    assert 0.35 < value < 0.48
    assert stderr < 0.001


def test_bayes_error_ignores_feature_noise():
    cfg = SynthConfig(flip_rate=0.0, link="threshold", noise_sigma=1.2)
    value, _ = bayes_error_estimate(cfg, n_mc=100_000)
    assert value == 0.0
    data = draw_dataset(cfg, 20_000, derive_rng(0, 7))
    observed = np.mean((true_score(data.x) >= 0).astype(np.int64) != data.y)
    assert observed > value + 0.1


def test_bayes_error_needs_enough_draws():
    with pytest.raises(ValueError):
        bayes_error_estimate(SynthConfig(), n_mc=100)


def test_split_export(tmp_path):
    split = generate_split(SynthConfig(seed=11, n_test=20))
    write_split(split, tmp_path)
    assert sorted(p.name for p in tmp_path.iterdir()) == ["test.txt", "train.txt", "val.txt"]
    loaded = read_dataset(tmp_path / "val.txt")
    np.testing.assert_array_equal(loaded.x, split.val.x)
    np.testing.assert_array_equal(loaded.y, split.val.y)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
