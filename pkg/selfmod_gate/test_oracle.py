#!/usr/bin/env python3
"""Tests for the brute-force VC oracle and deviation checks"""
import os
import sys

import numpy as np
import pytest

# Add app directory to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from services.hypothesis import capacity
from services.oracle import (
    FiniteClass,
    deviation_probe,
    full_class,
    hoeffding_bound,
    sign_class_on_grid,
    threshold_class,
    vc_bruteforce,
    write_report,
)
from utils.helpers import EnumerationBoundError


def test_thresholds_on_ten_points():
    assert vc_bruteforce(threshold_class(range(1, 11))) == 1


def test_full_class_is_shattered():
    assert vc_bruteforce(full_class(3)) == 3


def test_constant_classifiers():
    constants = FiniteClass(points=(1, 2, 3), functions=np.array([[0, 0, 0], [1, 1, 1]]))
    assert vc_bruteforce(constants) == 1


def test_empty_class_shatters_nothing():
    assert vc_bruteforce(FiniteClass(points=(1, 2), functions=np.zeros((0, 2)))) == 0


def test_adding_label_vectors_never_lowers_the_dimension():
    rng = np.random.default_rng(5)
    for _ in range(20):
        rows = rng.integers(0, 2, size=(24, 6))
        previous = 0
        for k in range(1, len(rows) + 1):
            cls = FiniteClass(points=tuple(range(6)), functions=rows[:k])
            vc = vc_bruteforce(cls)
            assert vc >= previous
            assert vc <= 6
            assert 2 ** vc <= np.unique(rows[:k], axis=0).shape[0]
            previous = vc


def test_enumeration_bound():
    with pytest.raises(EnumerationBoundError):
        vc_bruteforce(FiniteClass(points=tuple(range(25)), functions=np.zeros((1, 25))))
    with pytest.raises(EnumerationBoundError):
        sign_class_on_grid(4, [0.0, 1.0])


def test_finite_class_validation():
    with pytest.raises(ValueError):
        FiniteClass(points=(1, 1), functions=np.array([[0, 1]]))
    with pytest.raises(ValueError):
        FiniteClass(points=(1, 2), functions=np.array([[0, 2]]))


def test_degree_zero_sign_patterns():
    cls = sign_class_on_grid(0, [-2.0, -1.0, 0.5, 1.0, 3.0], n_draws=1000)
    assert cls.functions.shape[0] == 2


def test_degree_one_on_four_points():
    vc = vc_bruteforce(sign_class_on_grid(1, [1.0, 2.0, 3.0, 4.0], n_draws=10_000))
    assert vc <= capacity(1).value
    assert vc == 2


@pytest.mark.parametrize("degree", [0, 1, 2, 3])
def test_proxy_is_sound_on_an_eight_point_grid(degree):
    vc = vc_bruteforce(sign_class_on_grid(degree, np.linspace(-1, 1, 8), n_draws=20_000))
    assert vc <= capacity(degree).value
    assert vc == degree + 1


def test_hoeffding_reference():
    assert hoeffding_bound(1, 60, 0.05) == pytest.approx(0.1753, abs=1e-3)
    assert hoeffding_bound(4, 60, 0.05) > hoeffding_bound(1, 60, 0.05)


def test_degree_zero_deviation_meets_hoeffding():
    report = deviation_probe(degree=0, K=1, n=60, delta=0.05, trials=200, net_size=50, test_size=20_000, seed=1)
    assert report.hoeffding is not None
    assert report.quantile <= report.hoeffding


def test_deviation_shrinks_with_sample_size():
    report = deviation_probe(degree=0, K=1, n=100_000, delta=0.05, trials=200, net_size=10, test_size=100_000, seed=2)
    assert report.quantile < 0.02


def test_degree_one_deviation_records_the_tuned_bound():
    report = deviation_probe(degree=1, K=2, n=60, delta=0.05, trials=200, net_size=200, test_size=20_000, seed=0)
    assert report.bound == pytest.approx(0.0288, abs=1e-4)
    assert report.holds == (report.quantile <= report.bound)
    assert report.hoeffding is None


def test_deviation_needs_enough_trials():
    with pytest.raises(ValueError):
        deviation_probe(degree=0, K=1, n=60, delta=0.05, trials=10)


def test_report_file(tmp_path):
    report = deviation_probe(degree=0, K=1, n=60, delta=0.05, trials=200, net_size=10, test_size=5000)
    write_report(report, tmp_path / "deviation.txt")
    text = (tmp_path / "deviation.txt").read_text(encoding="utf-8")
    assert "quantile: " in text
    assert text.endswith("\n")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
