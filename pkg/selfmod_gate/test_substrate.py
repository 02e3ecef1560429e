#!/usr/bin/env python3
"""Tests for finite-state threshold learning and the collision search"""
import os
import sys

import numpy as np
import pytest

# Add app directory to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from services.substrate import (
    FsState,
    ThresholdTask,
    bucket_midpoint,
    consistent_interval,
    erm_threshold,
    find_state_collision,
    fsl_threshold,
    fsl_update,
    run_fsl,
    run_substrate_experiment,
    threshold_risk,
    verify_witness,
    write_witness,
)
from utils.helpers import DomainError, InconsistentSampleError, derive_rng


def test_bucket_midpoints():
    assert [bucket_midpoint(b, 4, 256) for b in range(4)] == [33, 97, 161, 225]
    assert [bucket_midpoint(b, 16, 16) for b in range(16)] == list(range(1, 17))


def test_negative_above_midpoint_moves_up():
    assert fsl_update(FsState(n_states=4), (40, 0), 256).state == 1


def test_positive_below_midpoint_moves_down():
    assert fsl_update(FsState(n_states=4, state=2), (100, 1), 256).state == 1


def test_single_state_never_moves():
    state = run_fsl([(1, 0), (8, 0), (3, 1), (8, 1)], n_states=1, domain_max=8)
    assert state.state == 0
    assert fsl_threshold(state, 8) == bucket_midpoint(0, 1, 8)


def test_update_rejects_out_of_domain_samples():
    with pytest.raises(DomainError):
        fsl_update(FsState(n_states=4), (0, 1), 256)
    with pytest.raises(DomainError):
        fsl_update(FsState(n_states=4), (257, 0), 256)
    with pytest.raises(ValueError):
        fsl_update(FsState(n_states=4), (5, 2), 256)


def test_state_must_lie_in_range():
    with pytest.raises(ValueError):
        FsState(n_states=4, state=4)
    with pytest.raises(ValueError):
        ThresholdTask(domain_max=8, true_k=9)


def test_same_state_means_same_future():
    rng = np.random.default_rng(3)
    matched = 0
    for _ in range(200):
        task = ThresholdTask(domain_max=256, true_k=int(rng.integers(1, 257)))
        xs = rng.integers(1, 257, size=60)
        prefix = list(zip(xs[:40].tolist(), task.label(xs[:40]).tolist()))
        shuffled = [prefix[i] for i in rng.permutation(len(prefix))]
        first, second = run_fsl(prefix, 4, 256), run_fsl(shuffled, 4, 256)
        if first != second:
            continue
        matched += 1
        for pair in zip(xs[40:].tolist(), task.label(xs[40:]).tolist()):
            first, second = fsl_update(first, pair, 256), fsl_update(second, pair, 256)
            assert first == second
    assert matched > 0


def test_unit_buckets_land_on_the_true_threshold():
    hits = 0
    for seed in range(100):
        rng = derive_rng(seed, 5)
        task = ThresholdTask(domain_max=16, true_k=int(rng.integers(1, 17)))
        xs = rng.integers(1, 17, size=2000)
        state = run_fsl(zip(xs.tolist(), task.label(xs).tolist()), n_states=16, domain_max=16)
        hits += fsl_threshold(state, 16) == task.true_k
    assert hits >= 90


def test_erm_examples():
    assert erm_threshold([(3, 0), (7, 1)], 10) == 5
    assert erm_threshold([(2, 1), (9, 1)], 10) == 1
    assert erm_threshold([(2, 0), (9, 0)], 10) == 11
    assert erm_threshold([(3, 0), (4, 1)], 10) == 4


def test_erm_rejects_unrealizable_samples():
    with pytest.raises(InconsistentSampleError):
        erm_threshold([(5, 0), (4, 1)], 10)


def test_consistent_interval():
    assert consistent_interval([(3, 0), (7, 1)], 10) == (4, 7)
    assert consistent_interval([], 10) == (1, 11)


def test_threshold_risk_is_exact():
    assert threshold_risk(5, 9, 16) == 0.25
    assert threshold_risk(9, 9, 16) == 0.0


def test_erm_converges_and_finite_state_learner_stalls():
    rows = run_substrate_experiment(n_states=4, sample_sizes=[250, 2000], domain_max=256,
                                    seeds=range(10), targets_per_seed=20)
    risk = {(r.learner, r.m): r.mean_risk for r in rows}
    assert risk[("erm", 2000)] < 0.01
    assert risk[("erm", 2000)] < 0.25 * risk[("erm", 250)]
    assert risk[("fsl", 2000)] >= 0.05
    assert [(r.learner, r.m) for r in rows] == [("erm", 250), ("erm", 2000), ("fsl", 250), ("fsl", 2000)]


def test_unit_buckets_remove_the_floor():
    rows = run_substrate_experiment(n_states=16, sample_sizes=[2000], domain_max=16, seeds=range(3),
                                    targets_per_seed=10)
    risk = {r.learner: r.mean_risk for r in rows}
    assert abs(risk["erm"] - risk["fsl"]) <= 0.01


def test_experiment_is_reproducible():
    kwargs = dict(n_states=4, sample_sizes=[50, 100], domain_max=64, seeds=[1, 2], targets_per_seed=5)
    assert run_substrate_experiment(**kwargs) == run_substrate_experiment(**kwargs)


def test_single_state_collision():
    search = find_state_collision(n_states=1, m=2, domain_max=4)
    assert search.exhaustive
    witness = search.witness
    assert witness is not None
    assert witness.first_interval[1] < witness.second_interval[0]
    assert verify_witness(witness, n_states=1, domain_max=4)


def test_two_state_collision_by_enumeration():
    search = find_state_collision(n_states=2, m=3, domain_max=8)
    assert search.exhaustive
    assert search.witness is not None
    assert verify_witness(search.witness, n_states=2, domain_max=8)


def test_random_search_when_enumeration_exceeds_budget():
    search = find_state_collision(n_states=1, m=4, domain_max=8, budget=100, seed=3)
    assert not search.exhaustive
    assert search.witness is not None


def test_collision_needs_more_samples_than_states():
    with pytest.raises(DomainError):
        find_state_collision(n_states=2, m=2, domain_max=8)
    with pytest.raises(DomainError):
        find_state_collision(n_states=4, m=1, domain_max=8)


def test_tampered_witness_fails_verification():
    witness = find_state_collision(n_states=1, m=2, domain_max=4).witness
    tampered = witness.model_copy(update={"second_threshold": witness.first_threshold})
    assert not verify_witness(tampered, n_states=1, domain_max=4)


def test_witness_file(tmp_path):
    witness = find_state_collision(n_states=1, m=2, domain_max=4).witness
    write_witness(witness, tmp_path / "witness.txt")
    lines = (tmp_path / "witness.txt").read_text(encoding="utf-8").splitlines()
    assert lines[0].startswith("first ")
    assert lines[-1] == f"test_point {witness.test_point}"


@pytest.mark.slow
def test_substrate_floor_at_full_scale():
    """N=4, D=256, fifty seeds"""
    rows = run_substrate_experiment(4, [250, 500, 1000, 2000, 4000], 256, range(50))
    risk = {(r.learner, r.m): r.mean_risk for r in rows}
    assert risk[("erm", 4000)] < 0.25 * risk[("erm", 250)]
    assert risk[("fsl", 4000)] > 0.6 * risk[("fsl", 1000)]


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
