#!/usr/bin/env python3
"""Tests for the Two-Gate rule and the destructive baselines"""
import os
import sys

import numpy as np
import pytest

# Add app directory to path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from services.gates import (
    DECISION_HEADER,
    DestructiveUtilityConfig,
    GateConfig,
    GateDecision,
    Policy,
    capacity_gate,
    decide,
    decision_row,
    destructive_decide,
    destructive_utility,
    epsilon_v,
    gate_thresholds,
    resolve_cap,
    tau_margin,
    two_gate_decide,
    validation_gate,
)

DEFAULTS = GateConfig()


def test_epsilon_v_at_defaults():
    assert epsilon_v(31, 60, 0.05, 0.10) == pytest.approx(0.07527, abs=1e-5)


def test_epsilon_v_halves_when_n_quadruples():
    assert epsilon_v(31, 240, 0.05, 0.10) == pytest.approx(0.03764, abs=1e-5)


def test_epsilon_v_vanishes_as_delta_goes_to_one():
    assert epsilon_v(0, 1, 1.0 - 1e-12, 1.0) < 1e-5


def test_epsilon_v_needs_validation_data():
    with pytest.raises(ValueError):
        epsilon_v(31, 0, 0.05, 0.10)


def test_tau_margin():
    assert tau_margin(0.07527, 0.20) == pytest.approx(0.01505, abs=1e-5)
    assert tau_margin(0.3, 0.0) == 0.0
    assert tau_margin(0.1, 1.0) == 0.1


def test_validation_gate():
    assert validation_gate(0.20, 0.40, 0.075, 0.015)
    assert not validation_gate(0.40, 0.40, 0.075, 0.015)
    eps, tau = 0.075, 0.015
    assert validation_gate(0.40 - (2.0 * eps + tau), 0.40, eps, tau)


def test_capacity_gate():
    assert capacity_gate(31, 31)
    assert not capacity_gate(32, 31)
    assert capacity_gate(0, 31)


def test_capacity_gate_runs_first():
    decision = two_gate_decide(rv_new=0.0, rv_old=1.0, cap_new=40, cfg=DEFAULTS, m=150)
    assert not decision.accepted
    assert decision.reason == "fail_capacity"


def test_two_gate_default_examples():
    accepted = two_gate_decide(rv_new=0.25, rv_old=0.45, cap_new=2, cfg=DEFAULTS, m=150)
    assert accepted.accepted and accepted.reason == "accepted"
    assert accepted.required_drop == pytest.approx(0.16559, abs=1e-5)
    assert accepted.observed_drop == pytest.approx(0.20)

    rejected = two_gate_decide(rv_new=0.30, rv_old=0.45, cap_new=2, cfg=DEFAULTS, m=150)
    assert rejected.reason == "fail_validation"


def test_thresholds_do_not_depend_on_losses():
    K, eps, tau = gate_thresholds(DEFAULTS, 150)
    for rv_new, rv_old in ((0.1, 0.9), (0.5, 0.5), (0.9, 0.1)):
        d = two_gate_decide(rv_new, rv_old, 3, DEFAULTS, 150)
        assert (d.eps_v, d.tau) == (eps, tau)
    assert K == 31


def test_sqrt_cap_schedule():
    cfg = GateConfig(cap_schedule="sqrt", cap_scale=2.0)
    assert resolve_cap(cfg, 100) == 20
    caps = [resolve_cap(cfg, m) for m in (1, 10, 100, 1000)]
    assert caps == sorted(caps)
    assert resolve_cap(DEFAULTS, 10_000) == 31


def test_decision_audit_rejects_inconsistent_records():
    with pytest.raises(ValueError):
        GateDecision(accepted=True, reason="fail_validation", eps_v=0.1, tau=0.0, required_drop=0.2, observed_drop=0.0)
    with pytest.raises(ValueError):
        GateDecision(accepted=True, reason="accepted", eps_v=0.1, tau=0.0, required_drop=0.5, observed_drop=0.6)


def test_destructive_utility():
    assert destructive_utility(0.0, 10**9, DestructiveUtilityConfig()) == pytest.approx(1.0)
    assert destructive_utility(1.0, 0, DestructiveUtilityConfig()) == 0.0
    assert destructive_utility(0.2, 5, DestructiveUtilityConfig()) == pytest.approx(0.80333, abs=1e-5)
    no_bonus = DestructiveUtilityConfig(alpha=1.0, beta=0.0)
    assert destructive_utility(0.2, 5, no_bonus) == pytest.approx(0.8)


def test_utility_weights_must_sum_to_one():
    with pytest.raises(ValueError):
        DestructiveUtilityConfig(alpha=0.9, beta=0.2)


def test_destructive_rules():
    assert destructive_decide(Policy.DEST_TRAIN, 0.10, 0.10, 0.5, 0.1, 99, 31)
    assert not destructive_decide(Policy.DEST_VAL, 0.1, 0.2, 0.30, 0.30, 2, 31)
    assert destructive_decide(Policy.DEST_VAL_NOCAP, 0.1, 0.2, 0.30 - 1e-6, 0.30, 10**6, 31)
    assert not destructive_decide(Policy.DEST_VAL, 0.1, 0.2, 0.10, 0.30, 32, 31)
    with pytest.raises(ValueError):
        destructive_decide(Policy.TWO_GATE, 0.1, 0.2, 0.1, 0.3, 2, 31)
    with pytest.raises(ValueError):
        destructive_decide("unknown", 0.1, 0.2, 0.1, 0.3, 2, 31)


def test_cap_separates_dest_val_from_nocap():
    over_cap = dict(rs_new=0.1, rs_old=0.2, rv_new=0.2, rv_old=0.3, cap_new=32, cfg=DEFAULTS, m=150)
    nocap = decide(Policy.DEST_VAL_NOCAP, **over_cap)
    capped = decide(Policy.DEST_VAL, **over_cap)
    assert nocap.accepted
    assert not capped.accepted and capped.reason == "fail_capacity"
    assert decide(Policy.DEST_TRAIN, **over_cap).accepted
    assert not decide(Policy.TWO_GATE, **over_cap).accepted


def test_destructive_decisions_carry_zero_margins():
    d = decide(Policy.DEST_TRAIN, 0.3, 0.2, 0.1, 0.1, 2, DEFAULTS, 150)
    assert d.policy is Policy.DEST_TRAIN
    assert d.reason == "fail_training"
    assert (d.eps_v, d.tau, d.required_drop) == (0.0, 0.0, 0.0)
    assert d.observed_drop == pytest.approx(-0.1)


def test_two_gate_never_accepts_above_the_cap():
    rng = np.random.default_rng(11)
    for cfg, m in ((DEFAULTS, 150), (GateConfig(cap_schedule="sqrt"), 400), (GateConfig(cap=3, c0=0.01), 60)):
        K = resolve_cap(cfg, m)
        rv_cur = 1.0
        accepted_caps = []
        for _ in range(2000):
            rv_new = float(rng.uniform(0.0, 1.0))
            cap_new = int(rng.integers(0, 3 * K + 2))
            decision = two_gate_decide(rv_new, rv_cur, cap_new, cfg, m)
            if decision.accepted:
                accepted_caps.append(cap_new)
                rv_cur = rv_new
            elif rng.random() < 0.05:
                rv_cur = 1.0
        assert accepted_caps
        assert max(accepted_caps) <= K


def test_dest_train_growth_strictly_raises_utility():
    rng = np.random.default_rng(12)
    util = DestructiveUtilityConfig()
    for _ in range(1000):
        rs_old = float(rng.uniform(0.0, 1.0))
        rs_new = float(rng.uniform(0.0, rs_old))
        cap_old = int(rng.integers(0, 100))
        cap_new = cap_old + int(rng.integers(1, 10))
        assert destructive_decide(Policy.DEST_TRAIN, rs_new, rs_old, 0.5, 0.5, cap_new, 31)
        assert destructive_utility(rs_new, cap_new, util) > destructive_utility(rs_old, cap_old, util)
    assert destructive_utility(0.3, 8, util) > destructive_utility(0.3, 7, util)


def test_decision_row_layout():
    decision = two_gate_decide(rv_new=0.25, rv_old=0.45, cap_new=2, cfg=DEFAULTS, m=150)
    row = decision_row(decision, step=1, degree=1, cap=2, rs_new=0.3, rv_new=0.25)
    assert DECISION_HEADER == ("step", "policy", "degree", "cap", "rs_new", "rv_new", "eps_v", "tau",
                               "required_drop", "observed_drop", "reason")
    assert len(row) == len(DECISION_HEADER)
    fields = dict(zip(DECISION_HEADER, row))
    assert fields["policy"] == "two_gate"
    assert fields["required_drop"] == decision.required_drop
    assert fields["reason"] == "accepted"


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
