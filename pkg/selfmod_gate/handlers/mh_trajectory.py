"""Representational-axis simulator: degree-increasing edits filtered by an accept policy"""
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from services.gates import (
    DestructiveUtilityConfig,
    GateConfig,
    GateDecision,
    Policy,
    decide,
    destructive_utility,
    epsilon_v,
    gate_thresholds,
    resolve_cap,
)
from services.hypothesis import PolyHypothesis, TrainConfig, capacity, fit_erm, risk01
from services.synthdata import DataSplit, SynthConfig, generate_split
from utils.helpers import UnboundedBudgetError, log, mean_and_stderr

TEST_CONFIDENCE = 0.05  # delta used for the test-set deviation epsilon_test
MIN_POLICY_GAP = 0.03  # final-loss margin by which two_gate should beat dest_train


class MhConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    synth: SynthConfig = SynthConfig()
    train_cfg: TrainConfig = TrainConfig()
    gate_cfg: GateConfig = GateConfig()
    util_cfg: DestructiveUtilityConfig = DestructiveUtilityConfig()
    max_degree: int = Field(30, ge=0)
    policy: Policy = Policy.TWO_GATE
    stop_on_reject: bool = True
    seeds: Sequence[int] = (0, 1, 2, 3, 4)

    @field_validator("seeds")
    @classmethod
    def _seeds_nonempty(cls, seeds):
        if len(seeds) == 0:
            raise ValueError("seeds must be nonempty")
        return tuple(seeds)


class StepRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    step: int
    proposed_degree: int
    decision: GateDecision
    train_loss: float
    val_loss: float
    test_loss: float
    current_test_loss: float  # of the last accepted hypothesis after this step
    capacity: int
    utility: float  # destructive utility of the candidate

    @property
    def accepted(self) -> bool:
        return self.decision.accepted


class Trajectory(BaseModel):
    model_config = ConfigDict(frozen=True)

    policy: Policy
    seed: int
    initial_hypothesis: PolyHypothesis
    initial_train_loss: float
    initial_val_loss: float
    initial_test_loss: float
    records: List[StepRecord]
    final_hypothesis: PolyHypothesis
    accepted_count: int

    @property
    def accepted_records(self) -> List[StepRecord]:
        return [r for r in self.records if r.accepted]

    @property
    def final_test_loss(self) -> float:
        return self.records[-1].current_test_loss if self.records else self.initial_test_loss

    @property
    def max_capacity(self) -> int:
        """Largest capacity among hypotheses the policy held"""
        return max([capacity(0).value] + [r.capacity for r in self.accepted_records])


def run_mh_on_split(split: DataSplit, cfg: MhConfig, seed: int) -> Trajectory:
    """Fit h0 at degree 0, then propose degrees 1..max_degree through the policy"""
    m = len(split.train)
    current = fit_erm(split.train, 0, cfg.train_cfg)
    rs_cur, rv_cur, rt_cur = (risk01(current, d) for d in (split.train, split.val, split.test))
    initial = (current, rs_cur, rv_cur, rt_cur)

    records: List[StepRecord] = []
    for step, degree in enumerate(range(1, cfg.max_degree + 1), start=1):
        candidate = fit_erm(split.train, degree, cfg.train_cfg)
        rs, rv, rt = (risk01(candidate, d) for d in (split.train, split.val, split.test))
        cap_new = capacity(degree).value
        decision = decide(cfg.policy, rs, rs_cur, rv, rv_cur, cap_new, cfg.gate_cfg, m)
        if decision.accepted:
            current, rs_cur, rv_cur, rt_cur = candidate, rs, rv, rt
        records.append(StepRecord(
            step=step,
            proposed_degree=degree,
            decision=decision,
            train_loss=rs,
            val_loss=rv,
            test_loss=rt,
            current_test_loss=rt_cur,
            capacity=cap_new,
            utility=destructive_utility(rs, cap_new, cfg.util_cfg),
        ))
        if not decision.accepted and cfg.stop_on_reject:
            break

    accepted_count = sum(1 for r in records if r.accepted)
    return Trajectory(
        policy=cfg.policy,
        seed=seed,
        initial_hypothesis=initial[0],
        initial_train_loss=initial[1],
        initial_val_loss=initial[2],
        initial_test_loss=initial[3],
        records=records,
        final_hypothesis=current,
        accepted_count=accepted_count,
    )


def run_mh(cfg: MhConfig, seed: int) -> Trajectory:
    """One seeded representational-axis run; fit failures propagate with their degree"""
    split = generate_split(cfg.synth.model_copy(update={"seed": seed}))
    trajectory = run_mh_on_split(split, cfg, seed)
    log(f"✓ mh {cfg.policy.value} seed={seed}: {trajectory.accepted_count} accepted, "
        f"final degree {trajectory.final_hypothesis.degree}, test loss {trajectory.final_test_loss:.3f}")
    return trajectory


def edit_bound(r0: float, r_star: float, tau: float) -> int:
    """floor((R(h0) - R*) / tau): at most this many accepted edits of size >= tau"""
    if tau <= 0:
        raise UnboundedBudgetError("tau must be positive to bound the number of accepted edits")
    if r0 < r_star:
        raise ValueError("r0 must not be below the floor r_star")
    # guard against representation error at exact multiples
    return int(math.floor((r0 - r_star) / tau + 1e-9))


@dataclass(frozen=True)
class AggregateCurve:
    steps: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    n_runs: int


def current_loss_curve(trajectory: Trajectory) -> List[float]:
    """current_test_loss indexed by step, step 0 being h0"""
    return [trajectory.initial_test_loss] + [r.current_test_loss for r in trajectory.records]


def aggregate_seeds(trajectories: Sequence[Trajectory]) -> AggregateCurve:
    """Per-step mean and standard error; shorter runs carry their last value forward"""
    if not trajectories:
        raise ValueError("aggregate_seeds needs at least one trajectory")
    curves = [current_loss_curve(t) for t in trajectories]
    length = max(len(c) for c in curves)
    table = np.array([c + [c[-1]] * (length - len(c)) for c in curves])
    stats = [mean_and_stderr(table[:, i]) for i in range(length)]
    return AggregateCurve(
        steps=np.arange(length),
        mean=np.array([s[0] for s in stats]),
        stderr=np.array([s[1] for s in stats]),
        n_runs=len(curves),
    )


def sweep_min_test_risk(split: DataSplit, max_degree: int, train_cfg: TrainConfig) -> float:
    """R*_sweep: lowest test risk over fits of every degree 0..max_degree"""
    return min(risk01(fit_erm(split.train, d, train_cfg), split.test) for d in range(max_degree + 1))


class TrajectoryCheck(BaseModel):
    policy: Policy
    seed: int
    accepted_count: int
    monotone_violations: int
    min_required_step: float  # tau - 2 eps_test
    edit_bound: int
    edit_bound_holds: bool
    r_star: float
    max_capacity: int
    cap: int
    capacity_ceiling_holds: bool
    ledger_complete: bool


def check_trajectory(trajectory: Trajectory, split: DataSplit, cfg: MhConfig, r_star: Optional[float] = None) -> TrajectoryCheck:
    """Audit a run against the finite-sample guarantees of the Two-Gate rule"""
    m = len(split.train)
    K, eps, tau = gate_thresholds(cfg.gate_cfg, m)
    eps_test = epsilon_v(K, len(split.test), TEST_CONFIDENCE, cfg.gate_cfg.c0)
    min_step = tau - 2.0 * eps_test

    violations = 0
    previous = trajectory.initial_test_loss
    for record in trajectory.accepted_records:
        if previous - record.test_loss < min_step:
            violations += 1
        previous = record.test_loss

    if r_star is None:
        r_star = sweep_min_test_risk(split, max(K - 1, 0), cfg.train_cfg)
    bound = edit_bound(trajectory.initial_test_loss, min(r_star, trajectory.initial_test_loss), tau) if tau > 0 else -1
    first_reject = next((r.step for r in trajectory.records if not r.accepted), None)
    expected = first_reject if cfg.stop_on_reject and first_reject is not None else cfg.max_degree
    steps = [r.step for r in trajectory.records]
    return TrajectoryCheck(
        policy=trajectory.policy,
        seed=trajectory.seed,
        accepted_count=trajectory.accepted_count,
        monotone_violations=violations,
        min_required_step=min_step,
        edit_bound=bound,
        edit_bound_holds=bound < 0 or trajectory.accepted_count <= bound,
        r_star=r_star,
        max_capacity=trajectory.max_capacity,
        cap=K,
        capacity_ceiling_holds=trajectory.max_capacity <= K,
        ledger_complete=steps == list(range(1, expected + 1)),
    )


class OracleInequalityReport(BaseModel):
    final_test_risk: float
    r_star: float
    excess: float
    rate: float  # c0 sqrt((K + ln(1/delta_v)) / m)
    allowance: float  # 2 eps_v + tau + rate
    holds: bool


def oracle_inequality_report(trajectory: Trajectory, split: DataSplit, cfg: MhConfig, r_star: Optional[float] = None) -> OracleInequalityReport:
    """Final risk against the best capped-family risk plus the VC-rate slack"""
    m = len(split.train)
    K, eps, tau = gate_thresholds(cfg.gate_cfg, m)
    if r_star is None:
        r_star = sweep_min_test_risk(split, max(K - 1, 0), cfg.train_cfg)
    final = risk01(trajectory.final_hypothesis, split.test)
    rate = cfg.gate_cfg.c0 * math.sqrt((K + math.log(1.0 / cfg.gate_cfg.delta_v)) / m)
    allowance = 2.0 * eps + tau + rate
    return OracleInequalityReport(
        final_test_risk=final,
        r_star=r_star,
        excess=final - r_star,
        rate=rate,
        allowance=allowance,
        holds=final - r_star <= allowance,
    )


class ScheduleRow(BaseModel):
    m: int
    cap: int
    final_degree: int
    final_test_loss: float
    accepted_count: int


def run_capacity_schedule(cfg: MhConfig, train_sizes: Sequence[int], seed: int) -> List[ScheduleRow]:
    """Two-Gate under K(m) = floor(scale sqrt(m)) for growing training sets"""
    gate_cfg = cfg.gate_cfg.model_copy(update={"cap_schedule": "sqrt"})
    rows = []
    for m in train_sizes:
        run_cfg = cfg.model_copy(update={
            "synth": cfg.synth.model_copy(update={"n_train": m}),
            "gate_cfg": gate_cfg,
            "policy": Policy.TWO_GATE,
        })
        trajectory = run_mh(run_cfg, seed)
        rows.append(ScheduleRow(
            m=m,
            cap=resolve_cap(gate_cfg, m),
            final_degree=trajectory.final_hypothesis.degree,
            final_test_loss=trajectory.final_test_loss,
            accepted_count=trajectory.accepted_count,
        ))
    return rows


def summarize_policies(trajectories: Sequence[Trajectory]) -> Dict[str, Dict[str, float]]:
    """Seed-mean final test loss and max capacity per policy"""
    summary: Dict[str, Dict[str, float]] = {}
    for policy in sorted({t.policy for t in trajectories}, key=lambda p: p.value):
        runs = [t for t in trajectories if t.policy is policy]
        mean, se = mean_and_stderr([t.final_test_loss for t in runs])
        summary[policy.value] = {
            "mean_final_test_loss": mean,
            "stderr": se,
            "max_capacity": float(max(t.max_capacity for t in runs)),
            "mean_accepted": float(np.mean([t.accepted_count for t in runs])),
        }
    return summary


class PolicyOrdering(BaseModel):
    better: Policy
    worse: Policy
    mean_better: float
    mean_worse: float
    min_gap: float
    passed: bool  # mean_better <= mean_worse - min_gap


def policy_ordering(trajectories: Sequence[Trajectory], better: Policy = Policy.TWO_GATE,
                    worse: Policy = Policy.DEST_TRAIN, min_gap: float = MIN_POLICY_GAP) -> Optional[PolicyOrdering]:
    """Seed-mean final test loss of `better` against `worse`; None unless both policies ran"""
    finals = {p: [t.final_test_loss for t in trajectories if t.policy is p] for p in (better, worse)}
    if not finals[better] or not finals[worse]:
        return None
    mean_better, mean_worse = float(np.mean(finals[better])), float(np.mean(finals[worse]))
    return PolicyOrdering(
        better=better,
        worse=worse,
        mean_better=mean_better,
        mean_worse=mean_worse,
        min_gap=min_gap,
        passed=mean_better <= mean_worse - min_gap,
    )
