"""Algorithmic-axis simulator: step-mass-capped vs unconstrained SGD on a fixed class"""
import math
from collections import defaultdict
from dataclasses import dataclass, replace
from typing import Dict, List, Literal, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy.special import expit

from config.settings import PROJECTION_RADIUS, SGD_INIT_SCALE
from services.hypothesis import featurize, standardizer
from services.synthdata import SynthConfig, generate_split
from utils.helpers import SgdDivergenceError, derive_rng, log, mean_and_stderr

INIT_STREAM, BATCH_STREAM = 10, 11

SGD_SYNTH = SynthConfig(n_train=500, n_val=1000, n_test=2000, noise_sigma=0.6, flip_rate=0.20)


class MaConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    synth: SynthConfig = SGD_SYNTH
    degree: int = Field(5, ge=0)
    eta0: float = Field(0.01, gt=0.0)
    batch: int = Field(32, ge=1)
    t_max: int = Field(50000, ge=1)
    l2: float = Field(1e-5, ge=0.0)
    budget: float = Field(2.5, gt=0.0)
    budget_schedule: Literal["constant", "sqrt"] = "constant"
    budget_scale: float = Field(1.0, gt=0.0)
    projection_radius: float = Field(PROJECTION_RADIUS, gt=0.0)
    log_every: int = Field(250, ge=1)
    seeds: Sequence[int] = tuple(range(20))

    @field_validator("seeds")
    @classmethod
    def _seeds_nonempty(cls, seeds):
        if len(seeds) == 0:
            raise ValueError("seeds must be nonempty")
        return tuple(seeds)


class GapPoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    t: int
    step_mass: float
    train_loss: float  # 0-1
    test_loss: float  # 0-1
    gap: float  # test - train, 0-1
    train_logistic: float
    test_logistic: float
    degree: int


@dataclass(frozen=True)
class StepMassBudget:
    """Compensated running sum of step sizes with a halting budget.

    Usage::

        tracker = StepMassBudget(budget=2.5)
        for t in range(t_max):
            ...
            tracker = tracker.update(eta)
            if tracker.should_stop:
                break
    """

    budget: float = math.inf
    total: float = 0.0
    compensation: float = 0.0
    steps: int = 0

    def update(self, eta: float) -> "StepMassBudget":
        # Neumaier summation
        total = self.total + eta
        if abs(self.total) >= abs(eta):
            compensation = self.compensation + ((self.total - total) + eta)
        else:
            compensation = self.compensation + ((eta - total) + self.total)
        return replace(self, total=total, compensation=compensation, steps=self.steps + 1)

    @property
    def step_mass(self) -> float:
        return self.total + self.compensation

    @property
    def should_stop(self) -> bool:
        mass = self.step_mass
        return mass >= self.budget or math.isclose(mass, self.budget, rel_tol=1e-12)


def resolve_budget(cfg: MaConfig, m: int) -> float:
    """B(m): constant budget, or scale * sqrt(m)"""
    if cfg.budget_schedule == "sqrt":
        return cfg.budget_scale * math.sqrt(m)
    return cfg.budget


def _losses(w, phi, y):
    z = phi @ w
    zero_one = float(np.mean((z >= 0).astype(np.int64) != y))
    logistic = float(np.mean(np.logaddexp(0.0, z) - y * z))
    return zero_one, logistic


def sgd_run(cfg: MaConfig, capped: bool, seed: int) -> List[GapPoint]:
    """Minibatch SGD on the fixed degree-`cfg.degree` class with constant step eta0.

    Capped runs halt at the first t whose step-mass reaches the budget; both
    variants draw identical minibatches for a given seed.
    """
    split = generate_split(cfg.synth.model_copy(update={"seed": seed}))
    affine = standardizer(split.train.x1)
    phi_tr = featurize(split.train.x1, cfg.degree, affine)
    phi_te = featurize(split.test.x1, cfg.degree, affine)
    y_tr, y_te = split.train.y, split.test.y
    m = phi_tr.shape[0]

    w = derive_rng(seed, INIT_STREAM).normal(0.0, SGD_INIT_SCALE, cfg.degree + 1)
    batches = derive_rng(seed, BATCH_STREAM).integers(0, m, size=(cfg.t_max, cfg.batch))
    tracker = StepMassBudget(budget=resolve_budget(cfg, m) if capped else math.inf)
    projections = 0

    def point(t: int) -> GapPoint:
        train01, train_log = _losses(w, phi_tr, y_tr)
        test01, test_log = _losses(w, phi_te, y_te)
        return GapPoint(
            t=t,
            step_mass=tracker.step_mass,
            train_loss=train01,
            test_loss=test01,
            gap=test01 - train01,
            train_logistic=train_log,
            test_logistic=test_log,
            degree=cfg.degree,
        )

    points = [point(0)]
    for t in range(1, cfg.t_max + 1):
        rows = phi_tr[batches[t - 1]]
        grad = rows.T @ (expit(rows @ w) - y_tr[batches[t - 1]]) / cfg.batch + cfg.l2 * w
        w = w - cfg.eta0 * grad
        if not np.all(np.isfinite(w)):
            raise SgdDivergenceError(t)
        norm = float(np.linalg.norm(w))
        if norm > cfg.projection_radius:
            w = w * (cfg.projection_radius / norm)
            projections += 1
        tracker = tracker.update(cfg.eta0)
        halt = capped and tracker.should_stop
        if halt or t % cfg.log_every == 0 or t == cfg.t_max:
            points.append(point(t))
        if halt:
            break

    if projections:
        log(f"⚠️  projection bound {cfg.projection_radius} was active on {projections} steps (seed={seed})")
    return points


class EnvelopeReport(BaseModel):
    c_hat: float
    intercept: float
    violations: int
    n_buckets: int


def _bucket_stats(points: Sequence[GapPoint]):
    buckets: Dict[float, List[float]] = defaultdict(list)
    for p in points:
        buckets[round(p.step_mass, 9)].append(p.gap)
    masses = sorted(buckets)
    stats = [mean_and_stderr(buckets[mass]) for mass in masses]
    return masses, stats, [len(buckets[mass]) for mass in masses]


def gap_envelope_check(points: Sequence[GapPoint], m: int) -> EnvelopeReport:
    """Least C with mean_gap(M) <= C M / m + gap(0) at every logged M, plus dips beyond 2 stderr"""
    masses, stats, _ = _bucket_stats(points)
    if len(masses) < 2:
        raise ValueError("gap_envelope_check needs at least two distinct step-mass values")
    intercept = stats[0][0] if masses[0] == 0.0 else 0.0
    c_hat = 0.0
    for mass, (mean, _) in zip(masses, stats):
        if mass > 0:
            c_hat = max(c_hat, (mean - intercept) * m / mass)
    violations = 0
    for (prev_mean, prev_se), (mean, se) in zip(stats, stats[1:]):
        if mean < prev_mean - 2.0 * math.sqrt(prev_se ** 2 + se ** 2):
            violations += 1
    return EnvelopeReport(c_hat=c_hat, intercept=intercept, violations=violations, n_buckets=len(masses))


class GapBucket(BaseModel):
    step_mass: float
    mean_gap: float
    stderr: float
    n: int


def aggregate_gaps(runs: Sequence[Sequence[GapPoint]]) -> List[GapBucket]:
    """Seed-mean gap per logged step-mass"""
    masses, stats, counts = _bucket_stats([p for run in runs for p in run])
    return [GapBucket(step_mass=mass, mean_gap=mean, stderr=se, n=n)
            for mass, (mean, se), n in zip(masses, stats, counts)]


class GapOrdering(BaseModel):
    mean_capped: float
    mean_uncapped: float
    pooled_stderr: float
    separated: bool  # uncapped - capped >= 2 pooled stderr


def gap_ordering(capped: Sequence[Sequence[GapPoint]], uncapped: Sequence[Sequence[GapPoint]]) -> GapOrdering:
    """One-sided two-standard-error comparison of final gaps"""
    mean_c, se_c = mean_and_stderr([run[-1].gap for run in capped])
    mean_u, se_u = mean_and_stderr([run[-1].gap for run in uncapped])
    pooled = math.sqrt(se_c ** 2 + se_u ** 2)
    return GapOrdering(
        mean_capped=mean_c,
        mean_uncapped=mean_u,
        pooled_stderr=pooled,
        separated=mean_u - mean_c >= 2.0 * pooled,
    )
