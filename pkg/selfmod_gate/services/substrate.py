"""Finite-state threshold learning: a bounded-memory streaming learner, unbounded ERM, and collision search.

Thresholds h_k(x) = 1{x >= k} on {1..D}. Under the uniform input
distribution the risk of threshold k_hat against k is |k_hat - k| / D.
"""
import itertools
import math
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from config.settings import COLLISION_WORK_WARN
from utils.helpers import DomainError, InconsistentSampleError, derive_rng, log, mean_and_stderr

SAMPLE_STREAM, TARGET_STREAM = 20, 21

ThresholdSample = Tuple[int, int]  # (x, y)


class FsState(BaseModel):
    """The learner's whole persistent memory: one integer in [0, N)"""

    model_config = ConfigDict(frozen=True)

    n_states: int = Field(ge=1)
    state: int = Field(0, ge=0)

    @model_validator(mode="after")
    def _in_range(self):
        if self.state >= self.n_states:
            raise ValueError("state must lie in [0, n_states)")
        return self


class ThresholdTask(BaseModel):
    model_config = ConfigDict(frozen=True)

    domain_max: int = Field(ge=1)
    true_k: int = Field(ge=1)

    @model_validator(mode="after")
    def _k_in_domain(self):
        if self.true_k > self.domain_max:
            raise ValueError("true_k must lie in [1, domain_max]")
        return self

    def label(self, x):
        return (np.asarray(x) >= self.true_k).astype(np.int64)


def bucket_midpoint(state: int, n_states: int, domain_max: int) -> int:
    """floor(1 + (b + 1/2) D / N): the threshold state b stands for"""
    return math.floor(1.0 + (state + 0.5) * domain_max / n_states)


def fsl_update(s: FsState, sample: ThresholdSample, domain_max: int) -> FsState:
    """Quantized bisection step, a function of (state, sample) alone.

    A positive x below the state's midpoint moves one bucket down, a
    negative x at or above it moves one bucket up.
    """
    x, y = sample
    if not 1 <= x <= domain_max or y not in (0, 1):
        raise DomainError(f"sample {sample} outside {{1..{domain_max}}} x {{0, 1}}")
    mid = bucket_midpoint(s.state, s.n_states, domain_max)
    if y == 1 and x < mid and s.state > 0:
        return FsState(n_states=s.n_states, state=s.state - 1)
    if y == 0 and x >= mid and s.state < s.n_states - 1:
        return FsState(n_states=s.n_states, state=s.state + 1)
    return s


def fsl_threshold(s: FsState, domain_max: int) -> int:
    return bucket_midpoint(s.state, s.n_states, domain_max)


def run_fsl(samples: Iterable[ThresholdSample], n_states: int, domain_max: int, start: int = 0) -> FsState:
    state = FsState(n_states=n_states, state=start)
    for sample in samples:
        state = fsl_update(state, sample, domain_max)
    return state


def consistent_interval(samples: Iterable[ThresholdSample], domain_max: int) -> Tuple[int, int]:
    """[lo, hi] of thresholds k in [1, D+1] agreeing with every sample (empty when lo > hi)"""
    lo, hi = 1, domain_max + 1
    for x, y in samples:
        if y == 1:
            hi = min(hi, x)
        else:
            lo = max(lo, x + 1)
    return lo, hi


def erm_threshold(samples: Sequence[ThresholdSample], domain_max: int) -> int:
    """ceil((largest negative + smallest positive) / 2); 1 when all positive, D+1 when all negative"""
    negatives = [x for x, y in samples if y == 0]
    positives = [x for x, y in samples if y == 1]
    if negatives and positives:
        neg, pos = max(negatives), min(positives)
        if neg >= pos:
            raise InconsistentSampleError(f"largest negative {neg} >= smallest positive {pos}")
        return (neg + pos + 1) // 2
    if positives:
        return 1
    return domain_max + 1


def threshold_risk(k_hat: int, true_k: int, domain_max: int) -> float:
    """Exact risk under the uniform distribution on {1..D}"""
    return abs(k_hat - true_k) / domain_max


def _erm_prefix_thresholds(xs: np.ndarray, ys: np.ndarray, sizes: Sequence[int], domain_max: int) -> List[int]:
    # running max negative / min positive make every prefix O(1)
    neg = np.maximum.accumulate(np.where(ys == 0, xs, 0))
    pos = np.minimum.accumulate(np.where(ys == 1, xs, domain_max + 1))
    out = []
    for m in sizes:
        n, p = int(neg[m - 1]), int(pos[m - 1])
        if n == 0 and p == domain_max + 1:
            out.append(domain_max + 1)  # empty sample cannot occur for m >= 1
        elif n == 0:
            out.append(1)
        elif p == domain_max + 1:
            out.append(domain_max + 1)
        else:
            out.append((n + p + 1) // 2)
    return out


class RiskRow(BaseModel):
    m: int
    learner: str  # "erm" or "fsl"
    mean_risk: float
    stderr: float


def run_substrate_experiment(n_states: int, sample_sizes: Sequence[int], domain_max: int,
                             seeds: Sequence[int], targets_per_seed: int = 20) -> List[RiskRow]:
    """Mean exact risk of ERM and the N-state learner at each sample size.

    Each (seed, target) pair streams one i.i.d. uniform sample of size
    max(sample_sizes); the m-sample learners see its first m points.
    """
    sizes = sorted(int(m) for m in sample_sizes)
    if sizes[0] < 1:
        raise ValueError("sample sizes must be positive")
    checkpoints = set(sizes)
    risks: Dict[Tuple[str, int], List[float]] = {(name, m): [] for name in ("erm", "fsl") for m in sizes}

    for seed in seeds:
        targets = derive_rng(seed, TARGET_STREAM).integers(1, domain_max + 1, size=targets_per_seed)
        for j, k in enumerate(targets):
            task = ThresholdTask(domain_max=domain_max, true_k=int(k))
            xs = derive_rng(seed, SAMPLE_STREAM, j).integers(1, domain_max + 1, size=sizes[-1])
            ys = task.label(xs)
            for m, k_hat in zip(sizes, _erm_prefix_thresholds(xs, ys, sizes, domain_max)):
                risks[("erm", m)].append(threshold_risk(k_hat, task.true_k, domain_max))
            state = FsState(n_states=n_states)
            for t, (x, y) in enumerate(zip(xs.tolist(), ys.tolist()), start=1):
                state = fsl_update(state, (x, y), domain_max)
                if t in checkpoints:
                    risks[("fsl", t)].append(threshold_risk(fsl_threshold(state, domain_max), task.true_k, domain_max))

    rows = []
    for name in ("erm", "fsl"):
        for m in sizes:
            mean, se = mean_and_stderr(risks[(name, m)])
            rows.append(RiskRow(m=m, learner=name, mean_risk=mean, stderr=se))
    log(f"✓ substrate N={n_states} D={domain_max}: "
        + ", ".join(f"{r.learner}@{r.m}={r.mean_risk:.4f}" for r in rows if r.m == sizes[-1]))
    return rows


class CollisionWitness(BaseModel):
    first: List[Tuple[int, int]]
    second: List[Tuple[int, int]]
    state: int
    first_interval: Tuple[int, int]
    second_interval: Tuple[int, int]
    test_point: int  # labelled 1 by the first sample's threshold, 0 by the second's
    first_threshold: int
    second_threshold: int


class CollisionSearch(BaseModel):
    witness: Optional[CollisionWitness]
    sequences_checked: int
    exhaustive: bool


def _labelings(xs: Sequence[int], domain_max: int):
    """Every realizable labelling of xs, one per distinct threshold pattern"""
    seen = set()
    for k in range(1, domain_max + 2):
        labels = tuple(int(x >= k) for x in xs)
        if labels not in seen:
            seen.add(labels)
            yield labels


def find_state_collision(n_states: int, m: int, domain_max: int,
                         update: Optional[Callable[[FsState, ThresholdSample, int], FsState]] = None,
                         budget: int = 200_000, seed: int = 0) -> CollisionSearch:
    """Two realizable samples of length m ending in one state with disjoint consistent intervals.

    Enumerates all x-sequences when D^m fits in the budget, otherwise draws
    `budget` random sequences. Works for any learner given as `update`.
    Needs m > n_states: shorter samples need not revisit a state.
    """
    if m <= n_states:
        raise DomainError(f"collision search needs m > N, got m={m}, N={n_states}")
    update = update or fsl_update
    total = domain_max ** m
    exhaustive = total <= budget
    work = min(total, budget) * (min(m, domain_max) + 1) * m
    if work > COLLISION_WORK_WARN:
        log(f"⚠️  collision search at N={n_states}, m={m}, D={domain_max} may take up to {work:,} learner updates")
    if exhaustive:
        sequences = itertools.product(range(1, domain_max + 1), repeat=m)
    else:
        rng = derive_rng(seed, SAMPLE_STREAM)
        sequences = (tuple(int(v) for v in rng.integers(1, domain_max + 1, size=m)) for _ in range(budget))

    # per terminal state: the sample with the lowest interval top and the one with the highest bottom
    lowest: Dict[int, Tuple[int, List[ThresholdSample], Tuple[int, int]]] = {}
    highest: Dict[int, Tuple[int, List[ThresholdSample], Tuple[int, int]]] = {}
    checked = 0
    for xs in sequences:
        checked += 1
        for labels in _labelings(xs, domain_max):
            sample = list(zip(xs, labels))
            state = FsState(n_states=n_states)
            for pair in sample:
                state = update(state, pair, domain_max)
            lo, hi = consistent_interval(sample, domain_max)
            s = state.state
            if s not in lowest or hi < lowest[s][0]:
                lowest[s] = (hi, sample, (lo, hi))
            if s not in highest or lo > highest[s][0]:
                highest[s] = (lo, sample, (lo, hi))
            if lowest[s][2][1] < highest[s][2][0]:
                first_interval, second_interval = lowest[s][2], highest[s][2]
                k1, k2 = first_interval[1], second_interval[0]
                witness = CollisionWitness(
                    first=lowest[s][1],
                    second=highest[s][1],
                    state=s,
                    first_interval=first_interval,
                    second_interval=second_interval,
                    test_point=k1,
                    first_threshold=k1,
                    second_threshold=k2,
                )
                log(f"✓ collision witness at N={n_states}, m={m}, D={domain_max} after {checked} sequences")
                return CollisionSearch(witness=witness, sequences_checked=checked, exhaustive=exhaustive)

    log(f"⚠️  no collision witness at N={n_states}, m={m}, D={domain_max} ({checked} sequences)")
    return CollisionSearch(witness=None, sequences_checked=checked, exhaustive=exhaustive)


def verify_witness(witness: CollisionWitness, n_states: int, domain_max: int,
                   update: Optional[Callable[[FsState, ThresholdSample, int], FsState]] = None) -> bool:
    """Replay both samples: same terminal state, each consistent with its threshold, test point split"""
    update = update or fsl_update
    states = []
    for sample in (witness.first, witness.second):
        state = FsState(n_states=n_states)
        for pair in sample:
            state = update(state, tuple(pair), domain_max)
        states.append(state.state)
    first_ok = all(int(x >= witness.first_threshold) == y for x, y in witness.first)
    second_ok = all(int(x >= witness.second_threshold) == y for x, y in witness.second)
    x_star = witness.test_point
    split = int(x_star >= witness.first_threshold) != int(x_star >= witness.second_threshold)
    return states[0] == states[1] == witness.state and first_ok and second_ok and split


def write_witness(witness: CollisionWitness, path):
    """Two sample lists and the distinguishing point, one field per line"""
    lines = [
        "first " + " ".join(f"{x}:{y}" for x, y in witness.first),
        "second " + " ".join(f"{x}:{y}" for x, y in witness.second),
        f"state {witness.state}",
        f"thresholds {witness.first_threshold} {witness.second_threshold}",
        f"test_point {witness.test_point}",
    ]
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\n".join(lines) + "\n")
