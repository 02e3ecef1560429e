"""Brute-force verifiers: exact VC dimension of small finite classes, empirical uniform-deviation probes"""
import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from pydantic import BaseModel

from services.hypothesis import featurize
from services.synthdata import SynthConfig, draw_dataset
from utils.helpers import EnumerationBoundError, derive_rng

MAX_POINTS = 24
NET_STREAM, PROBE_TEST_STREAM, PROBE_TRIAL_STREAM, SIGN_STREAM = 30, 31, 32, 33


@dataclass(frozen=True)
class FiniteClass:
    """Restriction of a hypothesis class to finitely many points: one label row per hypothesis"""

    points: tuple
    functions: np.ndarray  # shape (n_hypotheses, n_points), entries in {0, 1}
    complete: bool = True  # False when the rows may under-count the class

    def __post_init__(self):
        functions = np.asarray(self.functions, dtype=np.uint8).reshape(-1, len(self.points))
        if np.any(functions > 1):
            raise ValueError("labels must be 0 or 1")
        if len(set(self.points)) != len(self.points):
            raise ValueError("points must be distinct")
        object.__setattr__(self, "functions", functions)


def _pattern_count(functions: np.ndarray, subset: Sequence[int]) -> int:
    weights = 1 << np.arange(len(subset), dtype=np.int64)
    codes = functions[:, list(subset)].astype(np.int64) @ weights
    return int(np.unique(codes).size)


def vc_bruteforce(cls: FiniteClass) -> int:
    """Largest d such that some d-subset of points is shattered.

    Subsets are tried by increasing size; shattering is hereditary, so the
    first size with no shattered subset ends the search.
    """
    n = len(cls.points)
    if n > MAX_POINTS:
        raise EnumerationBoundError(f"vc_bruteforce supports at most {MAX_POINTS} points, got {n}")
    functions = np.unique(cls.functions, axis=0) if cls.functions.size else cls.functions
    if functions.shape[0] == 0:
        return 0
    upper = min(n, int(math.floor(math.log2(functions.shape[0]))))
    best = 0
    for d in range(1, upper + 1):
        if not any(_pattern_count(functions, subset) == 2 ** d for subset in itertools.combinations(range(n), d)):
            break
        best = d
    return best


def threshold_class(points: Sequence[int]) -> FiniteClass:
    """h_k(x) = 1{x >= k} on integer points, k from min to max+1"""
    pts = tuple(points)
    ks = range(min(pts), max(pts) + 2)
    return FiniteClass(points=pts, functions=np.array([[int(x >= k) for x in pts] for k in ks]))


def full_class(n: int) -> FiniteClass:
    return FiniteClass(points=tuple(range(n)), functions=np.array(list(itertools.product((0, 1), repeat=n))))


def _few_change_patterns(n: int, max_changes: int) -> np.ndarray:
    """All 0/1 patterns on n ordered points with at most max_changes label changes"""
    rows = []
    for changes in range(0, min(max_changes, n - 1) + 1):
        for cuts in itertools.combinations(range(1, n), changes):
            for first in (0, 1):
                row, label, previous = [], first, 0
                for cut in list(cuts) + [n]:
                    row.extend([label] * (cut - previous))
                    label, previous = 1 - label, cut
                rows.append(row)
    return np.array(rows, dtype=np.uint8)


def sign_class_on_grid(degree: int, grid: Sequence[float], n_draws: int = 100_000, seed: int = 0) -> FiniteClass:
    """Sign patterns of degree-`degree` polynomials on a grid.

    Random coefficient draws are closed with the patterns realized by
    polynomials whose roots sit between grid points (every pattern with at
    most `degree` label changes along the sorted grid). A degree-d
    polynomial cannot change sign more than d times, so the closure is exact
    and `complete` is set; the draws alone would only be a lower bound.
    """
    if len(grid) > MAX_POINTS or degree > 3:
        raise EnumerationBoundError("sign_class_on_grid supports |grid| <= 24 and degree <= 3")
    order = np.argsort(grid)
    points = tuple(float(grid[i]) for i in order)
    coeffs = derive_rng(seed, SIGN_STREAM).standard_normal((n_draws, degree + 1))
    sampled = (coeffs @ featurize(np.array(points), degree).T >= 0).astype(np.uint8)
    closure = _few_change_patterns(len(points), degree)
    functions = np.unique(np.vstack([sampled, closure]), axis=0)
    return FiniteClass(points=points, functions=functions, complete=True)


def hoeffding_bound(n_hypotheses: int, n: int, delta: float) -> float:
    """Two-sided Hoeffding plus a union bound: sqrt(ln(2 H / delta) / (2 n))"""
    return math.sqrt(math.log(2.0 * n_hypotheses / delta) / (2.0 * n))


class DeviationReport(BaseModel):
    degree: int
    K: int
    n: int
    delta: float
    trials: int
    net_size: int
    quantile: float
    bound: float  # c0 sqrt((K + ln(1/delta)) / n)
    holds: bool
    hoeffding: Optional[float] = None
    note: str = "sup over a finite coefficient net under-estimates the class supremum"


def deviation_probe(degree: int, K: int, n: int, delta: float, trials: int, c0: float = 0.10,
                    net_size: int = 10_000, test_size: int = 20_000, seed: int = 0,
                    synth: Optional[SynthConfig] = None) -> DeviationReport:
    """(1 - delta) quantile over trials of sup_h |R(h) - R_n(h)| on a coefficient net.

    R(h) is estimated once on a large independent sample; each trial draws
    n fresh samples from the default synthetic generator.
    """
    if trials < 200:
        raise ValueError("deviation_probe needs at least 200 trials")
    synth = synth or SynthConfig()
    net = derive_rng(seed, NET_STREAM).standard_normal((net_size, degree + 1))
    reference = draw_dataset(synth, test_size, derive_rng(seed, PROBE_TEST_STREAM))
    reference_risk = _net_risks(net, reference.x1, reference.y, degree)

    sups = np.empty(trials)
    for trial in range(trials):
        sample = draw_dataset(synth, n, derive_rng(seed, PROBE_TRIAL_STREAM, trial))
        sups[trial] = np.max(np.abs(_net_risks(net, sample.x1, sample.y, degree) - reference_risk))

    quantile = float(np.quantile(sups, 1.0 - delta))
    bound = c0 * math.sqrt((K + math.log(1.0 / delta)) / n)
    return DeviationReport(
        degree=degree,
        K=K,
        n=n,
        delta=delta,
        trials=trials,
        net_size=net_size,
        quantile=quantile,
        bound=bound,
        holds=quantile <= bound,
        # the two constant classifiers deviate by the same amount, one union term
        hoeffding=hoeffding_bound(1, n, delta) if degree == 0 else None,
    )


def _net_risks(net: np.ndarray, x: np.ndarray, y: np.ndarray, degree: int, chunk: int = 1000) -> np.ndarray:
    phi = featurize(x, degree)
    risks = np.empty(net.shape[0])
    for start in range(0, net.shape[0], chunk):
        predictions = (net[start:start + chunk] @ phi.T) >= 0
        risks[start:start + chunk] = np.mean(predictions != y.astype(bool), axis=1)
    return risks


def write_report(report: BaseModel, path):
    """Plain-text report: one `key: value` line per field"""
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for key, value in report.model_dump().items():
            handle.write(f"{key}: {value}\n")
