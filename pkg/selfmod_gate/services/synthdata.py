"""Seeded synthetic binary-classification task shared by every experiment.

Inputs are standard Gaussian, labels come from a smooth non-polynomial score
through a logistic link, then flip independently; bounded Gaussian noise is
added to the features after labelling.
"""
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Literal, NamedTuple, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.special import expit

from config.settings import NOISE_CLIP
from utils.helpers import derive_rng

# child stream ids under a split seed
TRAIN_STREAM, VAL_STREAM, TEST_STREAM = 0, 1, 2


class SynthConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    dim: int = Field(1, ge=1)
    n_train: int = Field(150, ge=1)
    n_val: int = Field(60, ge=1)
    n_test: int = Field(1000, ge=1)
    noise_sigma: float = Field(1.2, ge=0.0)
    flip_rate: float = Field(0.35, ge=0.0, le=0.5)
    link: Literal["logistic", "threshold"] = "logistic"
    seed: int = Field(0, ge=0, lt=2**64)


class LabeledSample(NamedTuple):
    x: np.ndarray
    y: int


@dataclass(frozen=True)
class Dataset:
    """Samples stored column-wise: x has shape (n, dim), y has shape (n,)"""

    x: np.ndarray
    y: np.ndarray

    def __len__(self):
        return int(self.y.shape[0])

    def __iter__(self) -> Iterator[LabeledSample]:
        for row, label in zip(self.x, self.y):
            yield LabeledSample(row, int(label))

    @property
    def x1(self) -> np.ndarray:
        """First input coordinate, the one the polynomial models use"""
        return self.x[:, 0]


@dataclass(frozen=True)
class DataSplit:
    train: Dataset
    val: Dataset
    test: Dataset


def true_score(x) -> np.ndarray:
    """Ground-truth score s(x) = 1.5 sin(2 x1) + 0.5 x1 (+ 0.25 x1 x2 when dim > 1).

    Accepts a single point of shape (dim,) or a batch of shape (n, dim).
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("true_score needs finite inputs")
    single = arr.ndim == 1
    batch = np.atleast_2d(arr)
    x1 = batch[:, 0]
    score = 1.5 * np.sin(2.0 * x1) + 0.5 * x1
    if batch.shape[1] > 1:
        score = score + 0.25 * x1 * batch[:, 1]
    return score[0] if single else score


def _clean_labels(cfg: SynthConfig, clean_x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    score = true_score(clean_x)
    if cfg.link == "threshold":
        return (score >= 0).astype(np.int64)
    return (rng.random(score.shape[0]) < expit(score)).astype(np.int64)


def draw_dataset(cfg: SynthConfig, n: int, rng: np.random.Generator) -> Dataset:
    """Draw n samples from the generating process with the given generator"""
    clean_x = rng.standard_normal((n, cfg.dim))
    y = _clean_labels(cfg, clean_x, rng)
    flips = rng.random(n) < cfg.flip_rate
    y = np.where(flips, 1 - y, y)
    noise = np.clip(rng.standard_normal((n, cfg.dim)), -NOISE_CLIP, NOISE_CLIP) * cfg.noise_sigma
    return Dataset(x=clean_x + noise, y=y)


def generate_split(cfg: SynthConfig) -> DataSplit:
    """Train/validation/test from three independent child streams of cfg.seed"""
    return DataSplit(
        train=draw_dataset(cfg, cfg.n_train, derive_rng(cfg.seed, TRAIN_STREAM)),
        val=draw_dataset(cfg, cfg.n_val, derive_rng(cfg.seed, VAL_STREAM)),
        test=draw_dataset(cfg, cfg.n_test, derive_rng(cfg.seed, TEST_STREAM)),
    )


def bayes_error_estimate(cfg: SynthConfig, n_mc: int = 100_000, seed: int = 0) -> Tuple[float, float]:
    """Monte-Carlo Bayes 0-1 risk of the generating process and its standard error.

    Conditions on the clean features: P(y=1|x) = (1-f) p(x) + f (1 - p(x)),
    so the Bayes risk is E[min(q, 1-q)]. Feature noise is ignored, which
    makes this a lower bound on the Bayes risk of the observed (x, y) the
    learners are trained and scored on.
    """
    if n_mc < 10_000:
        raise ValueError("n_mc must be at least 1e4")
    rng = derive_rng(seed, 99)
    clean_x = rng.standard_normal((n_mc, cfg.dim))
    score = true_score(clean_x)
    if cfg.link == "threshold":
        p = (score >= 0).astype(float)
    else:
        p = expit(score)
    q = (1.0 - cfg.flip_rate) * p + cfg.flip_rate * (1.0 - p)
    pointwise = np.minimum(q, 1.0 - q)
    return float(pointwise.mean()), float(pointwise.std(ddof=1) / math.sqrt(n_mc))


def write_dataset(data: Dataset, path: Path):
    """One sample per line: `x_1 ... x_d y`, 17 significant digits"""
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        for row, label in zip(data.x, data.y):
            handle.write(" ".join(f"{v:.17g}" for v in row) + f" {int(label)}\n")


def write_split(split: DataSplit, directory: Path):
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name in ("train", "val", "test"):
        write_dataset(getattr(split, name), directory / f"{name}.txt")


def read_dataset(path: Path) -> Dataset:
    table = np.loadtxt(path, ndmin=2)
    return Dataset(x=table[:, :-1], y=table[:, -1].astype(np.int64))
