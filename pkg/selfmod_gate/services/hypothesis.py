"""Polynomial-logistic hypothesis family H_k: features, surrogate ERM, risks, capacity proxy"""
from pathlib import Path
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.special import expit

from config.settings import MAX_FEATURE_DEGREE, STANDARDIZE_ABOVE
from services.synthdata import Dataset
from utils.helpers import FitConvergenceError


class TrainConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    l2_c: float = Field(1.0, gt=0.0)  # inverse regularization strength C
    tol: float = Field(1e-8, gt=0.0, le=1e-6)
    max_newton_iters: int = Field(100, ge=1)
    penalize_intercept: bool = True
    standardize_above: int = Field(STANDARDIZE_ABOVE, ge=0)


class CapacityProxy(BaseModel):
    model_config = ConfigDict(frozen=True)

    value: int = Field(ge=0)


class PolyHypothesis(BaseModel):
    """Degree-k logistic classifier over [1, u, ..., u^k].

    u is the raw first coordinate, or its affine image (x - center) / half_width
    when `affine` is set.
    """

    model_config = ConfigDict(frozen=True)

    degree: int = Field(ge=0)
    coeffs: Tuple[float, ...]
    affine: Optional[Tuple[float, float]] = None

    @model_validator(mode="after")
    def _check_coeffs(self):
        if len(self.coeffs) != self.degree + 1:
            raise ValueError(f"expected {self.degree + 1} coefficients, got {len(self.coeffs)}")
        if not np.all(np.isfinite(self.coeffs)):
            raise ValueError("coefficients must be finite")
        return self

    def scores(self, x) -> np.ndarray:
        return featurize(x, self.degree, self.affine) @ np.asarray(self.coeffs)

    def predict(self, x) -> np.ndarray:
        # ties at score 0 predict 1
        return (self.scores(x) >= 0).astype(np.int64)


def standardizer(x: np.ndarray) -> Tuple[float, float]:
    """Affine map sending [min(x), max(x)] onto [-1, 1]"""
    lo, hi = float(np.min(x)), float(np.max(x))
    half = (hi - lo) / 2.0
    return (lo + hi) / 2.0, (half if half > 0 else 1.0)


def featurize(x, degree: int, affine: Optional[Tuple[float, float]] = None) -> np.ndarray:
    """[1, u, u^2, ..., u^degree] for a scalar, or one such row per element of an array"""
    if degree < 0 or degree > MAX_FEATURE_DEGREE:
        raise ValueError(f"degree must lie in [0, {MAX_FEATURE_DEGREE}]")
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("featurize needs finite inputs")
    if affine is not None:
        center, half = affine
        arr = (arr - center) / half
    features = np.vander(np.atleast_1d(arr).ravel(), degree + 1, increasing=True)
    return features[0] if arr.ndim == 0 else features


def _penalty_mask(n_features: int, cfg: TrainConfig) -> np.ndarray:
    mask = np.ones(n_features)
    if not cfg.penalize_intercept:
        mask[0] = 0.0
    return mask


def _objective(w, phi, y, lam, mask):
    z = phi @ w
    return float(np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * lam * np.sum(mask * w * w))


def fit_erm(train: Dataset, degree: int, cfg: TrainConfig) -> PolyHypothesis:
    """Minimize mean logistic loss + ||w||^2 / (2 C m) by damped Newton.

    Stops when half the squared Newton decrement drops below cfg.tol.
    """
    if len(train) < 1:
        raise ValueError("fit_erm needs at least one sample")
    x = train.x1
    affine = standardizer(x) if degree > cfg.standardize_above else None
    phi = featurize(x, degree, affine)
    y = train.y.astype(float)
    m = phi.shape[0]
    lam = 1.0 / (cfg.l2_c * m)
    mask = _penalty_mask(degree + 1, cfg)

    w = np.zeros(degree + 1)
    for iteration in range(cfg.max_newton_iters + 1):
        z = phi @ w
        p = expit(z)
        grad = phi.T @ (p - y) / m + lam * mask * w
        hess = (phi.T * (p * (1.0 - p))) @ phi / m + np.diag(lam * mask)
        # Jacobi scaling keeps raw high powers solvable
        diag = np.sqrt(np.maximum(np.diag(hess), 1e-300))
        scaled = hess / np.outer(diag, diag)
        try:
            step = np.linalg.solve(scaled, grad / diag) / diag
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(scaled, grad / diag, rcond=None)[0] / diag
        decrement = float(grad @ step)
        if decrement / 2.0 <= cfg.tol:
            return PolyHypothesis(degree=degree, coeffs=tuple(float(c) for c in w), affine=affine)
        if iteration == cfg.max_newton_iters:
            break

        current = _objective(w, phi, y, lam, mask)
        t = 1.0
        while t > 1e-12 and _objective(w - t * step, phi, y, lam, mask) > current - 0.25 * t * decrement:
            t *= 0.5
        w = w - t * step
        if not np.all(np.isfinite(w)):
            break

    raise FitConvergenceError(degree, cfg.max_newton_iters)


def risk01(h: PolyHypothesis, data: Dataset) -> float:
    """Fraction of samples misclassified by h"""
    if len(data) == 0:
        raise ValueError("risk01 needs nonempty data")
    return float(np.mean(h.predict(data.x1) != data.y))


def logistic_loss(h: PolyHypothesis, data: Dataset) -> float:
    if len(data) == 0:
        raise ValueError("logistic_loss needs nonempty data")
    z = h.scores(data.x1)
    return float(np.mean(np.logaddexp(0.0, z) - data.y * z))


def penalized_objective(h: PolyHypothesis, data: Dataset, cfg: TrainConfig) -> float:
    """The training objective fit_erm minimizes, evaluated at h"""
    w = np.asarray(h.coeffs)
    lam = 1.0 / (cfg.l2_c * len(data))
    return logistic_loss(h, data) + 0.5 * lam * float(np.sum(_penalty_mask(h.degree + 1, cfg) * w * w))


def capacity(degree: int) -> CapacityProxy:
    """Parameter-count capacity proxy B = degree + 1"""
    return CapacityProxy(value=degree + 1)


def dump_hypothesis(h: PolyHypothesis, path: Path):
    """`degree`, then one coefficient per line; the affine map, if any, as a trailing comment"""
    lines = [str(h.degree)] + [repr(c) for c in h.coeffs]
    if h.affine is not None:
        lines.append(f"# affine {h.affine[0]!r} {h.affine[1]!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_hypothesis(path: Path) -> PolyHypothesis:
    values, affine = [], None
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line.startswith("# affine"):
            _, _, center, half = line.split()
            affine = (float(center), float(half))
        elif line and not line.startswith("#"):
            values.append(line)
    return PolyHypothesis(degree=int(values[0]), coeffs=tuple(float(v) for v in values[1:]), affine=affine)
