"""Helper utilities for selfmod-gate: log prefixes, seeds, formatting, errors and command plumbing"""
import asyncio
import functools
import math
import sys
import time
from typing import Callable, Iterable, List, Optional, Sequence

import numpy as np

from config.settings import EXIT_CONFIG, EXIT_NUMERIC, QUIET


def timestamp():
    """Return a formatted timestamp for logging"""
    return f"[{time.time():.3f}]"


def log(message: str):
    """Print a progress line unless SELFMOD_QUIET is set"""
    if not QUIET:
        print(f"{timestamp()} {message}", flush=True)


def log_error(message: str):
    print(f"{timestamp()} {message}", file=sys.stderr, flush=True)


class SelfModError(Exception):
    """Base class for every failure raised by selfmod-gate"""


class ConfigError(SelfModError):
    """A configuration key is unknown or its value is invalid"""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key
        self.message = message


class FitConvergenceError(SelfModError):
    """Newton's method did not reach tolerance"""

    def __init__(self, degree: int, iterations: int):
        super().__init__(f"fit did not converge at degree {degree} after {iterations} Newton iterations")
        self.degree = degree
        self.iterations = iterations


class SgdDivergenceError(SelfModError):
    """SGD produced non-finite parameters"""

    def __init__(self, step: int):
        super().__init__(f"SGD diverged at step {step}")
        self.step = step


class UnboundedBudgetError(SelfModError):
    """A zero margin gives no bound on the number of accepted edits"""


class InconsistentSampleError(SelfModError):
    """Threshold sample is not realizable by any threshold"""


class DomainError(SelfModError, ValueError):
    """Input lies outside the supported domain"""


class EnumerationBoundError(SelfModError, ValueError):
    """Brute-force enumeration requested beyond its size bound"""


def derive_rng(seed: int, *path: int) -> np.random.Generator:
    """Generator for a named child stream of `seed`.

    The stream depends only on (seed, path), never on how many other
    streams were drawn before it.
    """
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=tuple(path)))


def parse_seeds(value, base_seed: int = 0) -> List[int]:
    """Parse `--seeds N|LIST`: a count gives base_seed..base_seed+N-1, a comma list is taken literally"""
    text = str(value).strip()
    if "," in text:
        seeds = [int(part) for part in text.split(",") if part.strip()]
    else:
        count = int(text)
        if count < 1:
            raise ValueError("seed count must be at least 1")
        seeds = [base_seed + i for i in range(count)]
    if not seeds or any(s < 0 or s >= 2**64 for s in seeds):
        raise ValueError("seeds must be 64-bit unsigned integers")
    return seeds


def fmt(value) -> str:
    """Deterministic text form of a CSV cell"""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if value is None:
        return ""
    return str(value)


def mean_and_stderr(values: Sequence[float]):
    """Mean and standard error of the mean (0 for a single value)"""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise ValueError("no values")
    mean = float(arr.mean())
    if arr.size == 1:
        return mean, 0.0
    return mean, float(arr.std(ddof=1) / math.sqrt(arr.size))


def parse_int_list(value, name: Optional[str] = None) -> List[int]:
    """Comma-separated integers, e.g. `250,500,1000`"""
    if isinstance(value, (list, tuple)):
        return [int(v) for v in value]
    return [int(part) for part in str(value).split(",") if part.strip()]


async def gather_in_executor(func: Callable, jobs: Iterable[tuple]) -> list:
    """Run func(*job) for every job on the default executor; results come back in job order"""
    loop = asyncio.get_running_loop()
    return await asyncio.gather(*(loop.run_in_executor(None, func, *job) for job in jobs))


def command(func):
    """Map selfmod-gate failures raised by an async command onto its exit code"""

    @functools.wraps(func)
    async def wrapper(*args, **kwargs) -> int:
        try:
            return await func(*args, **kwargs)
        except ConfigError as e:
            log_error(f"✗ config error: {e}")
            return EXIT_CONFIG
        except (FitConvergenceError, SgdDivergenceError) as e:
            log_error(f"✗ numerical failure: {e}")
            return EXIT_NUMERIC

    return wrapper
