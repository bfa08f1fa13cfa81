"""Monte Carlo estimates and paired statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class MonteCarloEstimate:
    mean: float
    stderr: float
    reps: int
    aborted: int = 0

    def to_dict(self) -> dict:
        return {"mean": self.mean, "stderr": self.stderr, "reps": self.reps,
                "aborted": self.aborted}


def summarize(values: np.ndarray, aborted: int = 0) -> MonteCarloEstimate:
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    if n < 2:
        raise ValueError("need at least two replicas")
    mean = float(values.mean())
    stderr = float(values.std(ddof=1) / math.sqrt(n))
    return MonteCarloEstimate(mean=mean, stderr=stderr, reps=n, aborted=aborted)


def z_score(a: MonteCarloEstimate, b: MonteCarloEstimate) -> float:
    """(a.mean - b.mean) normalized by the combined standard error.

    Zero when both standard errors vanish and the means agree.
    """
    denom = math.hypot(a.stderr, b.stderr)
    diff = a.mean - b.mean
    if denom == 0.0:
        return 0.0 if diff == 0.0 else math.copysign(math.inf, diff)
    return diff / denom


def paired_z(diffs: np.ndarray) -> float:
    """z statistic of mean(diffs) against zero; zero for identically-zero data."""
    diffs = np.asarray(diffs, dtype=float)
    est = summarize(diffs)
    if est.stderr == 0.0:
        return 0.0 if est.mean == 0.0 else math.copysign(math.inf, est.mean)
    return est.mean / est.stderr


def combined_stderr(a: MonteCarloEstimate, b: MonteCarloEstimate) -> float:
    return math.hypot(a.stderr, b.stderr)


def agree_within(a: MonteCarloEstimate, b: MonteCarloEstimate,
                 k: float = 3.0) -> bool:
    """|a - b| < k combined stderr, with exact agreement counting as true."""
    diff = abs(a.mean - b.mean)
    se = combined_stderr(a, b)
    if se == 0.0:
        return diff == 0.0
    return diff < k * se
