"""Both sides of the moment duality and the moment/indicator estimators.

The right side estimates

    E[ (-1)^{|J~_T|} e^{K_T} prod_{alpha in I_T} f(X_T^alpha) ]

over particle-system replicas; the left side is the field-moment estimate
from the spde module.  A DualityReport compares the two through a z score.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .drift import DriftSpec
from .particles import run_system
from .replicas import map_replicas
from .spde import Domain, InitialCondition, estimate_lhs
from .stats import (MonteCarloEstimate, agree_within, summarize,
                    z_score)

MAX_ABORT_FRACTION = 0.01


def rhs_replica(replica: int, seed: int, f: InitialCondition, spec: DriftSpec,
                points, T: float, dt: float, l, m, k_mode: str,
                hard_cap: int, stream: str):
    summ = run_system(points, spec, T, dt, seed, l=l, m=m, k_mode=k_mode,
                      hard_cap=hard_cap, stream=stream, replica=replica)
    if summ.aborted:
        return (math.nan, 1)
    prod = 1.0
    for x in summ.positions:
        prod *= f.at(x)
    sign = -1.0 if summ.n_branch_neg % 2 else 1.0
    return (sign * math.exp(summ.K) * prod, 0)


def _collect(pairs) -> MonteCarloEstimate:
    vals = np.array([v for v, a in pairs if not a])
    aborted = sum(a for _, a in pairs)
    if vals.shape[0] < 2:
        raise ValueError("fewer than two surviving replicas")
    return summarize(vals, aborted=aborted)


def estimate_rhs(f: InitialCondition, spec: DriftSpec, points, T: float, *,
                 dt: float, reps: int, seed: int, l: int | None = None,
                 m: int | None = None, k_mode: str = "auto",
                 hard_cap: int = 1_000_000, threads: int = 1,
                 stream: str = "dual-rhs") -> MonteCarloEstimate:
    """Monte Carlo mean of the dual-side functional; empty product is 1."""
    if reps < 2:
        raise ValueError("need reps >= 2")
    pairs = map_replicas(rhs_replica, reps, threads=threads,
                         args=(seed, f, spec, tuple(points), T, dt, l, m,
                               k_mode, hard_cap, stream))
    return _collect(pairs)


@dataclass
class DualityReport:
    lhs: MonteCarloEstimate
    rhs: MonteCarloEstimate
    z: float
    z_threshold: float
    valid: bool
    passed: bool

    def to_dict(self) -> dict:
        return {"lhs": self.lhs.to_dict(), "rhs": self.rhs.to_dict(),
                "z": self.z, "z_threshold": self.z_threshold,
                "valid": self.valid, "pass": self.passed}


def _abort_ok(est: MonteCarloEstimate) -> bool:
    total = est.reps + est.aborted
    return est.aborted <= MAX_ABORT_FRACTION * total


def make_report(lhs: MonteCarloEstimate, rhs: MonteCarloEstimate,
                z_threshold: float = 3.0) -> DualityReport:
    z = z_score(lhs, rhs)
    valid = _abort_ok(lhs) and _abort_ok(rhs)
    return DualityReport(lhs=lhs, rhs=rhs, z=z, z_threshold=z_threshold,
                         valid=valid, passed=valid and abs(z) < z_threshold)


def verify_duality(f: InitialCondition, spec: DriftSpec, points, T: float, *,
                   domain: Domain, dt_field: float, field_reps: int,
                   dt_particles: float, dual_reps: int, seed: int,
                   l: int | None = None, m: int | None = None,
                   k_mode: str = "auto", z_threshold: float = 3.0,
                   hard_cap: int = 1_000_000, threads: int = 1) -> DualityReport:
    """Estimate both sides with disjoint seed streams and compare."""
    if len(points) == 0:
        one = MonteCarloEstimate(mean=1.0, stderr=0.0, reps=0)
        return make_report(one, one, z_threshold)
    lhs = estimate_lhs(f, spec, points, T, field_reps, seed, domain=domain,
                       dt=dt_field, threads=threads)
    rhs = estimate_rhs(f, spec, points, T, dt=dt_particles, reps=dual_reps,
                       seed=seed, l=l, m=m, k_mode=k_mode, hard_cap=hard_cap,
                       threads=threads)
    return make_report(lhs, rhs, z_threshold)


def _check_moment_spec(spec: DriftSpec):
    extra = [k for k in range(len(spec.coeffs)) if k != 1 and spec.coeffs[k] != 0.0]
    if extra or spec.b_inf == 0.0:
        raise ValueError("moment estimator needs b_k = 0 for finite k != 1 "
                         "and b_inf != 0")


def estimate_moment_l(f: InitialCondition, spec: DriftSpec, x: float, t: float,
                      l: int, m: int, *, dt: float, reps: int, seed: int,
                      hard_cap: int = 1_000_000, threads: int = 1,
                      stream: str | None = None) -> MonteCarloEstimate:
    """Dual representation of E[u_t(x)^l] for the drift b_1 z + b_inf 1{z=1}.

    All l initial particles sit at x; offspring are capped at m; the
    exponential weight uses (b_1 + |b_inf|), the branching-rate convention
    of the approximating-moment identity (the -1/m correction vanishes in
    its m -> infinity limit and is not applied here).
    """
    _check_moment_spec(spec)
    if l == 0:
        return MonteCarloEstimate(mean=1.0, stderr=0.0, reps=reps)
    if stream is None:
        stream = f"moment-l{l}-m{m}"
    pairs = map_replicas(rhs_replica, reps, threads=threads,
                         args=(seed, f, spec, (float(x),) * l, t, dt, l, m,
                               "plain", hard_cap, stream))
    return _collect(pairs)


@dataclass
class IndicatorTable:
    rows: list[dict]
    diagonal: list[dict]
    indicator_estimate: float
    stabilized: bool

    def to_dict(self) -> dict:
        return {"rows": self.rows, "diagonal": self.diagonal,
                "indicator_estimate": self.indicator_estimate,
                "stabilized": self.stabilized}


def estimate_indicator(f: InitialCondition, spec: DriftSpec, x: float,
                       t: float, l_list, m_list, *, dt: float, reps: int,
                       seed: int, hard_cap: int = 1_000_000, threads: int = 1,
                       diagonal_only: bool = False) -> IndicatorTable:
    """Grid of moment estimates whose diagonal approximates E[1{u_t(x) = 1}].

    The stabilization flag is true when the last two diagonal entries agree
    within three combined standard errors.
    """
    l_list = list(l_list)
    m_list = list(m_list)
    if l_list != sorted(l_list) or m_list != sorted(m_list):
        raise ValueError("l_list and m_list must be ascending")
    cells = (list(zip(l_list, m_list)) if diagonal_only
             else [(l, m) for l in l_list for m in m_list])
    estimates = {}
    rows = []
    for l, m in cells:
        est = estimate_moment_l(f, spec, x, t, l, m, dt=dt, reps=reps,
                                seed=seed, hard_cap=hard_cap, threads=threads)
        estimates[(l, m)] = est
        rows.append({"l": l, "m": m, "mean": est.mean, "stderr": est.stderr,
                     "reps": est.reps})
    diag_pairs = list(zip(l_list, m_list))
    diagonal = [{"l": l, "m": m, "mean": estimates[(l, m)].mean,
                 "stderr": estimates[(l, m)].stderr,
                 "reps": estimates[(l, m)].reps} for l, m in diag_pairs]
    if len(diag_pairs) >= 2:
        stabilized = agree_within(estimates[diag_pairs[-2]],
                                  estimates[diag_pairs[-1]])
    else:
        stabilized = False
    return IndicatorTable(rows=rows, diagonal=diagonal,
                          indicator_estimate=diagonal[-1]["mean"],
                          stabilized=stabilized)
