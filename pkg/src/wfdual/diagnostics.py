"""Statistical checks of the dual system's structural properties.

Each check reuses one replica stream for both sides of an identity, so the
tested statistic is the per-replica difference.  Flags computed from fewer
than 100 effective replicas are not trusted (reported but marked so by the
callers' rep counts; the CLI enforces the minimum).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .drift import DriftSpec
from .particles import ExplosionAbort, ParticleSystem, resolve_k_coef, run_system
from .replicas import map_replicas
from .seeding import StreamDraws, replica_seed
from .stats import (MonteCarloEstimate, agree_within, paired_z,
                    summarize)

MIN_EFFECTIVE_REPS = 100


def killing_spec(mu: float) -> DriftSpec:
    """Drift b(z) = mu - mu z, whose dual is killing-coalescing at rate mu."""
    return DriftSpec(coeffs=(mu, -mu))


# -- branching identity -------------------------------------------------------

@dataclass
class BranchingIdentityReport:
    lhsE: float
    rhsE: float
    z: float
    reps: int
    aborted: int
    passed: bool

    def to_dict(self) -> dict:
        return {"lhsE": self.lhsE, "rhsE": self.rhsE, "z": self.z,
                "reps": self.reps, "aborted": self.aborted, "pass": self.passed}


def _branching_replica(replica, seed, positions, spec, T, dt, l, m, hard_cap):
    summ = run_system(positions, spec, T, dt, seed, l=l, m=m,
                      hard_cap=hard_cap, stream="diag-branching",
                      replica=replica)
    if summ.aborted:
        return (math.nan, math.nan, 1)
    return (float(summ.n_branch), summ.int_I_trap, 0)


def check_branching_identity(spec: DriftSpec, positions, T: float, *,
                             dt: float, reps: int, seed: int,
                             l: int | None = None, m: int | None = None,
                             hard_cap: int = 1_000_000, threads: int = 1,
                             z_threshold: float = 3.0) -> BranchingIdentityReport:
    """E|J_T| versus mu * E int_0^T |I_s| ds, paired over shared replicas."""
    rows = map_replicas(_branching_replica, reps, threads=threads,
                        args=(seed, tuple(positions), spec, T, dt, l, m,
                              hard_cap))
    ok = [(nb, integ) for nb, integ, a in rows if not a]
    aborted = sum(a for _, _, a in rows)
    nb = np.array([r[0] for r in ok])
    integ = np.array([r[1] for r in ok])
    mu = spec.mu
    z = paired_z(nb - mu * integ)
    return BranchingIdentityReport(lhsE=float(nb.mean()),
                                   rhsE=float(mu * integ.mean()), z=z,
                                   reps=len(ok), aborted=aborted,
                                   passed=abs(z) < z_threshold)


# -- exponential supermartingale ----------------------------------------------

@dataclass
class SupermartingaleReport:
    R: float
    n_initial: int
    times: list[float]
    estimates: list[MonteCarloEstimate]
    bound_ok: bool
    non_increasing: bool
    passed: bool

    def to_dict(self) -> dict:
        return {"R": self.R, "n_initial": self.n_initial,
                "times": self.times,
                "estimates": [e.to_dict() for e in self.estimates],
                "bound_ok": self.bound_ok,
                "non_increasing": self.non_increasing, "pass": self.passed}


def _superm_replica(replica, seed, positions, spec, times, dt, hard_cap, R):
    summ = run_system(positions, spec, max(times), dt, seed,
                      sample_times=times, hard_cap=hard_cap,
                      stream="diag-superm", replica=replica, k_mode="plain")
    if summ.aborted:
        return None
    out = []
    for sp in summ.samples:
        out.append(math.exp(sp.K) * R ** sp.n_alive)
    return out


def check_supermartingale(spec: DriftSpec, R: float, positions, times, *,
                          dt: float, reps: int, seed: int,
                          hard_cap: int = 1_000_000,
                          threads: int = 1) -> SupermartingaleReport:
    """E[e^{K_t} R^{|I_t|}] <= R^n and non-increasing in t, within 3 sigma."""
    from .drift import check_condition
    if not check_condition(spec, R):
        raise ValueError(f"drift condition fails at R={R}")
    times = sorted(times)
    rows = map_replicas(_superm_replica, reps, threads=threads,
                        args=(seed, tuple(positions), spec, tuple(times), dt,
                              hard_cap, R))
    mat = np.array([r for r in rows if r is not None])
    n0 = len(positions)
    bound = float(R) ** n0
    ests = [summarize(mat[:, j]) for j in range(mat.shape[1])]
    bound_ok = all(e.mean - 3.0 * e.stderr <= bound for e in ests)
    non_inc = True
    for j in range(mat.shape[1] - 1):
        d = mat[:, j + 1] - mat[:, j]
        if paired_z(d) > 3.0:
            non_inc = False
    return SupermartingaleReport(R=R, n_initial=n0, times=list(times),
                                 estimates=ests, bound_ok=bound_ok,
                                 non_increasing=non_inc,
                                 passed=bound_ok and non_inc)


# -- coming down from infinity --------------------------------------------------

@dataclass
class ComingDownReport:
    mu: float
    site: float
    l_list: list[int]
    t_list: list[float]
    table: dict  # (l, t) -> MonteCarloEstimate
    stabilized_in_l: bool
    sqrt_t_shape_ok: bool
    passed: bool

    def rows(self):
        for l in self.l_list:
            for t in self.t_list:
                e = self.table[(l, t)]
                yield {"l": l, "t": t, "mean": e.mean, "stderr": e.stderr,
                       "reps": e.reps}

    def to_dict(self) -> dict:
        return {"mu": self.mu, "site": self.site, "l_list": self.l_list,
                "t_list": self.t_list, "rows": list(self.rows()),
                "stabilized_in_l": self.stabilized_in_l,
                "sqrt_t_shape_ok": self.sqrt_t_shape_ok, "pass": self.passed}


def _comingdown_replica(replica, seed, l, mu, x, times, dt, hard_cap):
    spec = killing_spec(mu)
    summ = run_system([x] * l, spec, max(times), dt, seed,
                      sample_times=times, hard_cap=hard_cap,
                      stream=f"diag-cdi-l{l}", replica=replica)
    if summ.aborted:
        return None
    return [sp.n_alive for sp in summ.samples]


def check_coming_down(mu: float, l_list, x: float, t_list, *, dt: float,
                      reps: int, seed: int, hard_cap: int = 1_000_000,
                      threads: int = 1) -> ComingDownReport:
    """Killing-coalescing population from l coincident starters.

    Stabilization: the two largest l agree at every t within 3 combined
    standard errors.  Shape: for the largest l, E|I_t| sqrt(t) varies by
    less than a factor of 4 across the t grid.
    """
    l_list = sorted(l_list)
    t_list = sorted(t_list)
    table = {}
    for l in l_list:
        rows = map_replicas(_comingdown_replica, reps, threads=threads,
                            args=(seed, l, mu, x, tuple(t_list), dt, hard_cap))
        mat = np.array([r for r in rows if r is not None], dtype=float)
        for j, t in enumerate(t_list):
            table[(l, t)] = summarize(mat[:, j])
    stab = True
    if len(l_list) >= 2:
        la, lb = l_list[-2], l_list[-1]
        for t in t_list:
            if not agree_within(table[(la, t)], table[(lb, t)]):
                stab = False
    shaped = [table[(l_list[-1], t)].mean * math.sqrt(t) for t in t_list]
    lo, hi = min(shaped), max(shaped)
    shape_ok = hi < 4.0 * lo if lo > 0 else False
    return ComingDownReport(mu=mu, site=x, l_list=l_list, t_list=t_list,
                            table=table, stabilized_in_l=stab,
                            sqrt_t_shape_ok=shape_ok,
                            passed=stab and shape_ok)


# -- reflection from infinity ----------------------------------------------------

@dataclass
class ReflectionReport:
    delta: float
    m_list: list[int]
    estimates: dict  # m -> MonteCarloEstimate
    excluded: dict  # m -> replicas with no branching before the horizon
    stabilized: bool

    def rows(self):
        for m in self.m_list:
            e = self.estimates.get(m)
            if e is None:
                yield {"m": m, "mean": math.nan, "stderr": math.nan,
                       "reps": 0, "excluded": self.excluded.get(m, 0)}
            else:
                yield {"m": m, "mean": e.mean, "stderr": e.stderr,
                       "reps": e.reps, "excluded": self.excluded.get(m, 0)}

    def to_dict(self) -> dict:
        return {"delta": self.delta, "m_list": self.m_list,
                "rows": list(self.rows()), "stabilized": self.stabilized}


def _reflection_replica(replica, seed, positions, spec, m, delta, horizon,
                        dt, hard_cap):
    draws = StreamDraws(replica_seed(seed, f"diag-refl-m{m}", replica))
    k_coef = resolve_k_coef(spec, m, "auto")
    system = ParticleSystem(spec, positions, dt, draws, m=m, k_coef=k_coef,
                            hard_cap=hard_cap)
    try:
        system.run(horizon, stop_on_branch=True)
        if system.n_branch == 0:
            return None
        tau1 = system.first_branch_time
        system.run(tau1 + delta)
        return system.n_alive
    except ExplosionAbort:
        return None


def check_reflection(spec: DriftSpec, m_list, delta: float, *, reps: int,
                     seed: int, dt: float, positions=(0.0,),
                     horizon: float = 4.0, hard_cap: int = 1_000_000,
                     threads: int = 1) -> ReflectionReport:
    """Population shortly after the first branching, per offspring cap m.

    With p_inf mass the first branch jumps the population to about m; the
    flag is true when the two largest m agree at tau_1 + delta within 3
    combined standard errors (the reflection phenomenon: the population
    comes down immediately, insensitively to the cap).
    """
    if spec.mu == 0.0:
        return ReflectionReport(delta=delta, m_list=sorted(m_list),
                                estimates={}, excluded={m: reps for m in m_list},
                                stabilized=False)
    m_list = sorted(m_list)
    estimates = {}
    excluded = {}
    for m in m_list:
        rows = map_replicas(_reflection_replica, reps, threads=threads,
                            args=(seed, tuple(positions), spec, m, delta,
                                  horizon, dt, hard_cap))
        vals = np.array([r for r in rows if r is not None], dtype=float)
        excluded[m] = sum(1 for r in rows if r is None)
        if vals.shape[0] >= 2:
            estimates[m] = summarize(vals)
    stab = False
    if len(m_list) >= 2 and all(m in estimates for m in m_list[-2:]):
        stab = agree_within(estimates[m_list[-2]], estimates[m_list[-1]])
    return ReflectionReport(delta=delta, m_list=m_list, estimates=estimates,
                            excluded=excluded, stabilized=stab)
