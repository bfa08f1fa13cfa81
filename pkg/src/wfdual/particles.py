"""Branching-coalescing Brownian particle system.

Particles carry Ulam-Harris labels and evolve by a time-discretized hybrid
scheme: spatial motion is exact Brownian stepping, branching times are exact
exponentials (processed inside the step in firing order, cascades included),
and pairwise coalescence uses the exact conditional law of the level-0
local time of the pair difference over each step, with threshold crossings
resolved at step boundaries in pair order.

Each unordered pair (a, b) with a ≺ b carries an accumulated local time L
and a threshold drawn once at pair creation; the pair coalesces (killing
the ≺-larger member) when L/2 crosses an Exp(1) threshold, i.e. when L
crosses 2*Exp(1).
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass, field

import numpy as np

from .drift import INF, DriftSpec
from .seeding import KeyedDraws, StreamDraws, replica_seed

Label = tuple[int, ...]

# quadratic-variation rate of the difference of two independent unit BMs
PAIR_VARIANCE_RATE = 2.0

_VEC_THRESHOLD = 9  # population at which the pair stage switches to matrices
_TIME_EPS = 1e-12


def label_key(a: Label):
    """Sort key realizing the total order ≺: max entry, then length, then lex."""
    return (max(a), len(a), a)


def label_less(a: Label, b: Label) -> bool:
    return label_key(a) < label_key(b)


def label_norm(a: Label) -> int:
    return max(a)


def format_label(a: Label) -> str:
    return ".".join(str(x) for x in a)


def sample_pair_local_time(a: float, b: float, dt: float, rng) -> float:
    """Local time at 0 over a step, given difference endpoints a and b.

    Exact conditional draw for a Brownian bridge with variance rate 2 (two
    independent unit Brownian motions): with U uniform on (0,1],

        L = max(0, sqrt((a-b)^2 - 2*v*dt*ln U) - |a| - |b|).
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    u = 1.0 - rng.random()
    return bridge_local_time(a, b, dt, u)


def bridge_local_time(d0: float, d1: float, h: float, u: float) -> float:
    s = (d0 - d1) ** 2 - 2.0 * PAIR_VARIANCE_RATE * h * math.log(u)
    val = math.sqrt(s) - abs(d0) - abs(d1)
    return val if val > 0.0 else 0.0


class ExplosionAbort(Exception):
    """Population exceeded the configured hard cap."""


@dataclass
class SamplePoint:
    t: float
    n_alive: int
    n_branch: int
    n_branch_neg: int
    K: float
    labels: frozenset | None = None


@dataclass
class RunSummary:
    labels: list[Label]
    positions: list[float]
    n_alive: int
    n_branch: int
    n_branch_neg: int
    K: float
    int_I_rect: float
    int_I_trap: float
    first_branch_time: float | None
    samples: list[SamplePoint]
    events: list[tuple]
    aborted: bool
    T: float

    def replay_population(self, n_initial: int) -> int:
        """Reconstruct |I_T| from the event log."""
        n = n_initial
        for ev in self.events:
            if ev[0] == "branch":
                n += ev[4] - 1  # capped offspring count minus the parent
            elif ev[0] == "coal":
                n -= 1
        return n


class ParticleSystem:
    """State and stepping logic for one replica."""

    def __init__(self, spec: DriftSpec, positions, dt: float, draws, *,
                 m: int | None = None, k_coef: float = 0.0,
                 hard_cap: int = 1_000_000, coupled: bool = False,
                 record_labels: bool = False, record_events: bool = False):
        if dt <= 0:
            raise ValueError("dt must be positive")
        if spec.has_infinite_offspring() and m is None and spec.mu > 0:
            raise ValueError("p_inf > 0 requires a finite offspring truncation m")
        self.spec = spec
        self.dt = dt
        self.draws = draws
        self.m = m
        self.k_coef = k_coef
        self.hard_cap = hard_cap
        self.coupled = coupled
        self.record_labels = record_labels
        self.record_events = record_events

        # initial labels (1), (2), ... are already in ≺ order
        self.labels: list[Label] = [(i + 1,) for i in range(len(positions))]
        self.pos: list[float] = [float(x) for x in positions]
        self.birth: list[float] = [0.0] * len(positions)
        self.mu = spec.mu
        self.next_branch: list[float] = [
            draws.branch_wait(lab, 1.0 / self.mu) if self.mu > 0 else INF
            for lab in self.labels
        ]
        n = len(self.labels)
        self.pairL = np.zeros((n, n))
        self.pairThr = np.full((n, n), INF)
        for i in range(n):
            for j in range(i + 1, n):
                self.pairThr[i, j] = draws.pair_threshold(self.labels[i],
                                                          self.labels[j])
        self.t = 0.0
        self.K = 0.0
        self.int_rect = 0.0
        self.int_trap = 0.0
        self.n_branch = 0
        self.n_branch_neg = 0
        self.first_branch_time: float | None = None
        self.events: list[tuple] = []
        self.samples: list[SamplePoint] = []

    # -- bookkeeping -----------------------------------------------------------

    @property
    def n_alive(self) -> int:
        return len(self.labels)

    def _record_sample(self):
        labs = frozenset(self.labels) if self.record_labels else None
        self.samples.append(SamplePoint(self.t, self.n_alive, self.n_branch,
                                        self.n_branch_neg, self.K, labs))

    def _accrue(self, n_start: int, h: float):
        self.int_rect += n_start * h
        self.K += self.k_coef * n_start * h

    def _insert_particle(self, label: Label, pos: float, birth: float,
                         nb: float) -> int:
        keys = [label_key(lab) for lab in self.labels]
        idx = bisect_left(keys, label_key(label))
        self.labels.insert(idx, label)
        self.pos.insert(idx, pos)
        self.birth.insert(idx, birth)
        self.next_branch.insert(idx, nb)
        self.pairL = np.insert(self.pairL, idx, 0.0, axis=0)
        self.pairL = np.insert(self.pairL, idx, 0.0, axis=1)
        self.pairThr = np.insert(self.pairThr, idx, INF, axis=0)
        self.pairThr = np.insert(self.pairThr, idx, INF, axis=1)
        for j in range(len(self.labels)):
            if j < idx:
                self.pairThr[j, idx] = self.draws.pair_threshold(self.labels[j],
                                                                 label)
            elif j > idx:
                self.pairThr[idx, j] = self.draws.pair_threshold(label,
                                                                 self.labels[j])
        return idx

    def _remove_particles(self, idxs):
        for idx in sorted(idxs, reverse=True):
            del self.labels[idx]
            del self.pos[idx]
            del self.birth[idx]
            del self.next_branch[idx]
        self.pairL = np.delete(np.delete(self.pairL, idxs, axis=0), idxs, axis=1)
        self.pairThr = np.delete(np.delete(self.pairThr, idxs, axis=0), idxs,
                                 axis=1)

    # -- branching -------------------------------------------------------------

    def _process_branch(self, idx: int, tau: float, parent_pos: float):
        label = self.labels[idx]
        raw = self.spec.sample_offspring(self.draws.offspring_uniform(label))
        capped = int(min(raw, self.m)) if self.m is not None else int(raw)
        self.n_branch += 1
        if self.spec.coefficient(raw) < 0.0:
            self.n_branch_neg += 1
        if self.first_branch_time is None:
            self.first_branch_time = tau
        if self.record_events:
            self.events.append(("branch", tau, label, raw, capped))
        self._remove_particles([idx])
        children = []
        for i in range(1, capped + 1):
            child = label + (i,)
            nb = tau + self.draws.branch_wait(child, 1.0 / self.mu)
            cidx = self._insert_particle(child, parent_pos, tau, nb)
            children.append(cidx)
        if self.n_alive > self.hard_cap:
            raise ExplosionAbort
        return capped

    # -- stepping --------------------------------------------------------------

    def _step_small(self, t_next: float):
        """Tight scalar step: small population, no branch firing, stream draws."""
        t0 = self.t
        h = t_next - t0
        n = len(self.labels)
        self.int_rect += n * h
        self.K += self.k_coef * n * h
        draws = self.draws
        normal = draws.normal
        uni = draws.uniform_pos
        sqrt = math.sqrt
        log = math.log
        pos = self.pos
        sqrt_h = sqrt(h)
        new = [p + sqrt_h * normal() for p in pos]
        pairL = self.pairL
        pairThr = self.pairThr
        vh = 2.0 * PAIR_VARIANCE_RATE * h
        fired = None
        for i in range(n):
            a0 = pos[i]
            a1 = new[i]
            for j in range(i + 1, n):
                a = a0 - pos[j]
                b = a1 - new[j]
                d = a - b
                dl = (sqrt(d * d - vh * log(uni()))
                      - (a if a >= 0.0 else -a) - (b if b >= 0.0 else -b))
                if dl > 0.0:
                    lij = pairL[i, j] + dl
                    pairL[i, j] = lij
                    if lij >= pairThr[i, j]:
                        if fired is None:
                            fired = []
                        fired.append((i, j))
        self.pos = new
        self.t = t_next
        n_end = n
        if fired is not None:
            dead: set[int] = set()
            for i, j in fired:
                if i not in dead and j not in dead:
                    dead.add(j)
                    if self.record_events:
                        self.events.append(("coal", t_next, self.labels[j],
                                            self.labels[i]))
            self._remove_particles(sorted(dead))
            n_end = len(self.labels)
        self.int_trap += 0.5 * (n + n_end) * h

    def _step(self, t_next: float, include_boundary_branch: bool = False):
        """Advance all particles from self.t to t_next."""
        t0 = self.t
        h = t_next - t0
        n0 = self.n_alive
        if (n0 < _VEC_THRESHOLD and not self.coupled
                and not include_boundary_branch
                and min(self.next_branch, default=INF) >= t_next):
            return self._step_small(t_next)
        self._accrue(n0, h)
        draws = self.draws

        seg_start = [t0] * n0
        pos_start = list(self.pos)
        # end-of-step positions for everyone alive at the step start
        sqrt_h = math.sqrt(h)
        if n0 >= _VEC_THRESHOLD and not self.coupled:
            xi = draws.seg_normals(self.labels, t0, n0)
            pos_end = (np.fromiter(self.pos, float, n0) + sqrt_h * xi).tolist()
        else:
            pos_end = [self.pos[i] + sqrt_h * draws.seg_normal(self.labels[i], t0)
                       for i in range(n0)]

        mid_memo: dict[tuple, float] = {}

        def position_at(i: int, tau: float) -> float:
            s = seg_start[i]
            if tau <= s + _TIME_EPS:
                return pos_start[i]
            if tau >= t_next - _TIME_EPS:
                return pos_end[i]
            key = (self.labels[i], tau)
            if key in mid_memo:
                return mid_memo[key]
            frac = (tau - s) / (t_next - s)
            mean = pos_start[i] + frac * (pos_end[i] - pos_start[i])
            sd = math.sqrt((tau - s) * (t_next - tau) / (t_next - s))
            val = mean + sd * draws.mid_normal(self.labels[i], tau)
            mid_memo[key] = val
            return val

        # branch phase: firings inside the step, in time order, cascades too
        fire_cut = t_next + _TIME_EPS if include_boundary_branch else t_next
        had_births = False
        while True:
            tau = INF
            idx = -1
            for i, nb in enumerate(self.next_branch):
                if nb < tau:
                    tau = nb
                    idx = i
            if tau >= fire_cut:
                break
            had_births = True
            parent_pos = position_at(idx, tau)
            parent_label = self.labels[idx]
            # drop transient state of the parent, keep survivors aligned
            del seg_start[idx], pos_start[idx], pos_end[idx]
            capped = self._process_branch(idx, tau, parent_pos)
            # children diffuse over the remainder [tau, t_next]
            keys = [label_key(lab) for lab in self.labels]
            hc = t_next - tau
            for i in range(1, capped + 1):
                child = parent_label + (i,)
                cidx = bisect_left(keys, label_key(child))
                cpos = parent_pos
                if hc > _TIME_EPS:
                    cpos = parent_pos + math.sqrt(hc) * draws.seg_normal(child, tau)
                seg_start.insert(cidx, tau)
                pos_start.insert(cidx, parent_pos)
                pos_end.insert(cidx, cpos)

        # pair phase
        n = self.n_alive
        if n >= 2:
            if not had_births and n >= _VEC_THRESHOLD and not self.coupled:
                p0 = np.fromiter(pos_start, float, n)
                p1 = np.fromiter(pos_end, float, n)
                d0 = p0[:, None] - p0[None, :]
                d1 = p1[:, None] - p1[None, :]
                u = draws.pair_uniform_matrix(n)
                s = (d0 - d1) ** 2 - (2.0 * PAIR_VARIANCE_RATE * h) * np.log(u)
                dl = np.sqrt(s) - np.abs(d0) - np.abs(d1)
                np.maximum(dl, 0.0, out=dl)
                self.pairL += dl
            else:
                labels = self.labels
                pairL = self.pairL
                for i in range(n):
                    si = seg_start[i]
                    for j in range(i + 1, n):
                        w = si if si >= seg_start[j] else seg_start[j]
                        hw = t_next - w
                        if hw <= _TIME_EPS:
                            continue
                        a = position_at(i, w) - position_at(j, w)
                        b = pos_end[i] - pos_end[j]
                        u = draws.pair_uniform(labels[i], labels[j], w)
                        dl = bridge_local_time(a, b, hw, u)
                        if dl > 0.0:
                            pairL[i, j] += dl

        self.pos = pos_end
        self.t = t_next

        # coalescence resolution at the boundary, in ≺ order of pairs
        if n >= 2:
            fired = np.argwhere(self.pairL >= self.pairThr)
            if fired.size:
                dead: set[int] = set()
                for i, j in fired:
                    if i not in dead and j not in dead:
                        dead.add(int(j))
                        if self.record_events:
                            self.events.append(("coal", t_next, self.labels[j],
                                                self.labels[i]))
                if dead:
                    self._remove_particles(sorted(dead))

        self.int_trap += 0.5 * (n0 + self.n_alive) * h

    def _jump(self, t_next: float):
        """Fast path for populations of 0 or 1 (no pairs): exact advance."""
        h = t_next - self.t
        n = self.n_alive
        self._accrue(n, h)
        self.int_trap += n * h
        if n == 1 and h > _TIME_EPS:
            self.pos[0] += math.sqrt(h) * self.draws.seg_normal(self.labels[0],
                                                                self.t)
        self.t = t_next

    def _next_grid(self) -> float:
        """Smallest grid boundary strictly above the current time."""
        k = math.floor(self.t / self.dt + 1e-9) + 1
        t_next = k * self.dt
        if t_next <= self.t:
            t_next = (k + 1) * self.dt
        return t_next

    def run(self, T: float, sample_times=(), stop_on_branch: bool = False):
        """Advance the system to time T (or to the first branching event)."""
        samples = sorted(s for s in sample_times if self.t - _TIME_EPS <= s <= T)
        si = 0
        while si < len(samples) and samples[si] <= self.t + _TIME_EPS:
            self._record_sample()
            si += 1
        while self.t < T - _TIME_EPS:
            next_sample = samples[si] if si < len(samples) else INF
            target = min(next_sample, T)
            if self.n_alive <= 1 and not self.coupled:
                nb = self.next_branch[0] if self.n_alive == 1 else INF
                t_next = min(nb, target)
                self._jump(t_next)
                if t_next == nb:
                    # branch lands exactly at the jump target
                    self._process_branch(0, t_next, self.pos[0])
                    if stop_on_branch:
                        break
            elif (not self.coupled and not stop_on_branch
                  and len(self.labels) < _VEC_THRESHOLD
                  and min(self.next_branch) >= target):
                # no branch can fire before the target: tight grid loop
                dt = self.dt
                k = math.floor(self.t / dt + 1e-9) + 1
                if k * dt <= self.t:
                    k += 1
                t_next = k * dt
                while t_next < target - _TIME_EPS and len(self.labels) >= 2:
                    self._step_small(t_next)
                    k += 1
                    t_next = k * dt
                if len(self.labels) >= 2 and self.t < target - _TIME_EPS:
                    self._step_small(target)
            else:
                t_next = min(self._next_grid(), target)
                at_branch = False
                if stop_on_branch:
                    nb = min(self.next_branch, default=INF)
                    if nb <= t_next:
                        t_next = nb
                        at_branch = True
                self._step(t_next, include_boundary_branch=at_branch)
                if at_branch:
                    break
            if si < len(samples) and self.t >= samples[si] - _TIME_EPS:
                self._record_sample()
                si += 1
        return self

    def summary(self, T: float, aborted: bool = False) -> RunSummary:
        return RunSummary(labels=list(self.labels), positions=list(self.pos),
                          n_alive=self.n_alive, n_branch=self.n_branch,
                          n_branch_neg=self.n_branch_neg, K=self.K,
                          int_I_rect=self.int_rect, int_I_trap=self.int_trap,
                          first_branch_time=self.first_branch_time,
                          samples=self.samples, events=self.events,
                          aborted=aborted, T=T)


def resolve_k_coef(spec: DriftSpec, m: int | None, k_mode: str) -> float:
    """Exponential-weight coefficient: (mu + b1), minus 1/m in truncated mode."""
    if k_mode == "auto":
        k_mode = "truncated" if m is not None else "plain"
    if k_mode == "plain":
        return spec.mu + spec.b1
    if k_mode == "truncated":
        if m is None:
            raise ValueError("truncated K mode requires a finite m")
        return spec.mu + spec.b1 - 1.0 / m
    raise ValueError(f"unknown k_mode {k_mode!r}")


def run_system(positions, spec: DriftSpec, T: float, dt: float, seed: int, *,
               l: int | None = None, m: int | None = None,
               k_mode: str = "auto", sample_times=(),
               hard_cap: int = 1_000_000, record_labels: bool = False,
               record_events: bool = False, stream: str = "dual",
               replica: int = 0, draws=None) -> RunSummary:
    """One replica of the (l, m)-truncated system; deterministic given seed."""
    if l is not None:
        positions = list(positions)[:l]
    if draws is None:
        draws = StreamDraws(replica_seed(seed, stream, replica))
    k_coef = resolve_k_coef(spec, m, k_mode)
    system = ParticleSystem(spec, positions, dt, draws, m=m, k_coef=k_coef,
                            hard_cap=hard_cap, record_labels=record_labels,
                            record_events=record_events)
    try:
        system.run(T, sample_times=sample_times)
        return system.summary(T)
    except ExplosionAbort:
        return system.summary(T, aborted=True)


def run_coupled_truncations(positions, spec: DriftSpec, T: float, dt: float,
                            seed: int, m_list, *, l: int | None = None,
                            k_mode: str = "auto", sample_times=(),
                            hard_cap: int = 1_000_000) -> list[RunSummary]:
    """Run every m in m_list off one shared, label-keyed randomness.

    Brownian increments are keyed by (label, segment start), branching marks
    by label, pair clocks by the unordered label pair, so each truncated
    system is a deterministic function of the same master draw.  Per system
    the initial cap is min(l, m), matching the (m, m)-truncation for which
    the norm-filter identity holds.
    """
    m_sorted = sorted(m_list)
    if m_sorted != list(m_list):
        raise ValueError("m_list must be ascending")
    out = []
    for m in m_sorted:
        l_eff = m if l is None else min(l, m)
        draws = KeyedDraws(replica_seed(seed, "coupled", 0))
        init = list(positions)[:l_eff]
        k_coef = resolve_k_coef(spec, m, k_mode)
        system = ParticleSystem(spec, init, dt, draws, m=m, k_coef=k_coef,
                                hard_cap=hard_cap, coupled=True,
                                record_labels=True, record_events=True)
        try:
            system.run(T, sample_times=sample_times)
            out.append(system.summary(T))
        except ExplosionAbort:
            out.append(system.summary(T, aborted=True))
    return out


def coupled_filter_identity(summaries: list[RunSummary], m_list) -> bool:
    """Check label sets of smaller systems equal norm-filtered master sets."""
    master = summaries[-1]
    for summ, m in zip(summaries[:-1], m_list[:-1]):
        for sp, mp in zip(summ.samples, master.samples):
            expect = frozenset(a for a in mp.labels if label_norm(a) <= m)
            if sp.labels != expect:
                return False
    return True
