"""Explicit solver for the Wright-Fisher stochastic heat equation.

The field lives on a uniform grid over [-X, X] with zero-flux (Neumann)
boundaries.  One step applies the discrete half-Laplacian and drift, adds
Wright-Fisher noise with per-cell variance u(1-u) * dt/dx, and clamps the
result back into [0, 1].  Clamping makes u = 1 exactly attainable, so the
indicator drift b_inf * 1{u=1} is meaningful on the grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .drift import DriftSpec, truncated_poly_coeffs
from .seeding import make_generator, replica_seed
from .stats import MonteCarloEstimate, summarize


@dataclass(frozen=True)
class InitialCondition:
    """Analytic initial profile with values in [0, 1].

    kinds: "constant" (value c), "gaussian_bump" (a + b exp(-x^2)),
    "one", "zero".
    """

    kind: str = "constant"
    c: float = 0.5
    a: float = 0.0
    b: float = 0.0

    def __post_init__(self):
        if self.kind == "constant":
            if not 0.0 <= self.c <= 1.0:
                raise ValueError("constant initial value must lie in [0, 1]")
        elif self.kind == "gaussian_bump":
            if self.a < 0 or self.b < 0 or self.a + self.b > 1.0:
                raise ValueError("need a, b >= 0 and a + b <= 1")
        elif self.kind not in ("one", "zero"):
            raise ValueError(f"unknown initial condition {self.kind!r}")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "constant":
            return np.full_like(x, self.c)
        if self.kind == "gaussian_bump":
            return self.a + self.b * np.exp(-x * x)
        if self.kind == "one":
            return np.ones_like(x)
        return np.zeros_like(x)

    def at(self, x: float) -> float:
        return float(self(np.array([x]))[0])


@dataclass
class Domain:
    X: float
    dx: float

    def grid(self) -> np.ndarray:
        n = int(round(2.0 * self.X / self.dx))
        return -self.X + self.dx * np.arange(n + 1)


@dataclass
class FieldState:
    grid: np.ndarray
    values: np.ndarray
    t: float

    def probe(self, points) -> np.ndarray:
        """Linear interpolation between adjacent cells."""
        return np.interp(np.asarray(points, dtype=float), self.grid, self.values)


def check_cfl(dx: float, dt: float):
    if dt > dx * dx / 2.0 + 1e-15:
        raise ValueError(f"explicit scheme needs dt <= dx^2/2, got dt={dt}, "
                         f"dx^2/2={dx * dx / 2.0}")


def check_probe_domain(points, X: float, T: float):
    """Generous-domain rule so boundary influence stays below MC noise."""
    if len(points) == 0:
        return
    need = 4.0 * max(abs(float(p)) for p in points) + 5.0 * math.sqrt(T)
    if X < need:
        raise ValueError(f"domain half-width {X} too small for probes; "
                         f"need X >= {need:.3f}")


class FieldSolver:
    """Stepper for one replica; owns its drift evaluation buffers."""

    def __init__(self, spec: DriftSpec, domain: Domain, dt: float,
                 truncated_m: int | None = None):
        check_cfl(domain.dx, dt)
        self.spec = spec
        self.domain = domain
        self.dt = dt
        self.dx = domain.dx
        self.noise_scale = math.sqrt(dt / domain.dx)
        self.lap_coef = dt / (2.0 * domain.dx * domain.dx)
        self.truncated_m = truncated_m
        if truncated_m is not None:
            self.poly = np.asarray(truncated_poly_coeffs(spec, truncated_m))
            self.atom = 0.0
        else:
            self.poly = np.asarray(spec.coeffs)
            self.atom = spec.b_inf

    def drift_values(self, u: np.ndarray) -> np.ndarray:
        out = np.polynomial.polynomial.polyval(u, self.poly)
        if self.atom != 0.0:
            out = out + self.atom * (u == 1.0)
        return out

    def step(self, u: np.ndarray, rng) -> np.ndarray:
        lap = np.empty_like(u)
        lap[1:-1] = u[2:] - 2.0 * u[1:-1] + u[:-2]
        # ghost-cell reflection: u[-1] := u[1], u[J+1] := u[J-1]
        lap[0] = 2.0 * (u[1] - u[0])
        lap[-1] = 2.0 * (u[-2] - u[-1])
        xi = rng.standard_normal(u.shape[0])
        u_new = (u + self.lap_coef * lap + self.dt * self.drift_values(u)
                 + np.sqrt(u * (1.0 - u)) * (self.noise_scale * xi))
        return np.clip(u_new, 0.0, 1.0)


def step_field(state: FieldState, spec: DriftSpec, dt: float, rng,
               truncated_m: int | None = None) -> FieldState:
    """Single explicit step; convenience wrapper around FieldSolver."""
    dx = float(state.grid[1] - state.grid[0])
    solver = FieldSolver(spec, Domain(X=-float(state.grid[0]), dx=dx), dt,
                         truncated_m=truncated_m)
    return FieldState(grid=state.grid, values=solver.step(state.values, rng),
                      t=state.t + dt)


def simulate_field(f: InitialCondition, spec: DriftSpec, domain: Domain,
                   T: float, dt: float, seed: int, *,
                   snapshot_times=(), truncated_m: int | None = None,
                   stream: str = "spde", replica: int = 0):
    """Run one field replica to time T; returns (FieldState, snapshots).

    Deterministic given (seed, parameters).  Snapshots are (t, values)
    pairs taken at the first step boundary at or after each requested time.
    """
    solver = FieldSolver(spec, domain, dt, truncated_m=truncated_m)
    grid = domain.grid()
    u = np.clip(f(grid), 0.0, 1.0)
    rng = make_generator(replica_seed(seed, stream, replica))
    snaps_wanted = sorted(snapshot_times)
    snapshots = []
    t = 0.0
    while snaps_wanted and snaps_wanted[0] <= t:
        snapshots.append((t, u.copy()))
        snaps_wanted.pop(0)
    n_steps = int(math.ceil(T / dt - 1e-9))
    for k in range(n_steps):
        h = min(dt, T - t)
        if h <= 0:
            break
        u = solver.step(u, rng) if h == dt else _short_step(solver, u, h, rng)
        t = min(T, (k + 1) * dt)
        while snaps_wanted and snaps_wanted[0] <= t + 1e-12:
            snapshots.append((t, u.copy()))
            snaps_wanted.pop(0)
    return FieldState(grid=grid, values=u, t=t), snapshots


def _short_step(solver: FieldSolver, u, h, rng):
    sub = FieldSolver(solver.spec, solver.domain, h,
                      truncated_m=solver.truncated_m)
    return sub.step(u, rng)


def lhs_replica(replica: int, seed: int, f: InitialCondition, spec: DriftSpec,
                points, T: float, domain: Domain, dt: float,
                truncated_m=None) -> float:
    state, _ = simulate_field(f, spec, domain, T, dt, seed, replica=replica,
                              truncated_m=truncated_m)
    return float(np.prod(state.probe(points)))


def estimate_lhs(f: InitialCondition, spec: DriftSpec, points, T: float,
                 reps: int, seed: int, *, domain: Domain, dt: float,
                 truncated_m: int | None = None,
                 threads: int = 1) -> MonteCarloEstimate:
    """Monte Carlo estimate of E[prod_i u_T(x_i)] over independent replicas."""
    if reps < 2:
        raise ValueError("need reps >= 2 for a standard error")
    check_probe_domain(points, domain.X, T)
    from .replicas import map_replicas
    vals = map_replicas(lhs_replica, reps, threads=threads,
                        args=(seed, f, spec, tuple(points), T, domain, dt,
                              truncated_m))
    return summarize(np.asarray(vals))


def heat_kernel_mean(f: InitialCondition, x: float, T: float) -> float:
    """(P_T f)(x) in closed form; the zero-drift single-point oracle."""
    if T == 0:
        return f.at(x)
    if f.kind == "constant":
        return f.c
    if f.kind == "one":
        return 1.0
    if f.kind == "zero":
        return 0.0
    # gaussian bump: convolution of exp(-x^2) with the heat kernel
    return f.a + f.b * math.exp(-x * x / (1.0 + 2.0 * T)) / math.sqrt(1.0 + 2.0 * T)
