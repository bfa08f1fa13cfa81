"""Drift class b(z) = sum_k b_k z^k + b_inf 1{z=1} and the dual branching law.

A drift spec holds a finite coefficient list (b_0..b_K) plus the weight
b_inf of the atom at z=1.  From it we derive the branching rate

    mu = |b_0| + sum_{k>=2} |b_k| + |b_inf|

and the offspring distribution p_k = |b_k|/mu for k != 1 (p_inf = |b_inf|/mu).
Infinite coefficient series (the binomial drift) enter only through an
explicit truncation with reported tail mass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

INF = math.inf

_WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class DriftSpec:
    """Immutable drift coefficients; derived branching quantities are cached."""

    coeffs: tuple[float, ...] = (0.0,)
    b_inf: float = 0.0
    tail_mass: float = 0.0  # reported truncation remainder, see binomial_coeffs

    def __post_init__(self):
        if len(self.coeffs) == 0:
            object.__setattr__(self, "coeffs", (0.0,))
        else:
            object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        object.__setattr__(self, "b_inf", float(self.b_inf))
        for c in self.coeffs:
            if not math.isfinite(c):
                raise ValueError("drift coefficients must be finite")
        if not math.isfinite(self.b_inf):
            raise ValueError("b_inf must be finite")

    @property
    def b0(self) -> float:
        return self.coeffs[0]

    @property
    def b1(self) -> float:
        return self.coeffs[1] if len(self.coeffs) > 1 else 0.0

    def coefficient(self, k) -> float:
        """b_k for finite k, b_inf for k = inf; zero beyond the stored list."""
        if k is INF or k == INF:
            return self.b_inf
        k = int(k)
        return self.coeffs[k] if 0 <= k < len(self.coeffs) else 0.0

    @cached_property
    def nondegenerate_mass(self) -> float:
        return sum(abs(c) for c in self.coeffs[2:]) + abs(self.b_inf)

    @cached_property
    def linear_only(self) -> bool:
        """True when the drift is affine (no k>=2 or atom part)."""
        return self.nondegenerate_mass == 0.0

    @cached_property
    def mu(self) -> float:
        return abs(self.b0) + self.nondegenerate_mass

    @cached_property
    def offspring(self) -> tuple[tuple[float, ...], tuple[float, ...]]:
        """(counts, probabilities); counts are ints as floats, inf allowed."""
        if self.mu == 0.0:
            return ((), ())
        ks: list[float] = []
        ps: list[float] = []
        if self.b0 != 0.0:
            ks.append(0.0)
            ps.append(abs(self.b0) / self.mu)
        for k in range(2, len(self.coeffs)):
            if self.coeffs[k] != 0.0:
                ks.append(float(k))
                ps.append(abs(self.coeffs[k]) / self.mu)
        if self.b_inf != 0.0:
            ks.append(INF)
            ps.append(abs(self.b_inf) / self.mu)
        return (tuple(ks), tuple(ps))

    @cached_property
    def offspring_cdf(self) -> tuple[float, ...]:
        cdf = []
        acc = 0.0
        for p in self.offspring[1]:
            acc += p
            cdf.append(acc)
        return tuple(cdf)

    def sample_offspring(self, u: float) -> float:
        """Raw offspring count from a uniform in (0, 1]; inf is possible."""
        ks, _ = self.offspring
        cdf = self.offspring_cdf
        for k, c in zip(ks, cdf):
            if u <= c:
                return k
        return ks[-1]

    def has_infinite_offspring(self) -> bool:
        return self.b_inf != 0.0


@dataclass
class ValidationReport:
    ok_at_zero: bool
    ok_at_one: bool
    offspring_ok: bool
    linear_only: bool
    mu: float
    passed: bool
    messages: list[str] = field(default_factory=list)


def validate(spec: DriftSpec) -> ValidationReport:
    """Check the standing assumptions b(0) >= 0 >= b(1) and the offspring law."""
    msgs: list[str] = []
    ok0 = spec.b0 >= 0.0
    if not ok0:
        msgs.append(f"b(0) = {spec.b0} < 0 violates b(0) >= 0")
    b_at_one = sum(spec.coeffs) + spec.b_inf
    ok1 = b_at_one <= 0.0
    if not ok1:
        msgs.append(f"b(1) = {b_at_one} > 0 violates b(1) <= 0")
    linear = spec.linear_only
    if linear:
        msgs.append("degenerate drift (no k>=2 or atom mass): dual has no "
                    "sign-flipping branching" + ("" if spec.mu > 0 else "; mu = 0"))
    ks, ps = spec.offspring
    if spec.mu > 0.0:
        total = sum(ps)
        offspring_ok = (abs(total - 1.0) < _WEIGHT_TOL
                        and all(0.0 <= p <= 1.0 for p in ps))
        if not offspring_ok:
            msgs.append(f"offspring weights sum to {total}, expected 1")
    else:
        offspring_ok = ks == ()
    passed = ok0 and ok1 and offspring_ok
    return ValidationReport(ok_at_zero=ok0, ok_at_one=ok1, offspring_ok=offspring_ok,
                            linear_only=linear, mu=spec.mu, passed=passed,
                            messages=msgs)


def check_condition(spec: DriftSpec, R: float) -> bool:
    """b_1 <= -(|b_0| R^{-1} + sum_{k>=2} |b_k| R^{k-1} + |b_inf| R^{inf-1}).

    The infinite-index term uses R^{inf-1} := 1 at R = 1 and +inf for R > 1,
    so any atom mass forces failure for every R > 1.
    """
    if R < 1.0:
        raise ValueError("R must be >= 1")
    if spec.b_inf != 0.0 and R > 1.0:
        return False
    rhs = abs(spec.b0) / R + abs(spec.b_inf)
    for k in range(2, len(spec.coeffs)):
        rhs += abs(spec.coeffs[k]) * R ** (k - 1)
    return spec.b1 <= -rhs


def _binom(q: float, n: int) -> float:
    """Generalized binomial coefficient C(q, n)."""
    out = 1.0
    for i in range(n):
        out *= (q - i) / (i + 1)
    return out


def binomial_coeffs(q: float, K: int) -> DriftSpec:
    """Truncation of b(z) = -(1-z)^q z, the Hölder(q) drift example.

    b_1 = -1 and b_k = (-1)^k C(q, k-1) >= 0 for 2 <= k <= K.  The dropped
    coefficients are nonnegative and sum to 1 - sum_{2<=k<=K} b_k, which is
    stored as ``tail_mass``.
    """
    if not (0.0 < q < 1.0):
        raise ValueError("q must lie in (0, 1)")
    if K < 2:
        raise ValueError("K must be >= 2")
    coeffs = [0.0, -1.0]
    for k in range(2, K + 1):
        coeffs.append((-1.0) ** k * _binom(q, k - 1))
    tail = 1.0 - sum(coeffs[2:])
    return DriftSpec(coeffs=tuple(coeffs), b_inf=0.0, tail_mass=max(tail, 0.0))


def eval_drift(spec: DriftSpec, z: float) -> float:
    """b(z) with the atom contributing only at exact z = 1."""
    if not 0.0 <= z <= 1.0:
        raise ValueError("z must lie in [0, 1]")
    out = 0.0
    for k in range(len(spec.coeffs) - 1, -1, -1):
        out = out * z + spec.coeffs[k]
    if z == 1.0:
        out += spec.b_inf
    return out


def eval_truncated_drift(spec: DriftSpec, m: int, z: float) -> float:
    """b^(m)(z) = sum_k b_k z^(k ∧ m) - z/m; the atom contributes b_inf z^m."""
    if m < 2:
        raise ValueError("m must be >= 2")
    if not 0.0 <= z <= 1.0:
        raise ValueError("z must lie in [0, 1]")
    out = 0.0
    for k, c in enumerate(spec.coeffs):
        if c != 0.0:
            out += c * z ** min(k, m)
    out += spec.b_inf * z ** m
    out -= z / m
    return out


def truncated_poly_coeffs(spec: DriftSpec, m: int) -> tuple[float, ...]:
    """Coefficients (low to high) of the polynomial b^(m); used by the solver."""
    if m < 2:
        raise ValueError("m must be >= 2")
    out = [0.0] * (m + 1)
    for k, c in enumerate(spec.coeffs):
        out[min(k, m)] += c
    out[m] += spec.b_inf
    out[1] -= 1.0 / m
    return tuple(out)
