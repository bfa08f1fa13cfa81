import math

import numpy as np
import pytest

from wfdual.drift import DriftSpec
from wfdual.duality import (estimate_indicator, estimate_moment_l,
                            estimate_rhs, make_report, verify_duality)
from wfdual.spde import Domain, InitialCondition
from wfdual.stats import MonteCarloEstimate

ZERO = DriftSpec(coeffs=(0.0,))
DOM = Domain(X=8.0, dx=1.0 / 32.0)
DT_FIELD = DOM.dx ** 2 / 4.0
BUMP = InitialCondition(kind="gaussian_bump", a=0.3, b=0.4)
ONE = InitialCondition(kind="one")


def test_no_points_both_sides_one():
    rep = verify_duality(ONE, ZERO, [], 0.25, domain=DOM, dt_field=DT_FIELD,
                         field_reps=10, dt_particles=1e-3, dual_reps=10,
                         seed=1)
    assert rep.lhs.mean == 1.0 and rep.rhs.mean == 1.0
    assert rep.z == 0.0
    assert rep.passed


def test_rhs_constant_one_when_invariant():
    # u = 1 invariant (b(1) = 0): the dual-side estimator targets exactly 1
    spec = DriftSpec(coeffs=(10.0, -9.0, -1.0))
    est = estimate_rhs(ONE, spec, [0.0, 0.5], 0.25, dt=1e-3, reps=3000,
                       seed=3)
    assert abs(est.mean - 1.0) < 3 * est.stderr


def test_rhs_shiga_case_reduces_to_coalescing_product():
    # mu = 0, b identically zero: no branching, K = 0, plain product of f
    est = estimate_rhs(BUMP, ZERO, [0.0, 0.5], 0.05, dt=1e-3, reps=200,
                       seed=4)
    assert 0.0 < est.mean < 1.0
    assert est.aborted == 0


def test_rhs_integrand_in_unit_interval_for_killing_drift():
    # f = 1, all b_k >= 0 for k != 1, mu + b1 <= 0: weights live in (0, 1]
    spec = DriftSpec(coeffs=(0.5, -1.0))
    est = estimate_rhs(ONE, spec, [0.0, 0.5], 0.25, dt=1e-3, reps=500, seed=5)
    assert 0.0 < est.mean <= 1.0


def test_stderr_scales_like_inverse_sqrt_reps():
    a = estimate_rhs(BUMP, ZERO, [0.0], 0.05, dt=1e-3, reps=400, seed=6)
    b = estimate_rhs(BUMP, ZERO, [0.0], 0.05, dt=1e-3, reps=1600, seed=7)
    ratio = a.stderr / b.stderr
    assert abs(ratio - 2.0) < 0.4  # 1/sqrt(reps) within 20 percent


def test_report_pass_logic():
    a = MonteCarloEstimate(mean=1.0, stderr=0.01, reps=100)
    b = MonteCarloEstimate(mean=1.005, stderr=0.01, reps=100)
    rep = make_report(a, b)
    assert rep.passed and abs(rep.z) < 1
    c = MonteCarloEstimate(mean=2.0, stderr=0.01, reps=100)
    assert not make_report(a, c).passed
    # abort fraction above 1 percent marks the report invalid
    d = MonteCarloEstimate(mean=1.0, stderr=0.01, reps=100, aborted=5)
    assert not make_report(a, d).valid


def test_duality_zero_drift_small():
    # scaled-down version of the Shiga acceptance check
    rep = verify_duality(BUMP, ZERO, [0.0, 0.5], 0.1, domain=DOM,
                         dt_field=DT_FIELD, field_reps=400,
                         dt_particles=1e-3, dual_reps=4000, seed=11)
    assert rep.valid
    assert abs(rep.z) < 4.0


def test_moment_l_zero_is_one():
    spec = DriftSpec(coeffs=(0.0, -1.0), b_inf=1.0)
    est = estimate_moment_l(BUMP, spec, 0.0, 0.5, 0, 4, dt=1e-3, reps=10,
                            seed=12)
    assert est.mean == 1.0 and est.stderr == 0.0


def test_moment_l_one_short_time_near_f():
    spec = DriftSpec(coeffs=(0.0, -1.0), b_inf=1.0)
    est = estimate_moment_l(BUMP, spec, 0.0, 1e-3, 1, 4, dt=1e-4, reps=400,
                            seed=13)
    assert abs(est.mean - BUMP.at(0.0)) < 0.02


def test_moment_spec_validation():
    with pytest.raises(ValueError):
        estimate_moment_l(BUMP, ZERO, 0.0, 0.1, 2, 4, dt=1e-3, reps=10,
                          seed=14)
    with pytest.raises(ValueError):
        estimate_moment_l(BUMP, DriftSpec(coeffs=(1.0, -2.0), b_inf=0.5),
                          0.0, 0.1, 2, 4, dt=1e-3, reps=10, seed=15)


def test_moment_weight_is_plain_product_when_coefficient_vanishes():
    # b1 = -1, b_inf = 1: exponential coefficient b1 + |b_inf| = 0 and no
    # sign flips, so f = 1 makes every replica exactly 1
    spec = DriftSpec(coeffs=(0.0, -1.0), b_inf=1.0)
    est = estimate_moment_l(ONE, spec, 0.0, 0.3, 3, 3, dt=1e-3, reps=50,
                            seed=16)
    assert est.mean == 1.0 and est.stderr == 0.0


def test_moment_f_zero_estimates_empty_probability():
    zero_f = InitialCondition(kind="zero")
    spec = DriftSpec(coeffs=(0.0, -1.0), b_inf=-1.0)  # negative atom
    est = estimate_moment_l(zero_f, spec, 0.0, 0.3, 2, 2, dt=1e-3, reps=400,
                            seed=17)
    # integrand is (+-1) 1{I_t empty}; the mean sits in [-1, 1]
    assert -1.0 <= est.mean <= 1.0


def test_sign_flips_tracked_for_negative_atom():
    spec = DriftSpec(coeffs=(0.0, -1.0), b_inf=-1.0)
    from wfdual.particles import run_system
    flips = 0
    for r in range(60):
        s = run_system([0.0], spec, 1.0, 1e-3, 18, m=3, replica=r,
                       record_events=True)
        assert s.n_branch_neg == s.n_branch  # every raw draw is inf, b_inf < 0
        flips += s.n_branch_neg
    assert flips > 10


def test_indicator_table_diagonal_and_grid():
    spec = DriftSpec(coeffs=(0.0, -1.0), b_inf=1.0)
    tab = estimate_indicator(BUMP, spec, 0.0, 0.05, [1, 2], [2, 4], dt=1e-3,
                             reps=300, seed=19)
    assert len(tab.rows) == 4  # full grid
    assert len(tab.diagonal) == 2
    diag = estimate_indicator(BUMP, spec, 0.0, 0.05, [1, 2], [2, 4], dt=1e-3,
                              reps=300, seed=19, diagonal_only=True)
    assert len(diag.rows) == 2
    assert [r["mean"] for r in diag.diagonal] == \
        [r["mean"] for r in tab.diagonal]


def test_indicator_all_ones_for_f_one():
    spec = DriftSpec(coeffs=(0.0, -1.0), b_inf=1.0)
    tab = estimate_indicator(ONE, spec, 0.0, 0.2, [2, 4], [2, 4], dt=1e-3,
                             reps=60, seed=20)
    assert all(r["mean"] == 1.0 for r in tab.rows)
    assert tab.stabilized
    assert tab.indicator_estimate == 1.0


def test_indicator_rejects_unsorted_lists():
    spec = DriftSpec(coeffs=(0.0, -1.0), b_inf=1.0)
    with pytest.raises(ValueError):
        estimate_indicator(BUMP, spec, 0.0, 0.1, [4, 2], [2, 4], dt=1e-3,
                           reps=10, seed=21)
