import math

import numpy as np
from hypothesis import given
from hypothesis import strategies as st

from renewperc import (
    ConstantQ,
    FiniteTableRadius,
    GeometricTailRadius,
    MarkovQ,
    coalescence_times,
    connectivity_successes,
    dual_law,
    gf_partial,
    q_star_array,
    random_tiny_configs,
    simulate_connectivity,
    simulate_coupling,
    simulate_dual,
    wilson_interval,
)

HAND_SPEC = MarkovQ(0.3, 0.6)
HAND_MODEL = FiniteTableRadius((0.0, 0.5, 0.5))


@given(st.integers(0, 500), st.integers(1, 500))
def test_wilson_interval_contains_estimate(k, n):
    k = min(k, n)
    lo, hi = wilson_interval(k, n)
    assert 0.0 <= lo <= k / n <= hi <= 1.0


def test_reports_are_deterministic():
    a = simulate_connectivity(HAND_SPEC, HAND_MODEL, 3, 20_000, seed=7)
    b = simulate_connectivity(HAND_SPEC, HAND_MODEL, 3, 20_000, seed=7)
    assert a == b
    c = simulate_dual(HAND_SPEC, HAND_MODEL, 3, 20_000, seed=7)
    d = simulate_dual(HAND_SPEC, HAND_MODEL, 3, 20_000, seed=7)
    assert c == d


def test_zero_radius_is_exactly_zero():
    model = FiniteTableRadius((1.0,))
    assert simulate_connectivity(HAND_SPEC, model, 2, 5000, seed=1).estimate == 0.0
    assert simulate_dual(HAND_SPEC, model, 2, 5000, seed=1).estimate == 0.0


def test_site_zero_is_certain():
    assert simulate_connectivity(HAND_SPEC, HAND_MODEL, 0, 100, seed=0).estimate == 1.0
    assert simulate_dual(HAND_SPEC, HAND_MODEL, 0, 100, seed=0).estimate == 1.0


def test_first_site_closed_form():
    report = simulate_connectivity(ConstantQ(0.5), FiniteTableRadius((0.0, 1.0)), 1, 100_000, seed=3)
    assert report.wilson_low <= 0.5 <= report.wilson_high


def test_hand_anchor_within_four_se():
    report = simulate_connectivity(HAND_SPEC, HAND_MODEL, 2, 100_000, seed=11)
    se = math.sqrt(0.55 * 0.45 / report.reps)
    assert abs(report.estimate - 0.55) <= 4 * se
    dual = simulate_dual(HAND_SPEC, HAND_MODEL, 2, 100_000, seed=11)
    assert abs(dual.estimate - 0.55) <= 4 * se


def test_estimates_track_exact_values():
    reps = 30_000
    for idx, cfg in enumerate(random_tiny_configs(10, seed=31, n_max=6)):
        gf = gf_partial(cfg.spec, cfg.model, cfg.n)
        exact = float(dual_law(gf, cfg.spec, cfg.model).v[cfg.n])
        se = max(math.sqrt(exact * (1 - exact) / reps), 1.0 / reps)
        conn = simulate_connectivity(cfg.spec, cfg.model, cfg.n, reps, seed=100 + idx)
        dual = simulate_dual(cfg.spec, cfg.model, cfg.n, reps, seed=200 + idx)
        assert abs(conn.estimate - exact) <= 4 * se
        assert abs(dual.estimate - exact) <= 4 * se


def test_empirical_duality_between_simulators():
    reps = 30_000
    for idx, cfg in enumerate(random_tiny_configs(20, seed=77, n_max=6)):
        conn = simulate_connectivity(cfg.spec, cfg.model, cfg.n, reps, seed=300 + idx)
        dual = simulate_dual(cfg.spec, cfg.model, cfg.n, reps, seed=400 + idx)
        joint_se = math.sqrt(conn.stderr**2 + dual.stderr**2) + 1.0 / reps
        assert abs(conn.estimate - dual.estimate) <= 4 * joint_se


def test_radius_dominance_is_pathwise():
    # shared seed realizes R(u) through inverse CDFs: bigger-tailed model
    # dominates pathwise, so successes can only be gained, never lost
    small = GeometricTailRadius(0.5)
    large = GeometricTailRadius(0.9)
    win_small = connectivity_successes(ConstantQ(0.5), small, 6, 20_000, seed=5)
    win_large = connectivity_successes(ConstantQ(0.5), large, 6, 20_000, seed=5)
    assert not np.any(win_small & ~win_large)
    assert win_large.sum() > win_small.sum()


def test_coupling_geometric_closed_form():
    q = 0.5
    for delay in (1, 3, 7):
        report = simulate_coupling(ConstantQ(q), (0, delay), horizon=14, reps=50_000, seed=29)
        for j in range(1, 13):
            p = q ** (j - 1)
            se = math.sqrt(p * (1 - p) / report.reps)
            assert abs(report.survival[j - 1] - p) <= 3 * se + 1e-12


def test_coupling_identical_delays_reduce_to_interarrival():
    # both chains identical: tau is the first renewal time of one chain
    q = 0.6
    report = simulate_coupling(ConstantQ(q), (0, 0), horizon=12, reps=40_000, seed=13)
    for j in range(1, 10):
        p = q ** (j - 1)  # P(T >= j)
        se = math.sqrt(p * (1 - p) / report.reps) + 1e-12
        assert abs(report.survival[j - 1] - p) <= 4 * se


def test_coalescence_is_absorbing():
    # a duplicated delay adds a chain that coalesces instantly and stays
    # merged, so the joint coalescence time must be unchanged
    a = coalescence_times(MarkovQ(0.4, 0.7), (0, 3), horizon=40, reps=8000, seed=17)
    b = coalescence_times(MarkovQ(0.4, 0.7), (0, 3, 3), horizon=40, reps=8000, seed=17)
    assert np.array_equal(a, b)


def test_coupling_sum_sq_against_qstar_products():
    # the shared-uniform inclusion bounds P(T_k >= j) by the product of
    # running maxima q*_{k} .. q*_{k+j-2}, so the partial survival sum is
    # at most sum_j prod_{i<j-1} q*_{k+i}
    spec = ConstantQ(0.5)
    k = 10
    report = simulate_coupling(spec, tuple(range(k + 1)), horizon=40, reps=100_000, seed=23)
    stars = q_star_array(spec, 2 * k + 2)
    bound = 0.0
    prod = 1.0
    for j in range(1, k + 1):
        bound += prod
        prod *= stars[k + j - 1]
    se_sum = float(report.stderr[:k].sum()) + 1e-6
    assert math.sqrt(report.coalescence_sum_sq) <= bound + 3 * se_sum


def test_coupling_report_fields():
    report = simulate_coupling(ConstantQ(0.5), (0, 2), horizon=10, reps=5000, seed=1)
    assert report.target == "tau"
    assert report.j_grid == tuple(range(1, 11))
    assert np.all((report.survival >= 0) & (report.survival <= 1))
    assert np.all(report.wilson_low <= report.survival)
    assert np.all(report.survival <= report.wilson_high)
    again = simulate_coupling(ConstantQ(0.5), (0, 2), horizon=10, reps=5000, seed=1)
    assert np.array_equal(report.survival, again.survival)
