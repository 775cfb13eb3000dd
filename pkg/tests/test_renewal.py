import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from renewperc import (
    ConstantQ,
    MarkovQ,
    PolynomialMonotoneQ,
    TableQ,
    ValidationError,
    ck_at,
    ck_sequence,
    interarrival,
    markov_renewal_closed,
    q_sequence_from_config,
    q_star,
    q_star_array,
    renewal_probabilities,
    sample_path,
    survival_products,
)

SPECS = [
    ConstantQ(0.5),
    ConstantQ(0.05),
    MarkovQ(0.3, 0.6),
    MarkovQ(0.7, 0.2),
    TableQ((0.9, 0.2, 0.5)),
    PolynomialMonotoneQ(0.25, 2),
]


def test_q_at_examples():
    assert ConstantQ(0.5).q_at(7) == 0.5
    assert PolynomialMonotoneQ(0.5, 2).q_at(2) == pytest.approx(1 - 1 / math.sqrt(2), abs=1e-12)
    mk = MarkovQ(0.3, 0.6)
    assert mk.q_at(0) == 0.3
    assert mk.q_at(5) == 0.6


def test_q_at_rejects_bad_inputs():
    with pytest.raises(ValidationError):
        ConstantQ(1.5)
    with pytest.raises(ValidationError):
        MarkovQ(-0.1, 0.5)
    with pytest.raises(ValidationError):
        PolynomialMonotoneQ(0.25, 1)
    with pytest.raises(ValidationError):
        TableQ(())
    with pytest.raises(ValidationError):
        ConstantQ(0.5).q_at(-1)


def test_q_star_examples():
    assert q_star(TableQ((0.9, 0.2, 0.5)), 2) == 0.9
    assert q_star(ConstantQ(0.5), 17) == 0.5
    spec = PolynomialMonotoneQ(0.25, 2)
    assert q_star(spec, 10) == pytest.approx(1 - 10 ** -0.25, abs=1e-12)


@given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=12))
def test_q_star_is_running_max(values):
    spec = TableQ(tuple(values))
    stars = q_star_array(spec, len(values))
    assert stars[0] == spec.q_at(0)
    for i in range(1, len(values)):
        assert stars[i] == max(stars[i - 1], spec.q_at(i))


def test_interarrival_constant_half():
    summary = interarrival(ConstantQ(0.5), 200, tol=1e-16)
    # P(T=3) = q^2 (1-q) = 0.125, E T = 1/(1-q) = 2
    assert summary.pmf[3] == pytest.approx(0.125, abs=1e-15)
    assert summary.mean == pytest.approx(2.0, abs=1e-12)
    assert summary.converged


def test_interarrival_reports_lower_bound_when_slow():
    summary = interarrival(ConstantQ(0.999), 50, tol=1e-12)
    assert not summary.converged
    assert summary.mean < 1.0 / (1.0 - 0.999)


def test_interarrival_rejects_bad_tol():
    with pytest.raises(ValidationError):
        interarrival(ConstantQ(0.5), 10, tol=0.0)
    with pytest.raises(ValidationError):
        interarrival(ConstantQ(0.5), 0, tol=1e-12)


def test_interarrival_poly_mean_matches_series_oracle():
    spec = PolynomialMonotoneQ(0.25, 2)
    # independent oracle: plain-Python accumulation of 1 + sum of products
    def brute(n):
        total, prod = 1.0, 1.0
        for i in range(n):
            prod *= spec.q_at(i)
            total += prod
        return total

    two_horizons = (brute(2000), brute(4000))
    assert two_horizons[0] == pytest.approx(two_horizons[1], abs=1e-12)
    summary = interarrival(spec, 4000, tol=1e-15)
    assert summary.converged
    assert summary.mean == pytest.approx(two_horizons[1], abs=1e-12)


@pytest.mark.parametrize("spec", SPECS)
@pytest.mark.parametrize("horizon", [1, 7, 60])
def test_interarrival_mass_conservation(spec, horizon):
    summary = interarrival(spec, horizon)
    leftover = survival_products(spec, horizon)[horizon]
    assert math.fsum(summary.pmf[1:]) + leftover == pytest.approx(1.0, abs=5e-13)


def test_renewal_probabilities_constant():
    table = renewal_probabilities(ConstantQ(0.5), 40)
    assert table.u[0] == 1.0
    assert np.allclose(table.u[1:], 0.5, atol=1e-13)


def test_renewal_probabilities_deterministic_marks():
    table = renewal_probabilities(TableQ((0.0,)), 20)
    assert np.allclose(table.u, 1.0, atol=0)


def test_renewal_probabilities_markov_limit():
    # two-state stationary mark probability (1-q1)/(1-q1+q0) = 0.4/0.7
    table = renewal_probabilities(MarkovQ(0.3, 0.6), 200)
    assert table.u[200] == pytest.approx(0.4 / 0.7, abs=1e-12)


@pytest.mark.parametrize(
    "spec,horizon,tol",
    [
        (ConstantQ(0.5), 100, 1e-12),
        (MarkovQ(0.3, 0.6), 300, 1e-12),
        (PolynomialMonotoneQ(0.25, 2), 3000, 5e-3),
    ],
)
def test_renewal_probabilities_converge_to_inverse_mean(spec, horizon, tol):
    mean = interarrival(spec, 10_000, tol=1e-15).mean
    table = renewal_probabilities(spec, horizon)
    assert abs(table.u[horizon] - 1.0 / mean) <= tol


@pytest.mark.parametrize("spec", SPECS)
def test_renewal_recursion_recheck_by_direct_convolution(spec):
    horizon = 60
    table = renewal_probabilities(spec, horizon)
    pmf = interarrival(spec, horizon).pmf
    for n in range(1, horizon + 1):
        direct = math.fsum(pmf[k] * table.u[n - k] for k in range(1, n + 1))
        assert table.u[n] == pytest.approx(direct, abs=1e-12)


def test_markov_closed_examples():
    assert markov_renewal_closed(0.5, 0.5, 0) == pytest.approx(1.0, abs=1e-15)
    assert markov_renewal_closed(0.5, 0.5, 3) == pytest.approx(0.5, abs=1e-15)


def test_markov_closed_matches_recursion_grid():
    grid = [0.1, 0.3, 0.5, 0.7, 0.9]
    for q0 in grid:
        for q1 in grid:
            table = renewal_probabilities(MarkovQ(q0, q1), 50)
            for i in (0, 1, 2, 3, 10, 50):
                assert markov_renewal_closed(q0, q1, i) == pytest.approx(
                    table.u[i], abs=1e-12
                )


def test_ck_constant_half_hand_value():
    # inner sum at k=2: q + q^2 = 0.75, squared = 0.5625
    table = ck_sequence(ConstantQ(0.5), 2)
    assert table.c[2] == pytest.approx(0.5625, abs=1e-15)
    assert table.ratio[2] == pytest.approx(0.5625 / 2, abs=1e-15)


def test_ck_constant_closed_form():
    q = 0.7
    table = ck_sequence(ConstantQ(q), 60)
    for k in (1, 2, 5, 20, 60):
        expected = (q * (1 - q**k) / (1 - q)) ** 2
        assert table.c[k] == pytest.approx(expected, rel=1e-12)
        assert ck_at(ConstantQ(q), k) == pytest.approx(expected, rel=1e-12)


def test_ck_doeblin_family_is_bounded():
    spec = TableQ((0.3, 0.7, 0.5))
    eps = 1.0 - 0.7
    bound = ((1 - eps) / eps) ** 2
    table = ck_sequence(spec, 120)
    assert np.all(table.c[1:] <= bound + 1e-12)


def test_sample_path_all_marks_when_q_zero():
    rng = np.random.default_rng(7)
    path = sample_path(TableQ((0.0,)), 500, rng)
    assert path.xi.all()
    assert not path.zeta.any()


def test_sample_path_determinism_and_companion():
    a = sample_path(MarkovQ(0.3, 0.6), 300, np.random.default_rng(42))
    b = sample_path(MarkovQ(0.3, 0.6), 300, np.random.default_rng(42))
    assert np.array_equal(a.xi, b.xi)
    assert np.array_equal(a.zeta, b.zeta)
    assert a.xi[0] == 1 and a.zeta[0] == 0
    assert np.array_equal(a.xi == 1, a.zeta == 0)


def test_sample_path_empirical_renewal_rate():
    # marks beyond site 0 are i.i.d. under constant q, so the binomial SE applies
    n = 1_000_000
    path = sample_path(ConstantQ(0.5), n, np.random.default_rng(123))
    rate = path.xi[1:].mean()
    se = math.sqrt(0.25 / n)
    assert abs(rate - 0.5) <= 3 * se


def test_sample_path_rare_renewals_long_runs():
    # q = 0.999 repeated: E T = 1000, long zero runs; the renewal count over
    # N sites fluctuates with SE ~ sqrt(N Var(T) / E T^3) (renewal CLT), with
    # Var(T) = q / (1-q)^2 for the geometric inter-arrival law
    q, n = 0.999, 1_000_000
    spec = TableQ((q,))
    path = sample_path(spec, n, np.random.default_rng(7))
    mean_t = 1.0 / (1.0 - q)
    var_t = q / (1.0 - q) ** 2
    se_rate = math.sqrt(var_t / mean_t**3 / n)
    rate = path.xi[1:].mean()
    assert path.zeta.max() > 100  # long runs actually occur
    assert abs(rate - 1.0 / mean_t) <= 3 * se_rate


def test_table_tail_rules():
    repeat = TableQ((0.2, 0.8))
    assert repeat.q_at(10) == 0.8
    formula = TableQ((0.1,), tail=ConstantQ(0.4))
    assert formula.q_at(0) == 0.1
    assert formula.q_at(3) == 0.4
    assert np.allclose(formula.q_array(4), [0.1, 0.4, 0.4, 0.4])


def test_monotonicity_flags():
    assert ConstantQ(0.3).is_monotone
    assert MarkovQ(0.2, 0.6).is_monotone
    assert not MarkovQ(0.6, 0.2).is_monotone
    assert PolynomialMonotoneQ(0.25).is_monotone
    assert TableQ((0.1, 0.5, 0.5)).is_monotone
    assert not TableQ((0.5, 0.1)).is_monotone


def test_config_fragments_round_trip():
    fragments = [
        {"family": "constant", "q": 0.5},
        {"family": "markov", "q0": 0.3, "q1": 0.6},
        {"family": "poly_monotone", "beta": 0.25, "i0": 2},
        {"family": "table", "q": [0.9, 0.2, 0.5], "tail": "repeat_last"},
    ]
    for fragment in fragments:
        spec = q_sequence_from_config(fragment)
        again = q_sequence_from_config(spec.to_config())
        assert again == spec


def test_config_rejects_unknown_keys():
    with pytest.raises(ValidationError):
        q_sequence_from_config({"family": "constant", "q": 0.5, "oops": 1})
    with pytest.raises(ValidationError):
        q_sequence_from_config({"family": "unknown"})
