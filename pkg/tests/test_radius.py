import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from renewperc import (
    ConstantQ,
    FiniteTableRadius,
    GeometricTailRadius,
    InfiniteMeanError,
    InfiniteRadius,
    PolynomialMonotoneQ,
    PowerLawTailRadius,
    TailDiagnosis,
    ValidationError,
    criterion_ratio,
    radius_from_config,
    sample,
    tail_sum,
)

MODELS = [
    GeometricTailRadius(0.9),
    PowerLawTailRadius(c=3.0, gamma=1.0, n0=1),
    PowerLawTailRadius(c=0.5, gamma=1.5, n0=2),
    FiniteTableRadius((0.0, 0.5, 0.5)),
    InfiniteRadius(),
]


def test_alpha_examples():
    assert GeometricTailRadius(0.9).alpha(2) == pytest.approx(0.19, abs=1e-12)
    power = PowerLawTailRadius(c=3.0, gamma=1.0, n0=1)
    assert power.alpha(3) == 0.0
    assert power.alpha(6) == pytest.approx(0.5, abs=1e-12)
    table = FiniteTableRadius((0.0, 0.5, 0.5))
    assert table.alpha(0) == 0.0
    assert table.alpha(1) == pytest.approx(0.5)
    assert table.alpha(2) == pytest.approx(1.0)


@pytest.mark.parametrize("model", MODELS)
def test_alpha_nondecreasing_scan(model):
    values = model.alpha_array(10_001)
    assert np.all(np.diff(values) >= -1e-15)
    assert np.all((values >= 0.0) & (values <= 1.0))
    assert np.allclose(values[:50], [model.alpha(i) for i in range(50)], atol=1e-15)


@given(st.floats(0.01, 0.99))
def test_alpha_nondecreasing_geometric_property(r):
    values = GeometricTailRadius(r).alpha_array(200)
    assert np.all(np.diff(values) >= -1e-15)


@given(st.floats(0.1, 10.0), st.floats(0.2, 3.0))
def test_alpha_nondecreasing_power_property(c, gamma):
    values = PowerLawTailRadius(c=c, gamma=gamma, n0=1).alpha_array(200)
    assert np.all(np.diff(values) >= -1e-15)


def test_tail_sum_examples():
    partial, diagnosis = tail_sum(GeometricTailRadius(0.9), 2000)
    assert partial == pytest.approx(1.0 / (1.0 - 0.9), abs=1e-6)
    assert diagnosis is TailDiagnosis.SUMMABLE

    partial, diagnosis = tail_sum(PowerLawTailRadius(c=3.0, gamma=1.0, n0=1), 2000)
    assert partial == pytest.approx(4 + 3 * (math.log(2000) - math.log(3)), rel=0.1)
    assert diagnosis is TailDiagnosis.DIVERGENT

    partial, diagnosis = tail_sum(FiniteTableRadius((0.0, 0.5, 0.5)), 100)
    assert partial == pytest.approx(1.5, abs=1e-12)
    assert diagnosis is TailDiagnosis.SUMMABLE


def test_tail_sum_partial_sums_nondecreasing():
    model = PowerLawTailRadius(c=2.0, gamma=1.2, n0=1)
    partials = [tail_sum(model, n)[0] for n in (10, 50, 200, 1000)]
    assert all(a <= b + 1e-15 for a, b in zip(partials, partials[1:]))


def test_criterion_ratio_values():
    spec = ConstantQ(0.5)  # E T = 2
    assert criterion_ratio(PowerLawTailRadius(3.0, 1.0, 1), spec, 1200) == pytest.approx(1.5, abs=1e-9)
    assert criterion_ratio(PowerLawTailRadius(0.5, 1.0, 1), spec, 1200) == pytest.approx(0.25, abs=1e-9)
    assert criterion_ratio(GeometricTailRadius(0.9), spec, 500) == pytest.approx(0.0, abs=1e-12)


def test_criterion_ratio_rejects_infinite_mean():
    # q_i = 1 - i^-2 keeps the partial products bounded away from zero
    spec = PolynomialMonotoneQ(beta=2.0, i0=2)
    with pytest.raises(InfiniteMeanError):
        criterion_ratio(GeometricTailRadius(0.5), spec, 10)


def test_sampling_determinism():
    a = sample(GeometricTailRadius(0.9), np.random.default_rng(5))
    b = sample(GeometricTailRadius(0.9), np.random.default_rng(5))
    assert a == b
    assert sample(FiniteTableRadius((0.0, 1.0)), np.random.default_rng(0)) == 1
    assert sample(InfiniteRadius(), np.random.default_rng(0)) == math.inf


@pytest.mark.parametrize(
    "model",
    [GeometricTailRadius(0.9), FiniteTableRadius((0.1, 0.4, 0.3, 0.2)),
     PowerLawTailRadius(c=3.0, gamma=1.0, n0=1)],
)
def test_sampling_matches_cdf(model):
    reps = 100_000
    draws = model.quantile(np.random.default_rng(99).random(reps))
    for n in (1, 5, 25):
        p = model.alpha(n)
        se = math.sqrt(max(p * (1 - p), 1e-12) / reps)
        assert abs((draws <= n).mean() - p) <= 4 * se + 1e-9


def test_sampling_mean_matches_survival_sum_oracle():
    model = GeometricTailRadius(0.9)
    # oracle: E R = sum_n P(R > n), summed from the model's own CDF
    oracle = float((1.0 - model.alpha_array(2000)).sum())
    reps = 1_000_000
    draws = model.quantile(np.random.default_rng(2024).random(reps))
    se = draws.std() / math.sqrt(reps)
    assert abs(draws.mean() - oracle) <= 3 * se


def test_infinite_radius_flag():
    model = InfiniteRadius()
    assert model.alpha(10) == 0.0
    assert np.isinf(model.quantile(np.array([0.2, 0.9]))).all()


def test_finite_table_validation():
    with pytest.raises(ValidationError):
        FiniteTableRadius((0.5, 0.4))
    with pytest.raises(ValidationError):
        FiniteTableRadius((0.5, -0.5, 1.0))


def test_config_fragments_round_trip():
    fragments = [
        {"family": "geometric_tail", "r": 0.9},
        {"family": "power_tail", "c": 3, "gamma": 1, "n0": 1},
        {"family": "table", "p": [0.0, 0.5, 0.5]},
        {"family": "infinite"},
    ]
    for fragment in fragments:
        model = radius_from_config(fragment)
        assert radius_from_config(model.to_config()) == model
    with pytest.raises(ValidationError):
        radius_from_config({"family": "table", "p": [1.0], "r": 0.5})
