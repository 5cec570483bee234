import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from handover_timing.distributions import (
    ArrivalLaw,
    EmpiricalDelay,
    ExponentialDelay,
    PointDelay,
    UniformDelay,
    exponential_unit,
    load_samples,
    parse_distribution,
    uniform_unit,
)
from handover_timing.rng import uniforms

ALL_LAWS = [
    uniform_unit(),
    exponential_unit(),
    UniformDelay(-0.2, 0.8),
    ExponentialDelay(2.5),
    PointDelay(0.3),
    EmpiricalDelay((0.4, 0.1, 0.9, 0.1, 2.0)),
]
PARAMETRIC = [d for d in ALL_LAWS if not isinstance(d, EmpiricalDelay)]
CONTINUOUS = [d for d in PARAMETRIC if not d.discrete]


def test_cdf_examples():
    assert uniform_unit().cdf(0.5) == 0.5
    assert exponential_unit().cdf(0.0) == 0.0
    assert exponential_unit().cdf(math.log(2)) == pytest.approx(0.5, rel=1e-15)


def test_survival_examples():
    expected = float(mpmath.exp(-50))
    assert exponential_unit().survival(50.0) == pytest.approx(expected, rel=1e-14)
    assert uniform_unit().survival(2.0) == 0.0
    assert uniform_unit().survival(0.0) == 1.0


def test_quantile_examples():
    assert uniform_unit().quantile(0.25) == 0.25
    assert exponential_unit().quantile(0.5) == pytest.approx(math.log(2), rel=1e-15)
    assert PointDelay(0.3).quantile(0.9) == 0.3


@pytest.mark.parametrize("p", [-0.1, 1.0, 1.5])
def test_quantile_rejects_out_of_domain(p):
    with pytest.raises(ValueError):
        exponential_unit().quantile(p)


def test_empirical_quantile_accepts_one():
    d = EmpiricalDelay((0.3, 0.1, 0.2))
    assert d.quantile(1.0) == 0.3
    assert d.quantile(0.0) == 0.1
    assert d.quantile(0.34) == 0.2
    with pytest.raises(ValueError):
        d.quantile(1.01)


def test_mean_examples():
    assert uniform_unit().mean() == 0.5
    assert exponential_unit().mean() == 1.0
    assert EmpiricalDelay((0.1, 0.3)).mean() == pytest.approx(0.2, abs=1e-16)


def test_sample_point_mass():
    rng = np.random.default_rng(123)
    assert all(PointDelay(0.3).sample(rng) == 0.3 for _ in range(10))


def test_sample_is_inverse_transform_of_stream():
    d = exponential_unit()
    a = np.random.default_rng(5)
    b = np.random.default_rng(5)
    assert d.sample(a) == d.quantile(float(b.random()))


@pytest.mark.parametrize("dist, mean, tol", [
    (uniform_unit(), 0.5, 3 * (1 / math.sqrt(12)) / 1e3),
    (exponential_unit(), 1.0, 3e-3),
])
def test_sample_mean_lln(dist, mean, tol):
    draws = dist.quantile_array(uniforms(2024, 0, 10**6))
    assert abs(draws.mean() - mean) <= tol


@pytest.mark.parametrize("dist", CONTINUOUS, ids=str)
def test_ks_distance(dist):
    draws = np.sort(dist.quantile_array(uniforms(99, 0, 10**5)))
    n = draws.size
    cdf = np.array([dist.cdf(x) for x in draws])
    ks = max(np.max(np.arange(1, n + 1) / n - cdf), np.max(cdf - np.arange(n) / n))
    assert ks < 0.01


def test_empirical_stored_sorted_and_nonempty():
    d = EmpiricalDelay((3.0, 1.0, 2.0))
    assert d.samples == (1.0, 2.0, 3.0)
    with pytest.raises(ValueError):
        EmpiricalDelay(())


def test_empirical_step_cdf_is_right_continuous():
    d = EmpiricalDelay((0.1, 0.3))
    assert d.cdf(0.1) == 0.5
    assert d.cdf_left(0.1) == 0.0
    assert d.survival(0.3) == 0.0
    assert d.survival_left(0.3) == 0.5


@pytest.mark.parametrize("dist", ALL_LAWS, ids=str)
def test_cdf_monotone_on_random_points(dist):
    rng = np.random.default_rng(7)
    ys = np.sort(rng.uniform(-2, 6, 10**4))
    values = [dist.cdf(y) for y in ys]
    assert all(a <= b for a, b in zip(values, values[1:]))
    assert dist.cdf(-1e9) == 0.0 and dist.cdf(1e9) == 1.0


@pytest.mark.parametrize("dist", PARAMETRIC, ids=str)
def test_quantile_round_trip(dist):
    for p in np.linspace(0, 1, 1002)[1:-1]:
        q = dist.quantile(p)
        assert dist.cdf(q) >= p - 1e-15
        eps = 1e-12 * max(1.0, abs(q))
        assert dist.cdf(q - eps) < p


@pytest.mark.parametrize("dist", ALL_LAWS, ids=str)
@given(y=st.floats(-3, 5))
@settings(max_examples=200, deadline=None)
def test_quantile_cdf_galois(dist, y):
    p = dist.cdf(y)
    if p < 1.0 or isinstance(dist, EmpiricalDelay):
        assert dist.quantile(p) <= y or p == 0.0


@pytest.mark.parametrize("dist", ALL_LAWS, ids=str)
def test_survival_complements_cdf_in_bulk(dist):
    for y in np.linspace(-1, 3, 401):
        assert abs(dist.survival(y) + dist.cdf(y) - 1.0) <= 1e-15


def test_survival_keeps_digits_in_tail():
    d = exponential_unit()
    for y in (40.0, 60.0, 200.0):
        assert d.cdf(y) == 1.0
        exact = mpmath.exp(-mpmath.mpf(y))
        assert abs(d.survival(y) - float(exact)) <= 1e-10 * float(exact)
    d = ExponentialDelay(2.5)
    assert d.survival(30.0) == pytest.approx(float(mpmath.exp(-75)), rel=1e-12)


def test_arrival_law_shifts_cdf():
    law = ArrivalLaw(exponential_unit(), 0.7)
    for x in np.linspace(-1, 5, 61):
        assert law.cdf(x) == exponential_unit().cdf(x - 0.7)
    assert law.mean() == pytest.approx(1.7)
    with pytest.raises(ValueError):
        ArrivalLaw(uniform_unit(), -0.1)


def test_negative_support_allowed():
    d = UniformDelay(-0.2, 0.8)
    assert d.cdf(0.0) == pytest.approx(0.2)
    assert d.support_lower() == -0.2


@pytest.mark.parametrize("text, expected", [
    ("uniform", uniform_unit()),
    ("exp", exponential_unit()),
    ("uniform:-0.5,2", UniformDelay(-0.5, 2.0)),
    ("exp:3", ExponentialDelay(3.0)),
    ("det:0.25", PointDelay(0.25)),
])
def test_parse_distribution(text, expected):
    assert parse_distribution(text) == expected


@pytest.mark.parametrize("text", ["gamma", "uniform:1", "exp:-1", "det:", "uniform:2,1", "empirical:"])
def test_parse_distribution_rejects(text):
    with pytest.raises(ValueError):
        parse_distribution(text)


def test_parse_empirical_file(tmp_path):
    path = tmp_path / "delays.txt"
    path.write_text("0.5\n0.1\n\n# comment\n0.3\n")
    d = parse_distribution(f"empirical:{path}")
    assert d == EmpiricalDelay((0.1, 0.3, 0.5))
    assert load_samples(path) == (0.5, 0.1, 0.3)


def test_invalid_parameters():
    with pytest.raises(ValueError):
        UniformDelay(1.0, 1.0)
    with pytest.raises(ValueError):
        ExponentialDelay(0.0)
    with pytest.raises(ValueError):
        PointDelay(math.inf)
