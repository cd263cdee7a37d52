import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from multihop_aoi.distributions import (
    Constant,
    Erlang,
    Exponential,
    Gamma,
    Geometric,
    Hyperexponential,
    ShiftedExponential,
    is_nbu,
    is_nwu,
    parse_distribution,
)
from multihop_aoi.model import stream

ALL_LAWS = [
    Exponential(1.7),
    Erlang(2, 2.0),
    Erlang(3, 0.5),
    Gamma(0.5, 2.0),
    Gamma(2.0, 0.5),
    Constant(0.8),
    ShiftedExponential(0.5, 2.0),
    Hyperexponential((0.3, 0.7), (0.5, 4.0)),
    Geometric(0.25, 0.5),
]


def test_constant_is_degenerate():
    draws = Constant(0.5).sample(stream(1, 1, 0), 1000)
    assert np.all(draws == 0.5)


def test_exponential_mean_from_a_million_draws():
    draws = Exponential(1.0).sample(stream(7, 1, 0), 10**6)
    assert 0.995 <= draws.mean() <= 1.005


def test_shifted_exponential_never_below_its_shift():
    draws = ShiftedExponential(0.5, 2.0).sample(stream(3, 1, 0), 10**5)
    assert draws.min() >= 0.5
    assert abs(draws.mean() - 1.0) < 0.01


@pytest.mark.parametrize("dist", ALL_LAWS, ids=str)
def test_sample_mean_within_three_standard_errors(dist):
    n = 10**6
    draws = dist.sample(stream(11, 1, 0), n)
    assert np.all(draws > 0)
    se = math.sqrt(dist.variance / n)
    assert abs(draws.mean() - dist.mean) <= 3 * se + 1e-12


@pytest.mark.parametrize("dist", ALL_LAWS, ids=str)
def test_ccdf_shape(dist):
    x = np.linspace(0, 20 * dist.mean, 4001)
    f = dist.ccdf(x)
    assert dist.ccdf(0.0) == pytest.approx(1.0) or isinstance(dist, (Constant, ShiftedExponential, Geometric))
    assert float(dist.ccdf(-1.0)) == 1.0
    assert np.all(np.diff(f) <= 1e-15)
    assert f[-1] < 1e-3


@pytest.mark.parametrize("dist", ALL_LAWS, ids=str)
def test_sampler_matches_ccdf(dist):
    draws = dist.sample(stream(5, 1, 0), 20000)
    grid = np.quantile(draws, np.linspace(0.05, 0.95, 19))
    empirical = np.array([(draws > g).mean() for g in grid])
    assert np.max(np.abs(empirical - dist.ccdf(grid))) < 0.02


def test_gamma_sampler_agrees_with_scipy():
    draws = Gamma(0.5, 2.0).sample(stream(2, 1, 0), 5000)
    assert stats.kstest(draws, stats.gamma(0.5, scale=2.0).cdf).pvalue > 0.01


def test_uniforms_per_draw_are_fixed():
    # prefix consistency: drawing more never changes earlier draws
    for dist in ALL_LAWS:
        short = dist.sample(stream(9, 1, 3), 50)
        long = dist.sample(stream(9, 1, 3), 500)
        assert np.array_equal(short, long[:50])


def test_shape_one_scalar_draw():
    assert isinstance(Exponential(1.0).sample(stream(0, 1, 0)), float)


@pytest.mark.parametrize(
    "text, expected",
    [
        ("exp 2", Exponential(2.0)),
        ("erlang 2 1.5", Erlang(2, 1.5)),
        ("gamma 2 0.5", Gamma(2.0, 0.5)),
        ("const 1", Constant(1.0)),
        ("shifted-exp 0.5 2", ShiftedExponential(0.5, 2.0)),
        ("hyperexp 0.3 0.5 0.7 4", Hyperexponential((0.3, 0.7), (0.5, 4.0))),
        ("geom 0.25 0.5", Geometric(0.25, 0.5)),
    ],
)
def test_text_names(text, expected):
    assert parse_distribution(text) == expected
    assert parse_distribution(expected.to_text()) == expected


@pytest.mark.parametrize("text", ["", "weibull 1 2", "exp", "exp -1", "const 0", "erlang 1.5 1", "hyperexp 0.5 1 0.4 2", "exp x"])
def test_bad_text_rejected(text):
    with pytest.raises(ValueError):
        parse_distribution(text)


# analytic classes: exponential is both; increasing-failure-rate laws are NBU
# only; decreasing-failure-rate mixtures and gamma(shape < 1) are NWU only
@pytest.mark.parametrize(
    "dist, nbu, nwu",
    [
        (Exponential(0.3), True, True),
        (Exponential(5.0), True, True),
        (Erlang(2, 1.0), True, False),
        (Erlang(4, 3.0), True, False),
        (Constant(1.0), True, False),
        (ShiftedExponential(0.5, 2.0), True, False),
        (Gamma(0.5, 2.0), False, True),
        (Gamma(2.0, 0.5), True, False),
        (Hyperexponential((0.5, 0.5), (1.0, 3.0)), False, True),
        (Geometric(0.3, 1.0), True, False),
    ],
    ids=str,
)
def test_nbu_nwu_classification(dist, nbu, nwu):
    assert is_nbu(dist) is nbu
    assert is_nwu(dist) is nwu


def test_constant_violation_witness():
    # tau = t = 0.6: the joint tail is 0 while the product is 1
    c = Constant(1.0)
    assert float(c.ccdf(1.2)) == 0.0
    assert float(c.ccdf(0.6)) ** 2 == 1.0
    assert not is_nwu(c, grid_max=0.6, grid_step=0.6)


def test_grid_arguments_validated():
    with pytest.raises(ValueError):
        is_nbu(Exponential(1.0), grid_max=-1.0)


@settings(max_examples=30, deadline=None)
@given(k=st.integers(1, 6), rate=st.floats(0.1, 10))
def test_erlang_always_nbu(k, rate):
    assert is_nbu(Erlang(k, rate))


@settings(max_examples=30, deadline=None)
@given(w=st.floats(0.05, 0.95), r1=st.floats(0.1, 5), ratio=st.floats(1.5, 20))
def test_hyperexponential_always_nwu(w, r1, ratio):
    assert is_nwu(Hyperexponential((w, 1 - w), (r1, r1 * ratio)))
