import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from multihop_aoi.distributions import Constant
from multihop_aoi.engine import Trace
from multihop_aoi.errors import NonMonotonePenalty, NoPeaks, UnknownNode
from multihop_aoi.metrics import (
    AgeProcess,
    ExpPenalty,
    Penalty,
    adaptive_simpson,
    age_process,
    age_process_from_deliveries,
    average_age_penalty,
    average_peak_age,
    completion_times,
    peak_ages,
    resets_from_deliveries,
    time_average_age,
)
from multihop_aoi.model import INF, Packets, build_graph

SAWTOOTH = AgeProcess.from_resets([(2.0, 1.0), (5.0, 4.0)], horizon=6.0)


def trace_at_node1(deliveries, svals, horizon=10.0):
    """Hand-made trace: ``deliveries`` is a list of (time, packet index)."""
    g = build_graph(2, [(0, 1, INF, Constant(1.0))])
    packets = Packets(np.array(svals, float), np.array(svals, float))
    return Trace(
        graph=g,
        packets=packets,
        horizon=horizon,
        policy="hand",
        times=np.array([t for t, _ in deliveries], float),
        nodes=np.ones(len(deliveries), np.int64),
        indices=np.array([i for _, i in deliveries], np.int64),
        via=np.zeros(len(deliveries), np.int64),
    )


def test_sawtooth_average_age():
    assert abs(time_average_age(SAWTOOTH) - 11 / 6) <= 1e-12


def test_sawtooth_peak_age():
    assert peak_ages(SAWTOOTH).tolist() == [2.0, 4.0]
    assert abs(average_peak_age(SAWTOOTH) - 3.0) <= 1e-12


def test_sawtooth_penalties():
    assert abs(average_age_penalty(SAWTOOTH, "identity") - 11 / 6) <= 1e-12
    assert abs(average_age_penalty(SAWTOOTH, "square") - 13 / 3) <= 1e-12
    assert average_age_penalty(SAWTOOTH, lambda x: 0.0) == 0.0


def test_numeric_penalty_agrees_with_closed_form():
    cube = Penalty(lambda x: x**3, None, "cube")
    exact = sum(((b**4 - a**4) / 4) for a, b in [(0, 2), (1, 4), (1, 2)]) / 6
    assert average_age_penalty(SAWTOOTH, cube) == pytest.approx(exact, abs=1e-9)
    e = ExpPenalty(0.5)
    numeric = average_age_penalty(SAWTOOTH, lambda x: math.exp(0.5 * x))
    assert average_age_penalty(SAWTOOTH, e) == pytest.approx(numeric, abs=1e-8)


def test_simpson():
    assert adaptive_simpson(math.sin, 0.0, math.pi) == pytest.approx(2.0, abs=1e-9)


def test_decreasing_penalty_rejected():
    with pytest.raises(NonMonotonePenalty):
        average_age_penalty(SAWTOOTH, lambda x: -x)
    with pytest.raises(NonMonotonePenalty):
        average_age_penalty(SAWTOOTH, lambda x: math.cos(x) + 1)


def test_empty_process():
    empty = AgeProcess.from_resets([], horizon=4.0)
    assert time_average_age(empty) == 2.0
    assert empty(3.0) == 3.0
    with pytest.raises(NoPeaks):
        average_peak_age(empty)


def test_single_reset():
    p = AgeProcess.from_resets([(1.0, 1.0)], horizon=1.0)
    assert time_average_age(p) == 0.5
    assert average_peak_age(p) == 1.0
    q = AgeProcess.from_resets([(1.0, 1.0)], horizon=3.0)
    assert q(np.array([0.5, 1.0, 2.0])).tolist() == [0.5, 0.0, 1.0]


def test_stale_delivery_is_not_a_reset():
    t, s = resets_from_deliveries([2.0, 5.0, 5.5], [1.0, 4.0, 3.0])
    assert list(zip(t, s)) == [(2.0, 1.0), (5.0, 4.0)]


def test_same_instant_resets_merge():
    t, s = resets_from_deliveries([2.0, 2.0, 3.0], [1.0, 1.5, 1.5])
    assert list(zip(t, s)) == [(2.0, 1.5)]
    assert resets_from_deliveries([1.0], [0.0])[0].size == 0


def test_from_deliveries_sorts_by_time():
    p = age_process_from_deliveries([5.0, 2.0, 7.0], [4.0, 1.0, 2.0], 6.0)
    assert p.resets == [(2.0, 1.0), (5.0, 4.0)]


def test_bad_reset_lists():
    with pytest.raises(ValueError):
        AgeProcess.from_resets([(2.0, 1.0), (2.0, 3.0)], 5.0)
    with pytest.raises(ValueError):
        AgeProcess.from_resets([(2.0, 1.0), (3.0, 1.0)], 5.0)


def test_age_process_from_trace():
    tr = trace_at_node1([(2.0, 1), (5.0, 3), (5.5, 2)], [1.0, 3.0, 4.0], horizon=6.0)
    p = age_process(tr, 1)
    assert p.resets == [(2.0, 1.0), (5.0, 4.0)]
    assert abs(time_average_age(p) - 11 / 6) <= 1e-12
    with pytest.raises(UnknownNode):
        age_process(tr, 2)
    # a shorter horizon drops later resets
    assert age_process(tr, 1, horizon=4.0).resets == [(2.0, 1.0)]


def test_completion_supersession():
    tr = trace_at_node1([(3.0, 2)], [1.0, 5.0])
    assert completion_times(tr, 1) == {1: 3.0, 2: 3.0}


def test_completion_single_and_censored():
    tr = trace_at_node1([(2.0, 1)], [0.5, 9.0])
    assert completion_times(tr, 1) == {1: 2.0}
    assert completion_times(trace_at_node1([], [1.0]), 1) == {}
    with pytest.raises(UnknownNode):
        completion_times(tr, 7)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 50), st.integers(0, 7)), max_size=20), st.lists(st.floats(0, 40), min_size=8, max_size=8))
def test_completion_monotone_in_generation_time(raw, svals):
    svals = sorted(svals)
    deliveries = sorted((t, i + 1) for t, i in raw)
    c = completion_times(trace_at_node1(deliveries, svals, horizon=60.0), 1)
    for i in c:
        for j in range(1, 9):
            if svals[j - 1] <= svals[i - 1]:
                assert j in c and c[j] <= c[i]


# ---------------------------------------------------------------------------
# generated age processes
# ---------------------------------------------------------------------------


@st.composite
def age_processes(draw, horizon=20.0):
    k = draw(st.integers(0, 8))
    gaps = draw(st.lists(st.floats(0.05, 3.0), min_size=k, max_size=k))
    lags = draw(st.lists(st.floats(0.0, 2.0), min_size=k, max_size=k))
    t = np.cumsum(gaps)
    s = t - np.array(lags)
    t, s = resets_from_deliveries(t, np.maximum(s, 0.0))
    return AgeProcess(t, s, horizon)


def _fresher_copy(p: AgeProcess, shift: float) -> AgeProcess:
    # every reset delivers fresher content at the same time: pointwise smaller age
    s = np.minimum(p.reset_values + shift, p.reset_times)
    t, s = resets_from_deliveries(p.reset_times, s)
    return AgeProcess(t, s, p.horizon)


@settings(max_examples=150, deadline=None)
@given(age_processes())
def test_age_is_nonnegative_and_identity_matches(p):
    grid = np.linspace(0, p.horizon, 401)
    assert np.all(p(grid) >= -1e-12)
    g1 = time_average_age(p)
    assert abs(average_age_penalty(p, "identity") - g1) <= 1e-12
    if p.reset_times.size:
        gaps = np.diff(np.concatenate([[0.0], p.reset_times[p.reset_times <= p.horizon]]))
        assert g1 * p.horizon >= np.sum(gaps**2) / 2 - 1e-9


@settings(max_examples=150, deadline=None)
@given(age_processes(), st.floats(0.0, 2.0), st.sampled_from(["identity", "square", "exp"]))
def test_smaller_age_gives_smaller_functionals(p, shift, which):
    q = _fresher_copy(p, shift)
    grid = np.linspace(0, p.horizon, 401)
    assume(np.all(q(grid) <= p(grid) + 1e-12))
    h = ExpPenalty(0.3) if which == "exp" else which
    assert time_average_age(q) <= time_average_age(p) + 1e-12
    assert average_age_penalty(q, h) <= average_age_penalty(p, h) + 1e-9
