"""Coupled comparisons of scheduling policies.

Runs several policies on shared randomness and checks per-path freshness
dominance. Also compares empirical distributions against a stochastic
order, and builds the queueing-free lower bound used in the factor-3 check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .engine import IndexedDraws, PoissonEpochs, Trace, run_simulation
from .errors import (
    DivisionByZeroAge,
    IncompatibleCouplingMode,
    NotTreeRestricted,
    ScenarioError,
    ScenarioMismatch,
    TooFewSamples,
)
from .metrics import age_process_from_deliveries
from .model import BOUND_STREAM, NetworkGraph, Scenario, stream
from .policies import parse_policy

__all__ = [
    "CouplingStream",
    "DominanceReport",
    "OrderingVerdict",
    "Factor3Result",
    "coupled_run",
    "check_sample_path_dominance",
    "empirical_stochastic_order",
    "infinite_server_lower_bound",
    "relaxed_delivery_times",
    "factor3_ratio",
    "MIN_ORDER_SAMPLES",
]

MIN_ORDER_SAMPLES = 100

_MODES = {
    "poisson-epochs": PoissonEpochs,
    "indexed": IndexedDraws,
}


@dataclass(frozen=True)
class CouplingStream:
    """Shared per-link service randomness for one coupled comparison.

    ``mode`` is ``"poisson-epochs"`` (every link ticks at its own Poisson
    rate; a busy link delivers at its next tick) or ``"indexed"`` (the k-th
    service on a link uses the k-th pre-drawn sample).
    """

    mode: str = "poisson-epochs"
    seed: int = 0
    overrides: Optional[dict] = None

    def __post_init__(self):
        if self.mode not in _MODES:
            raise IncompatibleCouplingMode(f"unknown coupling mode {self.mode!r}; expected one of {sorted(_MODES)}")

    def source(self):
        return _MODES[self.mode](self.seed, self.overrides)


def coupled_run(scenario: Scenario, policies: Sequence, coupling: CouplingStream) -> list:
    """Run every policy on the same packets and the same link randomness."""
    specs = [parse_policy(p) for p in policies]
    if coupling.mode == "indexed":
        preemptive = [p.name for p in specs if p.preemptive]
        if preemptive:
            raise IncompatibleCouplingMode(
                f"indexed service draws only couple non-preemptive policies; got {preemptive}"
            )
    source = coupling.source()
    source.validate(scenario.graph)
    return [run_simulation(scenario, p, source) for p in specs]


@dataclass(frozen=True)
class DominanceReport:
    holds: bool
    first_violation: Optional[tuple]  # (time, node, u_P, u_pi)
    checked: int

    def __bool__(self):
        return self.holds


def _freshness_at(trace: Trace, node: int, when: np.ndarray) -> np.ndarray:
    t, s = trace.at_node(node)
    if t.size == 0:
        return np.zeros(when.size)
    best = np.maximum.accumulate(s)
    k = np.searchsorted(t, when, side="right")
    return np.where(k > 0, best[np.maximum(k - 1, 0)], 0.0)


def check_sample_path_dominance(
    trace_p: Trace, trace_pi: Trace, graph: Optional[NetworkGraph] = None, horizon: Optional[float] = None
) -> DominanceReport:
    """Check ``u_P(t) >= u_pi(t)`` at every node and every event time.

    Both freshness vectors are right-continuous step functions that only
    move at deliveries, so checking every delivery instant of either trace
    is exhaustive.
    """
    graph = trace_p.graph if graph is None else graph
    if trace_p.packets != trace_pi.packets:
        raise ScenarioMismatch("traces were generated from different packet sequences")
    if trace_p.graph != graph or trace_pi.graph != graph:
        raise ScenarioMismatch("traces do not share the given graph")
    T = min(trace_p.horizon, trace_pi.horizon) if horizon is None else float(horizon)
    when = np.unique(np.concatenate([trace_p.times, trace_pi.times]))
    when = when[when <= T]
    first = None
    for node in range(graph.node_count):
        up = _freshness_at(trace_p, node, when)
        upi = _freshness_at(trace_pi, node, when)
        bad = np.nonzero(up < upi)[0]
        if bad.size:
            k = bad[0]
            cand = (float(when[k]), node, float(up[k]), float(upi[k]))
            if first is None or cand[0] < first[0]:
                first = cand
    return DominanceReport(first is None, first, int(when.size))


@dataclass(frozen=True)
class OrderingVerdict:
    consistent: bool
    max_ccdf_excess: float
    band: float
    grid: np.ndarray
    n_x: int
    n_y: int
    confidence: float


def _ccdf(sorted_values: np.ndarray, grid: np.ndarray) -> np.ndarray:
    return 1.0 - np.searchsorted(sorted_values, grid, side="right") / sorted_values.size


def empirical_stochastic_order(samples_x, samples_y, grid=None, confidence: float = 0.99) -> OrderingVerdict:
    """Is the data consistent with ``X <=_st Y``?

    Compares empirical tail functions on ``grid`` (default: every observed
    value, which makes the sup exact). The tolerance is the sum of the two
    one-sample DKW radii at level ``1 - confidence``. Infinite values are
    allowed and count as exceeding every grid point.
    """
    x = np.sort(np.asarray(samples_x, dtype=float))
    y = np.sort(np.asarray(samples_y, dtype=float))
    if x.size < MIN_ORDER_SAMPLES or y.size < MIN_ORDER_SAMPLES:
        raise TooFewSamples(f"need at least {MIN_ORDER_SAMPLES} samples per side, got {x.size} and {y.size}")
    if not 0 < confidence < 1:
        raise ValueError("confidence must lie in (0, 1)")
    if grid is None:
        both = np.concatenate([x, y])
        grid = np.unique(both[np.isfinite(both)])
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("the comparison grid is empty")
    excess = float(np.max(_ccdf(x, grid) - _ccdf(y, grid)))
    level = math.log(2.0 / (1.0 - confidence))
    band = math.sqrt(level / (2 * x.size)) + math.sqrt(level / (2 * y.size))
    return OrderingVerdict(excess <= band, excess, band, grid, int(x.size), int(y.size), float(confidence))


def relaxed_delivery_times(scenario: Scenario, seed: Optional[int] = None, samples: Optional[dict] = None) -> list:
    """Per-node delivery times of every packet when no packet ever waits.

    A packet reaches node ``j`` at its gateway arrival time plus one fresh
    service draw per link of the unique path to ``j``. Draws for link ``l``
    come from substream ``(seed, BOUND_STREAM, l)``, one per packet in index
    order; ``samples`` maps ``(src, dst)`` to explicit per-packet draws.
    """
    graph = scenario.graph
    if not graph.is_tree:
        raise NotTreeRestricted("the lower bound needs a tree: every non-gateway node fed by exactly one link")
    if any(not math.isinf(link.buffer) for link in graph.links):
        raise ScenarioError("the lower bound assumes infinite buffers")
    seed = scenario.seed if seed is None else int(seed)
    samples = {tuple(k): np.asarray(v, dtype=float) for k, v in (samples or {}).items()}
    packets = scenario.packets()
    n = len(packets)
    arrive = [None] * graph.node_count
    arrive[0] = packets.a0.astype(float)
    pending = [0]
    while pending:
        j = pending.pop()
        for lid in graph.out_links(j):
            link = graph.links[lid]
            if link.key in samples:
                d = samples[link.key]
                if d.size < n:
                    raise ValueError(f"explicit samples for link {link.key} cover {d.size} of {n} packets")
                d = d[:n]
            else:
                d = link.dist.sample(stream(seed, BOUND_STREAM, lid), n)
            arrive[link.dst] = arrive[j] + d
            pending.append(link.dst)
    return arrive


def infinite_server_lower_bound(scenario: Scenario, seed: Optional[int] = None, samples: Optional[dict] = None) -> list:
    """One AgeProcess per node for the wait-free relaxation.

    No non-preemptive policy can deliver a packet earlier than this system
    does, so its ages bound theirs from below. See
    :func:`relaxed_delivery_times` for how the randomness is drawn.
    """
    arrive = relaxed_delivery_times(scenario, seed, samples)
    s = scenario.packets().s
    T = float(scenario.horizon)
    return [age_process_from_deliveries(t, s, T) for t in arrive]


@dataclass(frozen=True)
class Factor3Result:
    ratios: tuple
    within_factor3: bool

    def __iter__(self):
        return iter(self.ratios)


def factor3_ratio(policy_avg_age, lower_bound_avg_age) -> Factor3Result:
    """Element-wise ``policy / bound``; flags whether every ratio is <= 3."""
    p = np.atleast_1d(np.asarray(policy_avg_age, dtype=float))
    b = np.atleast_1d(np.asarray(lower_bound_avg_age, dtype=float))
    if p.shape != b.shape:
        raise ValueError("policy and bound ages must have the same length")
    if np.any(b <= 0):
        raise DivisionByZeroAge("lower-bound average age must be positive")
    ratios = tuple(float(r) for r in p / b)
    return Factor3Result(ratios, all(r <= 3.0 for r in ratios))
