"""Discrete-event core: service randomness, traces and the two engines.

Event order within one simulated instant is fixed: external arrivals (in
arrival-rank order), then link completions (in the order their services
started), then every idle link with waiting packets starts sending, in
link-id order. Packets that reach a link in the same instant are therefore
considered together before the link picks what to send.

A delivery at node ``j`` is forwarded to every outgoing link of ``j``, fresh
or not; the node's freshness ``u`` only moves up (``u = max(u, s)``).
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernel
from .distributions import Exponential
from .metrics import resets_from_deliveries
from .errors import HorizonExceededEventCap, IncompatibleCouplingMode, UnknownNode
from .model import POLICY_STREAM, SERVICE_STREAM, TICK_STREAM, NetworkGraph, Packets, Scenario, stream
from .policies import (
    ArrivalDecision,
    LinkState,
    PolicyKind,
    PolicySpec,
    on_packet_arrival,
    parse_policy,
    select_position,
    stalest_position,
)

__all__ = [
    "LinkState",
    "NodeState",
    "Trace",
    "IndexedDraws",
    "IndependentStreams",
    "PoissonEpochs",
    "deliver_packet",
    "run_simulation",
    "DEFAULT_EVENT_CAP",
]

DEFAULT_EVENT_CAP = 10**8


# ---------------------------------------------------------------------------
# service randomness
# ---------------------------------------------------------------------------


class IndexedDraws:
    """The k-th service started on link ``l`` lasts the k-th draw of the
    substream ``(seed, SERVICE_STREAM, l)``.

    A preempted service is restarted with the next draw. ``overrides`` maps
    ``(src, dst)`` to an explicit list of service times (used by tests).
    """

    mode = 0

    def __init__(self, seed: int = 0, overrides: Optional[dict] = None):
        self.seed = int(seed)
        self.overrides = {tuple(k): np.asarray(v, dtype=float) for k, v in (overrides or {}).items()}

    def draws(self, graph: NetworkGraph, link_id: int, count: int) -> np.ndarray:
        link = graph.links[link_id]
        if link.key in self.overrides:
            return self.overrides[link.key]
        return link.dist.sample(stream(self.seed, SERVICE_STREAM, link_id), int(count))

    def validate(self, graph: NetworkGraph):
        pass

    def __repr__(self):
        return f"IndexedDraws(seed={self.seed})"


# one independent indexed substream per link is exactly what an uncoupled run uses
IndependentStreams = IndexedDraws


class PoissonEpochs:
    """Each link owns a Poisson tick process at its service rate; a busy link
    completes at its first tick strictly after the service started.

    Valid only when every link law is exponential (memoryless).
    """

    mode = 1

    def __init__(self, seed: int = 0, overrides: Optional[dict] = None):
        self.seed = int(seed)
        self.overrides = {tuple(k): np.sort(np.asarray(v, dtype=float)) for k, v in (overrides or {}).items()}

    def validate(self, graph: NetworkGraph):
        for link in graph.links:
            if link.key not in self.overrides and not isinstance(link.dist, Exponential):
                raise IncompatibleCouplingMode(
                    f"Poisson epochs need exponential links; link {link.key} is {link.dist.to_text()}"
                )

    def ticks(self, graph: NetworkGraph, link_id: int, horizon: float) -> np.ndarray:
        """Tick times covering ``[0, horizon]``, terminated by ``inf``."""
        link = graph.links[link_id]
        if link.key in self.overrides:
            return np.append(self.overrides[link.key], math.inf)
        rate = link.dist.rate
        mu = rate * horizon
        count = int(mu + 6 * math.sqrt(mu) + 32)
        while True:
            rng = stream(self.seed, TICK_STREAM, link_id)
            t = np.cumsum(-np.log1p(-rng.random(count)) / rate)
            if t[-1] > horizon:
                return np.append(t, math.inf)
            count *= 2

    def __repr__(self):
        return f"PoissonEpochs(seed={self.seed})"


class _DrawCursor:
    def __init__(self, source, graph, link_id, count):
        self.source, self.graph, self.link_id = source, graph, link_id
        self.values = source.draws(graph, link_id, max(count, 16))
        self.k = 0

    def next_completion(self, t):
        if self.k >= len(self.values):
            if self.graph.links[self.link_id].key in self.source.overrides:
                raise RuntimeError(f"override service times exhausted on link {self.link_id}")
            self.values = self.source.draws(self.graph, self.link_id, 2 * len(self.values))
        d = self.values[self.k]
        self.k += 1
        return float(t + d)


class _TickCursor:
    def __init__(self, ticks):
        self.ticks = ticks
        self.k = 0

    def next_completion(self, t):
        while self.ticks[self.k] <= t:
            self.k += 1
        return float(self.ticks[self.k])


class _UniformCursor:
    def __init__(self, seed):
        self.seed = seed
        self.values = stream(seed, POLICY_STREAM).random(256)
        self.k = 0

    def __call__(self):
        if self.k >= len(self.values):
            self.values = stream(self.seed, POLICY_STREAM).random(2 * len(self.values))
        u = self.values[self.k]
        self.k += 1
        return float(u)


# ---------------------------------------------------------------------------
# node state and traces
# ---------------------------------------------------------------------------


@dataclass
class NodeState:
    """Freshness ``u`` of one node plus its age-improving deliveries."""

    node: int
    u: float = 0.0
    resets: list = field(default_factory=list)


def deliver_packet(state: NodeState, packet, time: float, graph: NetworkGraph) -> tuple:
    """Apply ``u <- max(u, s)`` and return the link ids the packet is
    forwarded on. ``packet`` is an ``(index, s)`` pair or a PacketRecord."""
    s = packet.s if hasattr(packet, "s") else packet[1]
    if s > state.u:
        state.u = s
        if state.resets and state.resets[-1][0] == time:
            state.resets[-1] = (time, s)
        else:
            state.resets.append((time, s))
    return graph.out_links(state.node)


@dataclass(frozen=True, eq=False)
class Trace:
    """Every delivery of one run, in processing order.

    Node-0 entries are the external arrivals (``via == -1``). ``indices`` are
    1-based packet indices and ``svals`` their generation times.
    """

    graph: NetworkGraph
    packets: Packets
    horizon: float
    policy: str
    times: np.ndarray
    nodes: np.ndarray
    indices: np.ndarray
    via: np.ndarray
    link_events: tuple = ()
    stats: dict = field(default_factory=dict)

    @property
    def svals(self) -> np.ndarray:
        return self.packets.s[self.indices - 1]

    @property
    def node0_arrivals(self):
        m = self.via == -1
        return list(zip(self.times[m].tolist(), self.indices[m].tolist()))

    @property
    def deliveries(self):
        """``(time, node, index, s)`` tuples."""
        return list(zip(self.times.tolist(), self.nodes.tolist(), self.indices.tolist(), self.svals.tolist()))

    def at_node(self, node: int):
        """Delivery times and generation times at ``node`` (time-ordered)."""
        if not 0 <= node < self.graph.node_count:
            raise UnknownNode(node)
        m = self.nodes == node
        return self.times[m], self.svals[m]

    def resets(self, node: int):
        """Age-improving deliveries ``(t_k, s_k)``, both strictly increasing."""
        return resets_from_deliveries(*self.at_node(node))

    def same_path(self, other: "Trace") -> bool:
        return (
            np.array_equal(self.times, other.times)
            and np.array_equal(self.nodes, other.nodes)
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.via, other.via)
        )


# ---------------------------------------------------------------------------
# engines
# ---------------------------------------------------------------------------


def _arrival_order(packets: Packets) -> np.ndarray:
    return np.argsort(packets.a0, kind="stable").astype(np.int64)


def _paths_from_gateway(graph: NetworkGraph) -> list:
    # walk counts capped to keep estimates finite on graphs with cycles
    counts = [0] * graph.node_count
    counts[0] = 1
    for _ in range(graph.node_count):
        new = [1] + [0] * (graph.node_count - 1)
        for link in graph.links:
            if link.dst != 0:
                new[link.dst] += counts[link.src]
        counts = [min(c, 10**6) for c in new]
    return counts


def _estimate_starts(graph, n, horizon, preemptive):
    paths = _paths_from_gateway(graph)
    est = []
    for link in graph.links:
        arrivals = n * paths[link.src] * (2 if preemptive else 1)
        capacity = horizon / link.dist.mean
        m = min(arrivals, capacity)
        est.append(int(1.2 * m + 6 * math.sqrt(m) + 64))
    return est


def _policy_seed(policy: PolicySpec, scenario: Scenario) -> int:
    return scenario.seed if policy.seed is None else policy.seed


def _run_fast(scenario, policy, source, event_cap):
    graph = scenario.graph
    packets = scenario.packets()
    horizon = float(scenario.horizon)
    L = len(graph.links)
    src = np.array([l.src for l in graph.links], np.int64)
    dst = np.array([l.dst for l in graph.links], np.int64)
    buf = np.array([-1 if math.isinf(l.buffer) else l.buffer for l in graph.links], np.int64)
    out_ptr = np.zeros(graph.node_count + 1, np.int64)
    out_links = []
    for j in range(graph.node_count):
        out_links.extend(graph.out_links(j))
        out_ptr[j + 1] = len(out_links)
    out_links = np.array(out_links, np.int64)
    order = _arrival_order(packets)
    s = np.ascontiguousarray(packets.s)
    a0 = np.ascontiguousarray(packets.a0)

    if source.mode == 1:
        rows = [source.ticks(graph, k, horizon) for k in range(L)]
        counts = [len(r) for r in rows]
    else:
        counts = _estimate_starts(graph, int(np.count_nonzero(a0 <= horizon)), horizon, policy.preemptive)
        rows = [source.draws(graph, k, counts[k]) for k in range(L)]
    n_rand = sum(counts) + 64 if policy.kind is PolicyKind.RANDOM_WC else 1
    pseed = _policy_seed(policy, scenario)

    while True:
        width = max([len(r) for r in rows] + [1])
        svc = np.full((max(L, 1), width), math.inf)
        for k, r in enumerate(rows):
            svc[k, : len(r)] = r
        svc_len = np.array([len(r) for r in rows] + [0] * (L == 0), np.int64)[: max(L, 1)]
        rand_u = stream(pseed, POLICY_STREAM).random(n_rand)
        status, info, dt, dn, dp, dl, starts, drops, preempts, events = _kernel.simulate(
            graph.node_count, src, dst, buf, out_ptr, out_links, s, a0, order, horizon,
            int(policy.kind), source.mode, svc, svc_len, rand_u, int(event_cap),
        )
        if status == _kernel.OK:
            break
        if status == _kernel.EVENT_CAP:
            raise HorizonExceededEventCap(f"more than {event_cap} events before the horizon")
        if status == _kernel.SERVICE_EXHAUSTED:
            if graph.links[info].key in source.overrides:
                raise RuntimeError(f"override service times exhausted on link {graph.links[info].key}")
            rows[info] = source.draws(graph, info, 2 * len(rows[info]))
        else:
            n_rand *= 2

    return Trace(
        graph=graph,
        packets=packets,
        horizon=horizon,
        policy=policy.name,
        times=dt.copy(),
        nodes=dn.copy(),
        indices=dp + 1,
        via=dl.copy(),
        stats={"starts": starts.copy(), "drops": drops.copy(), "preempts": preempts.copy(), "events": int(events)},
    )


def _run_reference(scenario, policy, source, event_cap, verbose):
    graph = scenario.graph
    packets = scenario.packets()
    horizon = float(scenario.horizon)
    L = len(graph.links)
    links = [LinkState(buffer=l.buffer) for l in graph.links]
    nodes = [NodeState(j) for j in range(graph.node_count)]
    if source.mode == 1:
        cursors = [_TickCursor(source.ticks(graph, k, horizon)) for k in range(L)]
    else:
        counts = _estimate_starts(graph, len(packets), horizon, policy.preemptive)
        cursors = [_DrawCursor(source, graph, k, counts[k]) for k in range(L)]
    uniform = _UniformCursor(_policy_seed(policy, scenario))
    service_seq = [0] * L
    log = []
    stats = {"starts": np.zeros(L, np.int64), "drops": np.zeros(L, np.int64), "preempts": np.zeros(L, np.int64)}
    times, where, which, via = [], [], [], []

    def emit(t, k, ev, pkt):
        if verbose:
            link = graph.links[k]
            log.append(f"t={float(t)!r} link={link.src}-{link.dst} ev={ev} pkt={pkt[0] + 1} s={float(pkt[1])!r}")

    seq = 0
    heap = []
    for rank, i in enumerate(_arrival_order(packets)):
        heapq.heappush(heap, (float(packets.a0[i]), 0, rank, int(i)))

    def start(k, pkt, t):
        nonlocal seq
        link = links[k]
        link.in_service = pkt
        link.completion = cursors[k].next_completion(t)
        service_seq[k] = seq
        heapq.heappush(heap, (link.completion, 1, seq, k))
        seq += 1
        stats["starts"][k] += 1

    def admit(k, pkt, t):
        link = links[k]
        decision = on_packet_arrival(policy, link, pkt)
        if decision is ArrivalDecision.PREEMPT_AND_SERVE:
            old = link.in_service
            emit(t, k, "preempt", old)
            stats["preempts"][k] += 1
            link.in_service = pkt
            admit(k, old, t)
            start(k, pkt, t)
            emit(t, k, "start", pkt)
        elif decision in (ArrivalDecision.START_SERVICE, ArrivalDecision.ENQUEUE):
            link.queue.append(pkt)
        elif decision is ArrivalDecision.ENQUEUE_EVICT_STALEST:
            victim = link.queue.pop(stalest_position(link.queue))
            stats["drops"][k] += 1
            emit(t, k, "drop", victim)
            link.queue.append(pkt)
        else:
            stats["drops"][k] += 1
            emit(t, k, "drop", pkt)

    def deliver(node, pkt, t, k):
        times.append(t)
        where.append(node)
        which.append(pkt[0])
        via.append(k)
        for out in deliver_packet(nodes[node], pkt, t, graph):
            admit(out, pkt, t)

    events = 0
    while heap and heap[0][0] <= horizon:
        t = heap[0][0]
        batch = []
        while heap and heap[0][0] == t:
            batch.append(heapq.heappop(heap))
        for _, kind, tag, payload in batch:
            if kind == 0:
                events += 1
                deliver(0, (payload, float(packets.s[payload])), t, -1)
            else:
                k = payload
                link = links[k]
                if not link.busy or service_seq[k] != tag or link.completion != t:
                    continue
                events += 1
                pkt = link.in_service
                link.in_service = None
                link.completion = math.inf
                emit(t, k, "complete", pkt)
                deliver(graph.links[k].dst, pkt, t, k)
        for k, link in enumerate(links):
            if link.busy or not link.queue:
                continue
            u = uniform() if policy.kind is PolicyKind.RANDOM_WC else None
            pos = select_position(policy, link.queue, u)
            if policy.kind is PolicyKind.RANDOM_WC:
                pkt = link.queue[pos]
                link.queue[pos] = link.queue[-1]
                link.queue.pop()
            else:
                pkt = link.queue.pop(pos)
            start(k, pkt, t)
            emit(t, k, "start", pkt)
        for k, link in enumerate(links):
            assert not link.queue or link.busy, f"link {k} idle with a non-empty queue at t={t}"
            assert len(link.queue) <= link.buffer, f"link {k} exceeds its buffer at t={t}"
        if events > event_cap:
            raise HorizonExceededEventCap(f"more than {event_cap} events before the horizon")

    stats["events"] = events
    return Trace(
        graph=graph,
        packets=packets,
        horizon=horizon,
        policy=policy.name,
        times=np.array(times, dtype=float),
        nodes=np.array(where, dtype=np.int64),
        indices=np.array(which, dtype=np.int64) + 1,
        via=np.array(via, dtype=np.int64),
        link_events=tuple(log),
        stats=stats,
    )


def run_simulation(
    scenario: Scenario,
    policy,
    service_source=None,
    *,
    engine: str = "fast",
    verbose: bool = False,
    event_cap: int = DEFAULT_EVENT_CAP,
) -> Trace:
    """Simulate ``scenario`` under ``policy`` up to its horizon.

    Parameters
    ----------
    scenario : Scenario
    policy : PolicySpec or str
        e.g. ``"prmp-lgfs"`` or ``PolicySpec(PolicyKind.RANDOM_WC, seed=3)``.
    service_source : IndexedDraws or PoissonEpochs, optional
        Defaults to ``IndexedDraws(scenario.seed)``.
    engine : {"fast", "reference"}
        ``verbose=True`` forces the reference engine, which also records the
        per-link event log and asserts work conservation at every instant.
    """
    policy = parse_policy(policy)
    scenario.validate()
    source = IndexedDraws(scenario.seed) if service_source is None else service_source
    source.validate(scenario.graph)
    if engine not in ("fast", "reference"):
        raise ValueError(f"unknown engine {engine!r}")
    if verbose or engine == "reference":
        return _run_reference(scenario, policy, source, event_cap, verbose)
    return _run_fast(scenario, policy, source, event_cap)
