"""One station with ``m`` parallel servers sharing a single queue.

Packets arrive at node 0 and are delivered to node 1. Instant semantics
match the network engine: arrivals first, then completions in start order,
then idle servers pick from the queue in server-index order. With ``m = 1``
the trace is identical to a single-link network run with the same seed.

A preemptive policy interrupts the server holding the stalest packet (ties
to the lowest server index) when every server is busy and the newcomer is
strictly fresher. The interrupted service is abandoned and the newcomer
starts on a fresh draw.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .distributions import Distribution, is_nwu
from .engine import IndexedDraws, Trace, _DrawCursor, _UniformCursor
from .errors import BadServerCount, ScenarioError
from .model import INF, ArrivalSpec, ConstantDelay, NetworkGraph, Packets, build_graph, generate_arrivals
from .policies import PolicyKind, parse_policy, select_position, stalest_position

__all__ = ["MultiServerScenario", "run_multiserver_nwu", "in_order_arrivals"]


def in_order_arrivals(rate: float, horizon: float, seed: int, process: str = "poisson") -> Packets:
    """Renewal arrivals that reach the station the moment they are generated."""
    return generate_arrivals(ArrivalSpec(rate, process, ConstantDelay(0.0)), horizon, seed)


@dataclass(frozen=True)
class MultiServerScenario:
    servers: int
    service: Distribution
    arrivals: Packets
    horizon: float
    buffer: float = INF
    require_nwu: bool = False

    def __post_init__(self):
        if isinstance(self.servers, bool) or not isinstance(self.servers, (int, np.integer)) or self.servers < 1:
            raise BadServerCount(f"server count must be a positive integer, got {self.servers!r}")
        if not isinstance(self.arrivals, Packets):
            object.__setattr__(self, "arrivals", Packets.from_records(self.arrivals))
        if np.any(np.diff(self.arrivals.a0) < 0):
            raise ScenarioError("multi-server arrivals must be in order (a0 non-decreasing with the index)")
        if not self.horizon > 0:
            raise ScenarioError("horizon must be positive")
        if self.require_nwu and not is_nwu(self.service):
            raise ScenarioError(f"{self.service.to_text()} is not NWU")

    @property
    def graph(self) -> NetworkGraph:
        return build_graph(2, [(0, 1, self.buffer, self.service)])


def run_multiserver_nwu(ms: MultiServerScenario, policy, seed: int = 0) -> Trace:
    """Simulate the station; service draws come from ``(seed, SERVICE_STREAM, 0)``
    in service-start order."""
    policy = parse_policy(policy)
    graph = ms.graph
    packets = ms.arrivals
    T = float(ms.horizon)
    m = int(ms.servers)
    buffer = graph.links[0].buffer
    n_in = int(np.count_nonzero(packets.a0 <= T))
    draws = _DrawCursor(IndexedDraws(seed), graph, 0, 2 * n_in + 64)
    uniform = _UniformCursor(seed if policy.seed is None else policy.seed)

    serving = [None] * m
    finish = [math.inf] * m
    tags = [-1] * m
    queue = []
    heap = [(float(packets.a0[i]), 0, i, i) for i in range(len(packets))]
    heapq.heapify(heap)
    seq = 0
    times, nodes, which, via = [], [], [], []
    stats = {"starts": np.zeros(1, np.int64), "drops": np.zeros(1, np.int64), "preempts": np.zeros(1, np.int64)}

    def start(k, pkt, t):
        nonlocal seq
        serving[k] = pkt
        finish[k] = draws.next_completion(t)
        tags[k] = seq
        heapq.heappush(heap, (finish[k], 1, seq, k))
        seq += 1
        stats["starts"][0] += 1

    def enqueue(pkt, idle):
        if len(queue) < buffer + idle:
            queue.append(pkt)
        elif policy.evicts_stalest and queue and pkt[1] > queue[stalest_position(queue)][1]:
            queue.pop(stalest_position(queue))
            queue.append(pkt)
            stats["drops"][0] += 1
        else:
            stats["drops"][0] += 1

    def admit(pkt, t):
        idle = sum(1 for p in serving if p is None)
        if policy.preemptive and idle == 0:
            k = min(range(m), key=lambda j: (serving[j][1], serving[j][0], j))
            if pkt[1] > serving[k][1]:
                old = serving[k]
                stats["preempts"][0] += 1
                serving[k] = pkt
                enqueue(old, 0)
                start(k, pkt, t)
                return
        enqueue(pkt, idle)

    events = 0
    while heap and heap[0][0] <= T:
        t = heap[0][0]
        batch = []
        while heap and heap[0][0] == t:
            batch.append(heapq.heappop(heap))
        for _, kind, tag, payload in batch:
            if kind == 0:
                pkt = (payload, float(packets.s[payload]))
                node, link = 0, -1
            else:
                k = payload
                if serving[k] is None or tags[k] != tag or finish[k] != t:
                    continue
                pkt = serving[k]
                serving[k] = None
                finish[k] = math.inf
                node, link = 1, 0
            events += 1
            times.append(t)
            nodes.append(node)
            which.append(pkt[0])
            via.append(link)
            if node == 0:
                admit(pkt, t)
        for k in range(m):
            if serving[k] is None and queue:
                u = uniform() if policy.kind is PolicyKind.RANDOM_WC else None
                pos = select_position(policy, queue, u)
                if policy.kind is PolicyKind.RANDOM_WC:
                    pkt = queue[pos]
                    queue[pos] = queue[-1]
                    queue.pop()
                else:
                    pkt = queue.pop(pos)
                start(k, pkt, t)

    stats["events"] = events
    return Trace(
        graph=graph,
        packets=packets,
        horizon=T,
        policy=policy.name,
        times=np.array(times, dtype=float),
        nodes=np.array(nodes, dtype=np.int64),
        indices=np.array(which, dtype=np.int64) + 1,
        via=np.array(via, dtype=np.int64),
        stats=stats,
    )
