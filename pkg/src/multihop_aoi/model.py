"""Packets, topology, scenarios and arrival-sequence generation."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterator, Sequence, Union

import numpy as np

from .distributions import Distribution, Erlang, Exponential
from .errors import (
    BadNodeId,
    BadRate,
    DuplicateLink,
    EmptyHorizon,
    ScenarioError,
    SelfLoop,
    UnreachableNode,
)

__all__ = [
    "PacketRecord",
    "Packets",
    "Link",
    "NetworkGraph",
    "build_graph",
    "TwoPointDelay",
    "ConstantDelay",
    "ExponentialDelay",
    "ArrivalSpec",
    "Scenario",
    "generate_arrivals",
    "stream",
    "INF",
]

INF = math.inf

# spawn-key prefixes of the independent random streams derived from one seed
ARRIVAL_STREAM = 0
SERVICE_STREAM = 1
TICK_STREAM = 2
POLICY_STREAM = 3
BOUND_STREAM = 4


def stream(seed: int, *key: int) -> np.random.Generator:
    """Generator for the substream ``key`` of ``seed``."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key)))


@dataclass(frozen=True)
class PacketRecord:
    index: int
    s: float
    a0: float


class Packets(Sequence[PacketRecord]):
    """Immutable, array-backed sequence of :class:`PacketRecord`.

    Indices are 1-based in the records; ``s`` and ``a0`` are exposed as
    read-only numpy arrays in generation order.
    """

    def __init__(self, s, a0):
        s = np.array(s, dtype=float).reshape(-1)
        a0 = np.array(a0, dtype=float).reshape(-1)
        if s.shape != a0.shape:
            raise ScenarioError("s and a0 must have the same length")
        if s.size:
            if s[0] < 0 or np.any(np.diff(s) < 0):
                raise ScenarioError("generation times must be non-negative and non-decreasing")
            if np.any(a0 < s):
                raise ScenarioError("every packet must arrive at node 0 no earlier than it was generated")
            if not (np.all(np.isfinite(s)) and np.all(np.isfinite(a0))):
                raise ScenarioError("packet times must be finite")
        s.flags.writeable = False
        a0.flags.writeable = False
        self.s = s
        self.a0 = a0

    @classmethod
    def from_records(cls, records) -> "Packets":
        records = sorted(records, key=lambda r: r.index)
        if [r.index for r in records] != list(range(1, len(records) + 1)):
            raise ScenarioError("packet indices must be 1..n")
        return cls([r.s for r in records], [r.a0 for r in records])

    @classmethod
    def from_pairs(cls, pairs) -> "Packets":
        """``[(s, a0), ...]`` in generation order."""
        pairs = list(pairs)
        return cls([p[0] for p in pairs], [p[1] for p in pairs])

    def __len__(self):
        return self.s.size

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[j] for j in range(*i.indices(len(self)))]
        if i < 0:
            i += len(self)
        if not 0 <= i < len(self):
            raise IndexError(i)
        return PacketRecord(i + 1, float(self.s[i]), float(self.a0[i]))

    def __iter__(self) -> Iterator[PacketRecord]:
        for i in range(len(self)):
            yield PacketRecord(i + 1, float(self.s[i]), float(self.a0[i]))

    def __eq__(self, other):
        if isinstance(other, Packets):
            return np.array_equal(self.s, other.s) and np.array_equal(self.a0, other.a0)
        return NotImplemented

    def __hash__(self):
        return hash((self.s.tobytes(), self.a0.tobytes()))

    def __repr__(self):
        return f"Packets(n={len(self)})"

    def tobytes(self) -> bytes:
        return self.s.tobytes() + self.a0.tobytes()


@dataclass(frozen=True)
class Link:
    src: int
    dst: int
    buffer: float = INF
    dist: Distribution = field(default_factory=lambda: Exponential(1.0))

    @property
    def key(self):
        return (self.src, self.dst)


@dataclass(frozen=True)
class NetworkGraph:
    """Directed topology; build it with :func:`build_graph`."""

    node_count: int
    links: tuple

    def out_links(self, node: int) -> tuple:
        """Link ids leaving ``node`` in ascending order."""
        return self._out[node]

    def link_id(self, src: int, dst: int) -> int:
        for k, link in enumerate(self.links):
            if link.src == src and link.dst == dst:
                return k
        raise KeyError((src, dst))

    def in_degree(self, node: int) -> int:
        return sum(1 for link in self.links if link.dst == node)

    @property
    def is_tree(self) -> bool:
        """True when every non-gateway node has exactly one feeding link."""
        return self.in_degree(0) == 0 and all(self.in_degree(j) == 1 for j in range(1, self.node_count))

    def path_links(self, node: int) -> list:
        """Link ids on the unique gateway-to-``node`` path of a tree graph."""
        parent = {link.dst: k for k, link in enumerate(self.links)}
        path = []
        while node != 0:
            k = parent[node]
            path.append(k)
            node = self.links[k].src
            if len(path) > self.node_count:
                raise ScenarioError("cycle on the path to the gateway")
        return path[::-1]

    @property
    def all_exponential(self) -> bool:
        return all(isinstance(link.dist, Exponential) for link in self.links)

    def with_buffers(self, buffer) -> "NetworkGraph":
        links = [Link(l.src, l.dst, buffer, l.dist) for l in self.links]
        return build_graph(self.node_count, links)

    @property
    def _out(self):
        cache = self.__dict__.get("_out_cache")
        if cache is None:
            cache = tuple(
                tuple(k for k, link in enumerate(self.links) if link.src == j) for j in range(self.node_count)
            )
            object.__setattr__(self, "_out_cache", cache)
        return cache


def _as_buffer(b):
    if b is None or b == INF or (isinstance(b, str) and b.lower() in ("inf", "infinite")):
        return INF
    if isinstance(b, float) and b.is_integer():
        b = int(b)
    if not isinstance(b, (int, np.integer)) or b < 0:
        raise ScenarioError(f"buffer must be a non-negative integer or infinite, got {b!r}")
    return int(b)


def build_graph(node_count: int, link_list) -> NetworkGraph:
    """Validate a topology.

    ``link_list`` holds :class:`Link` objects or ``(src, dst[, buffer[, dist]])``
    tuples. Links are stored sorted by ``(src, dst)`` so link ids are
    canonical.
    """
    if int(node_count) != node_count or node_count < 1:
        raise BadNodeId(f"node_count must be a positive integer, got {node_count!r}")
    node_count = int(node_count)
    links = []
    seen = set()
    for entry in link_list:
        if not isinstance(entry, Link):
            entry = tuple(entry)
            if len(entry) < 2:
                raise ScenarioError(f"link needs at least (src, dst): {entry!r}")
            src, dst = entry[0], entry[1]
            buffer = entry[2] if len(entry) > 2 else INF
            dist = entry[3] if len(entry) > 3 else Exponential(1.0)
            entry = Link(src, dst, buffer, dist)
        for node in (entry.src, entry.dst):
            if int(node) != node or not 0 <= node < node_count:
                raise BadNodeId(f"node id {node!r} outside 0..{node_count - 1}")
        if entry.src == entry.dst:
            raise SelfLoop(f"self-loop at node {entry.src}")
        if entry.key in seen:
            raise DuplicateLink(f"duplicate link {entry.key}")
        if not isinstance(entry.dist, Distribution):
            raise ScenarioError(f"link {entry.key} has no valid distribution")
        seen.add(entry.key)
        links.append(Link(int(entry.src), int(entry.dst), _as_buffer(entry.buffer), entry.dist))
    links.sort(key=lambda l: l.key)

    reached = {0}
    todo = deque([0])
    while todo:
        i = todo.popleft()
        for link in links:
            if link.src == i and link.dst not in reached:
                reached.add(link.dst)
                todo.append(link.dst)
    missing = sorted(set(range(node_count)) - reached)
    if missing:
        raise UnreachableNode(f"nodes {missing} are not reachable from the gateway")
    return NetworkGraph(node_count, tuple(links))


@dataclass(frozen=True)
class TwoPointDelay:
    """Gateway delay equal to ``low`` w.p. ``p_low`` and ``high`` otherwise."""

    low: float = 1.0
    high: float = 100.0
    p_low: float = 0.5

    def sample(self, rng, size):
        u = rng.random(size)
        return np.where(u < self.p_low, float(self.low), float(self.high))

    def to_text(self):
        return f"two-point {self.low!r} {self.high!r} {self.p_low!r}"


@dataclass(frozen=True)
class ConstantDelay:
    c: float = 0.0

    def sample(self, rng, size):
        rng.random(size)
        return np.full(size, float(self.c))

    def to_text(self):
        return f"const {self.c!r}"


@dataclass(frozen=True)
class ExponentialDelay:
    mean: float = 1.0

    def sample(self, rng, size):
        return -np.log1p(-rng.random(size)) * self.mean

    def to_text(self):
        return f"exp {self.mean!r}"


def parse_delay(text: str):
    parts = text.split()
    if not parts:
        raise ValueError("empty delay model")
    name, vals = parts[0].lower(), [float(v) for v in parts[1:]]
    if name == "two-point" and len(vals) in (2, 3):
        return TwoPointDelay(*vals)
    if name == "const" and len(vals) == 1 and vals[0] >= 0:
        return ConstantDelay(vals[0])
    if name == "exp" and len(vals) == 1 and vals[0] > 0:
        return ExponentialDelay(vals[0])
    raise ValueError(f"bad delay model {text!r}")


_PROCESSES = ("erlang2", "poisson", "periodic")


@dataclass(frozen=True)
class ArrivalSpec:
    """Renewal generation process with a pluggable gateway delay.

    ``process`` is ``"erlang2"`` (Erlang-2 gaps), ``"poisson"`` or
    ``"periodic"``; gaps have mean ``1/rate``.
    """

    rate: float
    process: str = "erlang2"
    delay: object = field(default_factory=TwoPointDelay)

    def __post_init__(self):
        if self.process not in _PROCESSES:
            raise ScenarioError(f"unknown arrival process {self.process!r}")

    def with_rate(self, rate) -> "ArrivalSpec":
        return ArrivalSpec(rate, self.process, self.delay)


def generate_arrivals(spec: ArrivalSpec, horizon: float, seed: int) -> Packets:
    """Generation times from a renewal process truncated at ``horizon``.

    The first packet is generated one gap after time 0. Gateway arrival
    times ``a0 = s + delay`` may exceed the horizon and may be out of order.
    """
    if not spec.rate > 0 or not math.isfinite(spec.rate):
        raise BadRate(f"generation rate must be positive, got {spec.rate!r}")
    if not horizon > 0:
        raise EmptyHorizon(f"horizon must be positive, got {horizon!r}")
    rng = stream(seed, ARRIVAL_STREAM)
    if spec.process == "periodic":
        s = np.arange(1, int(math.floor(horizon * spec.rate)) + 2) / spec.rate
    else:
        gap = Erlang(2, 2 * spec.rate) if spec.process == "erlang2" else Exponential(spec.rate)
        chunk = int(horizon * spec.rate * 1.1) + 64
        parts, total = [], 0.0
        while total < horizon:
            g = gap.sample(rng, chunk)
            parts.append(g)
            total += g.sum()
        s = np.cumsum(np.concatenate(parts))
    s = s[s < horizon]
    a0 = s + spec.delay.sample(rng, s.size)
    return Packets(s, a0)


@dataclass(frozen=True)
class Scenario:
    """Everything a run needs besides the policy and the service randomness."""

    graph: NetworkGraph
    arrivals: Union[ArrivalSpec, Packets]
    horizon: float
    seed: int = 0
    tree_restricted: bool = False

    def __post_init__(self):
        if not self.horizon > 0:
            raise EmptyHorizon(f"horizon must be positive, got {self.horizon!r}")
        if not isinstance(self.arrivals, (ArrivalSpec, Packets)):
            object.__setattr__(self, "arrivals", Packets.from_records(self.arrivals))
        if self.tree_restricted and not all(self.graph.in_degree(j) <= 1 for j in range(1, self.graph.node_count)):
            raise ScenarioError("tree_restricted scenarios need in-degree <= 1 at every non-gateway node")

    def packets(self) -> Packets:
        if isinstance(self.arrivals, Packets):
            return self.arrivals
        cache = self.__dict__.get("_packets")
        if cache is None:
            cache = generate_arrivals(self.arrivals, self.horizon, self.seed)
            object.__setattr__(self, "_packets", cache)
        return cache

    def validate(self) -> "Scenario":
        self.packets()
        return self
