"""Scheduling disciplines as decision functions over a link's state.

Both engines share the conventions encoded here:

* LGFS disciplines serve the largest generation time, ties to the highest
  packet index.
* "Stalest" is the smallest ``(s, index)``; when the buffer is full an
  LGFS/LCFS link evicts its stalest queued packet if the newcomer is
  strictly fresher, otherwise the newcomer is dropped. FCFS and random-WC
  always drop the newcomer.
* An idle link admits up to ``B + 1`` packets during one instant (one of
  them goes straight into service when the instant closes).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

from .errors import UnsupportedPolicy

__all__ = [
    "PolicyKind",
    "PolicySpec",
    "ArrivalDecision",
    "LinkState",
    "on_packet_arrival",
    "on_service_complete",
    "select_position",
    "stalest_position",
    "parse_policy",
    "POLICY_NAMES",
]


class PolicyKind(enum.IntEnum):
    # values double as the numeric policy codes of the compiled kernel
    PRMP_LGFS = 0
    NP_LGFS = 1
    NP_LCFS = 2
    FCFS = 3
    RANDOM_WC = 4


POLICY_NAMES = {
    "prmp-lgfs": PolicyKind.PRMP_LGFS,
    "np-lgfs": PolicyKind.NP_LGFS,
    "np-lcfs": PolicyKind.NP_LCFS,
    "fcfs": PolicyKind.FCFS,
    "random-wc": PolicyKind.RANDOM_WC,
}
_NAME_OF = {v: k for k, v in POLICY_NAMES.items()}


@dataclass(frozen=True)
class PolicySpec:
    kind: PolicyKind
    seed: Optional[int] = None  # only used by RANDOM_WC

    def __post_init__(self):
        try:
            object.__setattr__(self, "kind", PolicyKind(self.kind))
        except ValueError:
            raise UnsupportedPolicy(f"unknown policy kind {self.kind!r}") from None

    @property
    def name(self) -> str:
        return _NAME_OF[self.kind]

    @property
    def preemptive(self) -> bool:
        return self.kind is PolicyKind.PRMP_LGFS

    @property
    def work_conserving(self) -> bool:
        return True

    @property
    def evicts_stalest(self) -> bool:
        return self.kind in (PolicyKind.PRMP_LGFS, PolicyKind.NP_LGFS, PolicyKind.NP_LCFS)

    def __str__(self):
        return self.name


def parse_policy(name, seed=None) -> PolicySpec:
    if isinstance(name, PolicySpec):
        return name
    if isinstance(name, PolicyKind):
        return PolicySpec(name, seed)
    try:
        return PolicySpec(POLICY_NAMES[str(name).lower()], seed)
    except KeyError:
        raise UnsupportedPolicy(f"unknown policy {name!r}; expected one of {sorted(POLICY_NAMES)}") from None


class ArrivalDecision(enum.Enum):
    START_SERVICE = "start"
    PREEMPT_AND_SERVE = "preempt"
    ENQUEUE = "enqueue"
    ENQUEUE_EVICT_STALEST = "evict"
    DROP = "drop"


@dataclass
class LinkState:
    """Queue, in-service packet and buffer of one link.

    Packets are ``(index, s)`` pairs. ``alpha`` is the generation time of the
    packet in service.
    """

    buffer: float = math.inf
    queue: list = field(default_factory=list)
    in_service: Optional[tuple] = None
    completion: float = math.inf

    @property
    def busy(self) -> bool:
        return self.in_service is not None

    @property
    def alpha(self) -> Optional[float]:
        return None if self.in_service is None else self.in_service[1]

    @property
    def capacity(self) -> float:
        return self.buffer if self.busy else self.buffer + 1


def _fresher(a, b):
    return (a[1], a[0]) > (b[1], b[0])


def stalest_position(queue) -> Optional[int]:
    """First position holding the smallest ``(s, index)``."""
    if not queue:
        return None
    best = 0
    for k in range(1, len(queue)):
        if _fresher(queue[best], queue[k]):
            best = k
    return best


def on_packet_arrival(policy: PolicySpec, link: LinkState, packet) -> ArrivalDecision:
    """Decide what a link does with a packet that just reached its origin node."""
    s = packet[1]
    if link.busy and policy.preemptive and s > link.alpha:
        return ArrivalDecision.PREEMPT_AND_SERVE
    if len(link.queue) < link.capacity:
        return ArrivalDecision.ENQUEUE if link.busy else ArrivalDecision.START_SERVICE
    if policy.evicts_stalest and link.queue:
        stale = link.queue[stalest_position(link.queue)]
        if s > stale[1]:
            return ArrivalDecision.ENQUEUE_EVICT_STALEST
    return ArrivalDecision.DROP


def select_position(policy: PolicySpec, queue, u: Optional[float] = None) -> Optional[int]:
    """Queue position a work-conserving link sends next, or None when empty.

    ``u`` is the uniform consumed by ``RANDOM_WC``.
    """
    if not queue:
        return None
    kind = policy.kind
    if kind in (PolicyKind.PRMP_LGFS, PolicyKind.NP_LGFS):
        best = 0
        for k in range(1, len(queue)):
            if _fresher(queue[k], queue[best]):
                best = k
        return best
    if kind is PolicyKind.NP_LCFS:
        return len(queue) - 1
    if kind is PolicyKind.FCFS:
        return 0
    if u is None:
        raise ValueError("random-wc selection needs a uniform draw")
    return min(int(u * len(queue)), len(queue) - 1)


def on_service_complete(policy: PolicySpec, link: LinkState, u: Optional[float] = None):
    """Packet the link should send next (not removed from the queue)."""
    pos = select_position(policy, link.queue, u)
    return None if pos is None else link.queue[pos]
