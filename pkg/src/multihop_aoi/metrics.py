"""Age processes built from traces and the penalty functionals over them.

The age at a node is the sawtooth ``age(t) = t - u(t)`` where ``u`` jumps
to ``s_k`` at each age-improving delivery ``t_k`` (``u = 0`` before the
first one). All functionals are evaluated over ``[0, T]``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .errors import NoPeaks, NonMonotonePenalty, UnknownNode

__all__ = [
    "AgeProcess",
    "age_process",
    "time_average_age",
    "peak_ages",
    "average_peak_age",
    "Penalty",
    "IDENTITY",
    "SQUARE",
    "ExpPenalty",
    "average_age_penalty",
    "completion_times",
    "adaptive_simpson",
    "resets_from_deliveries",
    "age_process_from_deliveries",
]


@dataclass(frozen=True, eq=False)
class AgeProcess:
    """Reset times/values of one node's age sawtooth on ``[0, horizon]``."""

    reset_times: np.ndarray
    reset_values: np.ndarray
    horizon: float
    u0: float = 0.0

    @classmethod
    def from_resets(cls, resets, horizon, u0=0.0) -> "AgeProcess":
        resets = list(resets)
        t = np.array([r[0] for r in resets], dtype=float)
        s = np.array([r[1] for r in resets], dtype=float)
        if t.size and (np.any(np.diff(t) <= 0) or np.any(np.diff(s) <= 0) or s[0] <= u0):
            raise ValueError("resets need strictly increasing times and values")
        return cls(t, s, float(horizon), float(u0))

    @property
    def resets(self):
        return list(zip(self.reset_times.tolist(), self.reset_values.tolist()))

    def __call__(self, t):
        """Age at time(s) ``t`` (right-continuous)."""
        t = np.asarray(t, dtype=float)
        k = np.searchsorted(self.reset_times, t, side="right")
        u = np.concatenate([[self.u0], self.reset_values])[k]
        return t - u

    def _segments(self):
        # [start, end) pieces with their constant u, clipped to the horizon
        T = self.horizon
        keep = self.reset_times <= T
        t = self.reset_times[keep]
        starts = np.concatenate([[0.0], t])
        ends = np.concatenate([t, [T]])
        u = np.concatenate([[self.u0], self.reset_values[keep]])
        return starts, ends, u


def resets_from_deliveries(times, svals, u0=0.0):
    """Age-improving subset of time-ordered deliveries.

    Returns ``(t_k, s_k)`` arrays, both strictly increasing; several
    improvements in the same instant collapse into the last one.
    """
    t = np.asarray(times, dtype=float)
    s = np.asarray(svals, dtype=float)
    if t.size == 0:
        return t, s
    prior = np.maximum.accumulate(np.concatenate([[u0], s]))[:-1]
    up = s > prior
    t, s = t[up], s[up]
    if t.size == 0:
        return t, s
    keep = np.append(t[1:] != t[:-1], True)
    return t[keep], s[keep]


def age_process_from_deliveries(times, svals, horizon) -> AgeProcess:
    """Age process from deliveries in any order (stable-sorted by time)."""
    t = np.asarray(times, dtype=float)
    s = np.asarray(svals, dtype=float)
    order = np.argsort(t, kind="stable")
    t, s = resets_from_deliveries(t[order], s[order])
    keep = t <= horizon
    return AgeProcess(t[keep], s[keep], float(horizon))


def age_process(trace, node: int, horizon=None) -> AgeProcess:
    """Age process of ``node`` from a trace; only deliveries within the
    horizon count and stale or duplicate deliveries are ignored."""
    if not 0 <= node < trace.graph.node_count:
        raise UnknownNode(node)
    T = float(trace.horizon if horizon is None else horizon)
    t, s = trace.resets(node)
    keep = t <= T
    return AgeProcess(t[keep], s[keep], T)


def time_average_age(process: AgeProcess) -> float:
    """Exact ``(1/T) * integral of age over [0, T]`` (trapezoids)."""
    a, b, u = process._segments()
    area = np.sum((b - a) * ((a + b) / 2.0 - u))
    return float(area / process.horizon)


def peak_ages(process: AgeProcess) -> np.ndarray:
    """Age just before each reset; the final partial period has no peak."""
    t = process.reset_times[process.reset_times <= process.horizon]
    prev = np.concatenate([[process.u0], process.reset_values[: t.size - 1]]) if t.size else t
    return t - prev


def average_peak_age(process: AgeProcess) -> float:
    peaks = peak_ages(process)
    if peaks.size == 0:
        raise NoPeaks("the age process has no resets")
    return float(peaks.mean())


class Penalty:
    """Non-decreasing penalty ``h`` with an optional closed-form integral."""

    def __init__(self, fn: Callable[[float], float], antiderivative=None, name="h"):
        self.fn = fn
        self.antiderivative = antiderivative
        self.name = name

    def __call__(self, x):
        return self.fn(x)

    def integral(self, a, b, tol=1e-9):
        """``integral of h over [a, b]`` for arrays ``a``, ``b``."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        if self.antiderivative is not None:
            return self.antiderivative(b) - self.antiderivative(a)
        return np.array([adaptive_simpson(self.fn, x, y, tol) for x, y in zip(a.ravel(), b.ravel())]).reshape(a.shape)

    def __repr__(self):
        return f"Penalty({self.name})"


IDENTITY = Penalty(lambda x: x, lambda x: x * x / 2.0, "identity")
SQUARE = Penalty(lambda x: x * x, lambda x: x**3 / 3.0, "square")


def ExpPenalty(c: float) -> Penalty:
    """``h(x) = exp(c x)`` for ``c >= 0``."""
    if c < 0:
        raise ValueError("exp penalty needs c >= 0 to be non-decreasing")
    if c == 0:
        return Penalty(lambda x: np.ones_like(np.asarray(x, dtype=float)), lambda x: x, "exp(0x)")
    return Penalty(lambda x: np.exp(c * x), lambda x: np.expm1(c * x) / c, f"exp({c}x)")


def adaptive_simpson(f, a: float, b: float, tol: float = 1e-9, max_depth: int = 50) -> float:
    """Adaptive Simpson quadrature of scalar ``f`` on ``[a, b]``."""

    def simpson(fa, fm, fb, a, b):
        return (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    def recurse(a, b, fa, fm, fb, whole, tol, depth):
        m = (a + b) / 2.0
        lm, rm = (a + m) / 2.0, (m + b) / 2.0
        flm, frm = f(lm), f(rm)
        left = simpson(fa, flm, fm, a, m)
        right = simpson(fm, frm, fb, m, b)
        if depth <= 0 or abs(left + right - whole) <= 15.0 * tol:
            return left + right + (left + right - whole) / 15.0
        return recurse(a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + recurse(
            m, b, fm, frm, fb, right, tol / 2.0, depth - 1
        )

    if a == b:
        return 0.0
    fa, fb, fm = f(a), f(b), f((a + b) / 2.0)
    return float(recurse(a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, max_depth))


def _as_penalty(h) -> Penalty:
    if isinstance(h, Penalty):
        return h
    if isinstance(h, str):
        table = {"identity": IDENTITY, "square": SQUARE}
        if h in table:
            return table[h]
        raise ValueError(f"unknown penalty {h!r}")
    if callable(h):
        return Penalty(h, None, getattr(h, "__name__", "h"))
    raise TypeError(f"penalty must be callable, got {h!r}")


def average_age_penalty(process: AgeProcess, h: Union[Penalty, str, Callable] = IDENTITY, tol: float = 1e-9) -> float:
    """``(1/T) * integral of h(age(t)) over [0, T]``.

    Each sawtooth tooth has slope 1, so its contribution is the integral of
    ``h`` between the tooth's start and end ages. ``h`` is spot-checked for
    monotonicity on the achieved age range; callables without a closed form
    are integrated by adaptive Simpson at absolute tolerance ``tol`` per
    tooth.
    """
    h = _as_penalty(h)
    a, b, u = process._segments()
    lo, hi = a - u, b - u
    top = float(np.max(hi)) if hi.size else 0.0
    grid = np.linspace(0.0, max(top, 0.0), 257)
    values = np.array([h(x) for x in grid], dtype=float)
    if np.any(np.diff(values) < -1e-12 * np.maximum(1.0, np.abs(values[:-1]))) or np.any(values < 0):
        raise NonMonotonePenalty(f"penalty {h.name} is negative or decreasing on [0, {top}]")
    return float(np.sum(h.integral(lo, hi, tol)) / process.horizon)


def completion_times(trace, node: int, horizon=None) -> dict:
    """Map packet index to the earliest time ``node`` holds information at
    least as fresh as that packet.

    A packet overtaken or preempted by a fresher delivery inherits that
    delivery's time. Packets with no qualifying delivery before the horizon
    are absent.
    """
    if not 0 <= node < trace.graph.node_count:
        raise UnknownNode(node)
    T = trace.horizon if horizon is None else horizon
    t, s = trace.at_node(node)
    keep = t <= T
    t, s = t[keep], s[keep]
    if t.size == 0:
        return {}
    freshest = np.maximum.accumulate(s)
    gen = trace.packets.s
    k = np.searchsorted(freshest, gen, side="left")
    out = {}
    for i in np.nonzero(k < t.size)[0]:
        out[int(i) + 1] = float(t[k[i]])
    return out

