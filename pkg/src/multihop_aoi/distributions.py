"""Transmission-time laws.

Every law is an immutable dataclass that knows its CCDF ``P(X > x)``, its
first two moments, and how to turn a fixed number of uniforms into one
sample (inverse-transform style). The fixed uniform budget per draw is what
makes indexed service streams reproducible across policies: the k-th draw
of a link always reads the same slice of its uniform stream.

====================  ========================  ===============
text name             parameters                uniforms/draw
====================  ========================  ===============
``exp``               rate                      1
``erlang``            k rate                    k
``gamma``             shape scale               1
``const``             c                         1 (ignored)
``shifted-exp``       shift rate                1
``hyperexp``          w1 r1 w2 r2 ...           2
``geom``              p step                    1
====================  ========================  ===============
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

__all__ = [
    "Distribution",
    "Exponential",
    "Erlang",
    "Gamma",
    "Constant",
    "ShiftedExponential",
    "Hyperexponential",
    "Geometric",
    "parse_distribution",
    "is_nbu",
    "is_nwu",
]

_TINY = np.finfo(float).tiny


def _positive(name, value):
    if not (isinstance(value, (int, float, np.floating, np.integer)) and math.isfinite(value) and value > 0):
        raise ValueError(f"{name} must be a positive finite number, got {value!r}")


class Distribution:
    """Common interface of the transmission-time laws."""

    name: str = ""
    n_uniforms: int = 1

    def ccdf(self, x):
        raise NotImplementedError

    @property
    def mean(self) -> float:
        raise NotImplementedError

    @property
    def variance(self) -> float:
        raise NotImplementedError

    def params(self) -> tuple:
        raise NotImplementedError

    def transform(self, u: np.ndarray) -> np.ndarray:
        """Map an ``(m, n_uniforms)`` array of U[0,1) draws to ``m`` samples."""
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size=None):
        """Draw i.i.d. samples, consuming exactly ``n_uniforms`` per sample."""
        m = 1 if size is None else int(size)
        u = rng.random(m * self.n_uniforms).reshape(m, self.n_uniforms)
        x = self.transform(u)
        return float(x[0]) if size is None else x

    def to_text(self) -> str:
        return " ".join([self.name] + [repr(float(p)) if not isinstance(p, int) else str(p) for p in self.params()])

    def __str__(self):
        return self.to_text()


@dataclass(frozen=True)
class Exponential(Distribution):
    rate: float
    name = "exp"

    def __post_init__(self):
        _positive("rate", self.rate)

    def ccdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 0, 1.0, np.exp(-self.rate * np.maximum(x, 0.0)))

    @property
    def mean(self):
        return 1.0 / self.rate

    @property
    def variance(self):
        return 1.0 / self.rate**2

    def params(self):
        return (self.rate,)

    def transform(self, u):
        return np.maximum(-np.log1p(-u[:, 0]) / self.rate, _TINY)


@dataclass(frozen=True)
class Erlang(Distribution):
    k: int
    rate: float
    name = "erlang"

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"Erlang shape must be a positive integer, got {self.k!r}")
        object.__setattr__(self, "k", int(self.k))
        _positive("rate", self.rate)

    @property
    def n_uniforms(self):
        return self.k

    def ccdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 0, 1.0, special.gammaincc(self.k, self.rate * np.maximum(x, 0.0)))

    @property
    def mean(self):
        return self.k / self.rate

    @property
    def variance(self):
        return self.k / self.rate**2

    def params(self):
        return (self.k, self.rate)

    def transform(self, u):
        return np.maximum(-np.log1p(-u).sum(axis=1) / self.rate, _TINY)


@dataclass(frozen=True)
class Gamma(Distribution):
    shape: float
    scale: float
    name = "gamma"

    def __post_init__(self):
        _positive("shape", self.shape)
        _positive("scale", self.scale)

    def ccdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < 0, 1.0, special.gammaincc(self.shape, np.maximum(x, 0.0) / self.scale))

    @property
    def mean(self):
        return self.shape * self.scale

    @property
    def variance(self):
        return self.shape * self.scale**2

    def params(self):
        return (self.shape, self.scale)

    def transform(self, u):
        return np.maximum(special.gammaincinv(self.shape, u[:, 0]) * self.scale, _TINY)


@dataclass(frozen=True)
class Constant(Distribution):
    c: float
    name = "const"

    def __post_init__(self):
        _positive("c", self.c)

    def ccdf(self, x):
        return np.where(np.asarray(x, dtype=float) < self.c, 1.0, 0.0)

    @property
    def mean(self):
        return float(self.c)

    @property
    def variance(self):
        return 0.0

    def params(self):
        return (self.c,)

    def transform(self, u):
        return np.full(u.shape[0], float(self.c))


@dataclass(frozen=True)
class ShiftedExponential(Distribution):
    shift: float
    rate: float
    name = "shifted-exp"

    def __post_init__(self):
        _positive("shift", self.shift)
        _positive("rate", self.rate)

    def ccdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.where(x < self.shift, 1.0, np.exp(-self.rate * np.maximum(x - self.shift, 0.0)))

    @property
    def mean(self):
        return self.shift + 1.0 / self.rate

    @property
    def variance(self):
        return 1.0 / self.rate**2

    def params(self):
        return (self.shift, self.rate)

    def transform(self, u):
        return self.shift - np.log1p(-u[:, 0]) / self.rate


@dataclass(frozen=True)
class Hyperexponential(Distribution):
    """Mixture of exponentials; first uniform picks the phase."""

    weights: tuple
    rates: tuple
    name = "hyperexp"
    n_uniforms = 2

    def __post_init__(self):
        w = tuple(float(x) for x in self.weights)
        r = tuple(float(x) for x in self.rates)
        if len(w) != len(r) or not w:
            raise ValueError("hyperexp needs matching, non-empty weights and rates")
        for x in w + r:
            _positive("hyperexp parameter", x)
        if abs(sum(w) - 1.0) > 1e-9:
            raise ValueError(f"hyperexp weights must sum to 1, got {sum(w)}")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "rates", r)

    def ccdf(self, x):
        x = np.asarray(x, dtype=float)
        xc = np.maximum(x, 0.0)
        out = sum(w * np.exp(-r * xc) for w, r in zip(self.weights, self.rates))
        return np.where(x < 0, 1.0, out)

    @property
    def mean(self):
        return sum(w / r for w, r in zip(self.weights, self.rates))

    @property
    def variance(self):
        m2 = sum(2 * w / r**2 for w, r in zip(self.weights, self.rates))
        return m2 - self.mean**2

    def params(self):
        return tuple(v for pair in zip(self.weights, self.rates) for v in pair)

    def transform(self, u):
        edges = np.cumsum(self.weights)[:-1]
        phase = np.searchsorted(edges, u[:, 0], side="right")
        rates = np.asarray(self.rates)[phase]
        return np.maximum(-np.log1p(-u[:, 1]) / rates, _TINY)


@dataclass(frozen=True)
class Geometric(Distribution):
    """Geometric number of steps, embedded in continuous time.

    Support is ``{step, 2*step, ...}`` with ``P(X = k*step) = (1-p)**(k-1) p``.
    """

    p: float
    step: float
    name = "geom"

    def __post_init__(self):
        if not 0 < self.p <= 1:
            raise ValueError(f"geom p must lie in (0, 1], got {self.p!r}")
        _positive("step", self.step)

    def ccdf(self, x):
        x = np.asarray(x, dtype=float)
        k = np.floor(np.maximum(x, 0.0) / self.step + 1e-9)
        return np.where(x < 0, 1.0, (1.0 - self.p) ** k)

    @property
    def mean(self):
        return self.step / self.p

    @property
    def variance(self):
        return self.step**2 * (1 - self.p) / self.p**2

    def params(self):
        return (self.p, self.step)

    def transform(self, u):
        if self.p == 1.0:
            return np.full(u.shape[0], float(self.step))
        k = np.ceil(np.log1p(-u[:, 0]) / math.log1p(-self.p))
        return np.maximum(k, 1.0) * self.step


_BY_NAME = {
    "exp": Exponential,
    "erlang": Erlang,
    "gamma": Gamma,
    "const": Constant,
    "shifted-exp": ShiftedExponential,
    "hyperexp": Hyperexponential,
    "geom": Geometric,
}


def parse_distribution(text: str) -> Distribution:
    """Build a law from its text form, e.g. ``"gamma 2 0.5"`` or ``"exp 1"``."""
    parts = text.split()
    if not parts:
        raise ValueError("empty distribution text")
    name, args = parts[0].lower(), parts[1:]
    if name not in _BY_NAME:
        raise ValueError(f"unknown distribution {name!r}; expected one of {sorted(_BY_NAME)}")
    try:
        values = [float(a) for a in args]
    except ValueError:
        raise ValueError(f"non-numeric parameter in {text!r}") from None
    if name == "hyperexp":
        if len(values) < 2 or len(values) % 2:
            raise ValueError("hyperexp expects weight/rate pairs")
        return Hyperexponential(tuple(values[0::2]), tuple(values[1::2]))
    cls = _BY_NAME[name]
    expected = 1 if cls in (Exponential, Constant) else 2
    if len(values) != expected:
        raise ValueError(f"{name} expects {expected} parameter(s), got {len(values)}")
    if cls is Erlang:
        if values[0] != int(values[0]):
            raise ValueError("erlang shape must be an integer")
        return Erlang(int(values[0]), values[1])
    return cls(*values)


def _grid_ccdf(dist, grid_max, grid_step):
    if grid_max is None:
        grid_max = 10.0 * dist.mean
    if grid_step is None:
        grid_step = dist.mean / 100.0
    if grid_max <= 0 or grid_step <= 0:
        raise ValueError("grid_max and grid_step must be positive")
    m = int(math.floor(grid_max / grid_step + 1e-9))
    x = np.arange(2 * m + 1) * grid_step
    f = dist.ccdf(x)
    i = np.arange(m + 1)
    return f[i[:, None] + i[None, :]], f[: m + 1, None] * f[None, : m + 1]


def is_nbu(dist: Distribution, grid_max=None, grid_step=None, tol=1e-9) -> bool:
    """Grid test of New-Better-than-Used: ``F(t+s) <= F(t) F(s) + tol``.

    Checks every pair ``(t, s)`` on ``{0, step, ..., grid_max}^2``; defaults
    are ``grid_max = 10 * mean`` and ``step = mean / 100``. A grid check,
    not a proof.
    """
    joint, product = _grid_ccdf(dist, grid_max, grid_step)
    return bool(np.all(joint <= product + tol))


def is_nwu(dist: Distribution, grid_max=None, grid_step=None, tol=1e-9) -> bool:
    """Grid test of New-Worse-than-Used: ``F(t+s) >= F(t) F(s) - tol``."""
    joint, product = _grid_ccdf(dist, grid_max, grid_step)
    return bool(np.all(joint >= product - tol))
