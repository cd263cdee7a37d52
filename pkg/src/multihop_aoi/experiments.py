"""Experiment configuration files, figure presets, sweeps and result files.

A config is INI text::

    [graph]
    nodes = 3
    tree-restricted = false

    [link 0-1]
    dist = exp 1.0
    buffer = inf

    [arrivals]
    process = erlang2        ; erlang2 | poisson | periodic
    rate = 1.0
    delay = two-point 1.0 100.0 0.5
    # packets = 0.5:1.0, 1.0:1.0   (explicit s:a0 list instead of a process)

    [run]
    horizon = 10000
    replications = 200
    seed = 0
    policies = prmp-lgfs@1, fcfs@inf   ; name[@buffer overriding every link]
    lambdas = 0.5, 1.0               ; or start:stop:step

    [harness]
    coupling = auto          ; auto | poisson-epochs | indexed
    dominance = false
    pairs = prmp-lgfs:fcfs
    confidence = 0.99

    [output]
    directory = results
    formats = csv, manifest, dat, dominance
    nodes = 2
    metrics = avg-peak-age   ; avg-age | avg-peak-age | avg-age-square

Unknown sections or keys are rejected. Omitted keys take the defaults of
the dataclasses below; ``save_config`` writes every field back out.
"""

from __future__ import annotations

import configparser
import csv
import dataclasses
import hashlib
import io
import json
import math
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .distributions import Exponential, Gamma, ShiftedExponential, parse_distribution
from .engine import IndexedDraws, PoissonEpochs, run_simulation
from .errors import AoIError, ConfigError, IncompatibleCouplingMode, ParseError, UnknownKey, ValidationError
from .harness import CouplingStream, check_sample_path_dominance, coupled_run
from .metrics import SQUARE, age_process, average_age_penalty, average_peak_age, time_average_age
from .model import INF, ArrivalSpec, Link, NetworkGraph, Packets, Scenario, TwoPointDelay, build_graph, parse_delay
from .policies import parse_policy

__all__ = [
    "PolicyEntry",
    "HarnessSpec",
    "OutputSpec",
    "ExperimentConfig",
    "SweepRow",
    "SweepTable",
    "DominanceRow",
    "SweepError",
    "METRICS",
    "CSV_HEADER",
    "DOMINANCE_HEADER",
    "parse_config",
    "load_config",
    "config_to_text",
    "save_config",
    "preset_fig4",
    "preset_fig5",
    "parse_lambda_range",
    "derive_seed",
    "run_sweep",
    "run_dominance",
    "emit_results",
]

CSV_HEADER = "lambda,policy,node,metric,mean,ci_low,ci_high,reps"
DOMINANCE_HEADER = "seed,pair,holds,first_violation_t"
FORMATS = ("csv", "manifest", "dat", "dominance")
COUPLINGS = ("auto", "poisson-epochs", "indexed")
CI_LEVEL = 0.95


class SweepError(AoIError, RuntimeError):
    """An engine failure inside a sweep, tagged with its cell."""


def _avg_age(trace, node):
    return time_average_age(age_process(trace, node))


def _avg_peak(trace, node):
    return average_peak_age(age_process(trace, node))


def _avg_square(trace, node):
    return average_age_penalty(age_process(trace, node), SQUARE)


METRICS = {"avg-age": _avg_age, "avg-peak-age": _avg_peak, "avg-age-square": _avg_square}


# ---------------------------------------------------------------------------
# config objects
# ---------------------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, float) and math.isinf(x):
        return "inf"
    return repr(x)


@dataclass(frozen=True)
class PolicyEntry:
    """A policy plus an optional buffer size applied to every link."""

    name: str
    buffer: Optional[float] = None

    @classmethod
    def parse(cls, text: str) -> "PolicyEntry":
        name, _, buf = text.strip().partition("@")
        parse_policy(name)
        if not buf:
            return cls(name.lower())
        if buf.lower() in ("inf", "infinite"):
            return cls(name.lower(), INF)
        b = int(buf)
        if b < 0:
            raise ValueError(f"negative buffer in {text!r}")
        return cls(name.lower(), b)

    @property
    def label(self) -> str:
        return self.name if self.buffer is None else f"{self.name}@{_fmt(self.buffer)}"


@dataclass(frozen=True)
class HarnessSpec:
    coupling: str = "auto"
    dominance: bool = False
    pairs: tuple = ()  # (dominating label, dominated label)
    confidence: float = 0.99


@dataclass(frozen=True)
class OutputSpec:
    directory: str = "results"
    formats: tuple = ("csv", "manifest")
    nodes: tuple = ()
    metrics: tuple = ("avg-age",)


@dataclass(frozen=True)
class ExperimentConfig:
    graph: NetworkGraph
    arrivals: Union[ArrivalSpec, Packets]
    horizon: float
    replications: int = 1
    seed: int = 0
    policies: tuple = (PolicyEntry("prmp-lgfs"),)
    lambdas: tuple = ()
    tree_restricted: bool = False
    harness: HarnessSpec = field(default_factory=HarnessSpec)
    output: OutputSpec = field(default_factory=OutputSpec)

    @property
    def sweep_values(self) -> tuple:
        if isinstance(self.arrivals, Packets):
            return (math.nan,)
        return self.lambdas or (float(self.arrivals.rate),)

    def graph_for(self, entry: PolicyEntry) -> NetworkGraph:
        return self.graph if entry.buffer is None else self.graph.with_buffers(entry.buffer)

    def scenario(self, rate=None, seed=None, buffer=None) -> Scenario:
        arrivals = self.arrivals
        if rate is not None and not math.isnan(rate) and isinstance(arrivals, ArrivalSpec):
            arrivals = arrivals.with_rate(rate)
        graph = self.graph if buffer is None else self.graph.with_buffers(buffer)
        return Scenario(graph, arrivals, self.horizon, self.seed if seed is None else seed, self.tree_restricted)

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)


# ---------------------------------------------------------------------------
# parsing and writing
# ---------------------------------------------------------------------------

_KEYS = {
    "graph": {"nodes", "tree-restricted"},
    "link": {"dist", "buffer"},
    "arrivals": {"process", "rate", "delay", "packets"},
    "run": {"horizon", "replications", "seed", "policies", "lambdas"},
    "harness": {"coupling", "dominance", "pairs", "confidence"},
    "output": {"directory", "formats", "nodes", "metrics"},
}


def _split(text: str) -> list:
    return [p.strip() for p in text.replace("\n", ",").split(",") if p.strip()]


def _bool(text: str, name: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValidationError(name, f"expected a boolean, got {text!r}")


def parse_lambda_range(text: str) -> tuple:
    """``"a:b:step"`` (inclusive, rounded to 12 digits) or a comma list."""
    text = text.strip()
    if ":" in text and "," not in text:
        parts = [float(p) for p in text.split(":")]
        if len(parts) != 3 or parts[2] <= 0 or parts[1] < parts[0]:
            raise ValueError(f"bad lambda range {text!r}; expected start:stop:step")
        a, b, step = parts
        n = int(math.floor((b - a) / step + 1e-9))
        return tuple(round(a + k * step, 12) for k in range(n + 1))
    return tuple(float(v) for v in _split(text))


def _convert(name, fn, text):
    try:
        return fn(text)
    except ConfigError:
        raise
    except (ValueError, TypeError, KeyError, AoIError) as exc:
        raise ValidationError(name, str(exc)) from None


def _parse_link_section(title: str, node_count: int):
    ends = title[len("link"):].strip().split("-")
    if len(ends) != 2:
        raise ValidationError(title, "link sections are named 'link <src>-<dst>'")
    try:
        return int(ends[0]), int(ends[1])
    except ValueError:
        raise ValidationError(title, "link endpoints must be integers") from None


def _parse_buffer(text):
    if text.strip().lower() in ("inf", "infinite"):
        return INF
    b = int(text)
    if b < 0:
        raise ValueError("buffer must be >= 0")
    return b


def _parse_packets(text):
    pairs = []
    for item in _split(text):
        s, _, a0 = item.partition(":")
        pairs.append((float(s), float(a0) if a0 else float(s)))
    return Packets.from_pairs(pairs)


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate config text (see the module docstring)."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"), empty_lines_in_values=False)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.MissingSectionHeaderError as exc:
        raise ParseError("text before the first [section]", exc.lineno) from None
    except (configparser.DuplicateSectionError, configparser.DuplicateOptionError) as exc:
        raise ParseError(exc.message.splitlines()[0], exc.lineno) from None
    except configparser.ParsingError as exc:
        line = exc.errors[0][0] if exc.errors else None
        raise ParseError("malformed line", line) from None

    for section in cp.sections():
        kind = "link" if section.startswith("link ") else section
        if kind not in _KEYS:
            raise UnknownKey(f"unknown section [{section}]")
        for key in cp[section]:
            if key not in _KEYS[kind]:
                raise UnknownKey(f"unknown key {section}.{key}")

    def get(section, key, default=None):
        if cp.has_section(section) and key in cp[section]:
            return cp[section][key]
        return default

    if not cp.has_section("graph") or get("graph", "nodes") is None:
        raise ValidationError("graph.nodes", "required")
    nodes = _convert("graph.nodes", int, get("graph", "nodes"))
    tree = _convert("graph.tree-restricted", lambda t: _bool(t, "graph.tree-restricted"), get("graph", "tree-restricted", "false"))
    links = []
    for section in cp.sections():
        if not section.startswith("link "):
            continue
        src, dst = _parse_link_section(section, nodes)
        dist = _convert(f"{section}.dist", parse_distribution, get(section, "dist", "exp 1.0"))
        buf = _convert(f"{section}.buffer", _parse_buffer, get(section, "buffer", "inf"))
        links.append(Link(src, dst, buf, dist))
    if not links:
        raise ValidationError("graph", "at least one [link i-j] section is required")
    graph = _convert("graph", lambda _: build_graph(nodes, links), None)

    if get("arrivals", "packets") is not None:
        extra = [k for k in ("process", "rate", "delay") if get("arrivals", k) is not None]
        if extra:
            raise ValidationError("arrivals.packets", f"explicit packets exclude {extra}")
        arrivals = _convert("arrivals.packets", _parse_packets, get("arrivals", "packets"))
    else:
        rate = _convert("arrivals.rate", float, get("arrivals", "rate", "1.0"))
        if not rate > 0:
            raise ValidationError("arrivals.rate", "must be positive")
        delay = _convert("arrivals.delay", parse_delay, get("arrivals", "delay", "const 0.0"))
        process = get("arrivals", "process", "erlang2")
        arrivals = _convert("arrivals.process", lambda p: ArrivalSpec(rate, p, delay), process)

    if get("run", "horizon") is None:
        raise ValidationError("run.horizon", "required")
    horizon = _convert("run.horizon", float, get("run", "horizon"))
    if not horizon > 0 or math.isinf(horizon):
        raise ValidationError("run.horizon", "must be positive and finite")
    reps = _convert("run.replications", int, get("run", "replications", "1"))
    if reps < 1:
        raise ValidationError("run.replications", "must be >= 1")
    seed = _convert("run.seed", int, get("run", "seed", "0"))
    policies = _convert("run.policies", lambda t: tuple(PolicyEntry.parse(p) for p in _split(t)), get("run", "policies", "prmp-lgfs"))
    if not policies:
        raise ValidationError("run.policies", "at least one policy is required")
    if len({p.label for p in policies}) != len(policies):
        raise ValidationError("run.policies", "duplicate policy entries")
    lambdas = _convert("run.lambdas", parse_lambda_range, get("run", "lambdas", ""))
    if any(not v > 0 for v in lambdas):
        raise ValidationError("run.lambdas", "rates must be positive")
    if lambdas and isinstance(arrivals, Packets):
        raise ValidationError("run.lambdas", "a rate sweep needs a generated arrival process")

    coupling = get("harness", "coupling", "auto")
    if coupling not in COUPLINGS:
        raise ValidationError("harness.coupling", f"expected one of {COUPLINGS}")
    dominance = _convert("harness.dominance", lambda t: _bool(t, "harness.dominance"), get("harness", "dominance", "false"))

    def _pairs(text):
        out = []
        for item in _split(text):
            a, sep, b = item.partition(":")
            if not sep:
                raise ValueError(f"pair {item!r} must look like P:pi")
            out.append((PolicyEntry.parse(a).label, PolicyEntry.parse(b).label))
        return tuple(out)

    pairs = _convert("harness.pairs", _pairs, get("harness", "pairs", ""))
    confidence = _convert("harness.confidence", float, get("harness", "confidence", "0.99"))
    if not 0 < confidence < 1:
        raise ValidationError("harness.confidence", "must lie in (0, 1)")

    directory = get("output", "directory", "results")
    formats = tuple(_split(get("output", "formats", "csv, manifest")))
    for f in formats:
        if f not in FORMATS:
            raise ValidationError("output.formats", f"unknown format {f!r}; expected some of {FORMATS}")
    node_text = get("output", "nodes")
    out_nodes = (
        tuple(range(1, nodes)) if node_text is None else _convert("output.nodes", lambda t: tuple(int(v) for v in _split(t)), node_text)
    )
    for j in out_nodes:
        if not 0 <= j < nodes:
            raise ValidationError("output.nodes", f"node {j} is not in the graph")
    metrics = tuple(_split(get("output", "metrics", "avg-age")))
    for m in metrics:
        if m not in METRICS:
            raise ValidationError("output.metrics", f"unknown metric {m!r}; expected some of {sorted(METRICS)}")

    return ExperimentConfig(
        graph=graph,
        arrivals=arrivals,
        horizon=horizon,
        replications=reps,
        seed=seed,
        policies=policies,
        lambdas=lambdas,
        tree_restricted=tree,
        harness=HarnessSpec(coupling, dominance, pairs, confidence),
        output=OutputSpec(directory, formats, out_nodes, metrics),
    )


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def config_to_text(cfg: ExperimentConfig) -> str:
    """Canonical text form; ``parse_config(config_to_text(c)) == c``."""
    out = io.StringIO()
    w = out.write
    w(f"[graph]\nnodes = {cfg.graph.node_count}\ntree-restricted = {str(cfg.tree_restricted).lower()}\n")
    for link in cfg.graph.links:
        w(f"\n[link {link.src}-{link.dst}]\ndist = {link.dist.to_text()}\nbuffer = {_fmt(link.buffer)}\n")
    w("\n[arrivals]\n")
    if isinstance(cfg.arrivals, Packets):
        w("packets = " + ", ".join(f"{r.s!r}:{r.a0!r}" for r in cfg.arrivals) + "\n")
    else:
        a = cfg.arrivals
        w(f"process = {a.process}\nrate = {float(a.rate)!r}\ndelay = {a.delay.to_text()}\n")
    w("\n[run]\n")
    w(f"horizon = {float(cfg.horizon)!r}\nreplications = {cfg.replications}\nseed = {cfg.seed}\n")
    w("policies = " + ", ".join(p.label for p in cfg.policies) + "\n")
    if cfg.lambdas:
        w("lambdas = " + ", ".join(repr(float(v)) for v in cfg.lambdas) + "\n")
    h = cfg.harness
    w(f"\n[harness]\ncoupling = {h.coupling}\ndominance = {str(h.dominance).lower()}\n")
    if h.pairs:
        w("pairs = " + ", ".join(f"{a}:{b}" for a, b in h.pairs) + "\n")
    w(f"confidence = {h.confidence!r}\n")
    o = cfg.output
    w(f"\n[output]\ndirectory = {o.directory}\nformats = {', '.join(o.formats)}\n")
    w(f"nodes = {', '.join(str(j) for j in o.nodes)}\nmetrics = {', '.join(o.metrics)}\n")
    return out.getvalue()


def save_config(cfg: ExperimentConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(config_to_text(cfg))


def config_hash(cfg: ExperimentConfig) -> str:
    return hashlib.sha256(config_to_text(cfg).encode()).hexdigest()


# ---------------------------------------------------------------------------
# presets
# ---------------------------------------------------------------------------

SWEEP_GRID = tuple(round(0.1 * k, 12) for k in range(1, 21))


def _both_buffers(names):
    return tuple(PolicyEntry(n, b) for n in names for b in (1, INF))


def preset_fig4() -> ExperimentConfig:
    """Three-node network with exponential links, out-of-order gateway
    arrivals; average peak age at node 2."""
    graph = build_graph(
        3,
        [
            (0, 1, INF, Exponential(1.0)),
            (0, 2, INF, Exponential(2.0)),
            (1, 2, INF, Exponential(1.0)),
        ],
    )
    return ExperimentConfig(
        graph=graph,
        arrivals=ArrivalSpec(1.0, "erlang2", TwoPointDelay(1.0, 100.0, 0.5)),
        horizon=10_000.0,
        replications=200,
        seed=0,
        policies=_both_buffers(["prmp-lgfs", "np-lgfs", "np-lcfs", "fcfs"]),
        lambdas=SWEEP_GRID,
        harness=HarnessSpec("poisson-epochs", False, (("prmp-lgfs@1", "fcfs@1"),), 0.99),
        output=OutputSpec("results/fig4", ("csv", "manifest", "dat"), (2,), ("avg-peak-age",)),
    )


def preset_fig5(gamma_shape: float = 2.0) -> ExperimentConfig:
    """Four-node network with gamma and shifted-exponential links; average
    age at node 3. ``gamma_shape`` sets the gamma links' shape (mean stays 1)."""
    g = Gamma(float(gamma_shape), 1.0 / float(gamma_shape))
    se = ShiftedExponential(0.5, 2.0)
    graph = build_graph(4, [(0, 1, INF, g), (0, 2, INF, se), (1, 2, INF, se), (1, 3, INF, g), (2, 3, INF, se)])
    return ExperimentConfig(
        graph=graph,
        arrivals=ArrivalSpec(1.0, "erlang2", TwoPointDelay(1.0, 100.0, 0.5)),
        horizon=10_000.0,
        replications=200,
        seed=0,
        policies=_both_buffers(["fcfs", "np-lcfs", "np-lgfs"]),
        lambdas=SWEEP_GRID,
        harness=HarnessSpec("indexed", False, (("np-lgfs@1", "fcfs@1"),), 0.99),
        output=OutputSpec("results/fig5", ("csv", "manifest", "dat"), (3,), ("avg-age",)),
    )


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------


def derive_seed(master: int, lambda_index: int, replication: int) -> int:
    """Seed of one sweep cell; shared by every policy in that cell."""
    return int(np.random.SeedSequence(master, spawn_key=(lambda_index, replication)).generate_state(1)[0])


SEED_DERIVATION = "SeedSequence(master, spawn_key=(lambda_index, replication)).generate_state(1)[0]"


@dataclass(frozen=True)
class SweepRow:
    lam: float
    policy: str
    node: int
    metric: str
    mean: float
    ci_low: float
    ci_high: float
    reps: int

    def csv_fields(self):
        return [repr(float(self.lam)), self.policy, str(self.node), self.metric,
                repr(self.mean), repr(self.ci_low), repr(self.ci_high), str(self.reps)]


@dataclass(frozen=True)
class SweepTable:
    rows: tuple
    config: Optional[ExperimentConfig] = None
    seed: int = 0
    samples: dict = field(default_factory=dict, compare=False, repr=False)

    def __len__(self):
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def lookup(self, lam, policy, node, metric) -> SweepRow:
        for r in self.rows:
            if r.policy == policy and r.node == node and r.metric == metric and (r.lam == lam or (math.isnan(r.lam) and math.isnan(lam))):
                return r
        raise KeyError((lam, policy, node, metric))


def _source_for(cfg: ExperimentConfig, seed: int):
    if cfg.harness.coupling == "poisson-epochs":
        return PoissonEpochs(seed)
    return IndexedDraws(seed)


def _run_cell(args):
    cfg, li, lam, rep, seed = args
    values = {}
    for entry in cfg.policies:
        scenario = cfg.scenario(lam, seed, entry.buffer)
        try:
            trace = run_simulation(scenario, entry.name, _source_for(cfg, seed))
            for node in cfg.output.nodes:
                for metric in cfg.output.metrics:
                    values[(entry.label, node, metric)] = METRICS[metric](trace, node)
        except AoIError as exc:
            raise SweepError(f"lambda={lam!r} policy={entry.label} replication={rep}: {exc}") from exc
    return (li, rep), values


def _summary(values):
    x = np.asarray(values, dtype=float)
    mean = float(np.mean(x))
    if x.size < 2:
        return mean, mean, mean
    z = statistics.NormalDist().inv_cdf(0.5 + CI_LEVEL / 2)
    half = z * float(np.std(x, ddof=1)) / math.sqrt(x.size)
    return mean, mean - half, mean + half


def run_sweep(cfg: ExperimentConfig, lambda_values=None, *, replications=None, seed=None, workers: int = 1) -> SweepTable:
    """Replicate every (rate, policy) cell and summarise each metric.

    All policies of one (rate, replication) cell share its derived seed, so
    they see the same packets and the same service draws.
    """
    lams = tuple(cfg.sweep_values if lambda_values is None else lambda_values)
    reps = cfg.replications if replications is None else int(replications)
    master = cfg.seed if seed is None else int(seed)
    if reps < 1:
        raise ValidationError("run.replications", "must be >= 1")
    if not lams:
        raise ValidationError("run.lambdas", "need at least one rate")
    tasks = [(cfg, li, lam, r, derive_seed(master, li, r)) for li, lam in enumerate(lams) for r in range(reps)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = dict(pool.map(_run_cell, tasks, chunksize=max(1, len(tasks) // (8 * workers))))
    else:
        results = dict(map(_run_cell, tasks))

    rows, samples = [], {}
    for li, lam in enumerate(lams):
        for entry in cfg.policies:
            for node in cfg.output.nodes:
                for metric in cfg.output.metrics:
                    key = (entry.label, node, metric)
                    vals = [results[(li, r)][key] for r in range(reps)]
                    samples[(lam,) + key] = np.array(vals)
                    mean, lo, hi = _summary(vals)
                    rows.append(SweepRow(float(lam), entry.label, node, metric, mean, lo, hi, reps))
    return SweepTable(tuple(rows), cfg, master, samples)


@dataclass(frozen=True)
class DominanceRow:
    seed: int
    pair: str
    holds: bool
    first_violation_t: Optional[float]

    def csv_fields(self):
        t = "" if self.first_violation_t is None else repr(self.first_violation_t)
        return [str(self.seed), self.pair, str(self.holds).lower(), t]


def _coupling_mode(cfg: ExperimentConfig) -> str:
    mode = cfg.harness.coupling
    if mode != "auto":
        return mode
    return "poisson-epochs" if cfg.graph.all_exponential else "indexed"


def run_dominance(cfg: ExperimentConfig, pairs=None, *, replications=None, seed=None, lam=None) -> list:
    """Coupled per-path dominance checks for each ``(P, pi)`` pair and seed."""
    pairs = tuple(cfg.harness.pairs if pairs is None else pairs)
    if not pairs:
        raise ValidationError("harness.pairs", "no policy pairs to compare")
    reps = cfg.replications if replications is None else int(replications)
    master = cfg.seed if seed is None else int(seed)
    lam = cfg.sweep_values[0] if lam is None else lam
    entries = [(PolicyEntry.parse(a), PolicyEntry.parse(b)) for a, b in pairs]
    mode = _coupling_mode(cfg)
    for a, b in entries:
        if a.buffer != b.buffer:
            raise ValidationError("harness.pairs", f"{a.label} and {b.label} use different buffers")
        if mode == "indexed" and (parse_policy(a.name).preemptive or parse_policy(b.name).preemptive):
            raise IncompatibleCouplingMode(f"indexed draws cannot couple the preemptive pair {a.label}:{b.label}")
    rows = []
    for r in range(reps):
        s = derive_seed(master, 0, r)
        cache = {}
        for a, b in entries:
            for e in (a, b):
                if e.label not in cache:
                    scenario = cfg.scenario(lam, s, e.buffer)
                    cache[e.label] = coupled_run(scenario, [e.name], CouplingStream(mode, s))[0]
            rep = check_sample_path_dominance(cache[a.label], cache[b.label])
            t = None if rep.holds else rep.first_violation[0]
            rows.append(DominanceRow(s, f"{a.label}>{b.label}", rep.holds, t))
    return rows


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(header + "\n")
        writer = csv.writer(fh, lineterminator="\n")
        for row in rows:
            writer.writerow(row.csv_fields())


def _package_version() -> str:
    from importlib.metadata import PackageNotFoundError, version

    try:
        return version("artifact")
    except PackageNotFoundError:
        return "0+unknown"


def emit_results(table: Optional[SweepTable] = None, output: Optional[OutputSpec] = None, *, reports=None, config=None) -> list:
    """Write the configured result files and return their paths.

    ``results.csv`` always uses :data:`CSV_HEADER`; ``dominance.csv`` uses
    :data:`DOMINANCE_HEADER`; ``manifest.json`` records the config hash and
    master seed; ``node<j>_<metric>.dat`` holds whitespace-separated columns
    ``lambda mean ci_low ci_high`` per policy.
    """
    config = config if config is not None else (table.config if table is not None else None)
    if output is None:
        output = config.output if config is not None else OutputSpec(formats=("csv",))
    os.makedirs(output.directory, exist_ok=True)
    written = []
    rows = table.rows if table is not None else ()

    if "csv" in output.formats or (table is not None and not output.formats):
        path = os.path.join(output.directory, "results.csv")
        _write_csv(path, CSV_HEADER, rows)
        written.append(path)
    if reports is not None:
        path = os.path.join(output.directory, "dominance.csv")
        _write_csv(path, DOMINANCE_HEADER, reports)
        written.append(path)
    if "dat" in output.formats and rows:
        groups = {}
        for r in rows:
            groups.setdefault((r.node, r.metric), []).append(r)
        for (node, metric), group in groups.items():
            policies = list(dict.fromkeys(r.policy for r in group))
            lams = list(dict.fromkeys(r.lam for r in group))
            by = {(r.lam, r.policy): r for r in group}
            path = os.path.join(output.directory, f"node{node}_{metric}.dat")
            with open(path, "w", encoding="utf-8") as fh:
                cols = " ".join(f"{p}:mean {p}:ci_low {p}:ci_high" for p in policies)
                fh.write(f"# lambda {cols}\n")
                for lam in lams:
                    vals = []
                    for p in policies:
                        r = by[(lam, p)]
                        vals += [repr(r.mean), repr(r.ci_low), repr(r.ci_high)]
                    fh.write(" ".join([repr(lam)] + vals) + "\n")
            written.append(path)
    if "manifest" in output.formats:
        manifest = {
            "version": _package_version(),
            "seed": table.seed if table is not None else (config.seed if config is not None else None),
            "config_sha256": config_hash(config) if config is not None else None,
            "seed_derivation": SEED_DERIVATION,
            "ci": f"normal {int(CI_LEVEL * 100)}%",
            "replications": rows[0].reps if rows else (config.replications if config is not None else None),
            "lambdas": sorted({r.lam for r in rows}) if rows else None,
            "gamma_shapes": sorted({l.dist.shape for l in config.graph.links if isinstance(l.dist, Gamma)}) if config else [],
            "gamma_shape_default": 2.0,
            "config": config_to_text(config) if config is not None else None,
        }
        path = os.path.join(output.directory, "manifest.json")
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        written.append(path)
    return written
