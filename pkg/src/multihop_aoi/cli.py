"""Command line entry point (``multihop-aoi`` or ``python -m multihop_aoi``).

Exit codes: 0 success, 1 invalid input (config, arguments, distributions),
2 runtime failure.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import experiments as ex
from .distributions import is_nbu, is_nwu, parse_distribution
from .errors import (
    BadRate,
    ConfigError,
    EmptyHorizon,
    GraphError,
    IncompatibleCouplingMode,
    ScenarioError,
    UnsupportedPolicy,
)

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2

_INVALID = (ConfigError, GraphError, BadRate, EmptyHorizon, ScenarioError, UnsupportedPolicy, IncompatibleCouplingMode)


def _common(p):
    p.add_argument("--seed", type=int, default=None, help="master seed (overrides the config)")
    p.add_argument("--out-dir", default=None, help="output directory (overrides the config)")
    p.add_argument("--reps", type=int, default=None, help="replications (overrides the config)")
    p.add_argument("--workers", type=int, default=1, help="worker processes for sweeps")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="multihop-aoi", description="Age-of-information experiments on multihop networks.")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("run", help="run the config's sweep and write results")
    p.add_argument("config")
    _common(p)

    p = sub.add_parser("sweep", help="sweep the generation rate")
    p.add_argument("config")
    p.add_argument("--lambda", dest="lam", required=True, help="start:stop:step or a comma list")
    _common(p)

    p = sub.add_parser("couple", help="coupled per-path dominance checks")
    p.add_argument("config")
    p.add_argument("--pairs", default=None, help="comma list of P:pi policy labels, e.g. prmp-lgfs@1:fcfs@1")
    _common(p)

    p = sub.add_parser("preset", help="write a figure preset config")
    p.add_argument("name", choices=["fig4", "fig5"])
    p.add_argument("--out", required=True, help="config file to write")
    p.add_argument("--gamma-shape", type=float, default=2.0, help="gamma shape for fig5 (mean stays 1)")

    p = sub.add_parser("check-dist", help="report whether a service law is NBU and/or NWU")
    p.add_argument("dist", nargs="+", help='e.g. "gamma 0.5 2" or: erlang 2 1')
    return parser


def _apply_overrides(cfg, args):
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.reps is not None:
        if args.reps < 1:
            raise ex.ValidationError("--reps", "must be >= 1")
        changes["replications"] = args.reps
    if args.out_dir is not None:
        changes["output"] = ex.OutputSpec(args.out_dir, cfg.output.formats, cfg.output.nodes, cfg.output.metrics)
    return cfg.replace(**changes) if changes else cfg


def _sweep(cfg, lambdas, args):
    table = ex.run_sweep(cfg, lambdas, workers=args.workers)
    reports = ex.run_dominance(cfg) if cfg.harness.dominance or "dominance" in cfg.output.formats else None
    for path in ex.emit_results(table, cfg.output, reports=reports, config=cfg):
        print(path)
    return EXIT_OK


def _couple(cfg, args):
    pairs = None
    if args.pairs:
        pairs = []
        for item in args.pairs.split(","):
            a, sep, b = item.strip().partition(":")
            if not sep:
                raise ex.ValidationError("--pairs", f"{item!r} must look like P:pi")
            pairs.append((ex.PolicyEntry.parse(a).label, ex.PolicyEntry.parse(b).label))
    rows = ex.run_dominance(cfg, pairs)
    out = ex.OutputSpec(cfg.output.directory, ("manifest",), cfg.output.nodes, cfg.output.metrics)
    for path in ex.emit_results(None, out, reports=rows, config=cfg):
        print(path)
    by_pair = {}
    for r in rows:
        by_pair.setdefault(r.pair, []).append(r.holds)
    for pair, holds in by_pair.items():
        print(f"{pair}: dominance held on {sum(holds)}/{len(holds)} seeds")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    try:
        if args.verb == "preset":
            cfg = ex.preset_fig4() if args.name == "fig4" else ex.preset_fig5(args.gamma_shape)
            folder = os.path.dirname(args.out)
            if folder:
                os.makedirs(folder, exist_ok=True)
            ex.save_config(cfg, args.out)
            print(args.out)
            return EXIT_OK
        if args.verb == "check-dist":
            dist = parse_distribution(" ".join(args.dist))
            nbu, nwu = is_nbu(dist), is_nwu(dist)
            print(f"{dist.to_text()}: mean={dist.mean:.6g} NBU={'yes' if nbu else 'no'} NWU={'yes' if nwu else 'no'}")
            return EXIT_OK
        cfg = _apply_overrides(ex.load_config(args.config), args)
        if args.verb == "run":
            return _sweep(cfg, None, args)
        if args.verb == "sweep":
            lams = ex.parse_lambda_range(args.lam)
            return _sweep(cfg.replace(lambdas=lams), lams, args)
        return _couple(cfg, args)
    except _INVALID as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (OSError, ValueError) as exc:
        # bad paths and unparsable values on the command line
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID if isinstance(exc, (FileNotFoundError, ValueError)) else EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001 - reported as a runtime failure
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
