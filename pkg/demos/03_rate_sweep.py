"""
A small rate sweep
==================

The figure presets are plain configs. This script shortens the three-node
preset so it finishes in seconds, sweeps the generation rate and writes
the usual result files. Pass a directory to keep them somewhere else.
"""

import sys

from multihop_aoi.experiments import OutputSpec, emit_results, preset_fig4, run_sweep

out_dir = sys.argv[1] if len(sys.argv) > 1 else "results/demo-sweep"

cfg = preset_fig4()
cfg = cfg.replace(horizon=2000.0, output=OutputSpec(out_dir, ("csv", "manifest", "dat"), (2,), ("avg-peak-age", "avg-age")))
table = run_sweep(cfg, [0.5, 1.0, 2.0], replications=10, seed=1)

print(f"{'lambda':>6}  {'policy':14s} {'metric':13s} {'mean':>8}  95% CI")
for row in table:
    print(f"{row.lam:6.2f}  {row.policy:14s} {row.metric:13s} {row.mean:8.3f}  [{row.ci_low:.3f}, {row.ci_high:.3f}]")

for path in emit_results(table, cfg.output, config=cfg):
    print("wrote", path)
