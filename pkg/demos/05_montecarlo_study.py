"""A compact Monte Carlo comparison on the analytical benchmark.

Every run draws fresh ground-truth coefficients (a new landscape), computes
a particle-swarm reference optimum, and races the baseline and regularized
loops from a shared initial design. Artifacts (per-arm CSVs and the
convergence SVG) land in demos/out/. The full-size studies are available
from the command line, e.g.:

    prefopt bench --problem analytical --runs 10 --budget 60 --out bench_out
"""

import os

from prefopt.bench import BenchConfig, export_results, run_montecarlo

out_dir = os.path.join(os.path.dirname(__file__), "out")
cfg = BenchConfig(problem="analytical", runs=3, budget=30, seed_base=0,
                  out_dir=out_dir)
table = run_montecarlo(cfg)
table.validate()

for arm in cfg.arms:
    print(f"{arm:>12}: final error {table.mean(arm)[-1]:.3f} "
          f"+/- {table.std(arm)[-1]:.3f}")
for path in export_results(table, cfg):
    print("wrote", path)
