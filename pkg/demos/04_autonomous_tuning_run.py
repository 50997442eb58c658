"""One full suspension-tuning run with a synthetic user.

A hidden comfort objective weights RMS vertical acceleration against RMS
pitch rate; the synthetic user answers every A/B query from it. We run the
baseline (preference-only) loop and the sensor-guided one from the same
initial design and compare how fast each closes in on the grid optimum.
"""

import numpy as np

from prefopt.bench import reference_optimum
from prefopt.halfcar import BumpScenario
from prefopt.loop import LoopConfig, run_autonomous
from prefopt.oracles import EtaSuspension, make_problem

problem = make_problem("susp2d", scenario=BumpScenario(dt=1e-3, duration=5.0))
eta = EtaSuspension(eta_az=1.4, eta_pitch=0.8)
objective = problem.objective(eta)

y_star = reference_optimum(problem, eta, "grid", resolution=101)
print(f"grid-search reference optimum: {y_star:.5f}")

for mode in ("baseline", "regularized"):
    # recalibrate hyperparameters every iteration: with only 20 queries a
    # stale choice is costlier than the extra cross-validation work
    cfg = LoopConfig(budget=20, mode=mode, seed=2, t_cv=1)
    bank = problem.bank() if mode == "regularized" else None
    run = run_autonomous(problem.bounds, cfg, objective, bank=bank)
    errs = run.trace.y_best_series() - y_star
    best = run.state.dataset.points[run.state.best_index]
    print(f"\n{mode}:")
    print("  error after each point:",
          " ".join(f"{e:.3f}" for e in errs[5:]))
    print(f"  final damping: front {best[0]:.0f}, rear {best[1]:.0f} N s/m; "
          f"final error {errs[-1]:.4f}")
