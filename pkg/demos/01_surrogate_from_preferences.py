"""Fit an RBF surrogate from pairwise preferences alone.

We pretend a person is judging a hidden 1-D utility f(x) = (x - 0.3)^2.
They never report numbers, only which of two points they like better. The
surrogate learns a function whose ordering agrees with every judgment.
"""

import numpy as np

from prefopt import (Bounds, Dataset, FitConfig, KernelSpec, Preference,
                     PreferenceSet, fit_baseline)
from prefopt.surrogate import eval_surrogate_batch

hidden = lambda x: (x - 0.3) ** 2

bounds = Bounds(np.array([0.0]), np.array([1.0]))
xs = np.array([[0.05], [0.25], [0.45], [0.65], [0.9]])
dataset = Dataset(bounds, xs)

# Chain comparisons against the running favourite, like the live loop does.
items, incumbent = [], 0
for k in range(1, len(xs)):
    label = -1 if hidden(xs[k, 0]) < hidden(xs[incumbent, 0]) else +1
    items.append(Preference(i=k, j=incumbent, label=label))
    if label == -1:
        incumbent = k
prefs = PreferenceSet(tuple(items))
print(f"judgments: {[(p.i, p.j, p.label) for p in prefs]}")
print(f"the favourite point is x = {xs[incumbent, 0]}")

fit = fit_baseline(dataset, prefs, KernelSpec("inverse-quadratic", 1.0),
                   FitConfig(sigma=1e-2, lambda_beta=1e-4))
fhat = eval_surrogate_batch(fit.surrogate, dataset.scaled)

print("\n point   hidden f   surrogate")
for x, fv, sv in zip(xs[:, 0], hidden(xs[:, 0]), fhat):
    print(f"  {x:.2f}   {fv:8.4f}   {sv:9.5f}")
print("\nsurrogate slacks per judgment:", np.round(fit.slacks, 9))
print("ordering preserved:",
      bool(np.all(np.argsort(fhat) == np.argsort(hidden(xs[:, 0])))))
