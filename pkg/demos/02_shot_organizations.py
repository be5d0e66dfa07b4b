"""
Four ways to turn shots into training rows
==========================================

EV averages all shots of a step into one row. Raw keeps every shot as a
row. The split ensemble averages disjoint groups of k shots, so each step
contributes N/k rows that share one target. EvDup repeats the EV row N/k
times, which matches the row count without adding new views.
"""

import numpy as np

from shotsplit import GroupingPlan, internal_divisors, organize, rho_k

rng = np.random.default_rng(0)
n_shots, steps, d = 6, 4, 2
features = rng.choice([-1.0, 1.0], size=(steps, n_shots, d))
targets = np.linspace(0.1, 0.4, steps)
block = np.arange(steps)

for plan in (GroupingPlan.ev(n_shots), GroupingPlan.raw(n_shots), GroupingPlan.split(n_shots, 3), GroupingPlan.ev_dup(n_shots, 3)):
    ds = organize(features, targets, block, plan)
    print(f"{plan.organization.value:>6} k={plan.k}: {ds.n_rows} rows, step 0 rows:")
    print(ds.X[ds.timestep_index == 0])

# Group means average back to the EV row exactly
split = organize(features, targets, block, GroupingPlan.split(n_shots, 2))
ev = organize(features, targets, block, GroupingPlan.ev(n_shots))
print("split rows of step 0 average to EV:", np.allclose(split.X[:3].mean(axis=0), ev.X[0]))

# More rows per step raise the training-support ratio
rho = 2.65125
for k in [1] + internal_divisors(18) + [18]:
    print(f"N=18, k={k:>2}: rho_k = {rho_k(18, k, rho):.4f}")
